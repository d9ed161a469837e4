"""Command-line front end.

Subcommands: reconstruct, superres, color, clusters, poisson, flow-cmax,
metrics, simulate, corrupt-flow. Exit codes: 0 success, 1 usage error, 2 I/O
or input-format error, 3 numerical failure. Solver non-convergence is
reported as a warning, not an error.

Every run with --trace writes a reproducibility header (resolved parameters,
seeds, sha256 digests of the inputs) followed by the per-iteration energy
rows.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from pathlib import Path

import numpy as np

from . import io as evio
from .denoise import make_denoiser
from .errors import EvreconError, InputError, NumericalError
from .extensions import (corrupt_flow, reconstruct_clusters, reconstruct_color,
                         reconstruct_superres)
from .metrics import align_mean_scale, format_metrics, hist_equalize, mse, ssim
from .motion import VelocityGrid, estimate_global_flow_cmax, simulate_events
from .operators import StencilKind
from .pipeline import reconstruct_events, to_unit_range
from .poisson import BoundaryMode, poisson_closed_form, solve_poisson_pnp
from .reconstruct import (PnpParams, ReconConfig, TikhonovParams, TvParams)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def _add_sensor(p):
    p.add_argument("--width", type=int, default=240, help="sensor width, px")
    p.add_argument("--height", type=int, default=180, help="sensor height, px")


def _add_recon(p, need_flow=True):
    p.add_argument("--events", required=True)
    if need_flow:
        p.add_argument("--flow", required=True)
    p.add_argument("--method", choices=["tikhonov", "tv", "pnp"], default="tikhonov")
    p.add_argument("--stencil", choices=["2pt", "sobel9"], default="sobel9")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="regularizer weight (defaults: 0.04 tikh/tv, 0.3 pnp)")
    p.add_argument("--denoiser", default="gaussian",
                   help="pnp prior: gaussian | tv | identity | bridge:CMD")
    p.add_argument("--n-events", type=int, default=None,
                   help="use only the last N events (typical 20k-50k)")
    p.add_argument("--sigma-px", type=float, default=1.0)
    p.add_argument("--time-unit", choices=["s", "us"], default="s")
    p.add_argument("--pnp-init", choices=["tv", "zero"], default="tv")
    p.add_argument("--pnp-iters", type=int, default=16)
    p.add_argument("--tv-outer", type=int, default=20)
    p.add_argument("--tv-inner", type=int, default=10)
    p.add_argument("--lsqr-iters", type=int, default=100)
    p.add_argument("--out", default=None, help="output PGM path")
    p.add_argument("--bits", type=int, choices=[8, 16], default=8)
    p.add_argument("--trace", default=None, help="energy trace CSV path")
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel independent frames (single-frame runs are unaffected)")
    _add_sensor(p)


def build_parser() -> _Parser:
    parser = _Parser(prog="evrecon",
                     description="event-based image reconstruction by regularized linear inversion")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reconstruct", help="events + flow -> brightness image")
    _add_recon(p)

    p = sub.add_parser("superres", help="reconstruct on a finer grid")
    p.add_argument("--scale", type=int, choices=[1, 2, 4], required=True)
    _add_recon(p)

    p = sub.add_parser("color", help="per-channel Bayer reconstruction")
    p.add_argument("--bayer", choices=["RGGB", "BGGR", "GRBG", "GBRG"], required=True)
    p.add_argument("--out-prefix", required=True)
    _add_recon(p)

    p = sub.add_parser("clusters", help="per-cluster reconstruction from labels")
    p.add_argument("--labels", required=True)
    p.add_argument("--flows", required=True, help="comma-separated flow files, one per cluster")
    p.add_argument("--out-prefix", required=True)
    _add_recon(p, need_flow=False)

    p = sub.add_parser("poisson", help="reconstruct from a Laplacian image")
    p.add_argument("--laplacian", required=True, help="single-channel dense-float container")
    p.add_argument("--method", choices=["pnp", "direct"], default="pnp")
    p.add_argument("--boundary", choices=["periodic", "neumann"], default="periodic")
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--denoiser", default="tv")
    p.add_argument("--pnp-iters", type=int, default=16)
    p.add_argument("--mu", type=float, default=1e-8, help="ridge for --method direct")
    p.add_argument("--out", default=None)
    p.add_argument("--bits", type=int, choices=[8, 16], default=8)
    p.add_argument("--trace", default=None)

    p = sub.add_parser("flow-cmax", help="constant-velocity flow by contrast maximization")
    p.add_argument("--events", required=True)
    p.add_argument("--range", dest="vrange", type=float, required=True,
                   help="search |ux|,|uy| <= range, px/s")
    p.add_argument("--step", type=float, required=True)
    p.add_argument("--time-unit", choices=["s", "us"], default="s")
    p.add_argument("--out", default=None, help="write the result as a global flow file")
    _add_sensor(p)

    p = sub.add_parser("metrics", help="compare two PGM images")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--equalize", action="store_true")
    p.add_argument("--align", action="store_true")
    p.add_argument("--csv", default=None, help="also append a CSV row here")

    p = sub.add_parser("simulate", help="generate events from a frame sequence (test oracle)")
    p.add_argument("--video", required=True,
                   help="directory of PGM frames; DIR/timestamps.txt overrides --fps")
    p.add_argument("--contrast", type=float, required=True)
    p.add_argument("--fps", type=float, default=100.0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("corrupt-flow", help="add uniform noise to a dense flow field")
    p.add_argument("--flow", required=True)
    p.add_argument("--b", type=float, required=True, help="noise bound, px")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    _add_sensor(p)

    return parser


def _digest(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def _write_trace(path: str, params: dict, trace) -> None:
    lines = [f"# {k}={v}" for k, v in params.items()]
    lines.append("iter,data_term,prior_term,total")
    for i, (d, p, t) in enumerate(trace):
        lines.append(f"{i},{float(d)!r},{float(p)!r},{float(t)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def _config(args) -> ReconConfig:
    return ReconConfig(
        method=args.method, lam=args.lam, init=args.pnp_init,
        pnp=PnpParams(n_outer=args.pnp_iters),
        tv=TvParams(outer=args.tv_outer, inner=args.tv_inner),
        tikhonov=TikhonovParams(lsqr_iters=args.lsqr_iters))


def _load_events(args):
    packet = evio.parse_events(Path(args.events).read_bytes(),
                               (args.width, args.height), time_unit=args.time_unit)
    if getattr(args, "n_events", None):
        packet = packet.tail(args.n_events)
    return packet


def _recon_common(args, scale: int) -> int:
    packet = _load_events(args)
    flow = evio.parse_flow(Path(args.flow).read_bytes(), (args.width, args.height))
    cfg = _config(args)
    denoiser = make_denoiser(args.denoiser) if args.method == "pnp" else None
    result, niwe = reconstruct_events(
        packet, flow, cfg, scale=scale, stencil=StencilKind(args.stencil),
        sigma_px=args.sigma_px, denoiser=denoiser)
    if hasattr(denoiser, "close"):
        denoiser.close()
    if not result.report.converged:
        print(f"warning: solver stopped at rel. residual {result.report.final_residual:.3e}",
              file=sys.stderr)
    if args.out:
        mapped, vrange = to_unit_range(result.image)
        Path(args.out).write_bytes(evio.write_pgm(mapped, args.bits))
    if args.trace:
        params = {
            "command": "reconstruct" if scale == 1 else f"superres x{scale}",
            "events": args.events, "events_sha256": _digest(args.events),
            "flow": args.flow, "flow_sha256": _digest(args.flow),
            "method": args.method, "lambda": cfg.resolved_lambda,
            "stencil": args.stencil, "sigma_px": args.sigma_px,
            "n_events": len(packet), "t_ref": niwe.t_ref, "u_min": niwe.u_min,
            "pnp_iters": args.pnp_iters, "tv_outer": args.tv_outer,
            "tv_inner": args.tv_inner, "lsqr_iters": args.lsqr_iters,
            "jobs": args.jobs, "iterations": result.report.iterations,
            "final_residual": result.report.final_residual,
        }
        _write_trace(args.trace, params, result.trace)
    return 0


def _cmd_reconstruct(args) -> int:
    return _recon_common(args, scale=1)


def _cmd_superres(args) -> int:
    return _recon_common(args, scale=args.scale)


def _cmd_color(args) -> int:
    packet = _load_events(args)
    flow = evio.parse_flow(Path(args.flow).read_bytes(), (args.width, args.height))
    cfg = _config(args)
    denoiser = make_denoiser(args.denoiser) if args.method == "pnp" else None
    planes = reconstruct_color(packet, flow, args.bayer, cfg,
                               stencil=StencilKind(args.stencil),
                               sigma_px=args.sigma_px, denoiser=denoiser)
    if hasattr(denoiser, "close"):
        denoiser.close()
    lo, hi = np.percentile(planes, [1.0, 99.0])
    vrange = (float(lo), float(hi)) if hi > lo else (0.0, 1.0)
    prefix = args.out_prefix
    for i, letter in enumerate("rgb"):
        Path(f"{prefix}_{letter}.pgm").write_bytes(
            evio.write_pgm(planes[i], args.bits, vrange))
    Path(f"{prefix}.ppm").write_bytes(evio.write_ppm(planes, vrange))
    return 0


def _cmd_clusters(args) -> int:
    packet = _load_events(args)
    labels = evio.parse_labels(Path(args.labels).read_bytes(), len(packet))
    flows = [evio.parse_flow(Path(f).read_bytes(), (args.width, args.height))
             for f in args.flows.split(",")]
    cfg = _config(args)
    results = reconstruct_clusters(packet, labels, flows, cfg,
                                   stencil=StencilKind(args.stencil),
                                   sigma_px=args.sigma_px)
    for cid, result in results:
        mapped, _ = to_unit_range(result.image)
        Path(f"{args.out_prefix}_c{cid}.pgm").write_bytes(
            evio.write_pgm(mapped, args.bits))
    return 0


def _cmd_poisson(args) -> int:
    lap = evio.parse_laplacian(Path(args.laplacian).read_bytes())
    mode = BoundaryMode(args.boundary)
    if args.method == "direct":
        img = poisson_closed_form(lap, np.zeros_like(lap), args.mu, mode)
        img = img - img.mean()
        trace = []
    else:
        cfg = ReconConfig(method="pnp", lam=args.lam,
                          pnp=PnpParams(n_outer=args.pnp_iters))
        denoiser = make_denoiser(args.denoiser)
        result = solve_poisson_pnp(lap, denoiser, cfg, mode)
        if hasattr(denoiser, "close"):
            denoiser.close()
        img, trace = result.image, result.trace
    if args.out:
        mapped, _ = to_unit_range(img)
        Path(args.out).write_bytes(evio.write_pgm(mapped, args.bits))
    if args.trace:
        params = {"command": "poisson", "laplacian": args.laplacian,
                  "laplacian_sha256": _digest(args.laplacian),
                  "method": args.method, "boundary": args.boundary}
        _write_trace(args.trace, params, trace)
    return 0


def _cmd_flow_cmax(args) -> int:
    packet = evio.parse_events(Path(args.events).read_bytes(),
                               (args.width, args.height), time_unit=args.time_unit)
    grid = VelocityGrid((-args.vrange, args.vrange), (-args.vrange, args.vrange),
                        args.step)
    flow = estimate_global_flow_cmax(packet, grid)
    print(f"{float(flow.u[0])!r} {float(flow.u[1])!r}")
    if args.out:
        Path(args.out).write_bytes(evio.write_flow(flow))
    return 0


def _cmd_metrics(args) -> int:
    pred = evio.read_pgm(Path(args.pred).read_bytes())
    gt = evio.read_pgm(Path(args.gt).read_bytes())
    if args.align:
        pred = align_mean_scale(pred, gt)
    if args.equalize:
        pred = hist_equalize(pred)
        gt = hist_equalize(gt)
    values = {"ssim": ssim(np.clip(pred, 0, 1), np.clip(gt, 0, 1)),
              "mse": mse(pred, gt)}
    sys.stdout.write(format_metrics(values))
    if args.csv:
        path = Path(args.csv)
        row = f"{args.pred},{args.gt},{values['ssim']!r},{values['mse']!r}\n"
        if not path.exists():
            path.write_text("pred,gt,ssim,mse\n" + row)
        else:
            path.write_text(path.read_text() + row)
    return 0


def _cmd_simulate(args) -> int:
    frame_dir = Path(args.video)
    frame_paths = sorted(frame_dir.glob("*.pgm"))
    if len(frame_paths) < 2:
        raise InputError(f"{frame_dir} holds {len(frame_paths)} PGM frames, need >= 2")
    frames = [evio.read_pgm(p.read_bytes()) for p in frame_paths]
    ts_file = frame_dir / "timestamps.txt"
    if ts_file.exists():
        stamps = np.array([float(line) for line in ts_file.read_text().split()])
    else:
        stamps = np.arange(len(frames)) / args.fps
    packet = simulate_events(frames, stamps, args.contrast)
    Path(args.out).write_bytes(evio.serialize_events(packet))
    print(f"{len(packet)} events over {packet.duration!r} s "
          f"({frames[0].shape[1]}x{frames[0].shape[0]})")
    return 0


def _cmd_corrupt_flow(args) -> int:
    flow = evio.parse_flow(Path(args.flow).read_bytes(), (args.width, args.height))
    noisy = corrupt_flow(flow, args.b, args.seed)
    Path(args.out).write_bytes(evio.write_flow(noisy))
    return 0


_HANDLERS = {
    "reconstruct": _cmd_reconstruct,
    "superres": _cmd_superres,
    "color": _cmd_color,
    "clusters": _cmd_clusters,
    "poisson": _cmd_poisson,
    "flow-cmax": _cmd_flow_cmax,
    "metrics": _cmd_metrics,
    "simulate": _cmd_simulate,
    "corrupt-flow": _cmd_corrupt_flow,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return _HANDLERS[args.command](args)
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, EvreconError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

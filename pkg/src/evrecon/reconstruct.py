"""Regularized inversion of the directional-derivative system D l = b.

Three drivers share the measurement image b (the normalized image of warped
events) and the sparse operator D:

* solve_tikhonov: quadratic gradient penalty, solved in one shot by damped
  least squares on the stacked operator [D; sqrt(2*lambda) G];
* solve_tv: anisotropic total variation via split Bregman (outer shrinkage
  iterations around an inner CG solve);
* solve_pnp: half-quadratic splitting where the proximal step is any Gaussian
  denoiser evaluated at noise level sqrt(lambda/mu), with mu increasing along
  a log-uniform schedule.

The operator annihilates constants, so every returned image is mean-free;
energy traces record iterate k = 0 as the initial point, one entry per
iteration after that.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DenoiserFailure, DimensionMismatch
from .operators import (SparseOperator, build_gradient_operator, scale_operator,
                        stack_operators)
from .solvers import SolveReport, cg_solve, lsqr_solve

Denoiser = Callable[[np.ndarray, float], np.ndarray]

LAMBDA_DEFAULT = {"tikhonov": 0.04, "tv": 0.04, "pnp": 0.3}


@dataclass
class PnpParams:
    n_outer: int = 16
    sigma_max: float = 0.25
    sigma_min: float = 0.01
    mu_schedule: np.ndarray | None = None
    cg_iters: int = 100
    cg_tol: float = 1e-6


@dataclass
class TvParams:
    outer: int = 20
    inner: int = 10
    gamma: float | None = None  # None -> 2 * lambda


@dataclass
class TikhonovParams:
    lsqr_iters: int = 100
    tol: float = 1e-6


@dataclass
class ReconConfig:
    method: str = "tikhonov"
    lam: float | None = None
    init: str = "tv"  # PnP start: "tv" or "zero"
    pnp: PnpParams = field(default_factory=PnpParams)
    tv: TvParams = field(default_factory=TvParams)
    tikhonov: TikhonovParams = field(default_factory=TikhonovParams)

    def __post_init__(self):
        if self.method not in LAMBDA_DEFAULT:
            raise ValueError(f"unknown method {self.method!r}")
        if self.lam is not None and self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.init not in ("tv", "zero"):
            raise ValueError(f"unknown init {self.init!r}")

    @property
    def resolved_lambda(self) -> float:
        return LAMBDA_DEFAULT[self.method] if self.lam is None else self.lam


@dataclass
class ReconResult:
    image: np.ndarray
    trace: list[tuple[float, float, float]]
    report: SolveReport


def solve(D: SparseOperator, b: np.ndarray, cfg: ReconConfig,
          denoiser: Denoiser | None = None) -> ReconResult:
    """Dispatch on cfg.method. PnP requires a denoiser."""
    if cfg.method == "tikhonov":
        G = build_gradient_operator((b.shape[1], b.shape[0]))
        return solve_tikhonov(D, b, G, cfg)
    if cfg.method == "tv":
        return solve_tv(D, b, cfg)
    if denoiser is None:
        raise ValueError("PnP needs a denoiser")
    return solve_pnp(D, b, denoiser, cfg)


def solve_tikhonov(D: SparseOperator, b: np.ndarray, G: SparseOperator,
                   cfg: ReconConfig) -> ReconResult:
    """Minimize 0.5 ||b - D l||^2 + lambda ||G l||^2 by LSQR, from zero."""
    height, width = b.shape
    n = width * height
    _check_dims(D, n)
    if G.n_cols != n:
        raise DimensionMismatch(f"gradient operator has {G.n_cols} columns, image has {n}")
    lam = cfg.resolved_lambda
    bb = b.ravel()
    stacked = stack_operators(D, scale_operator(G, np.sqrt(2.0 * lam)))
    rhs = np.concatenate([bb, np.zeros(G.n_rows)])
    trace = [_energies(D, G, bb, np.zeros(n), lam)]
    lsqr_cb = lambda x: trace.append(_energies(D, G, bb, x, lam))
    x, report = lsqr_solve(stacked, rhs, damp=0.0, tol=cfg.tikhonov.tol,
                           max_iter=cfg.tikhonov.lsqr_iters, callback=lsqr_cb)
    img = x.reshape(height, width)
    img = img - img.mean()
    data_res = np.linalg.norm(D.apply(x) - bb)
    bn = np.linalg.norm(bb)
    report = SolveReport(report.iterations, data_res / bn if bn > 0 else data_res,
                         report.converged)
    return ReconResult(img, trace, report)


def shrink(v: np.ndarray, kappa: float) -> np.ndarray:
    """Soft threshold: sign(v) * max(|v| - kappa, 0)."""
    return np.sign(v) * np.maximum(np.abs(v) - kappa, 0.0)


def solve_tv(D: SparseOperator, b: np.ndarray, cfg: ReconConfig,
             mean_free: bool = True) -> ReconResult:
    """Minimize 0.5 ||b - D l||^2 + lambda TV(l), anisotropic, split Bregman.

    Auxiliary d ~ G l with shrinkage threshold lambda/gamma, Bregman variable
    update, and an inner CG solve of (D^T D + gamma G^T G) l = D^T b +
    gamma G^T (d - beta), warm-started across outer iterations.
    """
    height, width = b.shape
    n = width * height
    _check_dims(D, n)
    lam = cfg.resolved_lambda
    gamma = cfg.tv.gamma if cfg.tv.gamma is not None else 2.0 * lam
    if gamma <= 0:
        gamma = 1.0  # lambda = 0 degenerates to a plain least-squares polish
    G = build_gradient_operator((width, height))
    bb = b.ravel()
    dtb = D.apply_transpose(bb)
    x = np.zeros(n)
    d = np.zeros(2 * n)
    breg = np.zeros(2 * n)
    matvec = lambda v: D.apply_transpose(D.apply(v)) + gamma * G.apply_transpose(G.apply(v))
    trace = [_energies(D, G, bb, x, lam, tv_prior=True)]
    last_report = SolveReport(0, 0.0, True)
    for _ in range(cfg.tv.outer):
        rhs = dtb + gamma * G.apply_transpose(d - breg)
        x, last_report = cg_solve(matvec, rhs, x0=x, tol=1e-6, max_iter=cfg.tv.inner)
        gl = G.apply(x)
        d = shrink(gl + breg, lam / gamma)
        breg = breg + gl - d
        trace.append(_energies(D, G, bb, x, lam, tv_prior=True))
    img = x.reshape(height, width)
    if mean_free:
        img = img - img.mean()
    data_res = np.linalg.norm(D.apply(x) - bb)
    bn = np.linalg.norm(bb)
    report = SolveReport(cfg.tv.outer, data_res / bn if bn > 0 else data_res, True)
    return ReconResult(img, trace, report)


def sigma_schedule(sigma_max: float, sigma_min: float, n: int) -> np.ndarray:
    """Log-uniform decreasing noise levels for HQS."""
    if n == 1:
        return np.array([sigma_min])
    return np.geomspace(sigma_max, sigma_min, n)


def solve_pnp(D: SparseOperator, b: np.ndarray, denoiser: Denoiser,
              cfg: ReconConfig) -> ReconResult:
    """Half-quadratic splitting with a pluggable Gaussian denoiser.

    Alternates the quadratic data step l_k = (D^T D + mu_k I)^{-1}
    (D^T b + mu_k z_{k-1}) (by warm-started CG) with z_k =
    denoiser(l_k, sqrt(lambda/mu_k)). mu_k = lambda / sigma_k^2 along the
    log-uniform sigma schedule, unless cfg.pnp.mu_schedule overrides it.
    Returns z after the last iteration, mean-subtracted; the trace records
    (data_term, ||l_k - z_k||, augmented total) per iteration.
    """
    height, width = b.shape
    n = width * height
    _check_dims(D, n)
    lam = cfg.resolved_lambda
    if cfg.pnp.mu_schedule is not None:
        mus = np.asarray(cfg.pnp.mu_schedule, dtype=np.float64)
        sigmas = np.sqrt(lam / mus) if lam > 0 else np.zeros_like(mus)
    else:
        sigmas = sigma_schedule(cfg.pnp.sigma_max, cfg.pnp.sigma_min, cfg.pnp.n_outer)
        mus = lam / sigmas**2 if lam > 0 else np.full(sigmas.shape, 1.0)
    if np.any(mus <= 0) or np.any(np.diff(mus) < 0):
        raise ValueError("mu schedule must be positive and non-decreasing")

    if cfg.init == "tv":
        z = solve_tv(D, b, _tv_init_config(cfg), mean_free=False).image
    else:
        z = np.zeros_like(b)
    bb = b.ravel()
    dtb = D.apply_transpose(bb)
    x = z.ravel().copy()
    trace = [( _data_term(D, bb, x), 0.0, _data_term(D, bb, x))]
    last_report = SolveReport(0, 0.0, True)
    for sigma, mu in zip(sigmas, mus):
        matvec = lambda v, mu=mu: D.apply_transpose(D.apply(v)) + mu * v
        rhs = dtb + mu * z.ravel()
        x, last_report = cg_solve(matvec, rhs, x0=x, tol=cfg.pnp.cg_tol,
                                  max_iter=cfg.pnp.cg_iters)
        try:
            z = denoiser(x.reshape(height, width), float(sigma))
        except Exception as exc:
            raise DenoiserFailure(f"denoiser failed at sigma={sigma}: {exc}") from exc
        coupling = float(np.linalg.norm(x - z.ravel()))
        data = _data_term(D, bb, x)
        trace.append((data, coupling, data + 0.5 * mu * coupling * coupling))
    img = z - z.mean()
    data_res = np.linalg.norm(D.apply(z.ravel()) - bb)
    bn = np.linalg.norm(bb)
    report = SolveReport(len(mus), data_res / bn if bn > 0 else data_res, True)
    return ReconResult(img, trace, report)


def _tv_init_config(cfg: ReconConfig) -> ReconConfig:
    return ReconConfig(method="tv", lam=LAMBDA_DEFAULT["tv"], tv=cfg.tv)


def _check_dims(D: SparseOperator, n: int) -> None:
    if D.n_cols != n or D.n_rows != n:
        raise DimensionMismatch(f"operator is {D.n_rows}x{D.n_cols}, image has {n} pixels")


def _data_term(D: SparseOperator, bb: np.ndarray, x: np.ndarray) -> float:
    r = bb - D.apply(x)
    return 0.5 * float(r @ r)


def _energies(D: SparseOperator, G: SparseOperator, bb: np.ndarray, x: np.ndarray,
              lam: float, tv_prior: bool = False) -> tuple[float, float, float]:
    data = _data_term(D, bb, x)
    g = G.apply(x)
    prior = lam * float(np.abs(g).sum()) if tv_prior else lam * float(g @ g)
    return (data, prior, data + prior)

"""Request loop: one denoise per framed request, single request in flight.

Exit codes: 0 clean EOF, 2 model-load failure, 3 protocol violation.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import model as model_mod
from .protocol import ProtocolViolation, read_request, write_reply

DEFAULT_WEIGHTS = Path(__file__).resolve().parents[2] / "weights" / "dncnn_small.pt"


def serve(stdin, stdout, denoise_fn) -> int:
    while True:
        try:
            req = read_request(stdin)
        except ProtocolViolation as exc:
            print(f"protocol violation: {exc}", file=sys.stderr)
            return 3
        if req is None:
            return 0
        image, sigma = req
        write_reply(stdout, denoise_fn(image, sigma))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="denoiser-service",
        description="Gaussian denoiser child process (bridge protocol on stdin/stdout)")
    parser.add_argument("--model", default=str(DEFAULT_WEIGHTS),
                        help="weights file for the conditioned CNN")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--identity", action="store_true",
                        help="echo pixels unchanged (no model needed)")
    parser.add_argument("--clamp", nargs=2, type=float, default=None,
                        metavar=("LO", "HI"), help="clamp outputs to a range")
    args = parser.parse_args(argv)

    if args.identity:
        denoise_fn = lambda image, sigma: image
    else:
        try:
            net = model_mod.load_model(args.model, args.device)
        except Exception as exc:
            print(f"cannot load model {args.model}: {exc}", file=sys.stderr)
            return 2
        def denoise_fn(image, sigma, _net=net):
            out = model_mod.denoise(_net, image, sigma, args.device)
            if args.clamp is not None:
                out = np.clip(out, args.clamp[0], args.clamp[1])
            return out

    return serve(sys.stdin.buffer, sys.stdout.buffer, denoise_fn)


if __name__ == "__main__":
    sys.exit(main())

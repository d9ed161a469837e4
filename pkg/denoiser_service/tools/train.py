#!/usr/bin/env python3
"""Train the conditioned residual denoiser on synthetic piecewise-smooth
scenes and save the weights the service ships with.

The training distribution mirrors what the splitting loop feeds the prior:
mean-free images mixing flat regions, disc/rectangle edges and smooth fields,
at noise levels spanning the whole sigma schedule.

    python3 tools/train.py --steps 600 --out weights/dncnn_small.pt
"""

import argparse
import pathlib
import sys
import time

import numpy as np
import torch

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))
from denoiser_service.model import ConditionedDenoiser  # noqa: E402


def smooth_field(rng, n, sigma):
    f = rng.standard_normal((n, n))
    k = int(3 * sigma)
    x = np.arange(-k, k + 1)
    g = np.exp(-0.5 * (x / sigma) ** 2)
    g /= g.sum()
    f = np.apply_along_axis(lambda r: np.convolve(r, g, mode="same"), 0, f)
    f = np.apply_along_axis(lambda r: np.convolve(r, g, mode="same"), 1, f)
    return f


def random_scene(rng, n=32):
    img = np.zeros((n, n))
    xg, yg = np.meshgrid(np.arange(n, dtype=float), np.arange(n, dtype=float))
    for _ in range(rng.integers(2, 7)):
        lv = rng.uniform(0.2, 0.7) * rng.choice([-1, 1])
        if rng.random() < 0.5:
            cx, cy = rng.uniform(2, n - 2, 2)
            r = rng.uniform(2, n / 3)
            img[(xg - cx) ** 2 + (yg - cy) ** 2 < r * r] += lv
        else:
            x0, y0 = rng.uniform(0, n - 4, 2)
            w, h = rng.uniform(3, n / 2, 2)
            img[(xg >= x0) & (xg < x0 + w) & (yg >= y0) & (yg < y0 + h)] += lv
    if rng.random() < 0.5:
        img += 0.3 * smooth_field(rng, n, rng.uniform(1.5, 4.0))
    img -= img.mean()
    img *= rng.uniform(0.4, 1.3)
    img += rng.uniform(-0.2, 0.2)
    return img


def make_batch(rng, batch, n=32, sigma_range=(0.005, 0.35)):
    clean = np.stack([random_scene(rng, n) for _ in range(batch)])[:, None]
    sigma = rng.uniform(*sigma_range, size=batch).astype(np.float32)
    noise = rng.standard_normal(clean.shape) * sigma[:, None, None, None]
    noisy = (clean + noise).astype(np.float32)
    return (torch.from_numpy(noisy), torch.from_numpy(clean.astype(np.float32)),
            torch.from_numpy(sigma))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=600)
    ap.add_argument("--batch", type=int, default=16)
    ap.add_argument("--channels", type=int, default=24)
    ap.add_argument("--depth", type=int, default=6)
    ap.add_argument("--lr", type=float, default=1e-3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="weights/dncnn_small.pt")
    args = ap.parse_args()

    torch.manual_seed(args.seed)
    rng = np.random.default_rng(args.seed)
    model = ConditionedDenoiser(channels=args.channels, depth=args.depth)
    opt = torch.optim.Adam(model.parameters(), lr=args.lr)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=args.steps)

    t0 = time.time()
    for step in range(1, args.steps + 1):
        noisy, clean, sigma = make_batch(rng, args.batch)
        out = model(noisy, sigma)
        loss = torch.mean((out - clean) ** 2)
        opt.zero_grad()
        loss.backward()
        opt.step()
        sched.step()
        if step % 50 == 0 or step == 1:
            print(f"step {step:5d}  loss {loss.item():.5f}  "
                  f"({(time.time() - t0) / step:.2f} s/step)")

    state = model.state_dict()
    state["_channels"] = args.channels
    state["_depth"] = args.depth
    out_path = pathlib.Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(state, out_path)
    print(f"saved {out_path} ({sum(p.numel() for p in model.parameters())} params)")


if __name__ == "__main__":
    main()

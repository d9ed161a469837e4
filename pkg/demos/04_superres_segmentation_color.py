#!/usr/bin/env python3
"""Pipeline variants: super-resolution, per-cluster reconstruction, color.

The linear system holds at any grid resolution, so super-resolution only
changes where events vote and how the operator is built. Motion-segmented
streams reconstruct per cluster; Bayer streams reconstruct per channel at 2x.
Writes demos/out/04_*.png.
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from scipy import ndimage

import evrecon as ev
from evrecon.io import EventPacket
from evrecon.motion import gaussian_blur

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

# --- super-resolution ----------------------------------------------------
W = H = 48
xg2, yg2 = np.meshgrid(np.arange(2 * W, dtype=float), np.arange(2 * H, dtype=float))
hi = np.zeros((2 * H, 2 * W))
for cx, cy, r, lv in [(22, 24, 9, .9), (52, 20, 7, -.7), (76, 40, 8, .8),
                      (30, 64, 10, -.85), (62, 72, 7, .75)]:
    hi[(xg2 - cx) ** 2 + (yg2 - cy) ** 2 < r * r] += lv
hi = gaussian_blur(hi, 1.0, mode="nearest")
hi = (hi - hi.min()) / (hi.max() - hi.min())
lo_res = hi.reshape(H, 2, W, 2).mean(axis=(1, 3))

stamps = np.linspace(0, 0.1, 21)
xg, yg = np.meshgrid(np.arange(W), np.arange(H))
frames = [ndimage.map_coordinates(lo_res, [yg, xg - 20.0 * t], order=3, mode="nearest")
          for t in stamps]
packet = ev.simulate_events(frames, stamps, 0.05)
flow = ev.FlowField.uniform(20.0, 0.0)
cfg = ev.ReconConfig(method="tv", lam=0.03)
r1, _ = ev.reconstruct_superres(packet, flow, 1, cfg)
r2, _ = ev.reconstruct_superres(packet, flow, 2, cfg)
print(f"super-resolution: {len(packet)} events, 48x48 -> 96x96")

fig, axes = plt.subplots(1, 3, figsize=(13, 4.2))
for ax, img, title in zip(axes, [r1.image, r2.image, hi],
                          ["reconstruction at 1x", "reconstruction at 2x",
                           "high-res ground truth"]):
    ax.imshow(img, cmap="gray", interpolation="nearest")
    ax.set_title(title)
    ax.axis("off")
fig.tight_layout()
fig.savefig(OUT / "04_superres.png", dpi=110)

# --- per-cluster reconstruction ------------------------------------------
rng = np.random.default_rng(1)
n_each = 900
t = np.sort(rng.uniform(0, 0.1, 2 * n_each))
x = np.concatenate([rng.integers(2, 20, n_each), rng.integers(26, 46, n_each)])
y = np.concatenate([rng.integers(2, 20, n_each), rng.integers(26, 46, n_each)])
pkc = EventPacket(t, x, y, rng.choice([-1, 1], 2 * n_each), 48, 48)
labels = np.concatenate([np.zeros(n_each, int), np.ones(n_each, int)])
flows = [ev.FlowField.uniform(8.0, 0.0), ev.FlowField.uniform(0.0, 8.0)]
results = ev.reconstruct_clusters(pkc, labels, flows, ev.ReconConfig(method="tv"))
fig, axes = plt.subplots(1, len(results), figsize=(4.2 * len(results), 4.2))
for (cid, res), ax in zip(results, np.atleast_1d(axes)):
    ax.imshow(res.image, cmap="gray")
    ax.set_title(f"cluster {cid}")
    ax.axis("off")
fig.tight_layout()
fig.savefig(OUT / "04_clusters.png", dpi=110)
print(f"clusters: {len(results)} independent reconstructions")

# --- Bayer color ----------------------------------------------------------
n = 2500
t = np.sort(rng.uniform(0, 0.1, n))
cx = rng.integers(0, 24, n)
cy = rng.integers(0, 24, n)
pol = rng.choice([-1, 1], n)
tt = np.repeat(t, 4)
xx = np.repeat(2 * cx, 4) + np.tile([0, 1, 0, 1], n)
yy = np.repeat(2 * cy, 4) + np.tile([0, 0, 1, 1], n)
pp = np.repeat(pol, 4)
order = np.argsort(tt, kind="stable")
pk4 = EventPacket(tt[order], xx[order], yy[order], pp[order], 48, 48)
planes = ev.reconstruct_color(pk4, ev.FlowField.uniform(12.0, 0.0), "RGGB",
                              ev.ReconConfig(method="tikhonov"))
lo_v, hi_v = np.percentile(planes, [1, 99])
rgb = np.clip((np.moveaxis(planes, 0, -1) - lo_v) / (hi_v - lo_v), 0, 1)
fig, ax = plt.subplots(figsize=(4.5, 4.5))
ax.imshow(rgb)
ax.set_title("per-channel 2x reconstruction, stacked RGB")
ax.axis("off")
fig.tight_layout()
fig.savefig(OUT / "04_color.png", dpi=110)
print(f"wrote 3 figures to {OUT}")

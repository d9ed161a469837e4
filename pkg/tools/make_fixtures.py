#!/usr/bin/env python3
"""Generate the frozen CLI test fixtures under tests/fixtures/.

The event stream comes from the threshold-crossing simulator on a translating
disc scene; the golden PGM is the Tikhonov reconstruction of that stream,
written through the same CLI path the test drives. Regenerate only when the
pipeline's numerics intentionally change.
"""

import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from evrecon import cli  # noqa: E402
from evrecon import io as evio  # noqa: E402
from evrecon.io import FlowField  # noqa: E402
from evrecon.motion import gaussian_blur, simulate_events  # noqa: E402
from scipy import ndimage  # noqa: E402

OUT = pathlib.Path(__file__).resolve().parents[1] / "tests" / "fixtures"

SENSOR = 64
VELOCITY = 20.0
DURATION = 0.1
CONTRAST = 0.1

DISCS = [
    (10, 10, 5, +0.9), (10, 36, 5, -0.9), (12, 54, 4, +0.8),
    (26, 16, 6, -0.85), (24, 42, 6, +0.85),
    (38, 8, 4, +0.7), (40, 28, 6, -0.8), (38, 52, 5, +0.8),
    (54, 16, 5, -0.75), (52, 40, 6, +0.75), (56, 56, 4, -0.7),
]


def scene():
    xg, yg = np.meshgrid(np.arange(SENSOR, dtype=float), np.arange(SENSOR, dtype=float))
    img = np.zeros((SENSOR, SENSOR))
    for cx, cy, r, lv in DISCS:
        img[(xg - cx) ** 2 + (yg - cy) ** 2 < r * r] += lv
    img = gaussian_blur(img, 1.0, mode="nearest")
    return (img - img.min()) / (img.max() - img.min())


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    sc = scene()
    stamps = np.linspace(0.0, DURATION, 21)
    xg, yg = np.meshgrid(np.arange(SENSOR), np.arange(SENSOR))
    frames = [ndimage.map_coordinates(sc, [yg, xg - VELOCITY * t], order=3,
                                      mode="nearest") for t in stamps]
    packet = simulate_events(frames, stamps, CONTRAST)
    (OUT / "events.txt").write_bytes(evio.serialize_events(packet))
    (OUT / "flow_global.txt").write_bytes(evio.write_flow(FlowField.uniform(VELOCITY, 0.0)))

    dense = np.zeros((SENSOR, SENSOR, 2))
    dense[..., 0] = VELOCITY
    (OUT / "flow_dense.flo").write_bytes(evio.write_flow(FlowField(dense)))

    # mid-frame ground truth for metric tests
    mid = frames[len(frames) // 2]
    (OUT / "scene_mid.pgm").write_bytes(evio.write_pgm(mid, 8))

    # Laplacian fixture (periodic forward model of the mean-free scene)
    from evrecon.poisson import BoundaryMode, laplacian_forward
    lt = mid - mid.mean()
    lap = laplacian_forward(lt, BoundaryMode.Periodic)
    (OUT / "laplacian.flo1").write_bytes(evio.write_laplacian(lap))

    # golden reconstruction through the CLI itself
    rc = cli.main([
        "reconstruct",
        "--events", str(OUT / "events.txt"),
        "--flow", str(OUT / "flow_global.txt"),
        "--method", "tikhonov",
        "--width", str(SENSOR), "--height", str(SENSOR),
        "--out", str(OUT / "golden_tikhonov.pgm"),
    ])
    assert rc == 0, rc
    print(f"fixtures written to {OUT} ({len(packet)} events)")


if __name__ == "__main__":
    main()

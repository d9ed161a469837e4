"""Motion compensation: warped events, the IWE, its normalized form, and a
constant-velocity contrast-maximization estimator.

Events at time t are transported to a reference time t_ref along the flow,
x' = x - (t - t_ref) * u, and the signed contributions C*p are accumulated on
the pixel grid with bilinear voting followed by a small Gaussian blur. The
accumulated image divided by |u| * dt approximates the negative directional
derivative of log-brightness along the flow, which is the measurement vector
the reconstruction solvers invert.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import BadTimestamps, EmptyPacket, NonPositiveDt
from .io import EventPacket, FlowField

DEFAULT_U_MIN = 1e-6


@dataclass
class WarpedEvents:
    """Motion-compensated event positions (struct of arrays).

    ``xy`` holds fractional pixel positions, shape (N, 2); ``in_bounds`` is
    true where 0 <= x <= width-1 and 0 <= y <= height-1.
    """

    xy: np.ndarray
    p: np.ndarray
    in_bounds: np.ndarray
    width: int
    height: int

    def __len__(self) -> int:
        return self.p.size


@dataclass
class Niwe:
    """Normalized image of warped events plus the parameters that built it."""

    image: np.ndarray
    t_ref: float
    n_events: int
    sigma_px: float
    contrast: float
    u_min: float = DEFAULT_U_MIN


def warp_events(packet: EventPacket, flow: FlowField, t_ref: float) -> WarpedEvents:
    """Transport each event to t_ref: x' = x - (t - t_ref) * u.

    Dense flow is sampled at the event's integer pixel. Out-of-bounds results
    are flagged, not dropped.
    """
    u = flow.at(packet.x, packet.y)
    dt = (packet.t - t_ref)[:, None]
    xy = np.stack([packet.x, packet.y], axis=1).astype(np.float64) - dt * u
    in_bounds = (
        (xy[:, 0] >= 0.0) & (xy[:, 0] <= packet.width - 1)
        & (xy[:, 1] >= 0.0) & (xy[:, 1] <= packet.height - 1)
    )
    return WarpedEvents(xy, packet.p.copy(), in_bounds, packet.width, packet.height)


def accumulate_iwe(warped: WarpedEvents, sensor: tuple[int, int],
                   contrast: float = 1.0, sigma_px: float = 1.0) -> np.ndarray:
    """Accumulate signed event mass on the grid.

    Each in-bounds event distributes contrast * p over the 4 integer
    neighbours of its warped position with bilinear weights; the result is
    convolved with a truncated (radius ceil(3*sigma)), unit-sum Gaussian.
    Events flagged out of bounds contribute nothing.
    """
    width, height = sensor
    img = np.zeros((height, width), dtype=np.float64)
    if len(warped) > 0:
        xy = warped.xy[warped.in_bounds]
        val = contrast * warped.p[warped.in_bounds].astype(np.float64)
        if xy.shape[0] > 0:
            x0 = np.floor(xy[:, 0]).astype(np.int64)
            y0 = np.floor(xy[:, 1]).astype(np.int64)
            wx = xy[:, 0] - x0
            wy = xy[:, 1] - y0
            # x0+1 can reach the grid edge + 1 only where its weight is 0.
            x1 = np.minimum(x0 + 1, width - 1)
            y1 = np.minimum(y0 + 1, height - 1)
            np.add.at(img, (y0, x0), val * (1 - wx) * (1 - wy))
            np.add.at(img, (y0, x1), val * wx * (1 - wy))
            np.add.at(img, (y1, x0), val * (1 - wx) * wy)
            np.add.at(img, (y1, x1), val * wx * wy)
    if sigma_px > 0:
        img = gaussian_blur(img, sigma_px, mode="constant")
    return img


def gaussian_blur(image: np.ndarray, sigma: float, mode: str = "constant") -> np.ndarray:
    """Separable blur with a truncated, renormalized Gaussian kernel.

    Radius is ceil(3*sigma); the 1D kernel is renormalized to unit sum so the
    2D kernel conserves mass away from borders.
    """
    if sigma <= 0:
        return image.copy()
    radius = math.ceil(3.0 * sigma)
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (offsets / sigma) ** 2)
    kernel /= kernel.sum()
    out = ndimage.correlate1d(image, kernel, axis=0, mode=mode, cval=0.0)
    return ndimage.correlate1d(out, kernel, axis=1, mode=mode, cval=0.0)


def normalize_iwe(iwe: np.ndarray, flow: FlowField, dt: float, *,
                  t_ref: float = 0.0, n_events: int = 0, sigma_px: float = 1.0,
                  contrast: float = 1.0, u_min: float = DEFAULT_U_MIN) -> Niwe:
    """Divide the IWE by |u(x)| * dt.

    Pixels with |u| < u_min are set to zero (no flow, no events), and the
    one-pixel border ring is forced to zero so border rows of the derivative
    operator and the measurement agree.
    """
    height, width = iwe.shape
    if dt <= 0:
        if np.any(iwe != 0.0):
            raise NonPositiveDt(f"dt={dt} with a nonzero IWE")
        out = np.zeros_like(iwe)
        return Niwe(out, t_ref, n_events, sigma_px, contrast, u_min)
    mag = np.hypot(*np.moveaxis(flow.dense(width, height), 2, 0))
    live = mag >= u_min
    out = np.zeros_like(iwe)
    np.divide(iwe, mag * dt, out=out, where=live)
    out[0, :] = 0.0
    out[-1, :] = 0.0
    out[:, 0] = 0.0
    out[:, -1] = 0.0
    return Niwe(out, t_ref, n_events, sigma_px, contrast, u_min)


def build_niwe(packet: EventPacket, flow: FlowField, *, t_ref: float | None = None,
               contrast: float = 1.0, sigma_px: float = 1.0,
               u_min: float = DEFAULT_U_MIN) -> Niwe:
    """warp + accumulate + normalize in one call; t_ref defaults to the packet midpoint."""
    if t_ref is None:
        lo, hi = packet.t_span
        t_ref = 0.5 * (lo + hi)
    warped = warp_events(packet, flow, t_ref)
    iwe = accumulate_iwe(warped, (packet.width, packet.height), contrast, sigma_px)
    return normalize_iwe(iwe, flow, packet.duration, t_ref=t_ref, n_events=len(packet),
                         sigma_px=sigma_px, contrast=contrast, u_min=u_min)


@dataclass(frozen=True)
class VelocityGrid:
    """Search grid for the constant-flow estimator: inclusive ranges + step, px/s."""

    vx: tuple[float, float]
    vy: tuple[float, float]
    step: float

    def candidates(self) -> np.ndarray:
        ax = np.arange(self.vx[0], self.vx[1] + 0.5 * self.step, self.step)
        ay = np.arange(self.vy[0], self.vy[1] + 0.5 * self.step, self.step)
        gx, gy = np.meshgrid(ax, ay, indexing="ij")
        return np.stack([gx.ravel(), gy.ravel()], axis=1)


def estimate_global_flow_cmax(packet: EventPacket, search: VelocityGrid) -> FlowField:
    """Grid search for the constant velocity that maximizes IWE variance.

    The IWE is built at sigma = 1 px for each candidate. Ties are broken by
    smallest speed, then lexicographically on (ux, uy), so the result is
    deterministic.
    """
    if len(packet) == 0:
        raise EmptyPacket("cannot estimate flow from an empty packet")
    lo, hi = packet.t_span
    t_ref = 0.5 * (lo + hi)
    best = None
    best_key = None
    for ux, uy in search.candidates():
        warped = warp_events(packet, FlowField.uniform(ux, uy), t_ref)
        iwe = accumulate_iwe(warped, (packet.width, packet.height), 1.0, 1.0)
        var = float(np.var(iwe))
        key = (-var, ux * ux + uy * uy, ux, uy)
        if best_key is None or key < best_key:
            best_key = key
            best = (ux, uy)
    return FlowField.uniform(best[0], best[1])


def simulate_events(video: list[np.ndarray], timestamps: np.ndarray,
                    contrast: float) -> EventPacket:
    """Event-generation oracle: threshold crossings of linearly interpolated
    log-brightness.

    Each pixel has an independent reference level initialized to its frame-0
    value; an event fires every time the interpolated signal crosses the next
    multiple of ``contrast``, at the linearly interpolated crossing time.
    """
    timestamps = np.asarray(timestamps, dtype=np.float64)
    if len(video) < 2 or timestamps.size != len(video):
        raise BadTimestamps("need >= 2 frames with one timestamp each")
    if np.any(np.diff(timestamps) <= 0):
        raise BadTimestamps("timestamps must be strictly increasing")
    if contrast <= 0:
        raise ValueError("contrast must be positive")
    height, width = video[0].shape
    xs_flat = np.tile(np.arange(width), height)
    ys_flat = np.repeat(np.arange(height), width)
    ref = video[0].ravel().astype(np.float64).copy()
    # Crossings landing within eps*contrast of a level still count: keeps
    # decimal inputs like 0.3/0.1 from losing the last event to roundoff.
    eps = 1e-9
    chunks = []
    for i in range(len(video) - 1):
        a = video[i].ravel().astype(np.float64)
        b = video[i + 1].ravel().astype(np.float64)
        ta, tb = timestamps[i], timestamps[i + 1]
        delta = b - ref
        n_cross = np.floor(np.abs(delta) / contrast + eps).astype(np.int64)
        slope = b - a
        active = (n_cross > 0) & (slope != 0)
        if not np.any(active):
            continue
        counts = n_cross[active]
        pix = np.flatnonzero(active)
        rep_pix = np.repeat(pix, counts)
        # k-th crossing within each pixel: 1..K
        k = np.ones(counts.sum(), dtype=np.int64)
        starts = np.cumsum(counts)[:-1]
        if starts.size:
            k[starts] -= counts[:-1]
        k = np.cumsum(k)
        sign = np.sign(delta[rep_pix])
        level = ref[rep_pix] + sign * k * contrast
        frac = (level - a[rep_pix]) / slope[rep_pix]
        t_ev = ta + np.clip(frac, 0.0, 1.0) * (tb - ta)
        chunks.append((t_ev, xs_flat[rep_pix], ys_flat[rep_pix],
                       sign.astype(np.int64)))
        ref[pix] += np.sign(delta[pix]) * counts * contrast
    if not chunks:
        return EventPacket(np.empty(0), np.empty(0, np.int64), np.empty(0, np.int64),
                           np.empty(0, np.int64), width, height)
    t_all = np.concatenate([c[0] for c in chunks])
    x_all = np.concatenate([c[1] for c in chunks])
    y_all = np.concatenate([c[2] for c in chunks])
    p_all = np.concatenate([c[3] for c in chunks])
    order = np.lexsort((x_all, y_all, t_all))
    return EventPacket(t_all[order], x_all[order], y_all[order], p_all[order],
                       width, height)

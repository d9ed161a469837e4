"""Pipeline variants: super-resolution, per-cluster reconstruction from
motion-segmentation labels, Bayer color reconstruction, and the flow
corruption utility for sensitivity studies.
"""

from __future__ import annotations

import warnings

import numpy as np

from .errors import CountMismatch, MissingFlow, OddDimensions
from .io import EventPacket, FlowField
from .motion import Niwe
from .pipeline import reconstruct_events
from .reconstruct import ReconConfig, ReconResult

BAYER_PATTERNS = ("RGGB", "BGGR", "GRBG", "GBRG")


def reconstruct_superres(packet: EventPacket, flow: FlowField, scale: int,
                         cfg: ReconConfig, **kwargs) -> tuple[ReconResult, Niwe]:
    """Reconstruct on a scale-times-finer grid; the linear system holds at any
    resolution, so only the measurement and operator change."""
    if scale < 1 or int(scale) != scale:
        raise ValueError(f"scale must be a positive integer, got {scale}")
    return reconstruct_events(packet, flow, cfg, scale=int(scale), **kwargs)


def reconstruct_clusters(packet: EventPacket, labels: np.ndarray,
                         flows: list[FlowField], cfg: ReconConfig,
                         **kwargs) -> list[tuple[int, ReconResult]]:
    """Run the standard pipeline independently on each label's events."""
    labels = np.asarray(labels)
    if labels.size != len(packet):
        raise CountMismatch(f"{labels.size} labels for {len(packet)} events")
    n_clusters = int(labels.max()) + 1 if labels.size else 0
    out = []
    for cid in range(n_clusters):
        if cid >= len(flows):
            raise MissingFlow(cid)
        sub = packet.select(labels == cid)
        if len(sub) == 0:
            warnings.warn(f"cluster {cid} has no events; returning a zero image")
        result, _ = reconstruct_events(sub, flows[cid], cfg, **kwargs)
        out.append((cid, result))
    return out


def split_bayer(packet: EventPacket, pattern: str
                ) -> dict[str, EventPacket]:
    """Partition events into half-resolution R/G/B sub-streams.

    The two green sites merge into one stream (coordinates floor-halved), so
    green carries roughly twice the event density of red or blue.
    """
    pattern = pattern.upper()
    if pattern not in BAYER_PATTERNS:
        raise ValueError(f"pattern {pattern!r} not one of {BAYER_PATTERNS}")
    if packet.width % 2 or packet.height % 2:
        raise OddDimensions(f"sensor {packet.width}x{packet.height} must be even")
    site = np.array([[pattern[0], pattern[1]], [pattern[2], pattern[3]]])
    ev_letter = site[packet.y % 2, packet.x % 2]
    streams = {}
    for letter in "RGB":
        sub = packet.select(ev_letter == letter)
        streams[letter] = EventPacket(sub.t, sub.x // 2, sub.y // 2, sub.p,
                                      packet.width // 2, packet.height // 2)
    return streams


def _channel_flow(flow: FlowField, pattern: str, letter: str,
                  sensor: tuple[int, int]) -> FlowField:
    """Flow on the half-resolution channel grid, in half-res pixels/second."""
    if flow.is_global:
        return flow.scaled(0.5)
    width, height = sensor
    grid = flow.dense(width, height)
    site = np.array([[pattern[0], pattern[1]], [pattern[2], pattern[3]]])
    offsets = [(int(r), int(c)) for r, c in zip(*np.nonzero(site == letter))]
    acc = np.zeros((height // 2, width // 2, 2))
    for oy, ox in offsets:
        acc += grid[oy::2, ox::2, :]
    return FlowField(acc / len(offsets) * 0.5)


def reconstruct_color(packet: EventPacket, flow: FlowField, pattern: str,
                      cfg: ReconConfig, **kwargs) -> np.ndarray:
    """Per-channel 2x super-resolved reconstruction, stacked (3, H, W)."""
    pattern = pattern.upper()
    streams = split_bayer(packet, pattern)
    planes = []
    for letter in "RGB":
        ch_flow = _channel_flow(flow, pattern, letter,
                                (packet.width, packet.height))
        result, _ = reconstruct_superres(streams[letter], ch_flow, 2, cfg, **kwargs)
        planes.append(result.image)
    return np.stack(planes, axis=0)


def corrupt_flow(flow: FlowField, b: float, seed: int) -> FlowField:
    """Add independent uniform noise in [-b, b] to each component of a dense
    flow field; seeded and reproducible."""
    if flow.is_global:
        raise ValueError("corrupt_flow expects a dense flow field")
    if b < 0:
        raise ValueError("noise bound must be >= 0")
    if b == 0:
        return FlowField(flow.u.copy())
    rng = np.random.default_rng(seed)
    noise = rng.uniform(-b, b, size=flow.u.shape)
    return FlowField(flow.u + noise)

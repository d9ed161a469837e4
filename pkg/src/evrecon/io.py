"""Readers and writers for all on-disk formats.

Formats handled here, byte-exact:

* event streams: text, one event per line ``t x y p`` with t in seconds,
  integer pixel coordinates and polarity in {0, 1, -1, +1} (0 is read as -1);
* flow fields: either a two-token text file ``ux uy`` (global velocity) or a
  binary dense container (magic float32 202021.25, int32 width, int32 height,
  then width*height little-endian float32 (u, v) pairs, row-major);
* Laplacian images: the same binary container with one channel per pixel;
* grayscale images: binary P5 PGM, maxval 255 or 65535 (16-bit big-endian);
* cluster labels: text, one integer per line, one line per event.

Images are plain 2D float64 arrays of shape (height, width), row-major, so
``image.ravel()`` indexes pixel (x, y) at ``y * width + x``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadMagic,
    CountMismatch,
    DimensionMismatch,
    MalformedLine,
    NonMonotonicTime,
    OutOfBounds,
    TruncatedData,
    UnsupportedFormat,
)

FLO_MAGIC = 202021.25


@dataclass
class EventPacket:
    """A time-ordered batch of events on a fixed sensor grid.

    Events are stored struct-of-arrays: ``t`` in seconds (float64,
    non-decreasing), integer pixel coordinates ``x``/``y`` and polarity
    ``p`` in {-1, +1}.
    """

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    p: np.ndarray
    width: int
    height: int

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=np.float64)
        self.x = np.asarray(self.x, dtype=np.int64)
        self.y = np.asarray(self.y, dtype=np.int64)
        self.p = np.asarray(self.p, dtype=np.int64)

    def __len__(self) -> int:
        return self.t.size

    @property
    def t_span(self) -> tuple[float, float]:
        if self.t.size == 0:
            return (0.0, 0.0)
        return (float(self.t[0]), float(self.t[-1]))

    @property
    def duration(self) -> float:
        lo, hi = self.t_span
        return hi - lo

    def tail(self, n: int) -> "EventPacket":
        """The packet restricted to its last ``n`` events."""
        if n >= len(self):
            return self
        return EventPacket(self.t[-n:], self.x[-n:], self.y[-n:], self.p[-n:],
                           self.width, self.height)

    def select(self, mask: np.ndarray) -> "EventPacket":
        return EventPacket(self.t[mask], self.x[mask], self.y[mask], self.p[mask],
                           self.width, self.height)


@dataclass(frozen=True)
class FlowField:
    """Image-plane velocity in pixels/second.

    ``u`` is either a (2,) vector (one velocity for the whole sensor) or a
    dense (height, width, 2) grid. Component order is (ux, uy).
    """

    u: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u", np.asarray(self.u, dtype=np.float64))
        if self.u.shape != (2,) and (self.u.ndim != 3 or self.u.shape[2] != 2):
            raise ValueError(f"flow must be (2,) or (H, W, 2), got {self.u.shape}")
        if not np.all(np.isfinite(self.u)):
            raise ValueError("flow contains non-finite components")

    @classmethod
    def uniform(cls, ux: float, uy: float) -> "FlowField":
        return cls(np.array([ux, uy], dtype=np.float64))

    @property
    def is_global(self) -> bool:
        return self.u.shape == (2,)

    def dense(self, width: int, height: int) -> np.ndarray:
        """The flow as a (height, width, 2) grid for the given sensor."""
        if self.is_global:
            return np.broadcast_to(self.u, (height, width, 2)).copy()
        if self.u.shape[:2] != (height, width):
            raise DimensionMismatch(
                f"flow grid is {self.u.shape[1]}x{self.u.shape[0]}, sensor is {width}x{height}")
        return self.u

    def at(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Flow vectors at integer pixel coordinates, shape (N, 2)."""
        if self.is_global:
            return np.broadcast_to(self.u, (np.size(x), 2))
        return self.u[np.asarray(y), np.asarray(x)]

    def scaled(self, s: float) -> "FlowField":
        return FlowField(self.u * s)


def parse_events(source, sensor: tuple[int, int], time_unit: str = "s") -> EventPacket:
    """Parse a ``t x y p`` text event stream.

    ``source`` is bytes, str, or a binary file object. Polarity 0 maps to -1.
    Timestamps must be non-decreasing; coordinates must lie inside ``sensor``
    (width, height). ``time_unit="us"`` divides timestamps by 1e6 on read.
    """
    width, height = sensor
    text = _as_text(source)
    ts, xs, ys, ps = [], [], [], []
    prev_t = -np.inf
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4:
            raise MalformedLine(line_no, f"expected 4 fields, got {len(parts)}")
        try:
            t = float(parts[0])
            x = int(parts[1])
            y = int(parts[2])
            p = int(parts[3])
        except ValueError as exc:
            raise MalformedLine(line_no, str(exc)) from exc
        if p not in (0, 1, -1):
            raise MalformedLine(line_no, f"polarity {p} not in {{0, 1, -1}}")
        if not (0 <= x < width and 0 <= y < height):
            raise OutOfBounds(line_no, f"({x}, {y}) outside {width}x{height}")
        if time_unit == "us":
            t *= 1e-6
        if t < prev_t:
            raise NonMonotonicTime(line_no)
        prev_t = t
        ts.append(t)
        xs.append(x)
        ys.append(y)
        ps.append(1 if p == 1 else -1)
    return EventPacket(np.array(ts), np.array(xs, dtype=np.int64),
                       np.array(ys, dtype=np.int64), np.array(ps, dtype=np.int64),
                       width, height)


def serialize_events(packet: EventPacket) -> bytes:
    """Inverse of parse_events: the text form round-trips bit-exactly."""
    lines = [f"{float(t)!r} {x} {y} {p}" for t, x, y, p
             in zip(packet.t, packet.x, packet.y, packet.p)]
    return ("\n".join(lines) + ("\n" if lines else "")).encode("ascii")


def parse_flow(source, sensor: tuple[int, int]) -> FlowField:
    """Parse a flow file: 2-token text (global) or the dense binary container."""
    data = _as_bytes(source)
    if len(data) >= 4 and struct.unpack("<f", data[:4])[0] == FLO_MAGIC:
        grid = _read_dense_floats(data, channels=2)
        width, height = sensor
        if grid.shape[:2] != (height, width):
            raise DimensionMismatch(
                f"flow file is {grid.shape[1]}x{grid.shape[0]}, sensor is {width}x{height}")
        return FlowField(grid)
    try:
        tokens = data.decode("ascii").split()
        if len(tokens) != 2:
            raise ValueError(f"expected 2 tokens, got {len(tokens)}")
        return FlowField.uniform(float(tokens[0]), float(tokens[1]))
    except (ValueError, UnicodeDecodeError) as exc:
        raise BadMagic(f"not a dense flow container or a 'ux uy' text file: {exc}") from exc


def write_flow(flow: FlowField) -> bytes:
    """Serialize a flow field; dense fields round-trip bit-exactly."""
    if flow.is_global:
        return f"{float(flow.u[0])!r} {float(flow.u[1])!r}\n".encode("ascii")
    return _write_dense_floats(flow.u)


def parse_laplacian(source) -> np.ndarray:
    """Read a single-channel dense-float container as an image."""
    grid = _read_dense_floats(_as_bytes(source), channels=1)
    return grid[:, :, 0]


def write_laplacian(image: np.ndarray) -> bytes:
    return _write_dense_floats(np.asarray(image, dtype=np.float64)[:, :, None])


def _read_dense_floats(data: bytes, channels: int) -> np.ndarray:
    if len(data) < 12:
        raise TruncatedData("container shorter than its 12-byte header")
    magic, width, height = struct.unpack("<fii", data[:12])
    if magic != FLO_MAGIC:
        raise BadMagic(f"magic {magic} != {FLO_MAGIC}")
    if width <= 0 or height <= 0:
        raise DimensionMismatch(f"bad dimensions {width}x{height}")
    need = width * height * channels * 4
    if len(data) - 12 < need:
        raise TruncatedData(f"payload {len(data) - 12} bytes, expected {need}")
    values = np.frombuffer(data[12:12 + need], dtype="<f4")
    return values.reshape(height, width, channels).astype(np.float64)


def _write_dense_floats(grid: np.ndarray) -> bytes:
    height, width, _ = grid.shape
    header = struct.pack("<fii", FLO_MAGIC, width, height)
    return header + grid.astype("<f4").tobytes()


def read_pgm(source) -> np.ndarray:
    """Read a binary (P5) PGM; pixel values are mapped to [0, 1]."""
    data = _as_bytes(source)
    if data[:2] != b"P5":
        raise UnsupportedFormat(f"not a binary PGM (magic {data[:2]!r})")
    fields, offset = _pgm_header_fields(data)
    width, height, maxval = fields
    if maxval not in (255, 65535):
        raise UnsupportedFormat(f"maxval {maxval} not supported")
    dtype = np.dtype(np.uint8) if maxval == 255 else np.dtype(">u2")
    count = width * height
    raw = data[offset:offset + count * dtype.itemsize]
    if len(raw) < count * dtype.itemsize:
        raise TruncatedData(f"pixel payload {len(raw)} bytes, expected {count * dtype.itemsize}")
    pixels = np.frombuffer(raw, dtype=dtype).reshape(height, width)
    return pixels.astype(np.float64) / maxval


def write_pgm(image: np.ndarray, bit_depth: int = 8,
              vrange: tuple[float, float] = (0.0, 1.0)) -> bytes:
    """Write a P5 PGM, mapping ``vrange`` linearly onto the full pixel range."""
    if bit_depth not in (8, 16):
        raise UnsupportedFormat(f"bit depth {bit_depth} not in (8, 16)")
    lo, hi = vrange
    maxval = 255 if bit_depth == 8 else 65535
    span = hi - lo if hi > lo else 1.0
    scaled = np.clip((np.asarray(image, dtype=np.float64) - lo) / span, 0.0, 1.0)
    quant = np.rint(scaled * maxval)
    pixels = quant.astype(np.uint8 if bit_depth == 8 else ">u2")
    height, width = image.shape
    header = f"P5\n{width} {height}\n{maxval}\n".encode("ascii")
    return header + pixels.tobytes()


def _pgm_header_fields(data: bytes) -> tuple[tuple[int, int, int], int]:
    # Header tokens are separated by whitespace; '#' starts a comment to EOL.
    # Exactly one whitespace byte follows the maxval token.
    fields = []
    i = 2
    while len(fields) < 3:
        while i < len(data) and data[i:i + 1].isspace():
            i += 1
        if i < len(data) and data[i:i + 1] == b"#":
            while i < len(data) and data[i:i + 1] != b"\n":
                i += 1
            continue
        j = i
        while j < len(data) and not data[j:j + 1].isspace():
            j += 1
        if i == j:
            raise TruncatedData("PGM header ended early")
        try:
            fields.append(int(data[i:j]))
        except ValueError as exc:
            raise UnsupportedFormat(f"bad PGM header token {data[i:j]!r}") from exc
        i = j
    return (fields[0], fields[1], fields[2]), i + 1


def write_ppm(planes: np.ndarray, vrange: tuple[float, float] = (0.0, 1.0)) -> bytes:
    """Write a binary 8-bit P6 PPM from (3, height, width) float planes."""
    if planes.ndim != 3 or planes.shape[0] != 3:
        raise DimensionMismatch(f"expected (3, H, W) planes, got {planes.shape}")
    lo, hi = vrange
    span = hi - lo if hi > lo else 1.0
    scaled = np.clip((planes - lo) / span, 0.0, 1.0)
    quant = np.rint(scaled * 255).astype(np.uint8)
    _, height, width = planes.shape
    header = f"P6\n{width} {height}\n255\n".encode("ascii")
    return header + np.moveaxis(quant, 0, -1).tobytes()


def parse_labels(source, n_events: int) -> np.ndarray:
    """Per-event cluster ids, densely re-indexed to 0..N_c-1 in sorted order."""
    text = _as_text(source)
    raw = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            raw.append(int(line))
        except ValueError as exc:
            raise MalformedLine(line_no, str(exc)) from exc
    if len(raw) != n_events:
        raise CountMismatch(f"{len(raw)} labels for {n_events} events")
    labels = np.asarray(raw, dtype=np.int64)
    if labels.size == 0:
        return labels
    _, dense = np.unique(labels, return_inverse=True)
    return dense.astype(np.int64)


def _as_bytes(source) -> bytes:
    if isinstance(source, bytes):
        return source
    if isinstance(source, str):
        return source.encode("ascii")
    return source.read()


def _as_text(source) -> str:
    data = _as_bytes(source)
    return data.decode("ascii") if isinstance(data, bytes) else data

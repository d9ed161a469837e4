"""Framing for the bridge protocol (little-endian, over stdin/stdout).

Request:  b"EVDN" | u32 width | u32 height | f32 sigma | w*h f32 pixels
Reply:    b"EVDN" | u32 width | u32 height |             w*h f32 pixels

Pixels are row-major float32.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"EVDN"


class ProtocolViolation(Exception):
    pass


def _read_exact(stream, n: int) -> bytes:
    chunks = []
    got = 0
    while got < n:
        chunk = stream.read(n - got)
        if chunk == b"":
            break
        chunks.append(chunk)
        got += len(chunk)
    return b"".join(chunks)


def read_request(stream):
    """One request, or None on clean EOF. Raises ProtocolViolation on
    malformed or truncated input."""
    header = _read_exact(stream, 16)
    if header == b"":
        return None
    if len(header) < 16:
        raise ProtocolViolation("truncated request header")
    if header[:4] != MAGIC:
        raise ProtocolViolation(f"bad magic {header[:4]!r}")
    width, height, sigma = struct.unpack("<IIf", header[4:16])
    if width == 0 or height == 0 or width * height > 64_000_000:
        raise ProtocolViolation(f"implausible dimensions {width}x{height}")
    body = _read_exact(stream, width * height * 4)
    if len(body) != width * height * 4:
        raise ProtocolViolation("truncated request body")
    image = np.frombuffer(body, dtype="<f4").reshape(height, width)
    return image, float(sigma)


def write_reply(stream, image: np.ndarray) -> None:
    height, width = image.shape
    stream.write(MAGIC + struct.pack("<II", width, height)
                 + np.ascontiguousarray(image, dtype="<f4").tobytes())
    stream.flush()

"""Gaussian denoisers for the plug-and-play step, plus a byte-protocol bridge
to out-of-process denoisers.

A denoiser is any callable (image, sigma) -> image of the same shape, finite
for finite input, with denoise(image, 0) ~= image for the built-ins.

Bridge protocol (little-endian, over a child's stdin/stdout):

    request:  b"EVDN" | u32 width | u32 height | f32 sigma | w*h f32 pixels
    reply:    b"EVDN" | u32 width | u32 height |             w*h f32 pixels

Pixels are row-major. Anything else on the wire is a protocol error.
"""

from __future__ import annotations

import os
import select
import struct
import subprocess
import time

import numpy as np

from .errors import BridgeTimeout, ChildSpawnError, ProtocolError
from .motion import gaussian_blur
from .operators import identity_operator
from .reconstruct import ReconConfig, TvParams, solve_tv

BRIDGE_MAGIC = b"EVDN"
DEFAULT_TIMEOUT = 30.0


def gaussian_denoiser(image: np.ndarray, sigma: float, gain: float = 3.0) -> np.ndarray:
    """Blur with spatial std gain*sigma px (truncated 3 std, unit-sum kernel).

    Replicated borders keep every output pixel a convex combination of input
    pixels, so the output range is contained in the input range.
    """
    if sigma <= 0:
        return image.copy()
    return gaussian_blur(image, gain * sigma, mode="nearest")


def tv_denoiser(image: np.ndarray, sigma: float,
                outer: int = 20, inner: int = 10) -> np.ndarray:
    """Proximal map of sigma^2 * TV: min_z 0.5 ||z - image||^2 + sigma^2 TV(z).

    Reuses the split Bregman driver with the data operator set to the
    identity. The optimum has the same mean as the input, so no gauge fixing
    is applied here.
    """
    if sigma <= 0:
        return image.copy()
    height, width = image.shape
    ident = identity_operator(width * height)
    cfg = ReconConfig(method="tv", lam=sigma * sigma,
                      tv=TvParams(outer=outer, inner=inner))
    res = solve_tv(ident, image, cfg, mean_free=False)
    return res.image


def identity_denoiser(image: np.ndarray, sigma: float) -> np.ndarray:
    return image.copy()


def encode_request(image: np.ndarray, sigma: float) -> bytes:
    height, width = image.shape
    header = BRIDGE_MAGIC + struct.pack("<IIf", width, height, sigma)
    return header + image.astype("<f4").tobytes()


def decode_request(header: bytes, read_body) -> tuple[np.ndarray, float]:
    """Parse a request given its 16 header bytes and a body reader callable."""
    if header[:4] != BRIDGE_MAGIC:
        raise ProtocolError(f"bad request magic {header[:4]!r}")
    width, height, sigma = struct.unpack("<IIf", header[4:16])
    body = read_body(width * height * 4)
    if len(body) != width * height * 4:
        raise ProtocolError("truncated request body")
    img = np.frombuffer(body, dtype="<f4").reshape(height, width)
    return img.astype(np.float64), float(sigma)


def encode_reply(image: np.ndarray) -> bytes:
    height, width = image.shape
    return BRIDGE_MAGIC + struct.pack("<II", width, height) + image.astype("<f4").tobytes()


class BridgeDenoiser:
    """Denoiser backed by a child process speaking the bridge protocol.

    One child per instance, one request in flight; concurrent reconstructions
    need separate instances. Usable as a context manager.
    """

    def __init__(self, argv: list[str], timeout: float = DEFAULT_TIMEOUT):
        self.timeout = timeout
        try:
            self.child = subprocess.Popen(
                argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE)
        except OSError as exc:
            raise ChildSpawnError(f"cannot spawn {argv!r}: {exc}") from exc

    def __call__(self, image: np.ndarray, sigma: float) -> np.ndarray:
        height, width = image.shape
        request = encode_request(image, sigma)
        try:
            self.child.stdin.write(request)
            self.child.stdin.flush()
        except (BrokenPipeError, ValueError) as exc:
            raise ProtocolError(f"child rejected request: {exc}") from exc
        header = self._read_exact(12)
        if header[:4] != BRIDGE_MAGIC:
            raise ProtocolError(f"bad reply magic {header[:4]!r}")
        r_width, r_height = struct.unpack("<II", header[4:12])
        if (r_width, r_height) != (width, height):
            raise ProtocolError(
                f"reply is {r_width}x{r_height}, request was {width}x{height}")
        body = self._read_exact(width * height * 4)
        return np.frombuffer(body, dtype="<f4").reshape(height, width).astype(np.float64)

    def _read_exact(self, n: int) -> bytes:
        fd = self.child.stdout.fileno()
        os.set_blocking(fd, False)
        deadline = _now() + self.timeout
        chunks = []
        got = 0
        while got < n:
            remaining = deadline - _now()
            if remaining <= 0:
                raise BridgeTimeout(f"no reply within {self.timeout} s")
            ready, _, _ = select.select([fd], [], [], remaining)
            if not ready:
                continue
            chunk = os.read(fd, n - got)
            if chunk == b"":
                raise ProtocolError("child closed its output mid-reply")
            chunks.append(chunk)
            got += len(chunk)
        return b"".join(chunks)

    def close(self) -> None:
        if self.child.poll() is None:
            self.child.stdin.close()
            try:
                self.child.wait(timeout=2.0)
            except subprocess.TimeoutExpired:
                self.child.kill()
                self.child.wait()

    def __enter__(self) -> "BridgeDenoiser":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def bridge_denoiser(argv: list[str], timeout: float | None = None) -> BridgeDenoiser:
    """Spawn a bridge child; timeout defaults to $EVRECON_BRIDGE_TIMEOUT or 30 s."""
    if timeout is None:
        timeout = float(os.environ.get("EVRECON_BRIDGE_TIMEOUT", DEFAULT_TIMEOUT))
    return BridgeDenoiser(argv, timeout)


def make_denoiser(spec: str, timeout: float | None = None):
    """Resolve a denoiser by name: gaussian | tv | identity | bridge:CMD."""
    if spec == "gaussian":
        return gaussian_denoiser
    if spec == "tv":
        return tv_denoiser
    if spec == "identity":
        return identity_denoiser
    if spec.startswith("bridge:"):
        argv = spec[len("bridge:"):].split()
        if not argv:
            raise ValueError("bridge: needs a command")
        return bridge_denoiser(argv, timeout)
    raise ValueError(f"unknown denoiser {spec!r}")


def _now() -> float:
    return time.monotonic()

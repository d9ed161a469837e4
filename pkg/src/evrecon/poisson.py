"""Brightness reconstruction from a given Laplacian image.

The quadratic data step of the splitting, argmin_l 0.5 ||c - k (*) l||^2 +
(mu/2) ||l - z||^2, is diagonal in a trigonometric basis: the DFT under
periodic boundary conditions, or the DCT-II under reflective (Neumann)
conditions, where the 5-point Laplacian has eigenvalues
2 cos(pi i / m) + 2 cos(pi j / n) - 4. mu > 0 keeps the zero-frequency
denominator away from zero; the output's mean component comes from z.
"""

from __future__ import annotations

from enum import Enum

import numpy as np
from scipy import fft as spfft

from .errors import DenoiserFailure, DimensionMismatch, NonPositiveMu
from .reconstruct import Denoiser, ReconConfig, ReconResult, sigma_schedule
from .solvers import SolveReport


class BoundaryMode(str, Enum):
    Periodic = "periodic"
    Neumann = "neumann"


def _periodic_symbol(height: int, width: int) -> np.ndarray:
    kern = np.zeros((height, width))
    kern[0, 0] = -4.0
    kern[0, 1 % width] += 1.0
    kern[0, (-1) % width] += 1.0
    kern[1 % height, 0] += 1.0
    kern[(-1) % height, 0] += 1.0
    return np.fft.fft2(kern)


def _neumann_symbol(height: int, width: int) -> np.ndarray:
    wy = 2.0 * np.cos(np.pi * np.arange(height) / height) - 2.0
    wx = 2.0 * np.cos(np.pi * np.arange(width) / width) - 2.0
    return wy[:, None] + wx[None, :]


def poisson_closed_form(c: np.ndarray, z: np.ndarray, mu: float,
                        mode: BoundaryMode = BoundaryMode.Periodic) -> np.ndarray:
    """One data step: invert (K^T K + mu I) l = K^T c + mu z in the transform
    domain, K being convolution with the 5-point Laplacian."""
    if c.shape != z.shape:
        raise DimensionMismatch(f"laplacian {c.shape} vs prior image {z.shape}")
    if mu <= 0:
        raise NonPositiveMu(f"mu={mu}; the zero-frequency denominator needs mu > 0")
    height, width = c.shape
    mode = BoundaryMode(mode)
    if mode is BoundaryMode.Periodic:
        sym = _periodic_symbol(height, width)
        num = np.conj(sym) * np.fft.fft2(c) + mu * np.fft.fft2(z)
        den = np.conj(sym) * sym + mu
        return np.real(np.fft.ifft2(num / den))
    sym = _neumann_symbol(height, width)
    ch = spfft.dctn(c, type=2, norm="ortho")
    zh = spfft.dctn(z, type=2, norm="ortho")
    lh = (sym * ch + mu * zh) / (sym * sym + mu)
    return spfft.idctn(lh, type=2, norm="ortho")


def laplacian_forward(image: np.ndarray, mode: BoundaryMode) -> np.ndarray:
    """Apply the 5-point Laplacian under the boundary rule the closed form
    assumes; useful for building consistent synthetic inputs."""
    mode = BoundaryMode(mode)
    if mode is BoundaryMode.Periodic:
        out = -4.0 * image
        out += np.roll(image, 1, axis=0) + np.roll(image, -1, axis=0)
        out += np.roll(image, 1, axis=1) + np.roll(image, -1, axis=1)
        return out
    padded = np.pad(image, 1, mode="symmetric")
    return (padded[:-2, 1:-1] + padded[2:, 1:-1] + padded[1:-1, :-2]
            + padded[1:-1, 2:] - 4.0 * image)


def solve_poisson_pnp(c: np.ndarray, denoiser: Denoiser, cfg: ReconConfig,
                      mode: BoundaryMode = BoundaryMode.Periodic) -> ReconResult:
    """HQS over the Laplacian data term: alternate the closed-form step with
    z_k = denoiser(l_k, sigma_k) under the shared mu schedule. Starts from
    z = 0; the returned image is mean-free."""
    lam = cfg.resolved_lambda if cfg.resolved_lambda > 0 else 1.0
    if cfg.pnp.mu_schedule is not None:
        mus = np.asarray(cfg.pnp.mu_schedule, dtype=np.float64)
        sigmas = np.sqrt(lam / mus)
    else:
        sigmas = sigma_schedule(cfg.pnp.sigma_max, cfg.pnp.sigma_min, cfg.pnp.n_outer)
        mus = lam / sigmas**2
    if np.any(mus <= 0) or np.any(np.diff(mus) < 0):
        raise ValueError("mu schedule must be positive and non-decreasing")
    z = np.zeros_like(c)
    x = z
    trace = [(_data_term(c, z, mode), 0.0, _data_term(c, z, mode))]
    for sigma, mu in zip(sigmas, mus):
        x = poisson_closed_form(c, z, float(mu), mode)
        try:
            z = denoiser(x, float(sigma))
        except Exception as exc:
            raise DenoiserFailure(f"denoiser failed at sigma={sigma}: {exc}") from exc
        coupling = float(np.linalg.norm(x - z))
        data = _data_term(c, x, mode)
        trace.append((data, coupling, data + 0.5 * mu * coupling * coupling))
    img = z - z.mean()
    cn = np.linalg.norm(c)
    res = np.linalg.norm(laplacian_forward(z, mode) - c)
    report = SolveReport(len(mus), res / cn if cn > 0 else res, True)
    return ReconResult(img, trace, report)


def _data_term(c: np.ndarray, x: np.ndarray, mode: BoundaryMode) -> float:
    r = c - laplacian_forward(x, mode)
    return 0.5 * float((r * r).sum())

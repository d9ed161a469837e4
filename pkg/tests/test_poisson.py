import numpy as np
import pytest

from evrecon.denoise import identity_denoiser, tv_denoiser
from evrecon.errors import DimensionMismatch, NonPositiveMu
from evrecon.metrics import align_mean_scale, ssim
from evrecon.motion import gaussian_blur
from evrecon.poisson import (BoundaryMode, laplacian_forward,
                             poisson_closed_form, solve_poisson_pnp)
from evrecon.reconstruct import PnpParams, ReconConfig

from conftest import unit_range


def smooth_image(shape, seed=5, sigma=4.0):
    rng = np.random.default_rng(seed)
    return gaussian_blur(rng.normal(size=shape), sigma, mode="nearest")


def dense_system_oracle(c, z, mu, mode):
    """(K^T K + mu I) l = K^T c + mu z with K materialized columnwise."""
    n = c.shape[0] * c.shape[1]
    K = np.zeros((n, n))
    for i in range(c.shape[0]):
        for j in range(c.shape[1]):
            e = np.zeros(c.shape)
            e[i, j] = 1.0
            K[:, i * c.shape[1] + j] = laplacian_forward(e, mode).ravel()
    sol = np.linalg.solve(K.T @ K + mu * np.eye(n), K.T @ c.ravel() + mu * z.ravel())
    return sol.reshape(c.shape)


class TestClosedForm:
    @pytest.mark.parametrize("mode", [BoundaryMode.Periodic, BoundaryMode.Neumann])
    def test_identity_fixed_point(self, mode):
        lstar = smooth_image((64, 64))
        c = laplacian_forward(lstar, mode)
        out = poisson_closed_form(c, lstar, 0.7, mode)
        assert np.abs(out - lstar).max() < 1e-10

    def test_zero_laplacian_constant_prior(self):
        z = np.full((8, 8), 2.5)
        out = poisson_closed_form(np.zeros((8, 8)), z, 1.0, BoundaryMode.Periodic)
        assert np.allclose(out, 2.5, atol=1e-12)

    @pytest.mark.parametrize("mode", [BoundaryMode.Periodic, BoundaryMode.Neumann])
    def test_matches_dense_oracle(self, mode, rng):
        c = rng.normal(size=(8, 8))
        z = rng.normal(size=(8, 8))
        got = poisson_closed_form(c, z, 0.5, mode)
        want = dense_system_oracle(c, z, 0.5, mode)
        assert np.abs(got - want).max() < 1e-8

    def test_rejects_nonpositive_mu(self):
        with pytest.raises(NonPositiveMu):
            poisson_closed_form(np.zeros((4, 4)), np.zeros((4, 4)), 0.0)
        with pytest.raises(DimensionMismatch):
            poisson_closed_form(np.zeros((4, 4)), np.zeros((4, 5)), 1.0)

    def test_joint_linearity(self, rng):
        c1, c2 = rng.normal(size=(2, 6, 6))
        z1, z2 = rng.normal(size=(2, 6, 6))
        a, b = 1.7, -0.3
        lhs = poisson_closed_form(a * c1 + b * c2, a * z1 + b * z2, 0.4)
        rhs = (a * poisson_closed_form(c1, z1, 0.4)
               + b * poisson_closed_form(c2, z2, 0.4))
        assert np.abs(lhs - rhs).max() < 1e-10

    def test_periodic_shift_equivariance(self, rng):
        c = rng.normal(size=(9, 7))
        z = rng.normal(size=(9, 7))
        out = poisson_closed_form(c, z, 0.8, BoundaryMode.Periodic)
        shifted = poisson_closed_form(np.roll(c, (2, 3), (0, 1)),
                                      np.roll(z, (2, 3), (0, 1)),
                                      0.8, BoundaryMode.Periodic)
        assert np.abs(np.roll(out, (2, 3), (0, 1)) - shifted).max() < 1e-10


class TestPnpLoop:
    def test_zero_laplacian(self):
        cfg = ReconConfig(method="pnp", lam=0.3)
        res = solve_poisson_pnp(np.zeros((16, 16)), identity_denoiser, cfg)
        assert np.all(res.image == 0.0)

    def test_identity_denoiser_recovers_smooth_image(self):
        lstar = smooth_image((48, 48), seed=2)
        lstar = lstar - lstar.mean()
        c = laplacian_forward(lstar, BoundaryMode.Periodic)
        n = 30
        cfg = ReconConfig(method="pnp", lam=1.0,
                          pnp=PnpParams(n_outer=n, mu_schedule=np.full(n, 1e-4)))
        res = solve_poisson_pnp(c, identity_denoiser, cfg, BoundaryMode.Periodic)
        aligned = align_mean_scale(res.image, lstar)
        rel = np.linalg.norm(aligned - lstar) / np.linalg.norm(lstar)
        assert rel < 0.02

    def test_tv_prior_beats_identity_under_noise(self):
        lstar = smooth_image((64, 64), seed=5)
        lstar = lstar - lstar.mean()
        c = laplacian_forward(lstar, BoundaryMode.Periodic)
        scale = 0.6 / np.abs(c).max()
        c = c * scale
        gt = lstar * scale
        noise = np.random.default_rng(7).normal(0, 0.02, c.shape)
        cfg = ReconConfig(method="pnp", lam=0.3)
        r_id = solve_poisson_pnp(c + noise, identity_denoiser, cfg)
        r_tv = solve_poisson_pnp(c + noise, tv_denoiser, cfg)
        s_id = ssim(unit_range(align_mean_scale(r_id.image, gt)), unit_range(gt))
        s_tv = ssim(unit_range(align_mean_scale(r_tv.image, gt)), unit_range(gt))
        assert s_tv > s_id

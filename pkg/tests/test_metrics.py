import numpy as np
import pytest

from evrecon.errors import DimensionMismatch
from evrecon.metrics import (affine_fit, align_mean_scale, hist_equalize, mse,
                             ssim)
from evrecon.motion import gaussian_blur


def ssim_oracle(a, b, k1=0.01, k2=0.03):
    """Direct per-pixel windowed formula with explicit loops."""
    half = 5
    g = np.exp(-0.5 * (np.arange(-half, half + 1) / 1.5) ** 2)
    w = np.outer(g, g)
    w /= w.sum()
    h_, w_ = a.shape
    c1, c2 = k1**2, k2**2
    vals = np.zeros_like(a)
    for y in range(h_):
        for x in range(w_):
            sa = sb = saa = sbb = sab = 0.0
            for dy in range(-half, half + 1):
                for dx in range(-half, half + 1):
                    yy = y + dy
                    xx = x + dx
                    # reflect (symmetric) border
                    if yy < 0:
                        yy = -yy - 1
                    if yy >= h_:
                        yy = 2 * h_ - yy - 1
                    if xx < 0:
                        xx = -xx - 1
                    if xx >= w_:
                        xx = 2 * w_ - xx - 1
                    wk = w[dy + half, dx + half]
                    sa += wk * a[yy, xx]
                    sb += wk * b[yy, xx]
                    saa += wk * a[yy, xx] ** 2
                    sbb += wk * b[yy, xx] ** 2
                    sab += wk * a[yy, xx] * b[yy, xx]
            va = saa - sa * sa
            vb = sbb - sb * sb
            cov = sab - sa * sb
            vals[y, x] = ((2 * sa * sb + c1) * (2 * cov + c2)
                          / ((sa * sa + sb * sb + c1) * (va + vb + c2)))
    return float(vals.mean())


class TestMse:
    def test_identity(self, rng):
        x = rng.normal(size=(5, 5))
        assert mse(x, x) == 0.0

    def test_unit_offset(self):
        assert mse(np.zeros((4, 4)), np.ones((4, 4))) == 1.0

    def test_matches_summation_oracle(self, rng):
        a = rng.normal(size=(6, 7))
        b = rng.normal(size=(6, 7))
        want = sum((a[i, j] - b[i, j]) ** 2 for i in range(6) for j in range(7)) / 42
        assert abs(mse(a, b) - want) < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            mse(np.zeros((2, 2)), np.zeros((2, 3)))


class TestSsim:
    def test_self_similarity_is_one(self, rng):
        x = rng.uniform(0, 1, (16, 16))
        assert ssim(x, x) == 1.0

    def test_constant_images_with_max_mean_gap(self):
        s = ssim(np.zeros((16, 16)), np.ones((16, 16)))
        assert s < 0.01

    def test_matches_direct_formula_oracle(self, rng):
        a = rng.uniform(0, 1, (12, 12))
        b = np.clip(a + rng.normal(0, 0.1, (12, 12)), 0, 1)
        assert abs(ssim(a, b) - ssim_oracle(a, b)) < 1e-9

    def test_symmetric(self, rng):
        a = rng.uniform(0, 1, (14, 14))
        b = rng.uniform(0, 1, (14, 14))
        assert abs(ssim(a, b) - ssim(b, a)) < 1e-12
        assert -1 - 1e-9 <= ssim(a, b) <= 1 + 1e-9


class TestHistEqualize:
    def test_constant_unchanged(self):
        img = np.full((8, 8), 0.3)
        assert np.array_equal(hist_equalize(img), img)

    def test_even_histogram_nearly_identity(self, rng):
        # a permutation of evenly spaced values has an exactly flat histogram
        vals = (np.arange(64 * 64) + 0.5) / (64 * 64)
        img = rng.permutation(vals).reshape(64, 64)
        assert np.abs(hist_equalize(img) - img).max() < 1 / 256

    def test_monotone_nondecreasing_transform(self, rng):
        img = gaussian_blur(rng.normal(size=(32, 32)), 2.0, "nearest")
        e = hist_equalize(img)
        order = np.argsort(img.ravel())
        assert np.all(np.diff(e.ravel()[order]) >= 0)

    def test_invariant_under_monotone_pretransform(self, rng):
        # rank-based mapping: per-pixel change bounded by the binning error,
        # i.e. the mass of the bins the pixel lands in before and after
        img = gaussian_blur(rng.normal(size=(64, 64)), 3.0, "nearest")
        g = np.exp(2.0 * img)
        e1 = hist_equalize(img)
        e2 = hist_equalize(g)

        def bin_mass(x):
            lo, hi = x.min(), x.max()
            idx = np.minimum(((x - lo) / (hi - lo) * 256).astype(int), 255)
            counts = np.bincount(idx.ravel(), minlength=256) / x.size
            return counts[idx]

        bound = bin_mass(img) + bin_mass(g)
        assert np.all(np.abs(e1 - e2) <= bound + 1e-12)

    def test_output_flatness(self, rng):
        # 256-bin equalization can only merge input-bin atoms, so the output
        # is near-flat when the input marginal is; ramp + smooth noise
        n = 256
        xg, _ = np.meshgrid(np.arange(n), np.arange(n))
        img = xg / (n - 1) + 0.04 * gaussian_blur(rng.normal(size=(n, n)), 3.0,
                                                  "nearest")
        e = hist_equalize(img)
        counts = np.bincount(np.minimum((e * 256).astype(int), 255).ravel(),
                             minlength=256)
        assert counts.max() <= 2 * img.size / 256


class TestAlign:
    def test_identity_fit(self, rng):
        gt = rng.normal(size=(8, 8))
        alpha, beta = affine_fit(gt, gt)
        assert alpha == pytest.approx(1.0, abs=1e-12)
        assert beta == pytest.approx(0.0, abs=1e-12)

    def test_exact_affine_inverse(self, rng):
        gt = rng.normal(size=(8, 8))
        pred = 2 * gt + 3
        alpha, beta = affine_fit(pred, gt)
        assert alpha == pytest.approx(0.5, abs=1e-12)
        assert beta == pytest.approx(-1.5, abs=1e-12)
        assert np.abs(align_mean_scale(pred, gt) - gt).max() < 1e-12

    def test_matches_closed_form_oracle(self, rng):
        pred = rng.normal(size=(10, 10))
        gt = rng.normal(size=(10, 10))
        A = np.stack([pred.ravel(), np.ones(100)], axis=1)
        want, *_ = np.linalg.lstsq(A, gt.ravel(), rcond=None)
        alpha, beta = affine_fit(pred, gt)
        assert abs(alpha - want[0]) < 1e-10
        assert abs(beta - want[1]) < 1e-10

    def test_degenerate_constant_pred(self, rng):
        gt = rng.normal(size=(6, 6))
        out = align_mean_scale(np.full((6, 6), 1.7), gt)
        assert np.allclose(out, gt.mean())

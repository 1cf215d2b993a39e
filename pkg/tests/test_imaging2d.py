import math

import numpy as np
import pytest

from boxdecon.boxconv import apply2d
from boxdecon.exceptions import DimensionError, NumericalError
from boxdecon.imaging2d import (
    GradientField,
    ScanConfig,
    TvConfig,
    divergence,
    gradient,
    interleave_frames,
    piecewise_constant_target,
    psnr,
    scan_frames,
    simulate_scan,
    tv_objective,
    tv_reconstruct,
)


# scan --------------------------------------------------------------------------

def test_scan_dimensions():
    assert simulate_scan(np.zeros((256, 256)), ScanConfig(20)).shape == (237, 237)


@pytest.mark.parametrize("k", [1, 2, 5])
def test_scan_constant(k):
    y = simulate_scan(np.full((9, 11), 0.75), ScanConfig(k))
    np.testing.assert_allclose(y, 0.75 * k * k, rtol=1e-14)


def test_scan_noiseless_is_apply2d():
    rng = np.random.default_rng(0)
    x = rng.random((20, 17))
    np.testing.assert_array_equal(simulate_scan(x, ScanConfig(4)), apply2d(x, 4))


def test_scan_noise_seeded():
    x = piecewise_constant_target(24)
    cfg = ScanConfig(3, noise_sigma=0.05)
    a, b = simulate_scan(x, cfg, seed=9), simulate_scan(x, cfg, seed=9)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, simulate_scan(x, cfg, seed=10))
    assert np.std(a - apply2d(x, 3)) == pytest.approx(0.05, rel=0.2)


def test_scan_too_wide():
    with pytest.raises(DimensionError):
        simulate_scan(np.ones((4, 6)), ScanConfig(5))
    with pytest.raises(DimensionError):
        ScanConfig(0)
    with pytest.raises(ValueError):
        ScanConfig(2, noise_sigma=-1.0)


def test_frames_interleave_small_grid():
    rng = np.random.default_rng(4)
    for h in range(1, 14):
        for w in range(1, 14):
            for k in range(1, min(h, w, 4) + 1):
                x = rng.integers(0, 256, size=(h, w))
                got = interleave_frames(scan_frames(x, k), k, (h, w))
                np.testing.assert_array_equal(got, apply2d(x, k))


def test_frame_geometry():
    x = np.arange(36).reshape(6, 6)
    frames = scan_frames(x, 3)
    assert len(frames) == 9
    assert frames[0, 0].shape == (2, 2)
    assert frames[2, 2].shape == (1, 1)
    assert frames[0, 0][1, 1] == x[3:6, 3:6].sum()


# gradient / divergence -------------------------------------------------------------

def test_gradient_examples():
    g = gradient(np.full((4, 5), 3.0))
    assert g.dx.shape == (3, 5) and g.dy.shape == (4, 4)
    assert g.l1() == 0.0
    g = gradient(np.array([[2.0, 7.0]]))
    assert g.dx.shape == (0, 2)
    np.testing.assert_array_equal(g.dy, [[5.0]])


def test_gradient_divergence_adjoint():
    rng = np.random.default_rng(8)
    for _ in range(100):
        h, w = rng.integers(1, 12, size=2)
        x = rng.standard_normal((h, w))
        g = GradientField(rng.standard_normal((h - 1, w)), rng.standard_normal((h, w - 1)))
        lhs = gradient(x).dot(g)
        rhs = -float(np.vdot(x, divergence(g)))
        scale = np.linalg.norm(x) * math.sqrt(g.dot(g))
        assert abs(lhs - rhs) <= 1e-12 * max(scale, 1e-300)


def test_gradient_field_arithmetic():
    a = gradient(np.arange(6.0).reshape(2, 3))
    b = 2 * a + a
    np.testing.assert_array_equal(b.dx, 3 * a.dx)
    assert b.l1() == pytest.approx(3 * a.l1())


# TV reconstruction ------------------------------------------------------------------

@pytest.mark.parametrize("lam", [1e-3, 1.0, 100.0])
def test_tv_constant_target(lam):
    x = np.full((12, 12), 0.4)
    y = apply2d(x, 3)
    res = tv_reconstruct(y, 3, 12, 12, TvConfig(lam=lam, tol=1e-10, max_iters=20000))
    assert res.converged
    np.testing.assert_allclose(res.image, 0.4, atol=1e-6)
    # the start is not flat near the border, so the objective decays toward 0
    assert res.objective <= 1e-5 * max(1.0, lam)
    assert res.log[0]["iteration"] == 0


def test_tv_log_monotone_and_fields():
    x = piecewise_constant_target(24, seed=3)
    y = apply2d(x, 3)
    res = tv_reconstruct(y, 3, 24, 24, TvConfig(lam=1e-2, max_iters=400, tol=1e-12))
    objs = [row["objective"] for row in res.log]
    assert all(b <= a + 1e-10 for a, b in zip(objs, objs[1:]))
    assert res.iterations == 400 and not res.converged
    assert set(res.log[-1]) == {"iteration", "objective", "raw_objective", "change"}
    assert res.objective == pytest.approx(tv_objective(res.image, y, 3, 1e-2), rel=1e-12)


def test_tv_large_lambda_gives_best_constant():
    x = piecewise_constant_target(16, seed=1)
    k = 4
    y = apply2d(x, k)
    res = tv_reconstruct(y, k, 16, 16, TvConfig(lam=1e6, max_iters=20000, tol=1e-9))
    # A applied to the all-ones image is k^2 everywhere, so the best constant is mean(y)/k^2
    c = y.mean() / (k * k)
    np.testing.assert_allclose(res.image, c, atol=1e-5)


def test_tv_recovers_piecewise_target():
    x = piecewise_constant_target(32, seed=2)
    y = apply2d(x, 4)
    res = tv_reconstruct(y, 4, 32, 32, TvConfig(lam=1e-2))
    assert psnr(res.image, x) >= 30.0


def test_tv_deterministic():
    x = piecewise_constant_target(16, seed=5)
    y = simulate_scan(x, ScanConfig(2, noise_sigma=0.01), seed=3)
    cfg = TvConfig(max_iters=200)
    a = tv_reconstruct(y, 2, 16, 16, cfg)
    b = tv_reconstruct(y, 2, 16, 16, cfg)
    np.testing.assert_array_equal(a.image, b.image)


def test_tv_dimension_mismatch():
    with pytest.raises(DimensionError):
        tv_reconstruct(np.zeros((5, 5)), 3, 8, 8)


def test_tv_non_finite():
    y = np.full((4, 4), 1e200)  # squares overflow
    with pytest.raises(NumericalError) as info:
        tv_reconstruct(y, 2, 5, 5, TvConfig(max_iters=20))
    assert info.value.reason == "numerical"


def test_tv_config_validation():
    with pytest.raises(ValueError):
        TvConfig(lam=0)
    with pytest.raises(ValueError):
        TvConfig(tol=-1)
    with pytest.raises(ValueError):
        TvConfig(max_iters=0)


# psnr -------------------------------------------------------------------------------

def test_psnr_examples():
    a = np.zeros((4, 4))
    assert psnr(a, a) == math.inf
    b = np.full((4, 4), 0.1)  # MSE 0.01
    assert psnr(a, b) == pytest.approx(20.0)
    rng = np.random.default_rng(0)
    p, q = rng.random((7, 9)), rng.random((7, 9))
    mse = sum((p[i, j] - q[i, j]) ** 2 for i in range(7) for j in range(9)) / 63
    assert psnr(p, q, peak=2.0) == pytest.approx(10 * math.log10(4.0 / mse), abs=1e-10)


def test_psnr_errors():
    with pytest.raises(DimensionError):
        psnr(np.zeros((2, 2)), np.zeros((2, 3)))
    with pytest.raises(ValueError):
        psnr(np.zeros(2), np.zeros(2), peak=0)


def test_target_generator():
    a = piecewise_constant_target(64, seed=0)
    assert a.shape == (64, 64)
    assert a.min() >= 0.0 and a.max() <= 1.0
    np.testing.assert_array_equal(a, piecewise_constant_target(64, seed=0))
    assert len(np.unique(a)) <= 5

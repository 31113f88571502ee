"""Undersampling mask generation and the masked acquisition model."""

import numpy as np
import pytest

import hkgm


def test_random2d_exact_count():
    m = hkgm.make_mask("random2d", 256, 256, 4.0, seed=0)
    assert m.grid.sum() == 16384


def test_near_full_sampling_limit():
    m = hkgm.make_mask("random2d", 64, 64, 1.01, seed=0)
    assert m.fraction == pytest.approx(1.0 / 1.01, abs=0.02)
    with pytest.raises(ValueError):
        hkgm.make_mask("random2d", 64, 64, 1.0)


def test_poisson_fraction_and_min_distance():
    m = hkgm.make_mask("poisson", 256, 256, 10.0, seed=3)
    assert 0.08 <= m.fraction <= 0.125
    # dart throwing must respect the local radius map: check every sampled
    # pair outside the dense center against the configured radius there
    pts = np.argwhere(m.grid)
    rad = hkgm.poisson_radius_map(256, 256, m.poisson_scale)
    center = np.array([128, 128])
    far = pts[np.abs(pts - center).max(axis=1) > 32]
    sub = far[:: max(1, len(far) // 400)]  # cap the quadratic scan
    for a in range(len(sub)):
        d2 = np.sum((sub[a + 1 :] - sub[a]) ** 2, axis=1)
        if len(d2):
            r_here = rad[sub[a][0], sub[a][1]]
            assert np.sqrt(d2.min()) >= 0.5 * r_here  # neighbors use their own radii


def test_partial_fourier_band_is_centered_and_full():
    m = hkgm.make_mask("partial-fourier", 64, 64, 4.0, seed=0)
    rows = np.where(m.grid.any(axis=1))[0]
    assert np.all(m.grid[rows].all(axis=1))  # sampled rows are complete
    assert len(rows) == 16
    assert abs((rows[0] + rows[-1]) / 2 - 32) <= 1  # centered band


def test_acs_block_fully_sampled():
    for pattern in ("poisson", "random2d", "partial-fourier"):
        m = hkgm.make_mask(pattern, 64, 64, 6.0, acs=8, seed=1)
        assert m.grid[28:36, 28:36].all()
        assert m.acs == 8


def test_acs_budget_infeasible():
    with pytest.raises(ValueError):
        hkgm.make_mask("random2d", 64, 64, 10.0, acs=32)  # acs alone > budget


def test_unknown_pattern_rejected():
    with pytest.raises(ValueError):
        hkgm.make_mask("spiral", 64, 64, 4.0)


def test_masks_reproducible_and_seed_sensitive():
    a = hkgm.make_mask("poisson", 64, 64, 4.0, seed=5)
    b = hkgm.make_mask("poisson", 64, 64, 4.0, seed=5)
    c = hkgm.make_mask("poisson", 64, 64, 4.0, seed=6)
    assert np.array_equal(a.grid, b.grid)
    assert not np.array_equal(a.grid, c.grid)


def test_fraction_tolerance_all_patterns_and_rates():
    for pattern in ("poisson", "random2d", "partial-fourier"):
        for R in (3.0, 4.0, 6.0, 8.0, 10.0):
            m = hkgm.make_mask(pattern, 64, 64, R, seed=2)
            assert 0.8 / R <= m.fraction <= 1.25 / R, (pattern, R, m.fraction)


def test_apply_mask_basics():
    rng = np.random.default_rng(0)
    k = rng.normal(size=(3, 16, 16)) + 1j * rng.normal(size=(3, 16, 16))
    ones = hkgm.make_mask("random2d", 16, 16, 1.01, seed=0)
    ones.grid[:] = True
    assert np.array_equal(hkgm.apply_mask(k, ones), k)

    m = hkgm.make_mask("random2d", 16, 16, 4.0, seed=1)
    y = hkgm.apply_mask(k, m)
    assert np.array_equal(y[:, m.grid], k[:, m.grid])
    assert not np.any(y[:, ~m.grid])
    # idempotent
    assert np.array_equal(hkgm.apply_mask(y, m), y)


def test_apply_mask_accepts_bare_grid_and_checks_shape():
    k = np.ones((1, 8, 8), dtype=np.complex128)
    grid = np.zeros((8, 8), dtype=bool)
    grid[4, 4] = True
    y = hkgm.apply_mask(k, grid)
    assert y[0, 4, 4] == 1.0 and y.sum() == 1.0
    with pytest.raises(ValueError):
        hkgm.apply_mask(k, np.zeros((4, 4), dtype=bool))


def test_apply_mask_optional_noise():
    rng = np.random.default_rng(1)
    k = np.ones((2, 32, 32), dtype=np.complex128)
    m = hkgm.make_mask("random2d", 32, 32, 2.0, seed=2)
    y = hkgm.apply_mask(k, m, noise_std=0.1, rng=np.random.default_rng(7))
    assert not np.any(y[:, ~m.grid])  # noise only on sampled entries
    dev = y[:, m.grid] - 1.0
    assert 0.05 < dev.real.std() < 0.2
    again = hkgm.apply_mask(k, m, noise_std=0.1, rng=np.random.default_rng(7))
    assert np.array_equal(y, again)


def test_mask_grid_coercion():
    m = hkgm.make_mask("random2d", 8, 8, 2.0, seed=0)
    assert np.array_equal(hkgm.mask_grid(m), m.grid)
    arr = np.eye(8, dtype=bool)
    assert np.array_equal(hkgm.mask_grid(arr), arr)
    with pytest.raises(ValueError):
        hkgm.mask_grid(np.zeros((2, 2, 2)))

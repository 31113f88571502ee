"""Noise perturbation, the DSM objective, and the training loop."""

import numpy as np
import pytest

import hkgm
from hkgm.train import TrainConfig, TrainingError, dsm_loss, perturb, train

import oracles


def test_perturb_basics():
    x = np.random.default_rng(0).normal(size=(2, 6, 6))
    noisy, z = perturb(x, 1e-9, seed=1)
    assert np.abs(noisy - x).max() < 1e-7  # sigma -> 0 limit
    noisy2, z2 = perturb(x, 0.5, seed=1)
    assert np.array_equal(z, z2)  # seed pins the draw
    assert np.allclose(noisy2, x + 0.5 * z2, atol=0)
    with pytest.raises(ValueError):
        perturb(x, 0.0)


def test_perturb_moments_monte_carlo():
    x = np.zeros((2, 4, 4))
    sigma = 0.7
    devs = np.stack([perturb(x, sigma, seed=s)[0] for s in range(312)])
    n = devs.size
    se_mean = sigma / np.sqrt(n)
    assert abs(devs.mean()) < 3 * se_mean
    var = devs.var()
    se_var = sigma ** 2 * np.sqrt(2.0 / n)
    assert abs(var - sigma ** 2) < 3 * se_var


def test_dsm_loss_zero_for_analytic_stub():
    # identical clean fields: the exact conditional score -(noisy - x)/sigma^2
    # cancels z term by term, so the loss is exactly zero
    x0 = np.random.default_rng(1).normal(size=(2, 8, 8))
    batch = np.stack([x0] * 6)
    stub = lambda noisy, sigma: -(noisy - x0) / sigma ** 2
    loss = dsm_loss(stub, batch, hkgm.NoiseSchedule(), seed=3)
    assert loss < 1e-20


def test_dsm_loss_zero_model_matches_noise_energy():
    # zero score leaves ||z||^2 whose mean is the entries-per-field count
    rng = np.random.default_rng(2)
    batch = rng.normal(size=(400, 2, 8, 8))
    zero = lambda noisy, sigma: np.zeros_like(noisy)
    loss = dsm_loss(zero, batch, hkgm.NoiseSchedule(), seed=4)
    d = 2 * 8 * 8
    se = np.sqrt(2.0 * d / 400)
    assert abs(loss - d) < 3 * se


def test_dsm_loss_order_invariant_for_identical_items():
    x0 = np.random.default_rng(3).normal(size=(2, 6, 6))
    batch = np.stack([x0] * 5)
    model = lambda noisy, sigma: 0.3 * noisy
    a = dsm_loss(model, batch, hkgm.NoiseSchedule(), seed=5)
    b = dsm_loss(model, batch[::-1].copy(), hkgm.NoiseSchedule(), seed=5)
    assert a == pytest.approx(b, rel=1e-12)


def test_dsm_loss_pinned_draws():
    batch = np.random.default_rng(4).normal(size=(3, 2, 4, 4))
    idx = np.array([0, 5, 9])
    z = np.random.default_rng(5).standard_normal(batch.shape)
    sched = hkgm.NoiseSchedule(0.1, 1.0, 10)
    zero = lambda noisy, sigma: np.zeros_like(noisy)
    loss = dsm_loss(zero, batch, sched, draws=(idx, z))
    assert loss == pytest.approx(float(np.mean(np.sum(z ** 2, axis=(1, 2, 3)))), rel=1e-12)


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)
    with pytest.raises(ValueError):
        TrainConfig(beta1=1.0)
    with pytest.raises(ValueError):
        TrainConfig(beta2=0.0)
    with pytest.raises(ValueError):
        TrainConfig(epochs=-1)
    with pytest.raises(ValueError):
        TrainConfig(lr=-1e-3)
    # zero epochs (untrained prior) and zero learning rate are both legal
    TrainConfig(epochs=0)
    TrainConfig(lr=0.0)


def test_train_is_deterministic_per_seed():
    rng = np.random.default_rng(6)
    patches = hkgm.PatchSet(
        patches=rng.normal(size=(8, 8, 8)) + 1j * rng.normal(size=(8, 8, 8)),
        coords=tuple((0, i) for i in range(8)),
    )
    cfg = TrainConfig(epochs=3, seed=9)
    sched = hkgm.NoiseSchedule(0.1, 1.0, 8)
    m1 = train(patches, cfg, sched)
    m2 = train(patches, cfg, sched)
    for (a, b), (c, d) in zip(m1.weights, m2.weights):
        assert np.array_equal(a, c) and np.array_equal(b, d)
    m3 = train(patches, TrainConfig(epochs=3, seed=10), sched)
    assert any(not np.array_equal(a, c)
               for (a, _), (c, _) in zip(m1.weights, m3.weights))


def test_train_records_history_and_freezes():
    rng = np.random.default_rng(7)
    patches = hkgm.PatchSet(
        patches=rng.normal(size=(4, 8, 8)) + 1j * rng.normal(size=(4, 8, 8)),
        coords=tuple((0, i) for i in range(4)),
    )
    model = train(patches, TrainConfig(epochs=5, seed=0), hkgm.NoiseSchedule(0.1, 1.0, 8))
    hist = model.meta["loss_history"]
    smooth = model.meta["loss_smoothed"]
    assert len(hist) == 5 and len(smooth) == 5
    assert all(s == min(hist[: i + 1]) for i, s in enumerate(smooth))
    assert model.weights[0][0].dtype == np.float32


def test_train_rejects_non_finite_patches():
    rng = np.random.default_rng(8)
    raw = rng.normal(size=(4, 8, 8)) + 1j * rng.normal(size=(4, 8, 8))
    raw[2, 3, 3] = np.nan
    patches = hkgm.PatchSet(patches=raw, coords=tuple((0, i) for i in range(4)))
    with pytest.raises(ValueError):
        train(patches, TrainConfig(epochs=2, seed=0), hkgm.NoiseSchedule(0.1, 1.0, 8))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_train_non_finite_loss_raises():
    # an absurd learning rate overflows the activations within one epoch
    rng = np.random.default_rng(8)
    patches = hkgm.PatchSet(
        patches=rng.normal(size=(4, 8, 8)) + 1j * rng.normal(size=(4, 8, 8)),
        coords=tuple((0, i) for i in range(4)),
    )
    with pytest.raises(TrainingError):
        train(patches, TrainConfig(epochs=3, lr=1e300, seed=0),
              hkgm.NoiseSchedule(0.1, 1.0, 8))


def test_training_loss_drops_on_phantom_patches(phantom_model):
    smooth = phantom_model.meta["loss_smoothed"]
    assert smooth[-1] <= 0.7 * smooth[0]


def test_gaussian_toy_score_matches_analytic(toy_gaussian):
    model = toy_gaussian["model"]
    mu = toy_gaussian["mu"]
    var = toy_gaussian["var"]
    rng = np.random.default_rng(12)
    rel = []
    for sigma in (0.45, 0.5, 0.55):
        for _ in range(6):
            clean = mu[:, None, None] + np.sqrt(var) * rng.standard_normal((2, 16, 16))
            noisy = clean + sigma * rng.standard_normal((2, 16, 16))
            got = hkgm.score_apply(model, noisy, sigma)[:, 4:-4, 4:-4]
            want = oracles.gaussian_score(noisy, mu[:, None, None], var, sigma)[:, 4:-4, 4:-4]
            rel.append(np.linalg.norm(got - want) / np.linalg.norm(want))
    assert float(np.mean(rel)) <= 0.15

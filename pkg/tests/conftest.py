"""Shared fixtures. Heavy artifacts (trained priors, end-to-end runs) are
session-scoped so the expensive work happens once per pytest invocation."""

import numpy as np
import pytest

import hkgm
from hkgm.train import TrainConfig, train

import oracles


@pytest.fixture(scope="session")
def phantom_bundle():
    """Fully sampled 64x64x4 phantom plus a Poisson R=4 measurement of it."""
    img, k = hkgm.make_phantom(hkgm.PhantomSpec())
    ref = hkgm.sos(hkgm.ifft2c(k))
    mask = hkgm.make_mask("poisson", 64, 64, 4.0, seed=1)
    y = hkgm.apply_mask(k, mask)
    return {
        "image": img,
        "k": k,
        "ref": ref,
        "mask": mask,
        "y": y,
        "kn": k / np.abs(y).max(),
    }


@pytest.fixture(scope="session")
def phantom_model(phantom_bundle):
    """Small prior trained on the phantom, for module-level behavior tests."""
    H = hkgm.lift(phantom_bundle["kn"], 8)
    patches = hkgm.extract_patches(H, 32, 128, seed=0)
    return train(patches, TrainConfig(epochs=50, seed=0), hkgm.NoiseSchedule())


@pytest.fixture(scope="session")
def toy_gaussian():
    """Gaussian patch ensemble with a known analytic smoothed score.

    Channels are i.i.d. N(mu_c, var) per pixel, and the corner pixel is pinned
    to 1+0j so the per-patch unit-max normalization inside train() is the
    identity and the analytic score stays exact.
    """
    mu = np.array([0.35, -0.2])
    var = 0.05 ** 2
    rng = np.random.default_rng(11)
    n, p = 96, 16
    fields = mu[None, :, None, None] + np.sqrt(var) * rng.standard_normal((n, 2, p, p))
    fields[:, 0, 0, 0] = 1.0
    fields[:, 1, 0, 0] = 0.0
    patches = fields[:, 0] + 1j * fields[:, 1]
    pset = hkgm.PatchSet(patches=patches, coords=tuple((0, 0) for _ in range(n)))
    schedule = hkgm.NoiseSchedule(0.45, 0.55, 10)
    model = train(pset, TrainConfig(epochs=60, seed=2), schedule)
    return {"model": model, "mu": mu, "var": var, "schedule": schedule,
            "patches": pset}

import math

import numpy as np
import pytest

from renyichaos import rng, sampler
from renyichaos.gaussian import marginal_covariance, stationary_exchangeable_gaussian
from renyichaos.model import ModelParams
from renyichaos.sampler import SamplerConfig, SamplerError, mala_sample

SMALL = SamplerConfig(step_size=0.3, burn_in=500, thinning=2, chains=4, steps=2000, master_seed=11)


def test_streams_are_reproducible_and_distinct():
    a = rng.stream(5, 0, rng.NOISE).standard_normal(8)
    np.testing.assert_array_equal(a, rng.stream(5, 0, rng.NOISE).standard_normal(8))
    assert not np.array_equal(a, rng.stream(5, 1, rng.NOISE).standard_normal(8))
    assert not np.array_equal(a, rng.stream(6, 0, rng.NOISE).standard_normal(8))
    assert rng.split(5, 0) != rng.split(5, 1)
    with pytest.raises(ValueError):
        rng.stream(-1)


def test_config_validation():
    for bad in (dict(step_size=0.0), dict(chains=0), dict(thinning=0), dict(steps=0), dict(burn_in=-1)):
        with pytest.raises(ValueError):
            SamplerConfig(**bad)
    assert SamplerConfig().digest() == SamplerConfig().digest()
    assert SamplerConfig(master_seed=1).digest() != SamplerConfig().digest()


def test_ensemble_shapes(quad3):
    ens = mala_sample(quad3, SMALL)
    assert ens.samples.shape == (4, 1000, 3, 1)
    assert ens.particle(0).shape == (4000, 1)
    assert ens.marginal(2).shape == (4000, 2)
    assert np.all((ens.acceptance >= 0) & (ens.acceptance <= 1))
    assert ens.provenance["master_seed"] == 11


def test_same_seed_bit_identical(quad3):
    a, b = mala_sample(quad3, SMALL), mala_sample(quad3, SMALL)
    np.testing.assert_array_equal(a.samples, b.samples)
    np.testing.assert_array_equal(a.acceptance, b.acceptance)
    c = mala_sample(quad3, SamplerConfig(**{**SMALL.__dict__, "master_seed": 12}))
    assert not np.array_equal(a.samples, c.samples)


def test_worker_count_does_not_change_output(quad3):
    base = mala_sample(quad3, SMALL, workers=1)
    for w in (2, 3, 4):
        np.testing.assert_array_equal(mala_sample(quad3, SMALL, workers=w).samples, base.samples)


def test_chain_depends_only_on_its_own_stream(quad3):
    # chain 2 run alone equals chain 2 of a 4-chain run
    full = sampler._run_chains(quad3, SMALL, [0, 1, 2, 3])[0]
    alone = sampler._run_chains(quad3, SMALL, [2])[0]
    np.testing.assert_array_equal(alone[0], full[2])


def test_rng_block_size_does_not_change_output(quad3, monkeypatch):
    base = mala_sample(quad3, SMALL).samples
    monkeypatch.setattr(sampler, "RNG_BLOCK", 37)
    np.testing.assert_array_equal(mala_sample(quad3, SMALL).samples, base)


def test_low_acceptance_aborts():
    m = ModelParams(d=4, N=6, lam=1.0)
    cfg = SamplerConfig(step_size=5.0, burn_in=0, adapt=False, chains=2, steps=200, thinning=1)
    with pytest.raises(SamplerError, match="step_size"):
        mala_sample(m, cfg)


def test_standard_gaussian_single_particle():
    m = ModelParams(d=1, N=1, lam=0.0)
    cfg = SamplerConfig(step_size=0.5, burn_in=2000, thinning=1, chains=1, steps=100_000, master_seed=3)
    ens = mala_sample(m, cfg)
    assert 0.97 <= ens.particle(0).var() <= 1.03


@pytest.mark.slow
def test_marginal_variance_three_particles(quad3):
    cfg = SamplerConfig(step_size=0.3, burn_in=2000, thinning=10, chains=64, steps=100_000, master_seed=4)
    ens = mala_sample(quad3, cfg)
    assert np.mean(ens.particle(0)[:, 0] ** 2) == pytest.approx(0.6, rel=0.02)
    assert np.all((ens.acceptance >= 0.4) & (ens.acceptance <= 0.8))


def batch_means_se(x: np.ndarray, batches: int = 50) -> float:
    # x: (chains, snapshots); batch means absorb autocorrelation
    b = x[:, : x.shape[1] // batches * batches].reshape(x.shape[0], batches, -1).mean(axis=2)
    return float(b.std(ddof=1) / math.sqrt(b.size))


def test_exchangeability_z_scores():
    m = ModelParams(d=2, N=4, lam=1.0)
    cfg = SamplerConfig(step_size=0.3, burn_in=2000, thinning=2, chains=16, steps=20_000, master_seed=9)
    s = mala_sample(m, cfg).samples
    for stat in (lambda v: v, lambda v: v**2):
        a, b = stat(s[:, :, 0, 0]), stat(s[:, :, 1, 0])
        diff = a - b
        z = diff.mean() / batch_means_se(diff)
        assert abs(z) <= 4


def test_adapted_acceptance_in_band():
    m = ModelParams(d=2, N=8, lam=1.0)
    cfg = SamplerConfig(step_size=0.05, burn_in=3000, thinning=10, chains=8, steps=5000, master_seed=2)
    ens = mala_sample(m, cfg)
    assert np.all((ens.acceptance >= 0.4) & (ens.acceptance <= 0.8))
    # every chain moved away from the poor initial step
    assert np.all(ens.step_sizes > 0.05)


def test_empirical_covariance_converges_to_block():
    m = ModelParams(d=2, N=5, lam=1.5)
    cfg = SamplerConfig(step_size=0.3, burn_in=2000, thinning=5, chains=16, steps=40_000, master_seed=1)
    x = mala_sample(m, cfg).particle(0)
    emp = x.T @ x / len(x)
    want = marginal_covariance(stationary_exchangeable_gaussian(m), 1).dense_cov()
    assert np.linalg.norm(emp - want) / np.linalg.norm(want) < 0.05

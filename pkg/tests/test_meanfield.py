import math

import numpy as np
import pytest
from scipy import integrate

from renyichaos.gaussian import GaussianSpec
from renyichaos.meanfield import (
    ConvergenceError,
    GriddedDensity,
    interaction_field,
    mean_field_fixed_point,
    self_consistency_map,
    trapezoid_weights,
)
from renyichaos.model import CosinePerturbation, ModelParams

PERT = ModelParams(d=1, N=2, lam=1.0, perturbation=CosinePerturbation(0.1, 1.0))


def test_quadratic_closed_form():
    out = mean_field_fixed_point(ModelParams(d=3, N=2, lam=1.0))
    assert isinstance(out, GaussianSpec)
    np.testing.assert_allclose(out.dense_cov(), np.eye(3) / 2)
    np.testing.assert_allclose(mean_field_fixed_point(ModelParams(d=2, N=2)).dense_cov(), np.eye(2))


def test_perturbed_converges_within_tol():
    out = mean_field_fixed_point(PERT, tol=1e-10)
    assert isinstance(out, GriddedDensity)
    assert out.residual <= 1e-10
    image = self_consistency_map(PERT, out.grid, out.density)
    assert np.max(np.abs(image - out.density)) <= 1e-10
    assert np.sum(out.weights * out.density) == pytest.approx(1.0, abs=1e-12)
    assert out.mean == pytest.approx(0.0, abs=1e-12)


def test_interaction_field_matches_direct_convolution():
    grid = np.linspace(-3, 3, 301)
    dens = np.exp(-((grid - 0.3) ** 2)) * (1 + 0.2 * np.sin(grid))
    m = ModelParams(d=1, N=2, lam=0.8, interaction_perturbation=CosinePerturbation(0.05, 1.7))
    w = trapezoid_weights(grid)
    Wmat = m.W((grid[:, None] - grid[None, :])[..., None])
    np.testing.assert_allclose(interaction_field(m, grid, dens), Wmat @ (w * dens), rtol=1e-12, atol=1e-12)


def test_fixed_point_against_quadrature_oracle():
    out = mean_field_fixed_point(PERT)
    # with a symmetric solution, W * p = lam/2 (x^2 + s2) so p ∝ exp(-(1 + lam) x^2/2 - A cos x)
    unnorm = lambda x: math.exp(-x * x - 0.1 * math.cos(x))
    z = integrate.quad(unnorm, -np.inf, np.inf, epsrel=1e-13)[0]
    var = integrate.quad(lambda x: x * x * unnorm(x), -np.inf, np.inf, epsrel=1e-13)[0] / z
    assert out.variance == pytest.approx(var, rel=1e-8)


def test_no_interaction_is_gibbs_of_V():
    m = ModelParams(d=1, N=2, lam=0.0, perturbation=CosinePerturbation(0.3, 1.0))
    # the map ignores its argument, so an undamped step lands on the fixed point
    out = mean_field_fixed_point(m, damping=1.0)
    unnorm = lambda x: math.exp(-x * x / 2 - 0.3 * math.cos(x))
    z = integrate.quad(unnorm, -np.inf, np.inf)[0]
    var = integrate.quad(lambda x: x * x * unnorm(x), -np.inf, np.inf)[0] / z
    assert out.variance == pytest.approx(var, rel=1e-8)
    assert out.iterations == 1


def test_errors():
    with pytest.raises(ValueError):
        mean_field_fixed_point(PERT, damping=0.0)
    with pytest.raises(ValueError):
        mean_field_fixed_point(ModelParams(d=2, N=2, lam=1.0, perturbation=CosinePerturbation(0.1, 1.0)))
    with pytest.raises(ConvergenceError):
        mean_field_fixed_point(PERT, tol=1e-300, max_iter=3)

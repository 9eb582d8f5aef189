"""Self-consistent mean-field limit ``pi ∝ exp(-V - W * pi)``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gaussian import GaussianSpec, mean_field_gaussian
from .model import ModelParams

GRID_POINTS = 4096
GRID_HALF_WIDTH = 8.0


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class GriddedDensity:
    """A one-dimensional density tabulated on a uniform grid."""

    grid: np.ndarray
    density: np.ndarray
    iterations: int
    residual: float

    @property
    def weights(self) -> np.ndarray:
        return trapezoid_weights(self.grid)

    @property
    def mean(self) -> float:
        return float(np.sum(self.weights * self.grid * self.density))

    @property
    def variance(self) -> float:
        return float(np.sum(self.weights * (self.grid - self.mean) ** 2 * self.density))


def trapezoid_weights(grid: np.ndarray) -> np.ndarray:
    h = grid[1] - grid[0]
    w = np.full(grid.shape, h)
    w[0] = w[-1] = h / 2
    return w


def interaction_field(model: ModelParams, grid: np.ndarray, density: np.ndarray) -> np.ndarray:
    """``(W * density)(x)`` on ``grid`` for the quadratic-plus-cosine interaction (d = 1).

    Both pieces of ``W`` are separable in ``x`` and ``y``, so the convolution
    only needs a handful of moments of ``density``.
    """
    w = trapezoid_weights(grid)
    m0 = np.sum(w * density)
    m1 = np.sum(w * grid * density)
    m2 = np.sum(w * grid**2 * density)
    out = 0.5 * model.lam * (grid**2 * m0 - 2 * grid * m1 + m2)
    pert = model.interaction_perturbation
    if pert is not None:
        c = np.sum(w * np.cos(pert.frequency * grid) * density)
        s = np.sum(w * np.sin(pert.frequency * grid) * density)
        out = out + pert.amplitude * (np.cos(pert.frequency * grid) * c + np.sin(pert.frequency * grid) * s)
    return out


def self_consistency_map(model: ModelParams, grid: np.ndarray, density: np.ndarray) -> np.ndarray:
    """Normalized ``exp(-V - W * density)`` on ``grid``."""
    logp = -model.V(grid[:, None]) - interaction_field(model, grid, density)
    logp -= logp.max()
    p = np.exp(logp)
    z = np.sum(trapezoid_weights(grid) * p)
    if not (np.isfinite(z) and z > 0):
        raise ConvergenceError("candidate density is not integrable on the grid")
    return p / z


def mean_field_fixed_point(
    model: ModelParams,
    damping: float = 0.5,
    tol: float = 1e-10,
    max_iter: int = 10_000,
    n_grid: int = GRID_POINTS,
) -> GaussianSpec | GriddedDensity:
    """Mean-field limit of ``model``.

    Quadratic models return the closed form ``N(0, I/(alpha_V0 + lam))``.
    Perturbed one-dimensional models run the damped iteration
    ``p <- (1 - damping) p + damping T(p)`` on a uniform grid spanning eight
    quadratic-part standard deviations until ``sup |T(p) - p| <= tol``, which
    also bounds the gap between successive iterates.
    """
    if not 0 < damping <= 1:
        raise ValueError("damping must lie in (0, 1]")
    if model.is_quadratic:
        return mean_field_gaussian(model)
    if model.d != 1:
        raise ValueError("perturbed mean-field solver is one-dimensional only")

    sigma = 1.0 / math.sqrt(model.alpha_V0 + model.lam)
    grid = np.linspace(-GRID_HALF_WIDTH * sigma, GRID_HALF_WIDTH * sigma, n_grid)
    p = np.exp(-0.5 * (grid / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))
    residual = math.inf
    for it in range(max_iter + 1):
        image = self_consistency_map(model, grid, p)
        # successive iterates differ by damping * residual <= residual
        residual = float(np.max(np.abs(image - p)))
        if residual <= tol:
            return GriddedDensity(grid, p, it, residual)
        p = (1 - damping) * p + damping * image
    raise ConvergenceError(f"no convergence after {max_iter} iterations (residual {residual:.3g})")

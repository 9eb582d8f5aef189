"""Confinement, interaction, finite-particle energy and drift.

Potentials live in a small family: a quadratic part plus an optional bounded
cosine perturbation,

    V(x) = alpha_V0/2 |x|^2 + A_V cos(w_V <u, x>)
    W(x) = lam/2 |x|^2     + A_W cos(w_W <u, x>)

with ``u = (1, ..., 1)/sqrt(d)``. Oscillation and Hessian bounds of the
perturbations are explicit, which is what the LSI certificates need.

Particle indices are 0-based throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gaussian import GaussianSpec


@dataclass(frozen=True)
class CosinePerturbation:
    """``amplitude * cos(frequency * <u, x>)`` with ``u`` the normalized all-ones vector."""

    amplitude: float
    frequency: float = 1.0

    @property
    def osc(self) -> float:
        return 2.0 * abs(self.amplitude)

    @property
    def hessian_bound(self) -> float:
        return abs(self.amplitude) * self.frequency**2

    def _proj(self, x: np.ndarray) -> np.ndarray:
        return x.sum(axis=-1) / math.sqrt(x.shape[-1])

    def value(self, x: np.ndarray) -> np.ndarray:
        return self.amplitude * np.cos(self.frequency * self._proj(x))

    def grad(self, x: np.ndarray) -> np.ndarray:
        d = x.shape[-1]
        s = -self.amplitude * self.frequency * np.sin(self.frequency * self._proj(x))
        return np.repeat(s[..., None], d, axis=-1) / math.sqrt(d)


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the confinement ``V`` and interaction ``W``.

    ``N = 1`` is accepted for sampling a single particle (the interaction then
    vanishes); every closed form needs ``N >= 2``.
    """

    d: int
    N: int
    lam: float = 0.0
    alpha_V0: float = 1.0
    perturbation: CosinePerturbation | None = None
    interaction_perturbation: CosinePerturbation | None = None

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"d must be a positive integer, got {self.d}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        if not (self.lam >= 0.0) or not math.isfinite(self.lam):
            raise ValueError(f"lam must be finite and >= 0, got {self.lam}")
        if self.alpha_V + min(self.alpha_W, 0.0) <= 0.0:
            raise ValueError(
                "confinement too weak: alpha_V + min(alpha_W, 0) must be > 0 "
                f"(alpha_V={self.alpha_V}, alpha_W={self.alpha_W})"
            )

    @property
    def alpha_W0(self) -> float:
        return self.lam

    @property
    def alpha_V(self) -> float:
        """Uniform convexity of the full confinement."""
        hb = self.perturbation.hessian_bound if self.perturbation else 0.0
        return self.alpha_V0 - hb

    @property
    def alpha_W(self) -> float:
        hb = self.interaction_perturbation.hessian_bound if self.interaction_perturbation else 0.0
        return self.alpha_W0 - hb

    @property
    def beta_W(self) -> float:
        """Lipschitz constant of grad W."""
        hb = self.interaction_perturbation.hessian_bound if self.interaction_perturbation else 0.0
        return self.lam + hb

    @property
    def osc_V1(self) -> float:
        return self.perturbation.osc if self.perturbation else 0.0

    @property
    def osc_W1(self) -> float:
        return self.interaction_perturbation.osc if self.interaction_perturbation else 0.0

    @property
    def is_quadratic(self) -> bool:
        return self.perturbation is None and self.interaction_perturbation is None

    def with_N(self, N: int) -> "ModelParams":
        return ModelParams(
            self.d, N, self.lam, self.alpha_V0, self.perturbation, self.interaction_perturbation
        )

    def V(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = 0.5 * self.alpha_V0 * np.sum(x * x, axis=-1)
        if self.perturbation is not None:
            out = out + self.perturbation.value(x)
        return out

    def grad_V(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = self.alpha_V0 * x
        if self.perturbation is not None:
            out = out + self.perturbation.grad(x)
        return out

    def W(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        out = 0.5 * self.lam * np.sum(z * z, axis=-1)
        if self.interaction_perturbation is not None:
            out = out + self.interaction_perturbation.value(z)
        return out

    def grad_W(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        out = self.lam * z
        if self.interaction_perturbation is not None:
            out = out + self.interaction_perturbation.grad(z)
        return out


@dataclass(frozen=True)
class ParticleConfiguration:
    positions: np.ndarray
    model: ModelParams

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim == 1 and self.model.d == 1:
            pos = pos[:, None]
        if pos.shape != (self.model.N, self.model.d):
            raise ValueError(
                f"positions must have shape (N, d) = ({self.model.N}, {self.model.d}), got {pos.shape}"
            )
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions contain non-finite entries")
        object.__setattr__(self, "positions", pos)


def _check_finite(x: np.ndarray) -> None:
    if not np.all(np.isfinite(x)):
        raise ValueError("positions contain non-finite entries")


def drift(model: ModelParams, x: np.ndarray) -> np.ndarray:
    """Drift of every particle for a batch of configurations of shape ``(..., N, d)``."""
    x = np.asarray(x, dtype=float)
    N = x.shape[-2]
    out = -model.grad_V(x)
    if N < 2:
        return out
    c = 1.0 / (N - 1)
    if model.lam:
        s = x.sum(axis=-2, keepdims=True)
        out -= c * model.lam * (N * x - s)
    pert = model.interaction_perturbation
    if pert is not None:
        diffs = x[..., :, None, :] - x[..., None, :, :]
        # the i == j term contributes grad W1(0) = 0
        out -= c * pert.grad(diffs).sum(axis=-2)
    return out


def energy(model: ModelParams, x: np.ndarray) -> np.ndarray:
    """Negative log-density of the particle Gibbs measure, up to a constant, batched."""
    x = np.asarray(x, dtype=float)
    N = x.shape[-2]
    out = model.V(x).sum(axis=-1)
    if N < 2:
        return out
    c = 1.0 / (N - 1)
    if model.lam:
        s = x.sum(axis=-2)
        # sum_{i != j} |x_i - x_j|^2 = 2 N sum |x_i|^2 - 2 |sum x_i|^2
        out = out + 0.5 * c * model.lam * (N * np.sum(x * x, axis=(-2, -1)) - np.sum(s * s, axis=-1))
    pert = model.interaction_perturbation
    if pert is not None:
        diffs = x[..., :, None, :] - x[..., None, :, :]
        vals = pert.value(diffs).sum(axis=(-2, -1)) - N * pert.value(np.zeros(x.shape[-1]))
        out = out + 0.5 * c * vals
    return out


def pairwise_drift(config: ParticleConfiguration, i: int) -> np.ndarray:
    """Drift of particle ``i`` (0-based): ``-grad V(x_i) - mean_{j != i} grad W(x_i - x_j)``."""
    N = config.model.N
    if not 0 <= i < N:
        raise IndexError(f"particle index {i} out of range for N={N}")
    _check_finite(config.positions)
    x = config.positions
    out = -config.model.grad_V(x[i])
    if N > 1:
        others = np.delete(x, i, axis=0)
        out = out - config.model.grad_W(x[i] - others).sum(axis=0) / (N - 1)
    return out


def finite_particle_energy(config: ParticleConfiguration) -> float:
    _check_finite(config.positions)
    return float(energy(config.model, config.positions))


def mean_field_residual(candidate: GaussianSpec, model: ModelParams) -> float:
    """Gap between ``candidate`` and its image under the self-consistency map.

    For quadratic ``V`` and ``W`` the map sends ``N(m, S)`` to the Gaussian
    with precision ``(alpha_V0 + lam) I`` and linear natural parameter
    ``lam m``. The residual is the Euclidean norm of the natural-parameter
    mismatch (Frobenius on the precision part).
    """
    if not model.is_quadratic:
        raise ValueError("mean_field_residual needs a quadratic model; use mean_field_fixed_point")
    if candidate.dim != model.d:
        raise ValueError(f"candidate dimension {candidate.dim} != model.d {model.d}")
    prec = np.linalg.inv(candidate.cov.dense())
    m = candidate.mean
    target_prec = (model.alpha_V0 + model.lam) * np.eye(model.d)
    gap_prec = prec - target_prec
    gap_lin = prec @ m - model.lam * m
    return float(math.sqrt(np.sum(gap_prec**2) + np.sum(gap_lin**2)))

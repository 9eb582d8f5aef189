"""Sample-based divergence estimates and exact tail checks for event changes of measure."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import rng
from .gaussian import (
    DIVERGENT,
    DenseCovariance,
    GaussianSpec,
    is_divergent,
    marginal_covariance,
    product_reference,
    renyi_gaussian,
    stationary_exchangeable_gaussian,
)
from .model import ModelParams
from .reports import VerificationReport

BOOTSTRAP_RESAMPLES = 200


@dataclass(frozen=True)
class DivergenceEstimate:
    value: float
    stderr: float
    method: str
    n_samples: int
    n_reference: int = 0
    divergent_fraction: float = 0.0

    def __post_init__(self):
        if self.method not in ("gaussian-plugin", "quantile-1d"):
            raise ValueError(f"unknown method {self.method!r}")
        if not self.stderr >= 0:
            raise ValueError("stderr must be >= 0")

    @property
    def divergent(self) -> bool:
        return is_divergent(self.value)


def _as_2d(samples) -> np.ndarray:
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError(f"samples must be a sequence of vectors, got shape {x.shape}")
    return x


def gaussian_fit(samples) -> GaussianSpec:
    """Maximum-likelihood Gaussian: sample mean and covariance normalized by ``n`` (not ``n - 1``)."""
    x = _as_2d(samples)
    n, m = x.shape
    if n <= m:
        raise ValueError(f"need more samples than dimensions ({n} <= {m})")
    mean = x.mean(axis=0)
    xc = x - mean
    return GaussianSpec(mean, DenseCovariance(xc.T @ xc / n))


def _second_moment(x: np.ndarray) -> np.ndarray:
    return x.T @ x / x.shape[0]


def plugin_renyi_estimate(
    mu_samples, reference: GaussianSpec, q: float, seed: int = 0, resamples: int = BOOTSTRAP_RESAMPLES
) -> DivergenceEstimate:
    """Renyi divergence of a centered Gaussian fit to ``mu_samples`` from ``reference``.

    The fit uses the raw second moment (the target laws are centered). The
    standard error is the standard deviation over ``resamples`` nonparametric
    bootstrap refits; refits whose tilt does not exist are counted in
    ``divergent_fraction`` and left out of the spread.
    """
    if not q > 1:
        raise ValueError(f"Renyi order must be > 1, got {q}")
    x = _as_2d(mu_samples)
    n, m = x.shape
    if m != reference.dim:
        raise ValueError(f"sample dimension {m} != reference dimension {reference.dim}")
    if n <= m:
        raise ValueError(f"need more samples than dimensions ({n} <= {m})")

    def estimate(cov):
        try:
            fit = GaussianSpec.centered(DenseCovariance(cov))
        except ValueError:
            return DIVERGENT
        return renyi_gaussian(fit, reference, q)

    value = estimate(_second_moment(x))
    # a resample's second moment is a count-weighted mean of per-row outer products
    outer = (x[:, :, None] * x[:, None, :]).reshape(n, m * m)
    boot = np.empty(resamples)
    for b in range(resamples):
        counts = np.bincount(rng.stream(seed, b).integers(0, n, size=n), minlength=n)
        boot[b] = estimate((counts @ outer / n).reshape(m, m))
    finite = boot[np.isfinite(boot)]
    frac = 1.0 - finite.size / resamples
    stderr = float(np.std(finite, ddof=1)) if finite.size > 1 else math.inf
    return DivergenceEstimate(value, stderr, "gaussian-plugin", n, reference.dim, frac)


def w2_empirical_1d(samples_a, samples_b) -> float:
    """Quantile-coupling W2 between two equally sized one-dimensional samples."""
    a = np.sort(np.asarray(samples_a, dtype=float).reshape(-1))
    b = np.sort(np.asarray(samples_b, dtype=float).reshape(-1))
    if a.size != b.size:
        raise ValueError(f"sample counts differ ({a.size} vs {b.size})")
    if a.size == 0:
        raise ValueError("empty samples")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def change_of_measure_report(
    model: ModelParams, k: int, q: float, radii, threshold_constant: float = 1.0
) -> list[VerificationReport]:
    """Exact tail checks for ``A = {|x^1| > r}`` under the Gaussian particle model.

    For each radius two reports are produced: the Holder bound
    ``mu(A) <= pi(A)^(1-1/q) exp((q-1)/q R_q)`` and the order-2 consequence
    ``mu(A) <= 2 pi(A)^(1/2)``. Configurations with ``N`` below
    ``threshold_constant * sqrt(d) * k^1.5`` are flagged in ``details`` but
    still checked.
    """
    if not q > 1:
        raise ValueError(f"q must be > 1, got {q}")
    g = stationary_exchangeable_gaussian(model)
    mu = marginal_covariance(g, k)
    nu = product_reference(model, k)
    R = renyi_gaussian(mu, nu, q)
    if is_divergent(R):
        raise ValueError(f"R_{q} is divergent at N={model.N}, k={k}, lam={model.lam}")
    # first particle: x^1 ~ N(0, (u + v) I_d)
    var_mu = mu.cov.u + mu.cov.v
    var_pi = 1.0 / (model.alpha_V0 + model.lam)
    below = model.N < threshold_constant * math.sqrt(model.d) * k**1.5
    reports = []
    for r in radii:
        r = float(r)
        if r < 0:
            raise ValueError("radii must be >= 0")
        p_mu = float(stats.chi2.sf(r * r / var_mu, model.d))
        p_pi = float(stats.chi2.sf(r * r / var_pi, model.d))
        inputs = {"lam": model.lam, "N": model.N, "d": model.d, "k": k, "q": q, "r": r}
        details = {"mu_A": p_mu, "pi_A": p_pi, "renyi": R, "below_threshold": below}
        lemma_rhs = p_pi ** (1 - 1 / q) * math.exp((q - 1) / q * R)
        reports.append(VerificationReport("change-of-measure", p_mu, lemma_rhs, inputs, details=details))
        reports.append(
            VerificationReport("change-of-measure-corollary", p_mu, 2.0 * math.sqrt(p_pi), inputs, details=details)
        )
    return reports

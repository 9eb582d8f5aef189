"""Closed forms for the exchangeable Gaussian particle model.

With ``V = |x|^2/2`` and ``W = lam |x|^2/2`` the N-particle Gibbs measure is a
centered Gaussian whose precision is ``(a I_N - b J_N) kron I_d`` with
``a = 1 + lam N/(N-1)`` and ``b = lam/(N-1)`` (``J`` the all-ones matrix).
Every marginal and conditional stays in the two-parameter family
``(u I_k + v J_k) kron I_d``, which has only two distinct eigenvalues:
``u + v k`` on the all-ones direction (multiplicity ``d``) and ``u`` on its
complement (multiplicity ``d (k - 1)``). Divergences between two such
covariances, or between one and a scaled identity, are sums over these two
eigenvalue pairs; anything else goes through a dense path.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Union

import numpy as np
import scipy.linalg

if TYPE_CHECKING:
    from .model import ModelParams

log = logging.getLogger(__name__)

DIVERGENT = math.inf
"""Value returned when a Renyi divergence (or tilt) does not exist."""

PD_RTOL = 1e-12
KL_REDIRECT_WIDTH = 1e-6


class _KLLimit(enum.Enum):
    KL_LIMIT = "kl-limit"

    def __repr__(self):
        return "KL_LIMIT"


KL_LIMIT = _KLLimit.KL_LIMIT
"""Symbolic Renyi order ``q -> 1``."""

RenyiOrder = Union[float, _KLLimit]


def is_divergent(value) -> bool:
    return isinstance(value, float) and math.isinf(value) and value > 0


def _check_pd(eigs: np.ndarray, what: str = "covariance") -> None:
    lo, hi = float(np.min(eigs)), float(np.max(eigs))
    if not (lo > 0 and lo > PD_RTOL * hi):
        raise ValueError(f"{what} is not positive definite (eigenvalues in [{lo:.3g}, {hi:.3g}])")


# --------------------------------------------------------------------------
# covariance representations


class DenseCovariance:
    __slots__ = ("matrix",)

    def __init__(self, matrix):
        m = np.array(matrix, dtype=float)
        if m.ndim == 0:
            m = m.reshape(1, 1)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"covariance must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("covariance contains non-finite entries")
        if not np.allclose(m, m.T, rtol=1e-10, atol=1e-14 * max(1.0, float(np.abs(m).max()))):
            raise ValueError("covariance is not symmetric")
        m = 0.5 * (m + m.T)
        m.setflags(write=False)
        self.matrix = m
        _check_pd(np.linalg.eigvalsh(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dense(self) -> np.ndarray:
        return self.matrix

    def __eq__(self, other):
        return isinstance(other, DenseCovariance) and np.array_equal(self.matrix, other.matrix)

    def __repr__(self):
        return f"DenseCovariance(dim={self.dim})"


@dataclass(frozen=True)
class ScaledIdentity:
    scale: float
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError(f"scale must be positive, got {self.scale}")

    def dense(self) -> np.ndarray:
        return self.scale * np.eye(self.dim)


@dataclass(frozen=True)
class ExchangeableCovariance:
    """``(u I_k + v J_k) kron I_d``."""

    u: float
    v: float
    k: int
    d: int

    def __post_init__(self):
        if self.k < 1 or self.d < 1:
            raise ValueError("k and d must be >= 1")
        eigs = [self.u + self.v * self.k] + ([self.u] if self.k > 1 else [])
        _check_pd(np.array(eigs))

    @property
    def dim(self) -> int:
        return self.k * self.d

    @property
    def ones_eigenvalue(self) -> float:
        return self.u + self.v * self.k

    def dense(self) -> np.ndarray:
        block = self.u * np.eye(self.k) + self.v * np.ones((self.k, self.k))
        return np.kron(block, np.eye(self.d))

    def block(self, i: int, j: int) -> np.ndarray:
        """The ``d x d`` covariance block between particles ``i`` and ``j``."""
        return (self.u * (i == j) + self.v) * np.eye(self.d)


Covariance = Union[DenseCovariance, ScaledIdentity, ExchangeableCovariance]


@dataclass(frozen=True, eq=False)
class GaussianSpec:
    mean: np.ndarray
    cov: Covariance

    def __post_init__(self):
        cov = self.cov
        if not isinstance(cov, (DenseCovariance, ScaledIdentity, ExchangeableCovariance)):
            cov = DenseCovariance(cov)
            object.__setattr__(self, "cov", cov)
        mean = np.array(self.mean, dtype=float).reshape(-1)
        if mean.shape != (cov.dim,):
            raise ValueError(f"mean has length {mean.size}, covariance has dim {cov.dim}")
        if not np.all(np.isfinite(mean)):
            raise ValueError("mean contains non-finite entries")
        mean.setflags(write=False)
        object.__setattr__(self, "mean", mean)

    @classmethod
    def centered(cls, cov) -> "GaussianSpec":
        if not isinstance(cov, (DenseCovariance, ScaledIdentity, ExchangeableCovariance)):
            cov = DenseCovariance(cov)
        return cls(np.zeros(cov.dim), cov)

    @property
    def dim(self) -> int:
        return self.cov.dim

    @property
    def is_centered(self) -> bool:
        return not np.any(self.mean)

    def dense_cov(self) -> np.ndarray:
        return self.cov.dense()

    def __eq__(self, other):
        return (
            isinstance(other, GaussianSpec)
            and np.array_equal(self.mean, other.mean)
            and self.cov == other.cov
        )

    def __repr__(self):
        return f"GaussianSpec(dim={self.dim}, cov={self.cov!r})"


def _joint_spectrum(c1: Covariance, c2: Covariance):
    """Shared eigen-decomposition ``[(eig1, eig2, multiplicity), ...]`` or ``None``."""
    if isinstance(c1, ScaledIdentity) and isinstance(c2, ScaledIdentity):
        return [(c1.scale, c2.scale, c1.dim)]
    ex = c1 if isinstance(c1, ExchangeableCovariance) else c2
    if not isinstance(ex, ExchangeableCovariance):
        return None

    def as_ex(c):
        if isinstance(c, ScaledIdentity):
            return ExchangeableCovariance(c.scale, 0.0, ex.k, ex.d)
        if isinstance(c, ExchangeableCovariance) and (c.k, c.d) == (ex.k, ex.d):
            return c
        return None

    e1, e2 = as_ex(c1), as_ex(c2)
    if e1 is None or e2 is None:
        return None
    out = [(e1.ones_eigenvalue, e2.ones_eigenvalue, ex.d)]
    if ex.k > 1:
        out.append((e1.u, e2.u, ex.d * (ex.k - 1)))
    return out


def _check_pair(mu: GaussianSpec, nu: GaussianSpec, centered: bool = True) -> None:
    if mu.dim != nu.dim:
        raise ValueError(f"dimension mismatch: {mu.dim} vs {nu.dim}")
    if centered and not (mu.is_centered and nu.is_centered):
        raise ValueError("only centered Gaussians are supported")


def _tilt_ok(eigs: np.ndarray) -> bool:
    lo, hi = float(np.min(eigs)), float(np.max(np.abs(eigs)))
    return lo > 0 and lo > PD_RTOL * hi


# --------------------------------------------------------------------------
# the particle model


@dataclass(frozen=True)
class ExchangeableGaussian:
    """Centered Gaussian on ``R^{N d}`` with precision ``(a I_N - b J_N) kron I_d``."""

    N: int
    d: int
    a: float
    b: float

    def __post_init__(self):
        if self.N < 1 or self.d < 1:
            raise ValueError("N and d must be >= 1")
        if not (self.ones_eigenvalue > 0 and self.complement_eigenvalue > 0):
            raise ValueError(
                f"precision eigenvalues must be positive, got "
                f"{self.ones_eigenvalue} and {self.complement_eigenvalue}"
            )

    @property
    def ones_eigenvalue(self) -> float:
        return self.a - self.b * self.N

    @property
    def complement_eigenvalue(self) -> float:
        return self.a

    def precision_dense(self) -> np.ndarray:
        block = self.a * np.eye(self.N) - self.b * np.ones((self.N, self.N))
        return np.kron(block, np.eye(self.d))

    def covariance(self) -> ExchangeableCovariance:
        u = 1.0 / self.a
        v = self.b / (self.a * self.ones_eigenvalue)
        return ExchangeableCovariance(u, v, self.N, self.d)


def _require_quadratic(model: "ModelParams") -> None:
    if not model.is_quadratic:
        raise ValueError("model has a non-quadratic perturbation; no Gaussian closed form")


def stationary_exchangeable_gaussian(model: "ModelParams") -> ExchangeableGaussian:
    """Precision structure of the N-particle Gibbs measure of a quadratic model.

    ``alpha_V0 I + lam/(N-1) (N I - J)`` rewritten as ``a I - b J``; the
    diagonal is ``alpha_V0 + lam`` and the off-diagonal ``-lam/(N-1)``.
    """
    _require_quadratic(model)
    N = model.N
    if N < 2:
        raise ValueError("need N >= 2")
    b = model.lam / (N - 1)
    return ExchangeableGaussian(N, model.d, model.alpha_V0 + b * N, b)


def mean_field_gaussian(model: "ModelParams") -> GaussianSpec:
    """Fixed point ``N(0, I/(alpha_V0 + lam))`` of the self-consistency map."""
    _require_quadratic(model)
    return GaussianSpec.centered(ScaledIdentity(1.0 / (model.alpha_V0 + model.lam), model.d))


def product_reference(model: "ModelParams", k: int) -> GaussianSpec:
    """``k``-fold product of the mean-field limit."""
    _require_quadratic(model)
    return GaussianSpec.centered(ScaledIdentity(1.0 / (model.alpha_V0 + model.lam), model.d * k))


def marginal_covariance(g: ExchangeableGaussian, k: int) -> GaussianSpec:
    """Law of the first ``k`` particles."""
    if not 1 <= k <= g.N:
        raise ValueError(f"k={k} out of range [1, {g.N}]")
    full = g.covariance()
    return GaussianSpec.centered(ExchangeableCovariance(full.u, full.v, k, g.d))


def conditional_block_gaussian(
    g: ExchangeableGaussian, k: int, observed, block_size: int
) -> GaussianSpec:
    """Law of particles ``k .. k+block_size-1`` (0-based) given the first ``k``.

    The joint law of the first ``k + block_size`` particles has precision
    ``a' I - b' J``; conditioning keeps the ``a' I - b' J`` form on the block
    and shifts every particle's mean by ``b'/(a' - b' l)`` times the sum of
    the observed positions.
    """
    ell = block_size
    if k < 1 or ell < 1 or k + ell > g.N:
        raise ValueError(f"need k >= 1, block_size >= 1, k + block_size <= N; got {k}, {ell}, {g.N}")
    x = np.asarray(observed, dtype=float)
    if x.ndim == 1 and g.d == 1:
        x = x[:, None]
    if x.shape != (k, g.d):
        raise ValueError(f"observed must have shape ({k}, {g.d}), got {x.shape}")
    m = k + ell
    marg = marginal_covariance(g, m).cov
    a = 1.0 / marg.u
    b = marg.v / (marg.u * marg.ones_eigenvalue)
    coef = b / (a - b * ell)
    mean = np.tile(coef * x.sum(axis=0), ell)
    cov = ExchangeableCovariance(1.0 / a, b / (a * (a - b * ell)), ell, g.d)
    return GaussianSpec(mean, cov)


def renyi_existence_threshold(lam: float, k: int, q: float) -> float:
    """``N*`` such that ``N > N*`` guarantees a finite order-``q`` Renyi divergence."""
    if lam < 0 or q <= 1 or k < 1:
        raise ValueError("need lam >= 0, q > 1, k >= 1")
    return 1.0 + lam * k * (q - 1.0) - lam * q / (1.0 + lam)


def asymptotic_coefficient(lam: float, k: int, q: float, d: int) -> float:
    """Limit of ``N^2 R_q(mu^{1:k} || pi^{(x)k})`` as ``N -> infinity``."""
    if lam < 0 or q <= 1:
        raise ValueError("need lam >= 0 and q > 1")
    pre = d * q * lam**2 / (4.0 * (1.0 + lam) ** 2)
    return pre * k * (k * (1.0 + lam) ** 2 - (2.0 * lam + 1.0))


# --------------------------------------------------------------------------
# divergences


def _renyi_terms(gamma: np.ndarray, q: float) -> np.ndarray:
    # -q log g - log(q/g + 1 - q), written to stay accurate for g near 1
    return -q * np.log(gamma) - np.log1p(q * (1.0 / gamma - 1.0))


def renyi_gaussian(mu: GaussianSpec, nu: GaussianSpec, q: RenyiOrder) -> float:
    """Order-``q`` Renyi divergence between centered Gaussians.

    Returns :data:`DIVERGENT` when ``q Sigma_mu^{-1} + (1 - q) Sigma_nu^{-1}``
    is not positive definite. ``q`` may be :data:`KL_LIMIT`; numeric orders
    within ``1e-6`` of 1 are evaluated as KL.
    """
    _check_pair(mu, nu)
    if q is KL_LIMIT:
        return kl_gaussian(mu, nu)
    q = float(q)
    if not q > 1:
        raise ValueError(f"Renyi order must be > 1, got {q}")
    if q < 1 + KL_REDIRECT_WIDTH:
        log.info("Renyi order %r is within %g of 1; using the KL formula", q, KL_REDIRECT_WIDTH)
        return kl_gaussian(mu, nu)

    spec = _joint_spectrum(mu.cov, nu.cov)
    if spec is not None:
        s1 = np.array([s[0] for s in spec])
        s2 = np.array([s[1] for s in spec])
        mult = np.array([s[2] for s in spec], dtype=float)
        if not _tilt_ok(q / s1 + (1 - q) / s2):
            return DIVERGENT
        total = float(np.sum(mult * _renyi_terms(s1 / s2, q)))
    else:
        S1, S2 = mu.dense_cov(), nu.dense_cov()
        tilt = q * np.linalg.inv(S1) + (1 - q) * np.linalg.inv(S2)
        if not _tilt_ok(np.linalg.eigvalsh(0.5 * (tilt + tilt.T))):
            return DIVERGENT
        gamma = scipy.linalg.eigh(S1, S2, eigvals_only=True)
        total = float(np.sum(_renyi_terms(gamma, q)))
    return max(total / (2.0 * (q - 1.0)), 0.0)


def kl_gaussian(mu: GaussianSpec, nu: GaussianSpec) -> float:
    _check_pair(mu, nu)
    spec = _joint_spectrum(mu.cov, nu.cov)
    if spec is not None:
        gamma = np.array([s[0] / s[1] for s in spec])
        mult = np.array([s[2] for s in spec], dtype=float)
    else:
        gamma = scipy.linalg.eigh(mu.dense_cov(), nu.dense_cov(), eigvals_only=True)
        mult = np.ones_like(gamma)
    t = gamma - 1.0
    return max(0.5 * float(np.sum(mult * (t - np.log1p(t)))), 0.0)


def w2_bures(mu: GaussianSpec, nu: GaussianSpec) -> float:
    """2-Wasserstein distance between Gaussians (means allowed)."""
    _check_pair(mu, nu, centered=False)
    shift = float(np.sum((mu.mean - nu.mean) ** 2))
    spec = _joint_spectrum(mu.cov, nu.cov)
    if spec is not None:
        cov_part = sum(m * (math.sqrt(a) - math.sqrt(b)) ** 2 for a, b, m in spec)
    else:
        S1, S2 = mu.dense_cov(), nu.dense_cov()
        w, U = np.linalg.eigh(S2)
        root = (U * np.sqrt(np.clip(w, 0, None))) @ U.T
        cross = np.linalg.eigvalsh(root @ S1 @ root)
        cov_part = float(np.trace(S1) + np.trace(S2) - 2.0 * np.sum(np.sqrt(np.clip(cross, 0, None))))
    return math.sqrt(max(shift + cov_part, 0.0))


def _tilt_spectral(spec, q):
    s1 = np.array([s[0] for s in spec])
    s2 = np.array([s[1] for s in spec])
    t = q / s1 + (1 - q) / s2
    return s1, s2, t


def tilted_gaussian(mu: GaussianSpec, nu: GaussianSpec, q: float):
    """Normalized ``(dmu/dnu)^q nu``: precision ``q Sigma_mu^{-1} + (1-q) Sigma_nu^{-1}``.

    Returns :data:`DIVERGENT` if that precision is not positive definite.
    """
    _check_pair(mu, nu)
    q = float(q)
    if q == 1.0 or mu.cov == nu.cov:
        return mu
    spec = _joint_spectrum(mu.cov, nu.cov)
    if spec is not None:
        _, _, t = _tilt_spectral(spec, q)
        if not _tilt_ok(t):
            return DIVERGENT
        ex = mu.cov if isinstance(mu.cov, ExchangeableCovariance) else nu.cov
        if isinstance(ex, ScaledIdentity):
            return GaussianSpec.centered(ScaledIdentity(1.0 / t[0], ex.dim))
        ones = 1.0 / t[0]
        rest = 1.0 / t[1] if len(t) > 1 else ones
        return GaussianSpec.centered(ExchangeableCovariance(rest, (ones - rest) / ex.k, ex.k, ex.d))
    prec = q * np.linalg.inv(mu.dense_cov()) + (1 - q) * np.linalg.inv(nu.dense_cov())
    prec = 0.5 * (prec + prec.T)
    if not _tilt_ok(np.linalg.eigvalsh(prec)):
        return DIVERGENT
    return GaussianSpec.centered(DenseCovariance(np.linalg.inv(prec)))


def fisher_functionals(mu: GaussianSpec, nu: GaussianSpec, q: float) -> tuple[float, float]:
    """Relative Fisher information and its order-``q`` Renyi analogue.

    The relative score is linear, ``-(Sigma_mu^{-1} - Sigma_nu^{-1}) x``, so
    ``FI = tr(D Sigma_mu D)`` and ``RFI_q = q tr(D Sigma_P D)`` with
    ``Sigma_P`` the tilted covariance. Raises ``ValueError`` when the tilt
    does not exist.
    """
    _check_pair(mu, nu)
    q = float(q)
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    spec = _joint_spectrum(mu.cov, nu.cov)
    if spec is not None:
        s1, s2, t = _tilt_spectral(spec, q)
        mult = np.array([s[2] for s in spec], dtype=float)
        D2 = (1.0 / s1 - 1.0 / s2) ** 2
        fi = float(np.sum(mult * D2 * s1))
        if q == 1.0:
            return fi, fi
        if not _tilt_ok(t):
            raise ValueError(f"tilt at q={q} is not positive definite")
        return fi, q * float(np.sum(mult * D2 / t))
    S1 = mu.dense_cov()
    D = np.linalg.inv(S1) - np.linalg.inv(nu.dense_cov())
    fi = float(np.trace(D @ S1 @ D))
    if q == 1.0:
        return fi, fi
    P = tilted_gaussian(mu, nu, q)
    if is_divergent(P):
        raise ValueError(f"tilt at q={q} is not positive definite")
    return fi, q * float(np.trace(D @ P.dense_cov() @ D))


def lsi_constant(g: GaussianSpec) -> float:
    """Exact log-Sobolev constant of a Gaussian: its largest covariance eigenvalue."""
    c = g.cov
    if isinstance(c, ScaledIdentity):
        return c.scale
    if isinstance(c, ExchangeableCovariance):
        return max(c.u, c.ones_eigenvalue) if c.k > 1 else c.ones_eigenvalue
    return float(np.linalg.eigvalsh(c.matrix)[-1])

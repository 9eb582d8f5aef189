"""Numerical verdicts for the functional inequalities behind Renyi propagation of chaos.

Inequalities with explicit constants are checked as ``lhs <= rhs`` reports.
Statements that only hold up to unspecified constants are checked through
log-log slopes and normalized ratios instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .fitting import fit_loglog_slope
from .gaussian import (
    GaussianSpec,
    conditional_block_gaussian,
    fisher_functionals,
    is_divergent,
    kl_gaussian,
    lsi_constant,
    marginal_covariance,
    product_reference,
    renyi_existence_threshold,
    renyi_gaussian,
    stationary_exchangeable_gaussian,
    tilted_gaussian,
)
from .model import ModelParams
from .reports import VerificationReport

XI_MIN = 2.0


@dataclass(frozen=True)
class LsiCertificate:
    """Certified log-Sobolev constant; ``constant`` is ``inf`` when no certificate exists."""

    constant: float
    zeta: float
    method: str

    @property
    def certified(self) -> bool:
        return math.isfinite(self.constant)


def otto_reznikoff_certificate(tau, beta) -> LsiCertificate:
    """Global LSI constant from per-site constants ``1/tau_i`` and couplings ``beta_ij``.

    The interaction matrix has ``tau`` on the diagonal and ``-beta`` off it;
    its smallest eigenvalue ``zeta`` certifies the constant ``1/zeta`` when
    positive.
    """
    tau = np.asarray(tau, dtype=float)
    beta = np.asarray(beta, dtype=float)
    n = tau.size
    if beta.shape != (n, n):
        raise ValueError(f"beta must be {n}x{n}, got {beta.shape}")
    if np.any(tau <= 0):
        raise ValueError("tau entries must be > 0")
    off = beta[~np.eye(n, dtype=bool)]
    if np.any(off < 0):
        raise ValueError("beta entries must be >= 0")
    if not np.allclose(beta, beta.T):
        raise ValueError("beta must be symmetric")
    A = -beta.copy()
    np.fill_diagonal(A, tau)
    zeta = float(np.linalg.eigvalsh(A)[0])
    constant = 1.0 / zeta if zeta > 0 else math.inf
    return LsiCertificate(constant, zeta, "otto-reznikoff")


def holley_stroock_bound(alpha_V0, alpha_W0, osc_V1, osc_W1, N) -> float:
    """Uniform LSI bound for conditionals of a perturbed strongly convex system.

    ``alpha_W0`` enters only through its negative part ``min(alpha_W0, 0)``.
    """
    if osc_V1 < 0 or osc_W1 < 0:
        raise ValueError("oscillations must be >= 0")
    if N < 2:
        raise ValueError("N must be >= 2")
    if alpha_V0 + min(alpha_W0, 0.0) <= 0:
        raise ValueError("need alpha_V0 + min(alpha_W0, 0) > 0")
    denom = alpha_V0 + N / (N - 1) * min(alpha_W0, 0.0)
    if denom <= 0:
        raise ValueError(f"denominator alpha_V0 + N/(N-1) min(alpha_W0, 0) = {denom} <= 0")
    return math.exp(osc_V1 + osc_W1) / denom


def _pair_inputs(mu: GaussianSpec, nu: GaussianSpec, q: float) -> dict:
    return {"mu": repr(mu.cov), "nu": repr(nu.cov), "q": q}


def renyi_lsi_check(mu: GaussianSpec, nu: GaussianSpec, q: float) -> VerificationReport:
    """``R_q(mu||nu) <= q C/2 RFI_q(mu||nu)`` with ``C`` the exact LSI constant of ``nu``."""
    R = renyi_gaussian(mu, nu, q)
    if is_divergent(R):
        raise ValueError(f"R_{q} diverges for this pair")
    _, rfi = fisher_functionals(mu, nu, q)
    c = lsi_constant(nu)
    return VerificationReport(
        "renyi-lsi", R, 0.5 * q * c * rfi, _pair_inputs(mu, nu, q), details={"rfi": rfi, "c_lsi": c}
    )


def tilt_kl_check(mu: GaussianSpec, nu: GaussianSpec, q: float) -> VerificationReport:
    """``KL(P||mu) <= (q-1) C/2 RFI_q(mu||nu)`` for the tilted measure ``P``, ``q >= 2``."""
    if q < 2:
        raise ValueError(f"tilt KL bound needs q >= 2, got {q}")
    P = tilted_gaussian(mu, nu, q)
    if is_divergent(P):
        raise ValueError(f"tilt at q={q} does not exist for this pair")
    _, rfi = fisher_functionals(mu, nu, q)
    c = lsi_constant(nu)
    return VerificationReport(
        "tilt-kl", kl_gaussian(P, mu), 0.5 * (q - 1) * c * rfi, _pair_inputs(mu, nu, q), details={"rfi": rfi}
    )


def subgaussian_mgf_check(
    L: float, c_lsi: float, lambda_grid, mc_samples: int = 100_000, seed: int = 0
) -> list[VerificationReport]:
    """MGF bounds for ``G(x) = L x_1`` under ``N(0, c_lsi I)``.

    The linear bound ``log E exp(lam (G - EG)) <= lam^2 L^2 C / 2`` is an
    equality here; the squared bound ``log E exp(lam (G - EG)^2) <= 2 lam L^2 C``
    is compared against the exact chi-square MGF ``-log(1 - 2 lam L^2 C)/2``.
    Monte Carlo estimates of both left sides go in ``details``.
    """
    lams = np.asarray(list(lambda_grid), dtype=float)
    if np.any(lams < 0):
        raise ValueError("lambda grid must be >= 0")
    s2 = L * L * c_lsi
    if np.any(lams * s2 > 0.25):
        raise ValueError("every grid value must satisfy lambda L^2 C <= 1/4")
    g = math.sqrt(s2) * rng.stream(seed, 0).standard_normal(mc_samples)
    g = g - g.mean()
    reports = []
    for lam in lams:
        inputs = {"L": L, "c_lsi": c_lsi, "lambda": float(lam)}
        lin = 0.5 * lam * lam * s2
        mc_lin = float(np.log(np.mean(np.exp(lam * g))))
        reports.append(VerificationReport("subgaussian-linear", lin, lin, inputs, details={"mc": mc_lin}))
        sq = -0.5 * math.log1p(-2.0 * lam * s2)
        mc_sq = float(np.log(np.mean(np.exp(lam * g * g))))
        reports.append(VerificationReport("subgaussian-squared", sq, 2.0 * lam * s2, inputs, details={"mc": mc_sq}))
    return reports


# --------------------------------------------------------------------------
# KL recursion for the conditional laws


def recursion_coefficients(xi: float, n: int) -> np.ndarray:
    """``C_l = l / (l + xi)`` for ``l = 1..n``."""
    ell = np.arange(1, n + 1, dtype=float)
    return ell / (ell + xi)


def coefficient_product_check(xi: float, n: int) -> VerificationReport:
    """``prod_{l=i}^{j} C_l <= ((i + xi)/(j + 1 + xi))^xi`` for all ``1 <= i <= j <= n``.

    The report carries the worst pair: its product as ``lhs`` and its bound
    as ``rhs``.
    """
    if xi <= 0 or n < 1:
        raise ValueError("need xi > 0 and n >= 1")
    c = recursion_coefficients(xi, n)
    worst = (math.inf, 0, 0, 0.0, 0.0)
    for i in range(1, n + 1):
        prods = np.cumprod(c[i - 1 :])
        j = np.arange(i, n + 1, dtype=float)
        bounds = ((i + xi) / (j + 1 + xi)) ** xi
        slack = bounds - prods
        at = int(np.argmin(slack))
        if slack[at] < worst[0]:
            worst = (float(slack[at]), i, i + at, float(prods[at]), float(bounds[at]))
    _, i, j, lhs, rhs = worst
    return VerificationReport(
        "coefficient-product", lhs, rhs, {"xi": xi, "n": n}, tol=1e-12, details={"i": i, "j": j}
    )


@dataclass(frozen=True)
class RecursionTrace:
    xi: float
    coefficients: np.ndarray
    products: np.ndarray
    terminal: float
    k1_bound: float
    c_N: float
    weak_interaction: bool
    reports: list = field(default_factory=list)


def recursion_chain(
    beta_W: float, c_lsi_bar: float, N: int, k: int, delta_sq: float, xi_min: float = XI_MIN
) -> RecursionTrace:
    """Solve the KL hierarchy ``K_l <= C_l (a + K_{l+1})`` down to ``K_1``.

    ``a = k |dx|^2 / (2 C N^2)`` and the chain starts from the terminal bound
    ``K_{N-k} <= beta_W^2 k C |dx|^2 / (2N)``. ``k1_bound`` is the exact
    back-substituted value and ``c_N`` its coefficient in units of
    ``k |dx|^2 / (2 C)``. The attached reports check the coefficient-product
    lemma over all pairs and ``k1_bound`` against the envelope obtained by
    replacing each product with its lemma bound.
    """
    if beta_W <= 0 or c_lsi_bar <= 0:
        raise ValueError("beta_W and c_lsi_bar must be > 0")
    if not 1 <= k < N:
        raise ValueError(f"need 1 <= k < N, got k={k}, N={N}")
    if delta_sq < 0:
        raise ValueError("delta_sq must be >= 0")
    xi = 1.0 / (2.0 * beta_W**2 * c_lsi_bar**2)
    n = N - k - 1
    coeffs = recursion_coefficients(xi, n)
    products = np.cumprod(coeffs)
    terminal = beta_W**2 * k * c_lsi_bar * delta_sq / (2.0 * N)
    a = k * delta_sq / (2.0 * c_lsi_bar * N**2)

    K = terminal
    for c in coeffs[::-1]:
        K = c * (a + K)
    full = products[-1] if n else 1.0
    c_N = full / (2.0 * xi * N) + float(products.sum()) / N**2
    envelope = ((1 + xi) / (n + 1 + xi)) ** xi / (2.0 * xi * N)
    envelope += float(np.sum(((1 + xi) / (np.arange(1, n + 1) + 1 + xi)) ** xi)) / N**2

    inputs = {"beta_W": beta_W, "c_lsi_bar": c_lsi_bar, "N": N, "k": k, "delta_sq": delta_sq}
    reports = [
        coefficient_product_check(xi, N - k),
        VerificationReport("kl-recursion-envelope", c_N, envelope, inputs, details={"xi": xi}),
    ]
    return RecursionTrace(xi, coeffs, products, terminal, K, c_N, xi >= xi_min, reports)


def conditional_lipschitz_probe(model: ModelParams, N: int, k: int) -> tuple[float, VerificationReport]:
    """Exact Lipschitz constant of ``x^{[k]} -> W2(mu^{k+1|[k]}(.|x^{[k]}), pi)``.

    The conditional covariance does not depend on the conditioning points and
    the conditional mean is ``c * sum_j x^j``, so the constant is
    ``|c| sqrt(k)``. The report checks it against ``2 lam sqrt(k) / N``;
    ``details["normalized"]`` is ``L (N - 1 + lam k) / (lam sqrt(k))``, which
    is identically 1.
    """
    m = model.with_N(N)
    if not 1 <= k < N:
        raise ValueError(f"need 1 <= k < N, got k={k}, N={N}")
    g = stationary_exchangeable_gaussian(m)
    cond = conditional_block_gaussian(g, k, np.ones((k, m.d)), 1)
    coef = cond.mean[0] / k
    L = abs(coef) * math.sqrt(k)
    lam = m.lam
    normalized = L * (N - 1 + lam * k) / (lam * math.sqrt(k)) if lam > 0 else None
    report = VerificationReport(
        "lipschitz-recursion",
        L,
        2.0 * lam * math.sqrt(k) / N,
        {"lam": lam, "N": N, "k": k, "d": m.d},
        details={"normalized": normalized},
    )
    return L, report


@dataclass(frozen=True)
class PocProbe:
    N_grid: np.ndarray
    fisher: np.ndarray
    kl: np.ndarray
    fisher_slope: float | None
    kl_slope: float | None
    k_grid: np.ndarray
    kl_at_k: np.ndarray
    k_exponent: float | None


def fisher_poc_probe(
    model: ModelParams, k: int, N_grid, k_grid=(1, 2, 4, 8), N_for_k: int = 4096
) -> PocProbe:
    """Closed-form FI and KL between ``mu^{[k]}`` and ``pi^{(x)k}`` along ``N_grid``.

    Slopes are ``None`` when the values vanish identically (no interaction).
    The k-exponent is the log-log slope of KL in ``k`` at ``N = N_for_k``; it
    is descriptive only.
    """
    Ns = np.asarray(list(N_grid), dtype=int)
    if np.any(Ns < max(2, k)):
        raise ValueError(f"every N must be >= max(2, k={k})")

    def values(N, kk):
        m = model.with_N(int(N))
        mu = marginal_covariance(stationary_exchangeable_gaussian(m), kk)
        nu = product_reference(m, kk)
        fi, _ = fisher_functionals(mu, nu, 1.0)
        return fi, kl_gaussian(mu, nu)

    fi, kl = np.array([values(N, k) for N in Ns]).T
    ks = np.asarray(list(k_grid), dtype=int)
    kl_k = np.array([values(N_for_k, kk)[1] for kk in ks])

    def slope(x, y):
        if not np.all(y > 0) or len(x) < 4:
            return None
        return fit_loglog_slope(zip(x, y))[0]

    return PocProbe(Ns, fi, kl, slope(Ns, fi), slope(Ns, kl), ks, kl_k, slope(ks, kl_k))


# --------------------------------------------------------------------------
# seeded sweep over the Gaussian family


@dataclass(frozen=True)
class SweepConfig:
    lam: float
    N: int
    k: int
    q: float
    d: int


def random_admissible_configs(count: int, seed: int = 0, N_max: int = 512) -> list[SweepConfig]:
    """Random ``(lam, N, k, q, d)`` with a finite Renyi divergence.

    ``d <= 4``, ``k <= 3``, ``q`` in ``[1.1, 4]``, ``lam`` in ``[0, 2]`` and
    ``N`` log-uniform above the existence threshold.
    """
    gen = rng.stream(seed, 0)
    out = []
    while len(out) < count:
        lam = float(gen.uniform(0, 2))
        k = int(gen.integers(1, 4))
        q = float(gen.uniform(1.1, 4))
        d = int(gen.integers(1, 5))
        lo = max(k + 1, 2, math.floor(renyi_existence_threshold(lam, k, q)) + 1)
        N = int(round(math.exp(gen.uniform(math.log(lo), math.log(N_max)))))
        N = max(N, lo)
        m = ModelParams(d, N, lam)
        mu = marginal_covariance(stationary_exchangeable_gaussian(m), k)
        if is_divergent(renyi_gaussian(mu, product_reference(m, k), q)):
            continue
        out.append(SweepConfig(lam, N, k, q, d))
    return out


def inequality_sweep(count: int = 200, seed: int = 0) -> list[VerificationReport]:
    """Renyi-LSI (and, for ``q >= 2``, tilted-KL) reports over random admissible configs."""
    reports = []
    for cfg in random_admissible_configs(count, seed):
        m = ModelParams(cfg.d, cfg.N, cfg.lam)
        mu = marginal_covariance(stationary_exchangeable_gaussian(m), cfg.k)
        nu = product_reference(m, cfg.k)
        reports.append(renyi_lsi_check(mu, nu, cfg.q))
        if cfg.q >= 2:
            reports.append(tilt_kl_check(mu, nu, cfg.q))
    return reports

"""Metropolis-adjusted Langevin sampling of the N-particle Gibbs measure.

Chains are simulated in lock-step as one ``(chains, N, d)`` array, but every
chain draws its proposal noise and acceptance uniforms from its own Philox
stream keyed by ``(master_seed, chain)``. A chain's trajectory therefore does
not depend on which other chains run next to it, on the worker count, or on
the block size used to draw random numbers.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import rng
from .model import ModelParams, drift, energy

RNG_BLOCK = 512
MIN_ACCEPTANCE = 0.05


class SamplerError(RuntimeError):
    pass


@dataclass(frozen=True)
class SamplerConfig:
    step_size: float = 0.1
    burn_in: int = 10_000
    thinning: int = 10
    chains: int = 4
    steps: int = 10_000
    master_seed: int = 0
    adapt: bool = True
    target_accept: float = 0.574

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValueError("step_size must be > 0")
        if self.chains < 1:
            raise ValueError("chains must be >= 1")
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")
        if self.burn_in < 0 or self.steps < 1:
            raise ValueError("burn_in must be >= 0 and steps >= 1")
        if not 0 < self.target_accept < 1:
            raise ValueError("target_accept must lie in (0, 1)")

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(asdict(self), sort_keys=True).encode()).hexdigest()[:16]


@dataclass
class ParticleEnsemble:
    """Thinned post-burn-in snapshots, shape ``(chains, snapshots, N, d)``."""

    samples: np.ndarray
    acceptance: np.ndarray
    step_sizes: np.ndarray
    provenance: dict = field(default_factory=dict)

    @property
    def chains(self) -> int:
        return self.samples.shape[0]

    @property
    def n_snapshots(self) -> int:
        return self.samples.shape[1]

    def particle(self, i: int) -> np.ndarray:
        """Pooled draws of particle ``i`` across chains, shape ``(chains * snapshots, d)``."""
        return self.samples[:, :, i, :].reshape(-1, self.samples.shape[-1])

    def marginal(self, k: int) -> np.ndarray:
        """Pooled draws of the first ``k`` particles, flattened to ``(n, k * d)``."""
        return self.samples[:, :, :k, :].reshape(-1, k * self.samples.shape[-1])


class _DualAveraging:
    # Hoffman & Gelman (2014), vectorized over chains
    gamma, t0, kappa = 0.05, 10.0, 0.75

    def __init__(self, h0: np.ndarray, target: float):
        self.mu = np.log(10.0 * h0)
        self.target = target
        self.hbar = np.zeros_like(h0)
        self.log_h_avg = np.log(h0)
        self.t = 0

    def update(self, accept_prob: np.ndarray) -> np.ndarray:
        self.t += 1
        t = self.t
        w = 1.0 / (t + self.t0)
        self.hbar = (1 - w) * self.hbar + w * (self.target - accept_prob)
        log_h = self.mu - math.sqrt(t) / self.gamma * self.hbar
        eta = t ** (-self.kappa)
        self.log_h_avg = eta * log_h + (1 - eta) * self.log_h_avg
        return np.exp(log_h)

    def final(self) -> np.ndarray:
        return np.exp(self.log_h_avg)


def _run_chains(model: ModelParams, cfg: SamplerConfig, chain_ids: list[int]):
    C = len(chain_ids)
    N, d = model.N, model.d
    noise_gens = [rng.stream(cfg.master_seed, c, rng.NOISE) for c in chain_ids]
    accept_gens = [rng.stream(cfg.master_seed, c, rng.ACCEPT) for c in chain_ids]
    x = np.stack([rng.stream(cfg.master_seed, c, rng.INIT).standard_normal((N, d)) for c in chain_ids])
    x /= math.sqrt(model.alpha_V0 + model.lam)

    e_x = energy(model, x)
    g_x = drift(model, x)
    h = np.full(C, float(cfg.step_size))
    adapter = _DualAveraging(h, cfg.target_accept) if cfg.adapt and cfg.burn_in > 0 else None

    total = cfg.burn_in + cfg.steps
    n_keep = cfg.steps // cfg.thinning
    out = np.empty((C, n_keep, N, d))
    accepted = np.zeros(C)
    kept = 0

    for start in range(0, total, RNG_BLOCK):
        B = min(RNG_BLOCK, total - start)
        z = np.stack([g.standard_normal((B, N, d)) for g in noise_gens], axis=1)
        log_u = np.log(np.stack([g.random(B) for g in accept_gens], axis=1))
        for b in range(B):
            t = start + b
            hb = h[:, None, None]
            fwd_mean = x + hb * g_x
            prop = fwd_mean + np.sqrt(2.0 * hb) * z[b]
            e_p = energy(model, prop)
            if np.any(np.isnan(e_p)) or not np.all(np.isfinite(e_x)):
                bad = [chain_ids[i] for i in np.flatnonzero(~np.isfinite(e_x) | np.isnan(e_p))]
                raise SamplerError(
                    f"non-finite energy in chain(s) {bad} at step {t}; step size {h[0]:.3g} is too large"
                )
            g_p = drift(model, prop)
            with np.errstate(over="ignore", invalid="ignore"):
                back = x - prop - hb * g_p
                log_alpha = (
                    e_x - e_p
                    - np.sum(back * back, axis=(-2, -1)) / (4.0 * h)
                    + 0.5 * np.sum(z[b] * z[b], axis=(-2, -1))
                )
            log_alpha = np.where(np.isfinite(e_p), log_alpha, -np.inf)
            acc = log_u[b] < log_alpha
            x = np.where(acc[:, None, None], prop, x)
            e_x = np.where(acc, e_p, e_x)
            g_x = np.where(acc[:, None, None], g_p, g_x)

            if t < cfg.burn_in:
                if adapter is not None:
                    h = adapter.update(np.exp(np.minimum(log_alpha, 0.0)))
                    if t == cfg.burn_in - 1:
                        h = adapter.final()
                continue
            accepted += acc
            post = t - cfg.burn_in + 1
            if post % cfg.thinning == 0 and kept < n_keep:
                out[:, kept] = x
                kept += 1

    return out, accepted / cfg.steps, h


def mala_sample(model: ModelParams, cfg: SamplerConfig, workers: int = 1) -> ParticleEnsemble:
    """Sample the N-particle Gibbs measure with independent MALA chains.

    Each step proposes ``y = x + h b(x) + sqrt(2 h) xi`` with ``b`` the
    interacting drift and accepts with the Metropolis-Hastings ratio built from
    energy differences, so the target is exact for any step size. During
    burn-in the per-chain step size is tuned by dual averaging towards
    ``cfg.target_accept`` and then frozen.

    Raises
    ------
    SamplerError
        If a chain produces a non-finite energy, or the post-burn-in
        acceptance rate of some chain falls below 5%.
    """
    ids = list(range(cfg.chains))
    workers = max(1, min(workers, cfg.chains))
    if workers == 1:
        parts = [_run_chains(model, cfg, ids)]
    else:
        groups = [g.tolist() for g in np.array_split(ids, workers)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda g: _run_chains(model, cfg, g), groups))
    samples = np.concatenate([p[0] for p in parts], axis=0)
    acceptance = np.concatenate([p[1] for p in parts])
    steps = np.concatenate([p[2] for p in parts])

    low = np.flatnonzero(acceptance < MIN_ACCEPTANCE)
    if low.size:
        raise SamplerError(
            f"acceptance {acceptance[low].min():.3f} < {MIN_ACCEPTANCE} in chain(s) {low.tolist()}; "
            f"reduce step_size (final step {steps[low].min():.3g}) or enable adaptation"
        )
    provenance = {
        "config": cfg.digest(),
        "master_seed": cfg.master_seed,
        "model": repr(model),
    }
    return ParticleEnsemble(samples, acceptance, steps, provenance)

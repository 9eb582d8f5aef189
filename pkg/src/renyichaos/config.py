"""Line-oriented ``key = value`` experiment configuration.

One assignment per line, ``#`` starts a comment, blank lines are ignored.
List values are comma- or space-separated; integer grids may also be written
``geometric START STOP RATIO``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

from .sampler import SamplerConfig

KINDS = ("gaussian-scaling", "simulate", "verify", "tails", "recursion", "fixpoint")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("true", "yes", "1", "on"):
        return True
    if v in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _tokens(s: str) -> list[str]:
    return [t for t in s.replace(",", " ").split() if t]


def _int(s: str) -> int:
    f = float(s)
    if not f.is_integer():
        raise ValueError(f"expected an integer, got {s!r}")
    return int(f)


def _int_list(s: str) -> tuple[int, ...]:
    toks = _tokens(s)
    if toks and toks[0] == "geometric":
        if len(toks) != 4:
            raise ValueError("geometric grids need START STOP RATIO")
        start, stop, ratio = _int(toks[1]), _int(toks[2]), float(toks[3])
        if start < 1 or ratio <= 1:
            raise ValueError("geometric grid needs START >= 1 and RATIO > 1")
        out, x = [], float(start)
        while round(x) <= stop:
            out.append(int(round(x)))
            x *= ratio
        return tuple(out)
    return tuple(_int(t) for t in toks)


def _float_list(s: str) -> tuple[float, ...]:
    return tuple(float(t) for t in _tokens(s))


# key -> (attribute, parser)
_SCHEMA = {
    "experiment": ("experiment", str.strip),
    "d": ("d", _int),
    "k": ("k", _int),
    "q": ("q", float),
    "lambda": ("lam", float),
    "N": ("N", _int),
    "alpha_V0": ("alpha_V0", float),
    "perturbation_amplitude": ("perturbation_amplitude", float),
    "perturbation_frequency": ("perturbation_frequency", float),
    "sweep": ("sweep", str.strip),
    "grid": ("grid", _int_list),
    "fit_exclude_fraction": ("fit_exclude_fraction", float),
    "step_size": ("step_size", float),
    "burn_in": ("burn_in", _int),
    "thinning": ("thinning", _int),
    "chains": ("chains", _int),
    "steps": ("steps", _int),
    "adapt": ("adapt", _bool),
    "seed": ("seed", _int),
    "radii": ("radii", _float_list),
    "threshold_constant": ("threshold_constant", float),
    "sweep_configs": ("sweep_configs", _int),
    "xi": ("xi", _float_list),
    "beta_W": ("beta_W", float),
    "c_lsi_bar": ("c_lsi_bar", float),
    "delta_sq": ("delta_sq", float),
    "damping": ("damping", float),
    "tol": ("tol", float),
    "max_iter": ("max_iter", _int),
    "workers": ("workers", _int),
}


@dataclass
class ExperimentConfig:
    experiment: str = "gaussian-scaling"
    d: int = 1
    k: int = 1
    q: float = 2.0
    lam: float = 1.0
    N: int = 3
    alpha_V0: float = 1.0
    perturbation_amplitude: float = 0.0
    perturbation_frequency: float = 1.0
    sweep: str = "N"
    grid: tuple = ()
    fit_exclude_fraction: float = 0.25
    step_size: float = 0.1
    burn_in: int = 10_000
    thinning: int = 10
    chains: int = 8
    steps: int = 10_000
    adapt: bool = True
    seed: int = 0
    radii: tuple = tuple(0.5 * i for i in range(9))
    threshold_constant: float = 1.0
    sweep_configs: int = 200
    xi: tuple = (1.0, 2.0, 5.0, 10.0)
    beta_W: float = 0.5
    c_lsi_bar: float = 1.0
    delta_sq: float = 1.0
    damping: float = 0.5
    tol: float = 1e-10
    max_iter: int = 10_000
    workers: int = 1
    lines: dict = field(default_factory=dict, repr=False, compare=False)

    def sampler(self, seed: int | None = None) -> SamplerConfig:
        return SamplerConfig(
            step_size=self.step_size,
            burn_in=self.burn_in,
            thinning=self.thinning,
            chains=self.chains,
            steps=self.steps,
            master_seed=self.seed if seed is None else seed,
            adapt=self.adapt,
        )

    def line_of(self, key: str) -> int | None:
        return self.lines.get(key, self.lines.get("experiment"))

    def validate(self) -> "ExperimentConfig":
        def fail(key, msg):
            raise ConfigError(f"{key}: {msg}", self.line_of(key))

        if self.experiment not in KINDS:
            fail("experiment", f"unknown kind {self.experiment!r}; expected one of {', '.join(KINDS)}")
        for key, attr, lo in (("d", "d", 1), ("k", "k", 1), ("N", "N", 2), ("chains", "chains", 1),
                              ("thinning", "thinning", 1), ("steps", "steps", 1), ("burn_in", "burn_in", 0),
                              ("sweep_configs", "sweep_configs", 1), ("max_iter", "max_iter", 1),
                              ("workers", "workers", 1), ("seed", "seed", 0)):
            if getattr(self, attr) < lo:
                fail(key, f"must be >= {lo}")
        if self.seed >= 2**64:
            fail("seed", "must fit in 64 bits")
        if not self.q > 1:
            fail("q", "must be > 1")
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            fail("lambda", "must be finite and >= 0")
        if not self.alpha_V0 > 0:
            fail("alpha_V0", "must be > 0")
        if not self.step_size > 0:
            fail("step_size", "must be > 0")
        if not 0 <= self.fit_exclude_fraction < 1:
            fail("fit_exclude_fraction", "must lie in [0, 1)")
        if not 0 < self.damping <= 1:
            fail("damping", "must lie in (0, 1]")
        if not self.tol > 0:
            fail("tol", "must be > 0")
        if self.sweep not in ("N", "d"):
            fail("sweep", "must be N or d")
        if any(r < 0 for r in self.radii):
            fail("radii", "must be >= 0")
        if any(x <= 0 for x in self.xi):
            fail("xi", "must be > 0")
        for key in ("beta_W", "c_lsi_bar"):
            if not getattr(self, key) > 0:
                fail(key, "must be > 0")
        if self.delta_sq < 0:
            fail("delta_sq", "must be >= 0")
        if self.grid and any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            fail("grid", "must be strictly increasing")

        kind = self.experiment
        if kind in ("gaussian-scaling", "simulate"):
            if len(self.grid) < 4:
                fail("grid", "scaling sweeps need at least 4 grid points")
            if self.sweep == "N" and self.grid[0] < max(2, self.k):
                fail("grid", f"N values must be >= max(2, k={self.k})")
            if self.sweep == "d" and (self.grid[0] < 1 or self.N < max(2, self.k)):
                fail("grid", f"d values must be >= 1 and N >= max(2, k={self.k})")
            if kind == "simulate" and self.perturbation_amplitude:
                fail("perturbation_amplitude", "simulate compares against the Gaussian limit; must be 0")
        elif kind in ("tails", "recursion"):
            if not self.grid:
                fail("grid", "needs a grid of N values")
            lo = self.k + 1 if kind == "recursion" else max(2, self.k)
            if self.grid[0] < lo:
                fail("grid", f"N values must be >= {lo}")
        elif kind == "fixpoint":
            if self.perturbation_amplitude and self.d != 1:
                fail("d", "perturbed mean-field solver is one-dimensional")
        if kind == "tails" and self.perturbation_amplitude:
            fail("perturbation_amplitude", "tails need the Gaussian model; must be 0")
        return self


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a configuration document."""
    values: dict = {}
    lines: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, _, value = (p.strip() for p in line.partition("="))
        if key not in _SCHEMA:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in lines:
            raise ConfigError(f"duplicate key {key!r} (first set on line {lines[key]})", lineno)
        attr, parse = _SCHEMA[key]
        try:
            values[attr] = parse(value)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}", lineno) from None
        lines[key] = lineno
    cfg = ExperimentConfig(**values, lines=lines)
    return cfg.validate()


def format_config(cfg: ExperimentConfig) -> str:
    """Render ``cfg`` back into the document format."""
    attr_to_key = {attr: key for key, (attr, _) in _SCHEMA.items()}
    out = []
    for f in fields(cfg):
        if f.name == "lines":
            continue
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = ", ".join(repr(x) for x in v)
        elif isinstance(v, bool):
            v = "true" if v else "false"
        else:
            v = repr(v) if isinstance(v, float) else v
        out.append(f"{attr_to_key[f.name]} = {v}")
    return "\n".join(out) + "\n"

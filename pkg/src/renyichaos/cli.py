"""Command-line entry point.

Exit codes: 0 success, 1 a verification report failed, 2 usage or
configuration error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, ExperimentConfig, parse_config
from .experiments import (
    emit_csv,
    run_fixpoint,
    run_gaussian_functionals,
    run_recursion,
    run_scaling,
    run_tails,
    run_verify,
)
from .meanfield import ConvergenceError
from .plot import emit_plot
from .sampler import SamplerError

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3

DEFAULT_DOCUMENTS = {
    "gaussian": "experiment = gaussian-scaling\nlambda = 1\nk = 1\nq = 2\nd = 1\ngrid = geometric 64 4096 2\n",
    "scaling": "experiment = gaussian-scaling\nlambda = 1\nk = 1\nq = 2\nd = 1\ngrid = geometric 64 4096 2\n",
    "simulate": (
        "experiment = simulate\nlambda = 1\nk = 1\nq = 2\nd = 1\ngrid = 3, 4, 6, 8\n"
        "chains = 8\nburn_in = 2000\nsteps = 20000\nthinning = 5\nstep_size = 0.3\n"
    ),
    "verify": "experiment = verify\nlambda = 1\nk = 1\nq = 2\n",
    "tails": "experiment = tails\nlambda = 1\nk = 1\nq = 2\ngrid = 3, 8, 32\n",
    "recursion": "experiment = recursion\nk = 1\nbeta_W = 0.5\nc_lsi_bar = 1\ngrid = 50, 100, 200, 500\n",
    "fixpoint": "experiment = fixpoint\nlambda = 1\nd = 1\nperturbation_amplitude = 0.1\n",
}

ALLOWED_KINDS = {
    "gaussian": ("gaussian-scaling",),
    "scaling": ("gaussian-scaling", "simulate"),
    "simulate": ("simulate",),
    "verify": ("verify",),
    "tails": ("tails",),
    "recursion": ("recursion",),
    "fixpoint": ("fixpoint",),
}


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value configuration file")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--format", choices=("csv", "svg", "both"), default="csv")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(
        prog="renyichaos",
        description="Renyi propagation-of-chaos experiments for mean-field particle systems.",
        parents=[common],
    )
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "gaussian": "closed-form Renyi, KL, Fisher and W2 sweeps",
        "scaling": "Renyi scaling sweep (exact or simulated, per config)",
        "simulate": "MALA simulation plus plug-in Renyi estimates",
        "verify": "all closed-form inequality checks",
        "tails": "change-of-measure tail checks",
        "recursion": "KL recursion and coefficient-product checks",
        "fixpoint": "mean-field fixed point",
    }
    for name, text in helps.items():
        sub.add_parser(name, help=text, parents=[common])
    return p


def load_config(command: str, path: Path | None, seed: int | None) -> ExperimentConfig:
    text = path.read_text() if path is not None else DEFAULT_DOCUMENTS[command]
    cfg = parse_config(text)
    if cfg.experiment not in ALLOWED_KINDS[command]:
        raise ConfigError(
            f"experiment {cfg.experiment!r} cannot run under '{command}' "
            f"(expected {' or '.join(ALLOWED_KINDS[command])})",
            cfg.lines.get("experiment"),
        )
    if seed is not None:
        cfg = replace(cfg, seed=seed).validate()
    return cfg


def _write_results(results, stem: Path, fmt: str) -> None:
    if fmt in ("csv", "both"):
        emit_csv(results, stem.with_suffix(".csv"))
    if fmt in ("svg", "both"):
        emit_plot(results[0], stem.with_suffix(".svg"))


def _write_reports(reports, stem: Path, fmt: str) -> int:
    if fmt == "svg":
        print("note: report output is CSV only", file=sys.stderr)
    emit_csv(reports, stem.with_suffix(".csv"))
    failed = [r for r in reports if not r.passed]
    print(f"{len(reports) - len(failed)}/{len(reports)} checks passed")
    for r in failed:
        print(r)
    return EXIT_FAIL if failed else EXIT_OK


def _summarize(res) -> None:
    line = f"{res.experiment}: {len(res.rows)} rows"
    if res.slope is not None:
        line += f", slope {res.slope:.4f} +/- {res.half_width:.4f}"
    else:
        line += ", slope undefined"
    if res.limit_estimate is not None:
        line += f", N^2 limit ~ {res.limit_estimate:.6g}"
    if res.coefficient is not None:
        line += f" (asymptotic coefficient {res.coefficient:.6g})"
    print(line)


def run(command: str, cfg: ExperimentConfig, out: Path, fmt: str) -> int:
    out.mkdir(parents=True, exist_ok=True)
    stem = out / command
    if command == "gaussian":
        results = run_gaussian_functionals(cfg)
        _write_results(results, stem, fmt)
        for r in results:
            _summarize(r)
        return EXIT_OK
    if command in ("scaling", "simulate"):
        res = run_scaling(cfg)
        _write_results([res], stem, fmt)
        _summarize(res)
        return EXIT_OK
    if command == "fixpoint":
        res = run_fixpoint(cfg)
        emit_csv(res, stem.with_suffix(".csv"))
        for r in res.rows:
            print(f"{r.experiment} = {r.value:.12g} (residual {r.stderr:.3g})")
        return EXIT_OK
    runner = {"verify": run_verify, "tails": run_tails, "recursion": run_recursion}[command]
    return _write_reports(runner(cfg), stem, fmt)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.command, args.config, args.seed)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return run(args.command, cfg, args.out, args.format)
    except (SamplerError, ConvergenceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

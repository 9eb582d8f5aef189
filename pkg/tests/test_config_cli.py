import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from renyichaos.cli import DEFAULT_DOCUMENTS, main
from renyichaos.config import ConfigError, ExperimentConfig, format_config, parse_config
from renyichaos.experiments import (
    ScalingResult,
    ScalingRow,
    emit_csv,
    read_reports_csv,
    read_scaling_csv,
    run_gaussian_functionals,
    run_scaling,
)
from renyichaos.fitting import fit_loglog_slope
from renyichaos.plot import emit_plot
from renyichaos.reports import VerificationReport

MINIMAL = "experiment = gaussian-scaling\nlambda = 1\nk = 1\nq = 2\nd = 1\ngrid = geometric 64 4096 2\n"


# ---------------------------------------------------------------- config


def test_minimal_document():
    cfg = parse_config(MINIMAL)
    assert cfg.grid == (64, 128, 256, 512, 1024, 2048, 4096)
    assert cfg.lam == 1.0 and cfg.burn_in == 10_000 and cfg.thinning == 10


def test_comments_blank_lines_and_explicit_lists():
    cfg = parse_config("# header\n\nexperiment = tails  # inline\ngrid = 3, 8 32\nradii = 0 1.5,2\n")
    assert cfg.grid == (3, 8, 32) and cfg.radii == (0.0, 1.5, 2.0)


@pytest.mark.parametrize(
    "doc,line,fragment",
    [
        ("experiment = verify\nbogus = 1\n", 2, "unknown key"),
        ("experiment = verify\nq = 2\nq = 3\n", 3, "first set on line 2"),
        ("experiment = verify\nd = 1.5\n", 2, "integer"),
        ("experiment = verify\nadapt = maybe\n", 2, "boolean"),
        ("experiment = verify\nno equals sign\n", 2, "key = value"),
        ("experiment = verify\n\nq = 0.5\n", 3, "q"),
        ("experiment = gaussian-scaling\ngrid = 64, 32, 128, 256\n", 2, "increasing"),
        ("experiment = gaussian-scaling\ngrid = 64, 128, 256\n", 2, "at least 4"),
        ("experiment = nonsense\n", 1, "unknown kind"),
    ],
)
def test_config_errors_carry_line_numbers(doc, line, fragment):
    with pytest.raises(ConfigError) as exc:
        parse_config(doc)
    assert exc.value.line == line
    assert fragment in str(exc.value)
    assert str(exc.value).startswith(f"line {line}:")


def test_duplicate_names_key_and_both_lines():
    with pytest.raises(ConfigError) as exc:
        parse_config("experiment = verify\nlambda = 1\n# x\nlambda = 2\n")
    msg = str(exc.value)
    assert "'lambda'" in msg and "line 4" in msg and "line 2" in msg


def test_below_threshold_grid_is_accepted_and_flagged():
    cfg = parse_config("experiment = gaussian-scaling\nlambda = 2\nk = 3\nq = 4\ngrid = 3, 8, 16, 32, 64\n")
    res = run_scaling(cfg)
    assert [r.divergent for r in res.rows][:2] == [True, True]
    assert not res.rows[-1].divergent


def test_format_roundtrip():
    cfg = parse_config(MINIMAL + "seed = 17\nradii = 0, 0.5\n")
    again = parse_config(format_config(cfg))
    assert again == cfg


# ---------------------------------------------------------------- slope fitting


def test_fit_examples():
    x = np.array([64.0, 128, 256, 512, 1024, 2048, 4096])
    assert fit_loglog_slope(zip(x, x**-2.0))[0] == pytest.approx(-2.0)
    assert fit_loglog_slope(zip(x, np.full(7, 3.0)))[0] == pytest.approx(0.0, abs=1e-12)
    s, _ = fit_loglog_slope(zip(x, 0.125 / x**2 + 1 / x**3))
    assert -2.05 <= s <= -1.95
    with pytest.raises(ValueError):
        fit_loglog_slope([(1, 1), (2, 2), (3, 0), (4, 4)])


def test_fit_half_width_from_slope_stderr():
    gen = np.random.default_rng(0)
    x = np.geomspace(10, 1e4, 12)
    y = x**-1.5 * np.exp(gen.normal(scale=0.05, size=12))
    s, hw = fit_loglog_slope(zip(x, y))
    # independent OLS oracle
    X = np.column_stack([np.ones(12), np.log(x)])
    beta, res, *_ = np.linalg.lstsq(X, np.log(y), rcond=None)
    se = math.sqrt(res[0] / 10 * np.linalg.inv(X.T @ X)[1, 1])
    assert s == pytest.approx(beta[1], rel=1e-10)
    from scipy import stats

    assert hw == pytest.approx(stats.t.ppf(0.975, 10) * se, rel=1e-8)


# ---------------------------------------------------------------- scaling runs


def test_no_interaction_is_exactly_zero():
    res = run_scaling(parse_config(MINIMAL.replace("lambda = 1", "lambda = 0")))
    assert all(r.value == 0.0 for r in res.rows)
    assert res.slope is None and res.limit_estimate is None


def test_d_sweep_is_linear():
    cfg = parse_config("experiment = gaussian-scaling\nsweep = d\nN = 50\nk = 2\nq = 2\ngrid = 1, 2, 3, 5, 8\n")
    res = run_scaling(cfg)
    base = res.rows[0].value
    for r in res.rows:
        assert r.value == pytest.approx(r.d * base, rel=1e-12)
    assert res.slope == pytest.approx(1.0, abs=1e-10)


def test_workers_do_not_change_rows():
    cfg = parse_config(MINIMAL)
    assert run_scaling(cfg, workers=4).rows == run_scaling(cfg, workers=1).rows


def test_functionals_rows():
    results = run_gaussian_functionals(parse_config(MINIMAL))
    assert [r.experiment for r in results] == ["renyi-exact", "kl-exact", "fisher-exact", "w2-exact"]
    assert results[3].slope == pytest.approx(-1.0, abs=0.05)


# ---------------------------------------------------------------- CSV


def test_csv_header_only(tmp_path):
    p = emit_csv(ScalingResult("x", "N", []), tmp_path / "a.csv")
    assert p.read_text() == "experiment,d,k,q,lambda,N,value,stderr,divergent\n"


row_st = st.builds(
    ScalingRow,
    experiment=st.sampled_from(["renyi-exact", "renyi-plugin", "kl-exact"]),
    d=st.integers(1, 100),
    k=st.integers(1, 10),
    q=st.floats(1.0001, 50, allow_nan=False),
    lam=st.floats(0, 10),
    N=st.integers(2, 10**6),
    value=st.one_of(st.floats(0, 1e6), st.just(math.inf)),
    stderr=st.floats(0, 10),
    divergent=st.booleans(),
)


@settings(max_examples=100, deadline=None)
@given(rows=st.lists(row_st, max_size=8))
def test_csv_roundtrip(rows, tmp_path_factory):
    path = tmp_path_factory.mktemp("csv") / "r.csv"
    emit_csv(ScalingResult("x", "N", rows), path)
    assert read_scaling_csv(path) == rows


def test_report_csv_roundtrip(tmp_path):
    reps = [VerificationReport("a", 0.1, 0.3), VerificationReport("b", 2.0, 1.0), VerificationReport("c", 1.0, math.inf)]
    emit_csv(reps, tmp_path / "r.csv")
    text = (tmp_path / "r.csv").read_text().splitlines()
    assert text[0] == "lemma,lhs,rhs,slack,pass"
    assert text[2].endswith(",0") and text[3] == "c,1,inf,inf,1"
    back = read_reports_csv(tmp_path / "r.csv")
    assert back[0] == ("a", 0.1, 0.3, 0.3 - 0.1, True)


# ---------------------------------------------------------------- SVG


def test_svg_structure(tmp_path):
    cfg = parse_config("experiment = gaussian-scaling\nlambda = 2\nk = 3\nq = 4\ngrid = 3, 8, 32, 64, 128, 256, 512\n")
    res = run_scaling(cfg)
    svg = emit_plot(res, tmp_path / "p.svg").read_text()
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    for cls in ('class="data"', 'class="fit"', 'class="reference"', 'class="note"'):
        assert cls in svg
    assert "divergent at N = 3, 8" in svg
    data = [l for l in svg.splitlines() if 'class="data"' in l][0]
    assert data.count(",") == sum(not r.divergent for r in res.rows)
    emit_plot(res, tmp_path / "q.svg")
    assert (tmp_path / "q.svg").read_bytes() == (tmp_path / "p.svg").read_bytes()


def test_svg_needs_two_rows(tmp_path):
    res = ScalingResult("x", "N", [ScalingRow("x", 1, 1, 2.0, 1.0, 3, math.inf, 0.0, True),
                                   ScalingRow("x", 1, 1, 2.0, 1.0, 4, 0.1, 0.0, False)])
    with pytest.raises(ValueError):
        emit_plot(res, tmp_path / "p.svg")


# ---------------------------------------------------------------- CLI


def run_cli(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


FAST = {
    "gaussian": None,
    "scaling": None,
    "simulate": (
        "experiment = simulate\nlambda = 1\ngrid = 3, 4, 6, 8\nchains = 2\nburn_in = 300\n"
        "steps = 2000\nthinning = 2\nstep_size = 0.3\n"
    ),
    "verify": "experiment = verify\nsweep_configs = 20\ngrid = 8, 32, 128\n",
    "tails": None,
    "recursion": None,
    "fixpoint": None,
}


@pytest.mark.parametrize("command", sorted(FAST))
def test_each_subcommand_is_deterministic(command, tmp_path):
    args = [command, "--format", "csv"]
    if FAST[command]:
        cfg = tmp_path / "c.cfg"
        cfg.write_text(FAST[command])
        args += ["--config", str(cfg)]
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out", str(a), "--seed", "5"]) == 0
    assert main(args + ["--out", str(b), "--seed", "5"]) == 0
    assert (a / f"{command}.csv").read_bytes() == (b / f"{command}.csv").read_bytes()


def test_cli_svg_and_both(tmp_path):
    assert run_cli(tmp_path, "gaussian", "--format", "both") == 0
    assert (tmp_path / "gaussian.csv").exists() and (tmp_path / "gaussian.svg").exists()


def test_cli_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("experiment = verify\nwhat = 1\n")
    assert run_cli(tmp_path, "verify", "--config", str(bad)) == 2
    assert "line 2" in capsys.readouterr().err
    assert run_cli(tmp_path, "verify", "--config", str(tmp_path / "missing.cfg")) == 2
    wrong = tmp_path / "w.cfg"
    wrong.write_text(DEFAULT_DOCUMENTS["verify"])
    assert run_cli(tmp_path, "tails", "--config", str(wrong)) == 2


def test_cli_usage_error_exit_code(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_verify_exit_code_tracks_failures(tmp_path, monkeypatch):
    import renyichaos.cli as cli

    assert run_cli(tmp_path, "recursion") == 0
    monkeypatch.setattr(cli, "run_recursion", lambda cfg: [VerificationReport("bad", 2.0, 1.0)])
    assert run_cli(tmp_path, "recursion") == 1


def test_cli_runtime_error_exit_code(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("experiment = fixpoint\nlambda = 1\nperturbation_amplitude = 0.1\nmax_iter = 2\ntol = 1e-300\n")
    assert run_cli(tmp_path, "fixpoint", "--config", str(cfg)) == 3
    cfg.write_text("experiment = gaussian-scaling\nlambda = 2\nk = 3\nq = 4\ngrid = 3, 4, 5, 6\n")
    assert run_cli(tmp_path, "scaling", "--config", str(cfg)) == 3

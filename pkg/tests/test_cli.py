import math
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rough_em import cli
from rough_em.cli import ConfigError, ExitCode, ExperimentConfig, dump_config, emit_plotdata, parse_config
from rough_em.integrator import CSV_HEADER
from rough_em.modulus import Power
from rough_em.rates import RateReport


def _report(deltas, errors):
    return RateReport("m", list(range(len(deltas))), list(deltas), list(errors), [0.0] * len(deltas),
                      10, 20, "em", 0.0, 0.0, 0)


def _write(tmp_path, text, name="exp.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def _read_rows(path):
    lines = path.read_text().splitlines()
    return lines, np.array([[float(v) for v in ln.split()] for ln in lines if ln and ln[0] in "-0123456789"])


def test_plotdata_log_mode(tmp_path):
    d = [2.0 ** -j for j in range(3, 8)]
    rep = _report(d, d)
    rep.attach_bound([x ** 0.5 for x in d], "power:0.5")
    out = emit_plotdata(rep, tmp_path / "r")
    assert out.mode == "log2" and out.notice is None
    lines, rows = _read_rows(out.paths[0])
    assert lines[0] == CSV_HEADER
    np.testing.assert_allclose(rows[:, 1], rows[:, 0])
    _, brows = _read_rows(out.paths[1])
    np.testing.assert_allclose(brows[:, 1], 0.5 * brows[:, 0], rtol=1e-14)


def test_plotdata_linear_fallback(tmp_path):
    rep = _report([0.5, 0.25], [0.0, 0.0])
    out = emit_plotdata(rep, tmp_path / "z")
    assert out.mode == "linear" and "linear" in out.notice
    lines, rows = _read_rows(out.paths[0])
    assert "# mode: linear" in lines
    np.testing.assert_array_equal(rows, [[0.5, 0.0], [0.25, 0.0]])
    assert len(out.paths) == 1


def test_run_rate_zero_model(tmp_path):
    cfg = parse_config(f"[run]\ncommand = rate\nseed = 42\nout = {tmp_path}/zero\n"
                       "[model]\nname = zero\n[study]\nlevels = 2..5\nreference_level = 8\npaths = 40\n")
    code, summary = cli.run(cfg)
    assert code == ExitCode.OK
    rows = (tmp_path / "zero.rate.csv").read_text().splitlines()[2:]
    assert len(rows) == 4
    assert all(float(r.split(",")[2]) <= 1e-12 for r in rows)
    assert (tmp_path / "zero.summary.txt").read_text().strip().endswith("PASS")
    assert (tmp_path / "zero.plot.dat").exists()


def test_constants_command(tmp_path):
    cfg = ExperimentConfig(command="constants", model="zero", out=str(tmp_path / "c"))
    code, summary = cli.run(cfg)
    assert code == ExitCode.OK
    assert "Lambda\t1\n" in summary and "lambda_min\t4\n" in summary


def test_rate_reruns_are_byte_identical(tmp_path):
    text = ("[run]\ncommand = rate\nseed = 42\n[model]\nname = ou\n"
            "[study]\nlevels = 3..5\nreference_level = 8\npaths = 300\n")
    outs = []
    for i, threads in enumerate((1, 2)):
        cfg = parse_config(text)
        cfg.out = str(tmp_path / f"ou{i}")
        assert cli.run(cfg, threads=threads)[0] == ExitCode.OK
        outs.append((tmp_path / f"ou{i}.rate.csv").read_bytes())
    assert outs[0] == outs[1]


def test_envelope_and_slope_checks(tmp_path):
    base = (f"[run]\nout = {tmp_path}/h\n[model]\nname = holder\nbeta = 0.5\n"
            "[study]\nlevels = 3..6\nreference_level = 9\npaths = 200\nbound = phi:power:0.5\n")
    code, summary = cli.run(parse_config(base))
    assert "envelope" in summary
    assert code == ExitCode.OK
    code, summary = cli.run(parse_config(base + "slope_min = 5\n"))
    assert code == ExitCode.CHECK_FAILED
    assert "check\tslope-range\tFAIL" in summary


def test_validation_failure_code(tmp_path):
    cfg = ExperimentConfig(command="validate", model="holder", out=str(tmp_path / "v"))
    assert cli.run(cfg)[0] == ExitCode.OK
    # the catalog rejects out-of-range parameters as configuration errors
    cfg = ExperimentConfig(command="validate", model="holder", model_params={"beta": 2.0},
                           out=str(tmp_path / "v"))
    assert cli.run(cfg)[0] == ExitCode.CONFIG_ERROR


def test_validation_failure_exit_code(tmp_path, monkeypatch):
    from rough_em import models

    def failing(model, n_samples=0, seed=0, tol=1e-8):
        return models.ValidationReport(model.name, [models.CheckResult("forced", 2.0, 1.0, False)])

    monkeypatch.setattr(models, "validate_model", failing)
    cfg = ExperimentConfig(command="rate", model="zero", out=str(tmp_path / "f"))
    code, text = cli.run(cfg)
    assert code == ExitCode.VALIDATION_FAILED and "forced" in text


def test_divergence_exit_code(tmp_path):
    cfg = parse_config(f"[run]\nout = {tmp_path}/d\n[model]\nname = ou\nT = 1e6\n"
                       "[study]\nlevels = 0,1\nreference_level = 2\npaths = 4\nx0 = 1e300\n")
    code, text = cli.run(cfg)
    assert code == ExitCode.DIVERGENCE and "divergence" in text


def test_kolmogorov_and_bismut_commands(tmp_path):
    cfg = parse_config(f"[run]\ncommand = kolmogorov\nout = {tmp_path}/k\n[model]\nname = holder\n"
                       "[kolmogorov]\ndx = 0.015625\nwindow = 4\n")
    code, summary = cli.run(cfg)
    assert code == ExitCode.OK, summary
    header = (tmp_path / "k.kolmogorov.csv").read_text().splitlines()[:2]
    assert header == [CSV_HEADER, "t,x,u,du"]
    cfg = parse_config(f"[run]\ncommand = bismut\nout = {tmp_path}/b\n[model]\nname = zero\n"
                       "[bismut]\nfunction = square\nx = 1\nexpected = 2\npaths = 20000\n")
    code, summary = cli.run(cfg)
    assert code == ExitCode.OK, summary


def test_moment_check_needs_bounded_model(tmp_path):
    cfg = ExperimentConfig(command="moment-check", model="ou", out=str(tmp_path / "m"))
    assert cli.run(cfg)[0] == ExitCode.CONFIG_ERROR


def test_catalog_command(tmp_path):
    code, summary = cli.run(ExperimentConfig(command="catalog", out=str(tmp_path / "cat")))
    assert code == ExitCode.OK
    assert "log-dini" in summary


@pytest.mark.parametrize("text, where", [
    ("[run]\ncommand = rat\n", "[run] command"),
    ("[model]\nname = nope\n", "[model] name"),
    ("[study]\nlevels = 4,3\n", "[study] levels"),
    ("[study]\nlevels = 3..5\nreference_level = 5\n", "[study] reference_level"),
    ("[study]\npaths = many\n", "[study] paths"),
    ("[study]\nbound = cubic:1\n", "[study] bound"),
    ("[study]\ncolour = red\n", "[study] colour"),
    ("[extra]\nx = 1\n", "[extra]"),
    ("[study\nlevels = 1\n", "line 1"),
])
def test_config_errors_name_the_field(text, where):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert where in str(info.value)


def test_main_exit_codes(tmp_path, capsys, clean_thread_env):
    bad = _write(tmp_path, "[run]\ncommand = rate\n[study]\nlevels = 3,2\n")
    assert cli.main(["--config", str(bad)]) == ExitCode.CONFIG_ERROR
    assert cli.main(["--config", str(tmp_path / "missing.ini")]) == ExitCode.CONFIG_ERROR
    good = _write(tmp_path, "[model]\nname = zero\n")
    assert cli.main(["constants", "--config", str(good), "--out", str(tmp_path / "o")]) == 0
    assert "lambda_min" in capsys.readouterr().out


def test_dump_config_round_trip_via_main(tmp_path, capsys, clean_thread_env):
    src = _write(tmp_path, "[run]\ncommand = moment-check\n[model]\nname = holder\nbeta = 0.25\n"
                           "center = 0.5\n[study]\nlevels = 4..7\ncutoff = 3\nx0 = 0.1\n")
    assert cli.main(["--config", str(src), "--seed", "9", "--dump-config"]) == 0
    dumped = capsys.readouterr().out
    again = parse_config(dumped)
    assert again == parse_config(src.read_text().replace("[run]\n", "[run]\nseed = 9\n"))
    assert again.seed == 9 and again.levels == (4, 5, 6, 7)


def test_thread_precedence(monkeypatch):
    cfg = ExperimentConfig(threads=2)
    monkeypatch.delenv("ROUGH_EM_THREADS", raising=False)
    assert cli._effective_threads(None, cfg) == 2
    monkeypatch.setenv("ROUGH_EM_THREADS", "5")
    assert cli._effective_threads(None, cfg) == 5
    assert cli._effective_threads(3, cfg) == 3


_names = st.sampled_from(["zero", "ou", "holder", "log-dini", "kinetic", "kinetic-rough"])
_floats = st.floats(-1e6, 1e6, allow_nan=False).filter(lambda v: v != 0 or math.copysign(1, v) > 0)


@settings(max_examples=60, deadline=None)
@given(command=st.sampled_from(cli.COMMANDS), model=_names,
       start=st.integers(0, 10), count=st.integers(1, 6), extra=st.integers(1, 6),
       M=st.integers(2, 10**6), seed=st.integers(0, 2**31), threads=st.none() | st.integers(1, 64),
       x0=st.none() | st.lists(_floats, min_size=1, max_size=3).map(tuple),
       cutoff=st.none() | st.floats(0.1, 100), lam=st.none() | st.floats(1e-3, 1e6),
       beta=st.floats(0.05, 1.0), bound=st.sampled_from([None, "phi:power:0.5", "cutoff-log:0.25"]),
       expected=st.none() | _floats, monotone=st.booleans())
def test_dump_parse_round_trip(command, model, start, count, extra, M, seed, threads, x0, cutoff,
                               lam, beta, bound, expected, monotone):
    levels = tuple(range(start, start + count))
    cfg = ExperimentConfig(command=command, model=model, model_params={"beta": beta, "n": 1},
                           seed=seed, threads=threads, levels=levels,
                           reference_level=levels[-1] + extra, M=M, x0=x0, cutoff=cutoff, lam=lam,
                           bound=bound, expected=expected, require_monotone=monotone)
    assert parse_config(dump_config(cfg)) == cfg


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "rough_em", "constants", "--out", str(tmp_path / "x")],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert "Lambda_tilde" in res.stdout

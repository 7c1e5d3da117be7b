"""Batch experiment runner: ``rough-em-lab <command> --config study.ini``.

Configuration is a flat INI file with the sections ``[run]``, ``[model]``,
``[study]``, ``[kolmogorov]`` and ``[bismut]``.  Every run writes its CSV
artifacts and a ``<out>.summary.txt`` file, and prints the summary.

Exit codes
    0  every embedded check passed
    1  an embedded check failed
    2  configuration error
    3  model validation failure
    4  divergence (non-finite EM state or a non-contracting Picard iteration)
"""

from __future__ import annotations

import argparse
import configparser
import enum
import io
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import kolmogorov, models, rates
from ._parallel import THREADS_ENV
from .cutoff import cutoff_model
from .integrator import CSV_HEADER, DivergenceError, one_step_moment_check
from .modulus import check_claims, parse_modulus

COMMANDS = ("rate", "rate-degenerate", "moment-check", "bismut", "kolmogorov", "constants",
            "validate", "catalog")
TEST_FUNCTIONS = {
    "identity": lambda y: y[..., 0],
    "square": lambda y: y[..., 0] ** 2,
    "sin": lambda y: np.sin(y[..., 0]),
    "cos": lambda y: np.cos(y[..., 0]),
    "tanh": lambda y: np.tanh(y[..., 0]),
}


class ExitCode(enum.IntEnum):
    OK = 0
    CHECK_FAILED = 1
    CONFIG_ERROR = 2
    VALIDATION_FAILED = 3
    DIVERGENCE = 4


class ConfigError(ValueError):
    """Bad configuration; the message names the offending section and key."""


@dataclass
class ExperimentConfig:
    command: str = "rate"
    model: str = "zero"
    model_params: dict = field(default_factory=dict)
    seed: int = 0
    threads: int | None = None
    out: str = "rough-em"
    # [study]
    levels: tuple = (6, 7, 8, 9, 10)
    reference_level: int = 16
    M: int = 1000
    x0: tuple | None = None
    reference: str = "auto"
    cutoff: float | None = None
    bound: str | None = None
    bound_C: float = 1.0
    envelope_tol: float = 0.05
    slope_min: float | None = None
    slope_max: float | None = None
    require_monotone: bool = False
    moment_tol: float = 0.1
    # [kolmogorov]
    lam: float | None = None
    n_time: int = 64
    dx: float = 2.0 ** -9
    window: float = 8.0
    # [bismut]
    s: float = 0.0
    t: float | None = None
    x: tuple = (0.0,)
    eta: tuple = (1.0,)
    test_function: str = "identity"
    expected: float | None = None
    bismut_M: int = 100_000
    bismut_steps: int = 256

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"[run] command: unknown command {self.command!r}; "
                              f"choose one of {', '.join(COMMANDS)}")
        if self.command != "catalog" and self.model not in models.CATALOG_NAMES:
            raise ConfigError(f"[model] name: unknown model {self.model!r}; "
                              f"known: {', '.join(models.CATALOG_NAMES)}")
        if not self.levels or any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise ConfigError("[study] levels: must be strictly increasing")
        if self.command in ("rate", "rate-degenerate") and self.reference_level <= self.levels[-1]:
            raise ConfigError("[study] reference_level: must exceed every scheme level")
        if self.reference not in ("auto", "em", "exact"):
            raise ConfigError("[study] reference: expected auto, em or exact")
        if self.M < 2:
            raise ConfigError("[study] paths: need at least two paths")
        if self.threads is not None and self.threads < 1:
            raise ConfigError("[run] threads: must be at least 1")
        if self.test_function not in TEST_FUNCTIONS:
            raise ConfigError(f"[bismut] function: unknown test function {self.test_function!r}")
        if self.bound is not None:
            try:
                _bound_kind(self.bound)
            except ValueError as exc:
                raise ConfigError(f"[study] bound: {exc}") from None


# -- config file I/O ---------------------------------------------------------------

# (section, key, attribute, kind)
_LAYOUT = (
    ("run", "command", "command", "str"),
    ("run", "seed", "seed", "int"),
    ("run", "threads", "threads", "int?"),
    ("run", "out", "out", "str"),
    ("study", "levels", "levels", "ints"),
    ("study", "reference_level", "reference_level", "int"),
    ("study", "paths", "M", "int"),
    ("study", "x0", "x0", "floats?"),
    ("study", "reference", "reference", "str"),
    ("study", "cutoff", "cutoff", "float?"),
    ("study", "bound", "bound", "str?"),
    ("study", "bound_constant", "bound_C", "float"),
    ("study", "envelope_tol", "envelope_tol", "float"),
    ("study", "slope_min", "slope_min", "float?"),
    ("study", "slope_max", "slope_max", "float?"),
    ("study", "require_monotone", "require_monotone", "bool"),
    ("study", "moment_tol", "moment_tol", "float"),
    ("kolmogorov", "lambda", "lam", "float?"),
    ("kolmogorov", "n_time", "n_time", "int"),
    ("kolmogorov", "dx", "dx", "float"),
    ("kolmogorov", "window", "window", "float"),
    ("bismut", "s", "s", "float"),
    ("bismut", "t", "t", "float?"),
    ("bismut", "x", "x", "floats"),
    ("bismut", "eta", "eta", "floats"),
    ("bismut", "function", "test_function", "str"),
    ("bismut", "expected", "expected", "float?"),
    ("bismut", "paths", "bismut_M", "int"),
    ("bismut", "steps", "bismut_steps", "int"),
)
_SECTIONS = ("run", "model", "study", "kolmogorov", "bismut")


def _convert(kind: str, text: str):
    base = kind.rstrip("?")
    if kind.endswith("?") and text.strip().lower() in ("", "none"):
        return None
    if base == "str":
        return text.strip()
    if base == "int":
        return int(text)
    if base == "float":
        return float(text)
    if base == "bool":
        low = text.strip().lower()
        if low not in ("true", "false", "yes", "no", "1", "0"):
            raise ValueError(f"expected a boolean, got {text!r}")
        return low in ("true", "yes", "1")
    if base == "ints":
        return tuple(_int_list(text))
    return tuple(float(v) for v in text.split(","))


def _int_list(text: str):
    """``6,7,8`` or the inclusive range ``6..10``."""
    text = text.strip()
    if ".." in text:
        a, b = text.split("..")
        return list(range(int(a), int(b) + 1))
    return [int(v) for v in text.split(",")]


def _format(kind: str, value) -> str:
    if value is None:
        return "none"
    base = kind.rstrip("?")
    if base in ("ints", "floats"):
        return ",".join(repr(v) for v in value)
    if base == "bool":
        return "true" if value else "false"
    return repr(value) if base == "float" else str(value)


def _param_value(text: str):
    text = text.strip()
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    if "," in text:
        return tuple(float(v) for v in text.split(","))
    raise ValueError(f"not a number or number list: {text!r}")


def parse_config(text: str) -> ExperimentConfig:
    """Parse INI text; raises ConfigError naming the section/key or line at fault."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        where = f"line {line}" if line is not None else "config syntax"
        first = str(exc).splitlines()[0]
        raise ConfigError(f"{where}: {first}") from None
    for sec in cp.sections():
        if sec not in _SECTIONS:
            raise ConfigError(f"[{sec}]: unknown section; expected one of {', '.join(_SECTIONS)}")
    values = {}
    known = {(s, k) for s, k, _, _ in _LAYOUT}
    for sec in cp.sections():
        if sec == "model":
            continue
        for key in cp[sec]:
            if (sec, key) not in known:
                raise ConfigError(f"[{sec}] {key}: unknown key")
    for sec, key, attr, kind in _LAYOUT:
        if cp.has_option(sec, key):
            raw = cp.get(sec, key)
            try:
                values[attr] = _convert(kind, raw)
            except ValueError as exc:
                raise ConfigError(f"[{sec}] {key}: {exc}") from None
    params = {}
    if cp.has_section("model"):
        for key, raw in cp["model"].items():
            if key == "name":
                values["model"] = raw.strip()
                continue
            try:
                params[key] = _param_value(raw)
            except ValueError as exc:
                raise ConfigError(f"[model] {key}: {exc}") from None
    values["model_params"] = params
    cfg = ExperimentConfig(**values)
    cfg.validate()
    return cfg


def dump_config(cfg: ExperimentConfig) -> str:
    """Canonical INI text; ``parse_config(dump_config(c)) == c``."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    for sec in _SECTIONS:
        cp.add_section(sec)
    cp.set("model", "name", cfg.model)
    for key, value in sorted(cfg.model_params.items()):
        text = ",".join(repr(float(v)) for v in value) if isinstance(value, tuple) else repr(value)
        cp.set("model", key, text)
    for sec, key, attr, kind in _LAYOUT:
        cp.set(sec, key, _format(kind, getattr(cfg, attr)))
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


# -- plot data --------------------------------------------------------------------

class PlotData(NamedTuple):
    paths: list
    mode: str          # "log2" or "linear"
    notice: str | None


def emit_plotdata(report: rates.RateReport, prefix) -> PlotData:
    """Write ``<prefix>.plot.dat`` (delta vs error) and, with a bound, ``<prefix>.bound.dat``.

    Columns are log2 values unless some error is non-positive, in which case
    both files switch to linear columns and a notice is returned.
    """
    prefix = str(prefix)
    deltas = np.asarray(report.deltas, dtype=float)
    errors = np.asarray(report.errors, dtype=float)
    bounds = None if not report.bound_values else np.asarray(report.bound_values, dtype=float)
    if np.all(errors > 0):
        mode, notice = "log2", None
        cols = (np.log2(deltas), np.log2(errors))
        names = "log2_delta log2_error"
        bcols = None if bounds is None else (np.log2(deltas), np.log2(bounds))
        bnames = "log2_delta log2_bound"
    else:
        mode = "linear"
        notice = "non-positive errors: log2 columns undefined, plot data written in linear mode"
        cols = (deltas, errors)
        names = "delta error"
        bcols = None if bounds is None else (deltas, bounds)
        bnames = "delta bound"
    out = [Path(prefix + ".plot.dat")]
    header = f"{CSV_HEADER}\n# mode: {mode}\n{names}"
    np.savetxt(out[0], np.column_stack(cols), fmt="%.17g", header=header, comments="")
    if bcols is not None:
        out.append(Path(prefix + ".bound.dat"))
        bheader = f"{CSV_HEADER}\n# mode: {mode}\n# bound: {report.bound_label}\n{bnames}"
        np.savetxt(out[1], np.column_stack(bcols), fmt="%.17g", header=bheader, comments="")
    return PlotData(out, mode, notice)


def _bound_kind(text: str):
    """``phi:<modulus>`` for phi(C sqrt(delta))^2, or ``cutoff-log:<alpha>``."""
    kind, _, rest = text.partition(":")
    if kind == "phi":
        return kind, parse_modulus(rest)
    if kind == "cutoff-log":
        alpha = float(rest)
        if not 0 < alpha <= 0.5:
            raise ValueError("alpha must lie in (0, 1/2]")
        return kind, alpha
    raise ValueError(f"unknown bound form {text!r}; use phi:<modulus> or cutoff-log:<alpha>")


# -- runner -----------------------------------------------------------------------

class _Failure(Exception):
    def __init__(self, code: ExitCode, message: str):
        super().__init__(message)
        self.code = code


def _build_model(cfg: ExperimentConfig, n_samples: int = 256):
    try:
        model = models.make_catalog_model(cfg.model, cfg.model_params, validate=False)
        if cfg.cutoff is not None:
            model = cutoff_model(model, cfg.cutoff)
    except (models.CatalogError, ValueError, TypeError) as exc:
        raise _Failure(ExitCode.CONFIG_ERROR, f"[model]: {exc}") from None
    report = models.validate_model(model, n_samples=n_samples, seed=cfg.seed)
    if not report.passed:
        raise _Failure(ExitCode.VALIDATION_FAILED, report.to_text())
    return model, report


def _checks_text(checks) -> str:
    return "\n".join(f"check\t{name}\t{'PASS' if ok else 'FAIL'}" for name, ok in checks)


def _run_rate(cfg, model, threads, prefix):
    degenerate = cfg.command == "rate-degenerate"
    if degenerate != model.degenerate:
        want = "a degenerate" if degenerate else "a non-degenerate"
        raise _Failure(ExitCode.CONFIG_ERROR, f"[run] command: {cfg.command} needs {want} model")
    reference = cfg.reference
    if reference == "auto":
        reference = "exact" if getattr(model, "exact_fn", None) is not None else "em"
    try:
        study = rates.RateStudy(model, cfg.levels, cfg.reference_level, cfg.M, cfg.seed, cfg.x0,
                                reference)
    except ValueError as exc:
        raise _Failure(ExitCode.CONFIG_ERROR, f"[study]: {exc}") from None
    report = rates.strong_error(study, threads=threads)
    checks = [("reference-resolved", not report.reference_limited)]
    if cfg.bound is not None:
        kind, arg = _bound_kind(cfg.bound)
        if kind == "phi":
            values = rates.bound_curve_thm11(arg, cfg.bound_C, report.deltas).values
            label = f"{arg.describe()}(C sqrt(delta))^2, C={cfg.bound_C:g}"
        else:
            try:
                values = rates.bound_curve_thm13_values(arg, report.deltas)
            except ValueError as exc:
                raise _Failure(ExitCode.CONFIG_ERROR, f"[study] bound: {exc}") from None
            label = f"cutoff-log alpha={arg:g}"
        env = report.attach_bound(values, label, cfg.envelope_tol)
        checks.append(("envelope", env.passed))
    if cfg.slope_min is not None or cfg.slope_max is not None:
        lo = -math.inf if cfg.slope_min is None else cfg.slope_min
        hi = math.inf if cfg.slope_max is None else cfg.slope_max
        checks.append(("slope-range", report.fit is not None and lo <= report.slope <= hi))
    if cfg.require_monotone:
        checks.append(("monotone", report.monotone))
    report.to_csv(prefix + ".rate.csv")
    plot = emit_plotdata(report, prefix)
    text = report.summary_text()
    if plot.notice:
        text += f"\nnotice\t{plot.notice}"
    return text, checks


def _run_moments(cfg, model, threads, prefix):
    rep = one_step_moment_check(model, cfg.levels, M=cfg.M, seed=cfg.seed, x0=cfg.x0,
                                tol=cfg.moment_tol, threads=threads)
    with open(prefix + ".moments.csv", "w") as fh:
        fh.write(f"{CSV_HEADER}\nlevel,delta,sup_mean_sq_step,stderr\n")
        for row in zip(rep.levels, rep.deltas, rep.sup_means, rep.stderrs):
            fh.write("%d,%.17g,%.17g,%.17g\n" % row)
    return rep.to_text(), [("slope", rep.passed)]


def _run_bismut(cfg, model, prefix):
    if model.degenerate:
        raise _Failure(ExitCode.CONFIG_ERROR, "[model] name: bismut needs a non-degenerate model")
    t = model.T if cfg.t is None else cfg.t
    f = TEST_FUNCTIONS[cfg.test_function]
    x = np.broadcast_to(np.asarray(cfg.x, dtype=float), (model.n,))
    eta = np.broadcast_to(np.asarray(cfg.eta, dtype=float), (model.n,))
    try:
        gb = kolmogorov.gradient_bound_check(model, cfg.s, t, f, x, eta, M=cfg.bismut_M,
                                             seed=cfg.seed, steps=cfg.bismut_steps)
    except ValueError as exc:
        raise _Failure(ExitCode.CONFIG_ERROR, f"[bismut]: {exc}") from None
    est = gb.estimate
    lines = [f"model\t{model.name}", f"function\t{cfg.test_function}",
             f"gradient\t{est.value:.10g}\t+-{est.stderr:.3g}\tpaths={est.n_paths}",
             f"bound\t|grad|^2={est.value ** 2:.6g}\t<=\t{gb.bound:.6g}"]
    checks = [("gradient-bound", gb.passed)]
    if cfg.expected is not None:
        lines.append(f"expected\t{cfg.expected:.10g}")
        checks.append(("analytic-4se", est.within(cfg.expected, 4.0)))
    with open(prefix + ".bismut.csv", "w") as fh:
        fh.write(f"{CSV_HEADER}\nvalue,stderr,n_paths,second_moment,bound\n")
        fh.write(f"{est.value:.17g},{est.stderr:.17g},{est.n_paths},{gb.second_moment:.17g},"
                 f"{gb.bound:.17g}\n")
    return "\n".join(lines), checks


def _run_kolmogorov(cfg, model, prefix):
    consts = _constants(model)
    lam = consts.lambda_min if cfg.lam is None else cfg.lam
    try:
        sol = kolmogorov.solve_u_lambda(model, lam, n_time=cfg.n_time, dx=cfg.dx, window=cfg.window)
    except kolmogorov.NonContractionError as exc:
        raise _Failure(ExitCode.DIVERGENCE, str(exc)) from None
    except ValueError as exc:
        raise _Failure(ExitCode.CONFIG_ERROR, f"[kolmogorov]: {exc}") from None
    rep = kolmogorov.check_lemma21(sol, consts)
    sol.to_csv(prefix + ".kolmogorov.csv")
    ratios = sol.contraction_ratios()
    late = ratios[1:]
    text = "\n".join([f"model\t{model.name}", f"lambda\t{lam:.17g}",
                      f"iterations\t{sol.iterations}", f"converged\t{sol.converged}", rep.to_text()])
    checks = [("converged", sol.converged), ("gradient", rep.grad_ok), ("hessian", rep.hess_ok),
              ("contraction", all(r <= 0.5 for r in late))]
    return text, checks


def _constants(model):
    if model.degenerate:
        raise _Failure(ExitCode.CONFIG_ERROR, "[model] name: constants need a non-degenerate model")
    try:
        return kolmogorov.constants(model)
    except kolmogorov.MissingMetadataError as exc:
        raise _Failure(ExitCode.CONFIG_ERROR, f"[model]: {exc}") from None


def _run_catalog():
    lines, checks = [], []
    for name in models.CATALOG_NAMES:
        model = models.make_catalog_model(name, validate=False)
        meta = model.meta
        mod = getattr(meta, "spatial_modulus", None) or getattr(meta, "x1_modulus")
        lines.append(f"{name}\t{mod.describe()}")
        for rep in check_claims(mod):
            lines.append("  " + rep.to_text())
            checks.append((f"{name}:{rep.flag.name.lower()}", rep.passed))
    return "\n".join(lines), checks


def run(cfg: ExperimentConfig, threads: int | None = None) -> tuple[ExitCode, str]:
    """Execute ``cfg``; returns the exit code and the summary text (also written to disk)."""
    threads = threads or cfg.threads or 1
    prefix = cfg.out
    Path(prefix).parent.mkdir(parents=True, exist_ok=True)
    try:
        if cfg.command == "catalog":
            text, checks = _run_catalog()
        else:
            full = cfg.command == "validate"
            model, vreport = _build_model(cfg, n_samples=10_000 if full else 256)
            if full:
                text, checks = vreport.to_text(), [("validation", vreport.passed)]
            elif cfg.command in ("rate", "rate-degenerate"):
                text, checks = _run_rate(cfg, model, threads, prefix)
            elif cfg.command == "moment-check":
                if not model.degenerate and not model.meta.bounded:
                    raise _Failure(ExitCode.CONFIG_ERROR,
                                   "[model]: moment-check needs a bounded drift (set [study] cutoff)")
                text, checks = _run_moments(cfg, model, threads, prefix)
            elif cfg.command == "bismut":
                text, checks = _run_bismut(cfg, model, prefix)
            elif cfg.command == "kolmogorov":
                text, checks = _run_kolmogorov(cfg, model, prefix)
            else:
                text, checks = _constants(model).to_text(), []
    except _Failure as exc:
        return exc.code, str(exc)
    except DivergenceError as exc:
        return ExitCode.DIVERGENCE, f"divergence\t{exc}"
    ok = all(passed for _, passed in checks)
    summary = "\n".join(filter(None, [f"command\t{cfg.command}", text, _checks_text(checks),
                                      f"status\t{'PASS' if ok else 'FAIL'}"]))
    Path(prefix + ".summary.txt").write_text(summary + "\n")
    return (ExitCode.OK if ok else ExitCode.CHECK_FAILED), summary


def _effective_threads(flag: int | None, cfg: ExperimentConfig) -> int:
    if flag is not None:
        return flag
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV}: not an integer: {env!r}") from None
    return cfg.threads or 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rough-em-lab",
                                description="Euler-Maruyama rate studies for SDEs with rough drift.")
    p.add_argument("command", nargs="?", choices=COMMANDS,
                   help="overrides [run] command from the config file")
    p.add_argument("--config", type=Path, help="INI experiment file")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, help=f"worker threads (beats ${THREADS_ENV})")
    p.add_argument("--out", help="output path prefix")
    p.add_argument("--dump-config", nargs="?", const="-", metavar="PATH",
                   help="write the effective configuration (stdout by default) and exit")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = args.config.read_text() if args.config else ""
        cfg = parse_config(text)
        if args.command:
            cfg.command = args.command
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out:
            cfg.out = args.out
        if args.threads is not None:
            cfg.threads = args.threads
        cfg.validate()
        threads = _effective_threads(args.threads, cfg)
        if threads < 1:
            raise ConfigError("--threads: must be at least 1")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ExitCode.CONFIG_ERROR
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return ExitCode.CONFIG_ERROR
    if args.dump_config:
        text = dump_config(cfg)
        if args.dump_config == "-":
            sys.stdout.write(text)
        else:
            Path(args.dump_config).write_text(text)
        return ExitCode.OK
    code, summary = run(cfg, threads)
    stream = sys.stdout if code in (ExitCode.OK, ExitCode.CHECK_FAILED) else sys.stderr
    print(summary, file=stream)
    return int(code)


__all__ = ["COMMANDS", "ConfigError", "ExitCode", "ExperimentConfig", "PlotData", "build_parser",
           "dump_config", "emit_plotdata", "main", "parse_config", "run"]

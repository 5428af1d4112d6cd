"""Command-line front end: ``fwmsqueeze <mode> --config run.ini [--key=value ...]``."""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor

from . import __version__, greens, langevin, threshold
from .config import MODES, ConfigError, RunConfig, parse_config
from .params import ParameterError, ValidityWarning

UNITS_LINE = "# units: rates in gamma_a, lengths in L, c = 1; vacuum S_theta = 0.25"
EXIT_CONFIG, EXIT_RUNTIME = 2, 1


def worker_count() -> int:
    raw = os.environ.get("FWM_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise ConfigError([f"FWM_THREADS: must be a positive integer, got {raw!r}"])
    return n


def fmt(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")
    return str(value)


def _ordered_map(fn, items, workers):
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _spectrum_row(config: RunConfig, omega: float) -> dict:
    p = config.params
    row = {"omega": omega}
    try:
        row["m_abs_sq"] = abs(greens.m_function(greens.coupling_matrix(p, omega), 1.0)) ** 2
        pt = greens.spectrum_point(p, omega, config.theta)
        row.update(n1=pt.n1, n2=pt.n2, s_theta=pt.s_theta, theta=pt.theta, flag="ok")
    except greens.ThresholdSingularity:
        row.update(n1=math.nan, n2=math.nan, s_theta=math.nan, flag="diverged")
        row.setdefault("theta", math.nan)
    return row


def _squeeze_row(config: RunConfig, omega: float) -> dict:
    p = config.params
    row = {"omega": omega, "theta_formula": greens.optimal_theta(p, omega)}
    try:
        theta = config.theta if config.theta is not None else greens.best_theta(p, omega)
        row["theta"] = theta
        row["m_abs_sq"] = abs(greens.m_function(greens.coupling_matrix(p, omega), 1.0)) ** 2
        s = greens.squeezing_spectrum(p, omega, theta)
        s_opt, theta_opt = greens.optimal_squeezing(p, omega)
        row.update(s_theta=s, s_opt=s_opt, theta_opt=theta_opt, s_opt_over_sql=s_opt / greens.SQL,
                   flag="ok")
    except greens.ThresholdSingularity:
        row.update(theta=math.nan, s_theta=math.nan, s_opt=math.nan, theta_opt=math.nan,
                   s_opt_over_sql=math.nan, flag="diverged")
    return row


def _threshold_rows(config: RunConfig, workers: int):
    p = config.params
    row = {"free_variable": config.free, "condition": config.condition,
           "root_index": config.root_index,
           "oscillation_possible": threshold.oscillation_possible(p)}
    res = threshold.find_threshold(p, config.free, config.condition, config.root_index)
    row.update(value_at_threshold=res.value_at_threshold, eta_l_root=res.eta_l_root,
               residual=res.residual)
    if p.gamma_0 > 0:
        row["optimal_detuning"] = threshold.optimal_detuning(p)
        row["pre_threshold_m_sq"] = threshold.pre_threshold_saturation_point(p)
    cols = ["free_variable", "value_at_threshold", "eta_l_root", "residual", "condition",
            "root_index", "oscillation_possible", "optimal_detuning", "pre_threshold_m_sq"]
    return cols, [row]


def _mc_row(config: RunConfig, omega: float, workers: int) -> dict:
    p = config.params
    theta = config.theta if config.theta is not None else greens.best_theta(p, omega)
    n1, n2 = greens.output_spectrum(p, omega)
    s = greens.squeezing_spectrum(p, omega, theta)
    mc = langevin.mc_spectrum(p, omega, config.mc.n_samples, config.mc.seed, config.mc.n_z,
                              theta=theta, workers=workers)
    row = {"omega": omega, "theta": theta}
    for key, analytic, label in (("n1", n1, "n1"), ("n2", n2, "n2"), ("s_theta", s, "S")):
        est = mc[key]
        row[f"analytic_{label}"] = analytic
        row[f"mc_{label}"] = est.mean
        row[f"mc_{label}_stderr"] = est.std_error
        row[f"z_{label}"] = (est.mean - analytic) / est.std_error if est.std_error > 0 else 0.0
    row["mc_stderr"] = row["mc_S_stderr"]
    row["n_samples"] = mc["s_theta"].n_samples
    row["seed"] = config.mc.seed
    return row


def compute(config: RunConfig, workers: int = 1):
    """Columns and rows for ``config``; pure apart from worker fan-out."""
    if config.mode == "spectrum":
        cols = ["omega", "n1", "n2", "s_theta", "theta", "m_abs_sq", "flag"]
        rows = _ordered_map(lambda w: _spectrum_row(config, float(w)), list(config.grid.values()),
                            workers)
    elif config.mode == "squeeze":
        cols = ["omega", "s_theta", "theta", "s_opt", "theta_opt", "s_opt_over_sql",
                "theta_formula", "m_abs_sq", "flag"]
        rows = _ordered_map(lambda w: _squeeze_row(config, float(w)), list(config.grid.values()),
                            workers)
    elif config.mode == "threshold":
        cols, rows = _threshold_rows(config, workers)
    elif config.mode == "sweep":
        table = threshold.sweep(config.params, config.sweep, workers=workers)
        cols, rows = table.columns, table.rows
    else:
        cols = ["omega", "theta"]
        for label in ("n1", "n2", "S"):
            cols += [f"analytic_{label}", f"mc_{label}", f"mc_{label}_stderr", f"z_{label}"]
        cols += ["mc_stderr", "n_samples", "seed"]
        rows = [_mc_row(config, w, workers) for w in config.mc.omegas]
    return cols, rows


def to_csv(cols, rows) -> str:
    buf = io.StringIO()
    buf.write(UNITS_LINE + "\n")
    buf.write(",".join(cols) + "\n")
    for row in rows:
        cells = []
        for c in cols:
            v = row.get(c, "")
            text = fmt(v) if v != "" else ""
            if "," in text or '"' in text:
                text = '"' + text.replace('"', '""') + '"'
            cells.append(text)
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def metadata(config: RunConfig) -> str:
    meta = {"version": __version__, "mode": config.mode}
    if config.mode == "mc-validate":
        meta["seed"] = config.mc.seed
        meta["rng"] = langevin.RNG_IDENTITY
    return config.to_ini(meta)


def run(config: RunConfig, workers: int | None = None, stdout=None) -> int:
    """Execute ``config``; writes the CSV and ``<out>.meta.ini``. Returns 0."""
    workers = worker_count() if workers is None else workers
    cols, rows = compute(config, workers)
    text = to_csv(cols, rows)
    if config.out == "-":
        (stdout or sys.stdout).write(text)
    else:
        with open(config.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        with open(config.out + ".meta.ini", "w", encoding="utf-8") as fh:
            fh.write(metadata(config))
    return 0


def _split_overrides(extra):
    overrides, errors = {}, []
    for token in extra:
        if token.startswith("--") and "=" in token:
            key, value = token[2:].split("=", 1)
            overrides[key.replace("-", "_") if "." not in key else key] = value
        else:
            errors.append(f"unrecognized argument {token!r} (overrides take the form --key=value)")
    return overrides, errors


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fwmsqueeze",
        allow_abbrev=False,
        description="Squeezing spectra and thresholds of counter-propagating four-wave mixing.",
        epilog="Any config key can be overridden with --key=value or --section.key=value.",
    )
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--config", help="INI run configuration")
    parser.add_argument("--out", help="CSV output path ('-' for stdout)")
    parser.add_argument("--seed", help="Monte-Carlo seed (unsigned 64-bit)")
    parser.add_argument("--samples", help="Monte-Carlo sample count")
    parser.add_argument("--theta", help="quadrature angle in radians")
    parser.add_argument("--quiet", action="store_true", help="suppress progress messages")
    parser.add_argument("--version", action="version", version=__version__)
    return parser


def _fail(kind, message, details=(), code=EXIT_RUNTIME):
    record = {"error": kind, "message": message, "details": list(details)}
    sys.stderr.write(json.dumps(record) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    overrides, errors = _split_overrides(extra)
    if errors:
        return _fail("usage", "bad arguments", errors, EXIT_CONFIG)
    for flag, key in (("out", "run.out"), ("seed", "mc.seed"), ("samples", "mc.n_samples"),
                      ("theta", "run.theta")):
        if getattr(args, flag) is not None:
            overrides[key] = getattr(args, flag)
    overrides["run.mode"] = args.mode
    text = ""
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            return _fail("io", f"cannot read config: {exc}", code=EXIT_CONFIG)
    try:
        config = parse_config(text, overrides)
        workers = worker_count()
    except ConfigError as exc:
        return _fail("config", "invalid configuration", exc.errors, EXIT_CONFIG)
    with warnings.catch_warnings():
        if args.quiet:
            warnings.simplefilter("ignore", ValidityWarning)
        try:
            run(config, workers)
        except (threshold.NoThreshold, threshold.BracketFailure, greens.ThresholdSingularity,
                langevin.NoiseTableError, ParameterError) as exc:
            return _fail(type(exc).__name__, str(exc))
        except OSError as exc:
            return _fail("io", str(exc))
    if not args.quiet and config.out != "-":
        sys.stderr.write(f"wrote {config.out}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())

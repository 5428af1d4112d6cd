"""INI-style run configuration.

Sections and keys (rates in units of gamma_a, lengths in units of L)::

    [params]     gamma_0 omega_rabi delta kappa_l gamma_a length
    [grid]       omega_min omega_max n_points
    [run]        mode out theta
    [threshold]  free condition root_index
    [sweep]      axis start stop n_points spacing values quantities omega hold_m_sq
    [mc]         n_samples seed n_z omegas

A ``[meta]`` section (written into run metadata) is accepted and ignored.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field

import numpy as np

from .params import MediumParams, validate_fields
from .threshold import CONDITIONS, FREE_VARIABLES, SWEEP_AXES, SWEEP_QUANTITIES, SweepSpec

MODES = ("spectrum", "squeeze", "threshold", "sweep", "mc-validate")

_FLOAT, _INT, _STR, _FLOATS, _STRS = "float", "int", "str", "floats", "strs"

SCHEMA = {
    "params": {
        "gamma_0": _FLOAT, "omega_rabi": _FLOAT, "delta": _FLOAT,
        "kappa_l": _FLOAT, "gamma_a": _FLOAT, "length": _FLOAT,
    },
    "grid": {"omega_min": _FLOAT, "omega_max": _FLOAT, "n_points": _INT},
    "run": {"mode": _STR, "out": _STR, "theta": _FLOAT},
    "threshold": {"free": _STR, "condition": _STR, "root_index": _INT},
    "sweep": {
        "axis": _STR, "start": _FLOAT, "stop": _FLOAT, "n_points": _INT, "spacing": _STR,
        "values": _FLOATS, "quantities": _STRS, "omega": _FLOAT, "hold_m_sq": _FLOAT,
    },
    "mc": {"n_samples": _INT, "seed": _INT, "n_z": _INT, "omegas": _FLOATS},
}
IGNORED_SECTIONS = ("meta",)

DEFAULTS = {
    "params": {"gamma_a": 1.0, "length": 1.0},
    "grid": {"omega_min": 0.0, "omega_max": 0.0, "n_points": 1},
    "run": {"mode": "spectrum", "out": "-"},
    "threshold": {"free": "kappa_l", "condition": "eq14", "root_index": 1},
    "sweep": {"spacing": "linear", "quantities": ["n1", "n2", "s_theta", "m_abs"], "omega": 0.0},
    "mc": {"n_samples": 10000, "seed": 0, "n_z": 256, "omegas": [0.0]},
}


class ConfigError(ValueError):
    """All problems found in a configuration, not just the first."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class GridSpec:
    omega_min: float
    omega_max: float
    n_points: int

    def values(self) -> np.ndarray:
        if self.n_points == 1:
            return np.array([self.omega_min])
        return np.linspace(self.omega_min, self.omega_max, self.n_points)


@dataclass(frozen=True)
class McOptions:
    n_samples: int = 10000
    seed: int = 0
    n_z: int = 256
    omegas: tuple = (0.0,)


@dataclass(frozen=True)
class RunConfig:
    mode: str
    params: MediumParams
    grid: GridSpec
    out: str = "-"
    theta: float | None = None
    free: str = "kappa_l"
    condition: str = "eq14"
    root_index: int = 1
    sweep: SweepSpec | None = None
    mc: McOptions = field(default_factory=McOptions)
    resolved: dict = field(default_factory=dict, compare=False)

    def to_ini(self, meta: dict | None = None) -> str:
        """Resolved configuration in the input format (floats round-trip)."""
        lines = []
        for section, keys in self.resolved.items():
            lines.append(f"[{section}]")
            for key, value in keys.items():
                lines.append(f"{key} = {format_value(value)}")
            lines.append("")
        if meta:
            lines.append("[meta]")
            lines.extend(f"{k} = {v}" for k, v in meta.items())
            lines.append("")
        return "\n".join(lines)


def format_value(value) -> str:
    if isinstance(value, (list, tuple)):
        return ", ".join(format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _convert(kind, raw):
    raw = raw.strip()
    if kind == _FLOAT:
        return float(raw)
    if kind == _INT:
        return int(raw)
    if kind == _FLOATS:
        return [float(x) for x in raw.split(",") if x.strip()]
    if kind == _STRS:
        return [x.strip() for x in raw.split(",") if x.strip()]
    return raw


def _read(text: str):
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"),
                                       strict=True, empty_lines_in_values=False)
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError([f"line {exc.lineno}: key outside any [section]: {exc.line.strip()!r}"])
    except configparser.ParsingError as exc:
        raise ConfigError([f"line {lineno}: cannot parse {line.strip()!r}" for lineno, line in exc.errors])
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError([f"line {exc.lineno}: {exc.message if hasattr(exc, 'message') else exc}"])
    return parser


def _apply_overrides(values, overrides, errors):
    for key, raw in (overrides or {}).items():
        if "." in key:
            section, name = key.split(".", 1)
        else:
            owners = [s for s, keys in SCHEMA.items() if key in keys]
            if len(owners) != 1:
                errors.append(f"override --{key}: " + ("unknown key" if not owners else
                              f"ambiguous, use one of {', '.join(o + '.' + key for o in owners)}"))
                continue
            section, name = owners[0], key
        if section not in SCHEMA or name not in SCHEMA[section]:
            errors.append(f"override --{key}: unknown key")
            continue
        values.setdefault(section, {})[name] = raw


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Validate ``text`` (plus string ``overrides``) into a :class:`RunConfig`.

    Raises :class:`ConfigError` carrying every problem found.
    """
    parser = _read(text)
    errors = []
    raw = {}
    for section in parser.sections():
        if section in IGNORED_SECTIONS:
            continue
        if section not in SCHEMA:
            errors.append(f"[{section}]: unknown section")
            continue
        for key, value in parser.items(section):
            if key not in SCHEMA[section]:
                errors.append(f"[{section}] {key}: unknown key")
                continue
            raw.setdefault(section, {})[key] = value
    _apply_overrides(raw, overrides, errors)

    values = {s: dict(DEFAULTS.get(s, {})) for s in SCHEMA}
    for section, keys in raw.items():
        for key, text_value in keys.items():
            kind = SCHEMA[section][key]
            try:
                values[section][key] = _convert(kind, text_value)
            except ValueError:
                errors.append(f"[{section}] {key}: expected {kind}, got {text_value!r}")

    run = values["run"]
    mode = run["mode"]
    if mode not in MODES:
        errors.append(f"[run] mode: must be one of {', '.join(MODES)}, got {mode!r}")

    # params: the free variable may be left out in threshold mode
    p = values["params"]
    optional = set()
    if mode == "threshold":
        optional.add(values["threshold"]["free"])
    required = ("gamma_0", "omega_rabi", "delta", "kappa_l")
    for key in required:
        if key not in p and key not in optional:
            errors.append(f"[params] {key}: missing")
    errors.extend(f"[params] {e}" for e in validate_fields(**{k: v for k, v in p.items()
                                                              if isinstance(v, (int, float))}))

    g = values["grid"]
    if g["n_points"] < 1:
        errors.append("[grid] n_points: must be >= 1")
    if g["omega_max"] < g["omega_min"]:
        errors.append("[grid] omega_max: must be >= omega_min")
    if not all(math.isfinite(g[k]) for k in ("omega_min", "omega_max")):
        errors.append("[grid] omega_min/omega_max: must be finite")
    theta = run.get("theta")
    if theta is not None and not math.isfinite(theta):
        errors.append("[run] theta: must be finite")

    th = values["threshold"]
    if th["free"] not in FREE_VARIABLES:
        errors.append(f"[threshold] free: must be one of {', '.join(FREE_VARIABLES)}")
    if th["condition"] not in CONDITIONS:
        errors.append(f"[threshold] condition: must be one of {', '.join(CONDITIONS)}")
    if th["root_index"] < 1:
        errors.append("[threshold] root_index: must be >= 1")

    mc = values["mc"]
    if mc["n_samples"] < 100:
        errors.append("[mc] n_samples: must be >= 100")
    if mc["n_z"] < 16:
        errors.append("[mc] n_z: must be >= 16")
    if not 0 <= mc["seed"] < 2**64:
        errors.append("[mc] seed: must be an unsigned 64-bit integer")
    if not mc["omegas"]:
        errors.append("[mc] omegas: must list at least one frequency")

    sweep_spec = None
    sw = values["sweep"]
    if mode == "sweep":
        sweep_spec = _build_sweep(sw, errors)

    if errors:
        raise ConfigError(errors)

    base = {k: float(v) for k, v in p.items()}
    # a free variable left out of a threshold run gets a placeholder; the
    # root finder overwrites it
    params = MediumParams(**{**{k: 1.0 for k in required}, **base})

    resolved = {"params": base, "grid": dict(g), "run": dict(run)}
    if mode == "threshold":
        resolved["threshold"] = dict(th)
    if mode == "sweep":
        resolved["sweep"] = {k: v for k, v in sw.items()}
    if mode == "mc-validate":
        resolved["mc"] = dict(mc)
    return RunConfig(
        mode=mode,
        params=params,
        grid=GridSpec(g["omega_min"], g["omega_max"], g["n_points"]),
        out=run["out"],
        theta=theta,
        free=th["free"],
        condition=th["condition"],
        root_index=th["root_index"],
        sweep=sweep_spec,
        mc=McOptions(mc["n_samples"], mc["seed"], mc["n_z"], tuple(mc["omegas"])),
        resolved=resolved,
    )


def _build_sweep(sw, errors):
    if "axis" not in sw:
        errors.append("[sweep] axis: missing")
        return None
    if sw["axis"] not in SWEEP_AXES:
        errors.append(f"[sweep] axis: must be one of {', '.join(SWEEP_AXES)}")
    bad = [q for q in sw["quantities"] if q not in SWEEP_QUANTITIES]
    if bad:
        errors.append(f"[sweep] quantities: unknown {', '.join(bad)}")
    if "values" in sw:
        values = sw["values"]
    elif all(k in sw for k in ("start", "stop", "n_points")):
        if sw["n_points"] < 1:
            errors.append("[sweep] n_points: must be >= 1")
            return None
        if sw["spacing"] == "log":
            if sw["start"] <= 0 or sw["stop"] <= 0:
                errors.append("[sweep] start/stop: log spacing needs positive bounds")
                return None
            values = np.geomspace(sw["start"], sw["stop"], sw["n_points"]).tolist()
        elif sw["spacing"] == "linear":
            values = np.linspace(sw["start"], sw["stop"], sw["n_points"]).tolist()
        else:
            errors.append("[sweep] spacing: must be linear or log")
            return None
    else:
        errors.append("[sweep] values: give either values or start, stop and n_points")
        return None
    if errors:
        return None
    try:
        return SweepSpec(axis=sw["axis"], values=tuple(values), quantities=tuple(sw["quantities"]),
                         omega=sw["omega"], hold_m_sq=sw.get("hold_m_sq"))
    except ValueError as exc:
        errors.extend(f"[sweep] {e}" for e in str(exc).split("; "))
        return None

"""Oscillation threshold, optimal operating points and one-dimensional sweeps."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import greens
from .params import MediumParams, ParameterError, coupling_matrix

FREE_VARIABLES = ("kappa_l", "omega_rabi", "length")
CONDITIONS = ("eq14", "exact")
SWEEP_AXES = ("kappa_l", "omega_rabi", "delta", "gamma_0", "gamma_a", "length", "omega")
SWEEP_QUANTITIES = ("n1", "n2", "s_theta", "m_abs", "threshold_margin")


class NoThreshold(ValueError):
    """No real zero of ``M(L, 0)`` exists for the requested free variable."""

    def __init__(self, message, infimum=None):
        self.infimum = infimum
        if infimum is not None:
            message = f"{message} (inf |M(L,0)| over the scan = {infimum:.6g})"
        super().__init__(message)


class BracketFailure(RuntimeError):
    """The bracketing scan found no sign change of ``M(L, 0)``."""


@dataclass(frozen=True)
class ThresholdResult:
    free_variable: str
    value_at_threshold: float
    eta_l_root: float
    residual: float
    condition: str = "eq14"
    root_index: int = 1


def oscillation_possible(params: MediumParams) -> bool:
    """True iff ``Omega**2 > gamma_0 |Delta| / 2``."""
    return params.omega_rabi**2 > params.gamma_0 * abs(params.delta) / 2


def _ratio(params: MediumParams) -> float:
    # r = gamma_0 |Delta| / (2 Omega^2); the damping-to-coupling ratio at omega = 0
    return params.gamma_0 * abs(params.delta) / (2 * params.omega_rabi**2)


def eq14_residual(x: float, r: float) -> float:
    """``cos(x) + r sin(x)`` with ``x = eta L``."""
    return math.cos(x) + r * math.sin(x)


def exact_m0(params: MediumParams) -> float:
    """``M(L, 0)``, which is real at zero detuning from two-photon resonance."""
    return greens.m_function(coupling_matrix(params, 0.0), 1.0).real


def _params_from_x(params: MediumParams, free: str, x: float) -> MediumParams:
    """Parameters for which ``eta L = x`` at omega = 0, varying ``free``."""
    w2 = params.omega_rabi**2
    if free == "omega_rabi":
        inner = 1 / params.delta**2 - (x / params.optical_depth) ** 2
        return params.replace(omega_rabi=math.sqrt(params.gamma_0 / (2 * math.sqrt(inner))))
    k_over_l = math.sqrt(1 / params.delta**2 - params.gamma_0**2 / (4 * w2 * w2))
    kl = x / k_over_l
    if free == "kappa_l":
        return params.replace(kappa_l=kl / params.length)
    return params.replace(length=kl / params.kappa_l)


def _x_bracket(params: MediumParams, free: str, root_index: int):
    upper = root_index * math.pi
    if free == "omega_rabi":
        if params.gamma_0 == 0:
            raise NoThreshold("omega_rabi does not enter the threshold when gamma_0 = 0")
        x_max = params.optical_depth / abs(params.delta)
        if x_max <= math.pi / 2:
            raise NoThreshold(
                "kappa L / |Delta| <= pi/2: no Rabi frequency reaches threshold",
                infimum=abs(math.cos(x_max)),
            )
        upper = min(upper, x_max)
    elif not oscillation_possible(params):
        # eta is imaginary for every value of the free variable; |M| = cosh + r' sinh >= 1
        raise NoThreshold("Omega^2 <= gamma_0 |Delta| / 2", infimum=1.0)
    return upper


def find_threshold(params: MediumParams, free: str = "kappa_l", condition: str = "eq14",
                   root_index: int = 1, n_scan: int = 256) -> ThresholdResult:
    """Value of ``free`` at which the cell starts to oscillate.

    ``condition="eq14"`` solves ``cos(eta L) + gamma_0 |Delta| / (2 Omega^2)
    sin(eta L) = 0``, the textbook threshold condition.  ``"exact"`` solves
    ``M(L, 0) = 0`` for the full coupling matrix; the two differ at relative
    order ``(gamma_0 Delta / Omega^2)^2``.  The scan runs over ``eta L`` in
    ``(0, root_index * pi)`` and the ``root_index``-th sign change is polished
    with Brent's method.
    """
    if free not in FREE_VARIABLES:
        raise ValueError(f"free must be one of {FREE_VARIABLES}, got {free!r}")
    if condition not in CONDITIONS:
        raise ValueError(f"condition must be one of {CONDITIONS}, got {condition!r}")
    if root_index < 1:
        raise ValueError("root_index must be >= 1")

    upper = _x_bracket(params, free, root_index)

    x_limit = params.optical_depth / abs(params.delta)

    def g(x):
        if free == "omega_rabi" and x >= x_limit:
            # Omega -> infinity: damping ratio vanishes and M(L,0) -> cos(kappa L / Delta)
            return math.cos(x_limit)
        p = _params_from_x(params, free, x)
        if condition == "eq14":
            return eq14_residual(x, _ratio(p))
        return exact_m0(p)

    xs = np.linspace(0.0, upper, n_scan * root_index + 1)[1:]
    vals = np.array([g(x) for x in xs])
    crossings = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]
    if len(crossings) < root_index:
        raise BracketFailure(
            f"found {len(crossings)} sign change(s) of M(L,0) on eta L in (0, {upper:.6g}); "
            f"root {root_index} requested; min |M| = {np.min(np.abs(vals)):.3g}"
        )
    i = crossings[root_index - 1]
    x0 = brentq(g, xs[i], xs[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    p = _params_from_x(params, free, x0)
    return ThresholdResult(
        free_variable=free,
        value_at_threshold=float(getattr(p, free)),
        eta_l_root=float(x0),
        residual=abs(g(x0)),
        condition=condition,
        root_index=root_index,
    )


def optimal_detuning(params: MediumParams) -> float:
    """``sqrt(gamma_a Omega^2 / (2 gamma_0))``."""
    if params.gamma_0 <= 0:
        raise ParameterError("gamma_0: optimal detuning undefined for gamma_0 = 0")
    return math.sqrt(params.gamma_a * params.omega_rabi**2 / (2 * params.gamma_0))


def pre_threshold_saturation_point(params: MediumParams) -> float:
    """``|M|^2`` level ``sqrt(gamma_0 |Delta| / Omega^2)`` below which the
    atomic-noise floor dominates the near-threshold squeezing."""
    return math.sqrt(params.gamma_0 * abs(params.delta) / params.omega_rabi**2)


def kappa_l_for_m_sq(params: MediumParams, m_sq: float) -> MediumParams:
    """Retune ``kappa_l`` (below threshold) so that ``|M(L, 0)|^2 = m_sq``."""
    if not 0 < m_sq < 1:
        raise ValueError("m_sq must lie in (0, 1)")
    kl_th = find_threshold(params, "kappa_l", condition="exact").value_at_threshold
    target = math.sqrt(m_sq)

    def h(kl):
        return exact_m0(params.replace(kappa_l=kl)) - target

    kl = brentq(h, kl_th * 1e-9, kl_th, xtol=1e-14 * kl_th, rtol=1e-15, maxiter=500)
    return params.replace(kappa_l=kl)


def numerical_floor(params: MediumParams, log10_m_sq=(-9.0, -0.5)):
    """Minimum over ``|M(L,0)|^2`` (through ``kappa_l``) of ``S_{pi/4}(0)``.

    Returns ``(s_floor, m_sq_at_floor)`` in absolute units (vacuum = 1/4).
    """

    def s_of(log_m):
        p = kappa_l_for_m_sq(params, 10.0**log_m)
        return greens.squeezing_spectrum(p, 0.0, math.pi / 4)

    res = minimize_scalar(s_of, bounds=log10_m_sq, method="bounded",
                          options={"xatol": 1e-4})
    return float(res.fun), float(10.0**res.x)


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    values: tuple
    quantities: tuple = ("n1", "n2", "s_theta", "m_abs")
    omega: float = 0.0
    theta: float | None = None
    hold_m_sq: float | None = None

    def __post_init__(self):
        errors = []
        if self.axis not in SWEEP_AXES:
            errors.append(f"axis: unknown sweep axis {self.axis!r}")
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size == 0:
            errors.append("values: grid must be a non-empty 1-d sequence")
        elif vals.size > 1:
            d = np.diff(vals)
            if not (np.all(d > 0) or np.all(d < 0)):
                errors.append("values: grid must be strictly monotone")
        if not np.all(np.isfinite(vals)):
            errors.append("values: grid contains non-finite entries")
        bad = [q for q in self.quantities if q not in SWEEP_QUANTITIES]
        if bad or not self.quantities:
            errors.append(f"quantities: unknown or empty {bad}")
        if self.hold_m_sq is not None and not 0 < self.hold_m_sq < 1:
            errors.append("hold_m_sq: must lie in (0, 1)")
        if errors:
            raise ParameterError("; ".join(errors))
        object.__setattr__(self, "values", tuple(float(v) for v in vals))
        object.__setattr__(self, "quantities", tuple(self.quantities))


@dataclass
class SpectrumTable:
    axis: str
    columns: list
    rows: list = field(default_factory=list)

    def column(self, name):
        return np.array([r.get(name, np.nan) for r in self.rows], dtype=float)


def _sweep_point(base: MediumParams, spec: SweepSpec, value: float) -> dict:
    row = {spec.axis: value, "flag": "ok"}
    omega = spec.omega
    try:
        if spec.axis == "omega":
            p, omega = base, value
        else:
            p = base.replace(**{spec.axis: value})
        if spec.hold_m_sq is not None:
            p = kappa_l_for_m_sq(p, spec.hold_m_sq)
        row["kappa_l"] = p.kappa_l
        cm = coupling_matrix(p, omega)
        m_l = greens.m_function(cm, 1.0)
        row["eta_l"] = cm.eta.real
        if "m_abs" in spec.quantities:
            row["m_abs"] = abs(m_l)
        if "threshold_margin" in spec.quantities:
            try:
                kl_th = find_threshold(p, "kappa_l", condition="exact").value_at_threshold
                row["threshold_margin"] = 1 - p.kappa_l / kl_th
            except (NoThreshold, BracketFailure):
                row["threshold_margin"] = math.inf
        if abs(m_l) < greens.THRESHOLD_FLOOR:
            row["flag"] = "diverged"
            return row
        wants = set(spec.quantities)
        if wants & {"n1", "n2"}:
            row["n1"], row["n2"] = greens.output_spectrum(p, omega)
        if "s_theta" in wants:
            pt = greens.spectrum_point(p, omega, spec.theta)
            row["theta"] = pt.theta
            row["s_theta"] = pt.s_theta
    except greens.ThresholdSingularity:
        row["flag"] = "diverged"
    except (ParameterError, ValueError, ArithmeticError, RuntimeError) as exc:
        row["flag"] = f"error: {exc}"
    return row


def sweep(base: MediumParams, spec: SweepSpec, workers: int = 1) -> SpectrumTable:
    """Evaluate ``spec.quantities`` along one axis; rows keep grid order.

    Failing points carry a ``flag`` (``"diverged"`` or ``"error: ..."``) and
    never abort the sweep.
    """
    columns = [spec.axis, "kappa_l", "eta_l"] + list(spec.quantities)
    if "s_theta" in spec.quantities:
        columns.append("theta")
    columns.append("flag")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda v: _sweep_point(base, spec, v), spec.values))
    else:
        rows = [_sweep_point(base, spec, v) for v in spec.values]
    return SpectrumTable(axis=spec.axis, columns=columns, rows=rows)

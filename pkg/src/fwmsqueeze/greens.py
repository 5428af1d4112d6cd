"""Closed-form Green's functions of the counter-propagating boundary-value
problem and the analytic output spectra built from them.

Conventions
-----------
The solved vector is ``v = (E1*, E2)`` with vacuum input ``E1*(0) = 0`` and
``E2(L) = 0``.  A delta(omega + omega') correlator pairs ``E1*(omega)`` with
``E1(-omega) = conj(E1*(omega))``, so every spectral quantity is a Hermitian
form ``k Q k^dagger`` of the kernels at a single solve frequency:

* ``n1(omega)`` uses the solve at ``+omega``;
* ``n2(omega)`` and the combined-mode spectrum ``S_theta(omega)`` use the solve
  at ``-omega`` (Stokes at ``-omega`` paired with anti-Stokes at ``+omega``).

The phase-sensitive correlator entering ``S_theta`` is
``X = <E1*(L) conj(E2(0))>``, which puts the squeezed quadrature at
``theta = pi/4`` for ``omega = 0``.  ``S_theta`` is normalized so the vacuum
gives :data:`SQL` ``= 1/4``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .params import (
    CouplingMatrix,
    DiffusionTable,
    MediumParams,
    coupling_matrix,
    diffusion_table,
)
from .quadrature import adaptive_gauss_legendre

#: Vacuum (standard quantum limit) level of ``S_theta``.
SQL = 0.25

#: ``|M(L, omega)|`` below which the linear theory is reported as singular.
THRESHOLD_FLOOR = 1e-12

#: ``|eta z|`` below which ``sin(eta z) / eta`` switches to its Taylor series.
TAYLOR_SWITCH = 1e-4

QUAD_ABSTOL = 1e-10


class ThresholdSingularity(ArithmeticError):
    """The operating point sits on the oscillation threshold, ``M(L) = 0``."""

    def __init__(self, m_value, floor=THRESHOLD_FLOOR):
        self.m_value = complex(m_value)
        super().__init__(
            f"|M(L, omega)| = {abs(m_value):.3e} is below the floor {floor:.1e}; "
            "at oscillation threshold"
        )


class UndefinedFloorWarning(UserWarning):
    pass


def _sin_over_eta(eta, z):
    """``sin(eta z) / eta``, continuous through ``eta = 0``."""
    z = np.asarray(z, dtype=float)
    x = eta * z
    small = np.abs(x) < TAYLOR_SWITCH
    x2 = x * x
    series = z * (1 - x2 / 6 + x2 * x2 / 120)
    with np.errstate(invalid="ignore", divide="ignore"):
        exact = np.sin(x) / eta if eta != 0 else z
    return np.where(small, series, exact)


def m_function(cm: CouplingMatrix, z, branch: int = 1):
    """``M(z) = cos(eta z) + i (a / eta) sin(eta z)`` with ``z`` in units of L.

    ``branch=-1`` uses the other square root ``-eta``; the value is the same.
    """
    z_arr = np.asarray(z, dtype=float)
    eta = branch * cm.eta
    val = np.cos(eta * z_arr) + 1j * cm.a_half * _sin_over_eta(eta, z_arr)
    return complex(val) if val.ndim == 0 else val


def propagator(cm: CouplingMatrix, z: float) -> np.ndarray:
    """Homogeneous transfer matrix ``exp(i A z)`` in closed form."""
    eta = cm.eta
    s = complex(_sin_over_eta(eta, z))
    c = complex(np.cos(eta * z))
    shifted = cm.as_array() - cm.a_tilde * np.eye(2)
    return np.exp(1j * cm.a_tilde * z) * (c * np.eye(2) + 1j * s * shifted)


def boundary_m(cm: CouplingMatrix, floor: float = THRESHOLD_FLOOR, branch: int = 1) -> complex:
    m_l = m_function(cm, 1.0, branch)
    if abs(m_l) < floor:
        raise ThresholdSingularity(m_l, floor)
    return m_l


@dataclass(frozen=True)
class KernelRow:
    """Normalized Green's-function kernels at source position(s) ``z_src``.

    ``E1*(L) = int dz' [k1_f1s f1* + k1_f2 f2]`` and
    ``E2(0) = int dz' [k2_f1s f1* + k2_f2 f2]``, with ``f / (2 eps0)`` as the
    source normalization.
    """

    k1_f1s: np.ndarray
    k1_f2: np.ndarray
    k2_f1s: np.ndarray
    k2_f2: np.ndarray

    def rows(self):
        return (
            np.array([self.k1_f1s, self.k1_f2]),
            np.array([self.k2_f1s, self.k2_f2]),
        )


def kernels(cm: CouplingMatrix, z_src, floor: float = THRESHOLD_FLOOR, branch: int = 1) -> KernelRow:
    """Source-to-output kernels for vacuum input at both faces.

    The E2 kernels are written in physical source coordinates; the reflected
    variable ``u = L - z'`` of the textbook form is already resolved.
    """
    m_l = boundary_m(cm, floor, branch)
    z = np.asarray(z_src, dtype=float)
    if np.any((z < 0) | (z > 1)):
        raise ValueError("source position outside [0, L]")
    eta, at = branch * cm.eta, cm.a_tilde
    to_end = np.exp(-1j * at * (z - 1)) / m_l
    to_start = np.exp(-1j * at * z) / m_l
    return KernelRow(
        k1_f1s=1j * m_function(cm, z, branch) * to_end,
        k1_f2=cm.a12 * _sin_over_eta(eta, z) * to_end,
        k2_f1s=cm.a21 * _sin_over_eta(eta, 1 - z) * to_start,
        k2_f2=-1j * m_function(cm, 1 - z, branch) * to_start,
    )


def spectral_moments(cm: CouplingMatrix, q: np.ndarray, floor: float = THRESHOLD_FLOOR,
                     abstol: float = QUAD_ABSTOL):
    """Integrated Hermitian forms of the kernels against source covariance ``q``.

    Returns ``(N1, N2, X)`` with ``N1 = <|E1*(L)|^2>``, ``N2 = <|E2(0)|^2>``
    and ``X = <E1*(L) conj(E2(0))>``.
    """
    boundary_m(cm, floor)

    def integrand(s):
        k1, k2 = kernels(cm, s, floor).rows()
        qk1 = q @ k1.conj()
        qk2 = q @ k2.conj()
        return np.array([
            np.sum(k1 * qk1, axis=0),
            np.sum(k2 * qk2, axis=0),
            np.sum(k1 * qk2, axis=0),
        ])

    val, _ = adaptive_gauss_legendre(integrand, 0.0, 1.0, abstol=abstol)
    return float(val[0].real), float(val[1].real), complex(val[2])


def _q(params: MediumParams, table: DiffusionTable | None):
    if table is None:
        table = diffusion_table(params)
    return table.hermitian(params.optical_depth)


def output_spectrum(params: MediumParams, omega: float, table: DiffusionTable | None = None,
                    floor: float = THRESHOLD_FLOOR):
    """Normally ordered photon spectra ``(n1, n2)`` at the cell outputs."""
    q = _q(params, table)
    n1, _, _ = spectral_moments(coupling_matrix(params, omega), q, floor)
    if omega == 0:
        _, n2, _ = spectral_moments(coupling_matrix(params, 0.0), q, floor)
    else:
        _, n2, _ = spectral_moments(coupling_matrix(params, -omega), q, floor)
    return n1, n2


def quadrature_spectrum(n1: float, n2: float, cross: complex, theta: float) -> float:
    """``S_theta`` from the moments of one solve (see module notes)."""
    return SQL + 0.25 * (n1 + n2 + 2 * (np.exp(2j * theta) * cross).real)


def squeezing_spectrum(params: MediumParams, omega: float, theta: float,
                       table: DiffusionTable | None = None, floor: float = THRESHOLD_FLOOR) -> float:
    """Fluctuation spectrum of the theta-quadrature of the combined output mode."""
    n1, n2, cross = spectral_moments(coupling_matrix(params, -omega), _q(params, table), floor)
    return float(quadrature_spectrum(n1, n2, cross, theta))


def optimal_squeezing(params: MediumParams, omega: float, table: DiffusionTable | None = None,
                      floor: float = THRESHOLD_FLOOR):
    """Exact minimum over theta of ``S_theta(omega)`` and the minimizing phase."""
    n1, n2, cross = spectral_moments(coupling_matrix(params, -omega), _q(params, table), floor)
    s_min = SQL + 0.25 * (n1 + n2 - 2 * abs(cross))
    return float(s_min), _best_theta(cross)


def _best_theta(cross: complex) -> float:
    # minimizes Re(exp(2i theta) X); pi/4 for the vacuum, where X = 0
    if cross == 0:
        return math.pi / 4
    return float(((math.pi - np.angle(cross)) / 2) % math.pi)


def best_theta(params: MediumParams, omega: float, table: DiffusionTable | None = None) -> float:
    """Exact squeezed-quadrature phase at ``omega``."""
    return optimal_squeezing(params, omega, table)[1]


@dataclass(frozen=True)
class SpectrumPoint:
    omega: float
    n1: float
    n2: float
    s_theta: float
    theta: float
    m_abs_sq: float


def spectrum_point(params: MediumParams, omega: float, theta: float | None = None,
                   table: DiffusionTable | None = None) -> SpectrumPoint:
    """All analytic spectra at one frequency.

    ``theta`` defaults to the exact minimizing quadrature phase (see
    :func:`optimal_squeezing`), not the small-omega formula of
    :func:`optimal_theta`.
    """
    q = _q(params, table)
    n1_minus, n2, cross = spectral_moments(coupling_matrix(params, -omega), q)
    n1 = n1_minus if omega == 0 else spectral_moments(coupling_matrix(params, omega), q)[0]
    if theta is None:
        theta = _best_theta(cross)
    return SpectrumPoint(
        omega=float(omega),
        n1=n1,
        n2=n2,
        s_theta=float(quadrature_spectrum(n1_minus, n2, cross, theta)),
        theta=float(theta),
        m_abs_sq=abs(m_function(coupling_matrix(params, omega), 1.0)) ** 2,
    )


def optimal_theta(params: MediumParams, omega: float) -> float:
    """Quadrature phase ``pi/4 - kappa L omega / (2 Omega**2)``."""
    return math.pi / 4 - params.optical_depth * omega / (2 * params.omega_rabi**2)


def asymptotic_s_plus(params: MediumParams, m_sq: float) -> float:
    """Near-threshold closed form of the optimum-phase spectrum at omega = 0.

    ``|M|^2/4 + (pi/4) (2 gamma_0 Delta / Omega^2 + gamma_a / Delta)``.
    Like :func:`ideal_floor` and :func:`bandwidth_model` this expression is
    relative to the vacuum level, i.e. compare it with ``S / SQL``.
    """
    if m_sq < 0:
        raise ValueError("m_sq must be >= 0")
    d = abs(params.delta)
    w2 = params.omega_rabi**2
    return m_sq / 4 + math.pi / 4 * (2 * params.gamma_0 * d / w2 + params.gamma_a / d)


def ideal_floor(params: MediumParams) -> float:
    """``pi * sqrt(gamma_0 gamma_a / (2 Omega^2))``; 0 with a warning if gamma_0 = 0."""
    if params.gamma_0 == 0:
        warnings.warn("noise floor undefined for gamma_0 = 0", UndefinedFloorWarning, stacklevel=2)
        return 0.0
    return math.pi * math.sqrt(params.gamma_0 * params.gamma_a / (2 * params.omega_rabi**2))


def bandwidth_model(params: MediumParams, omega: float, m_sq: float) -> float:
    """Small-omega model of the optimum-phase spectrum (relative to the SQL).

    The atomic-noise term carries a frequency shape that is only known to be
    of order unity; it is set to 1 here, so this is a model and not an
    oracle.
    """
    dw0 = params.omega_rabi**2 / abs(params.delta)
    u2 = (omega / dw0) ** 2
    if m_sq == 0 and u2 == 0:
        first = 0.0
    else:
        first = (m_sq / 2 + math.sqrt(1 + u2) - 1) ** 2 / (m_sq + u2)
    return first + asymptotic_s_plus(params, 0.0)

"""Physical parameters, coupling matrices and the Langevin diffusion table.

Unit system
-----------
All rates are measured in units of the upper-level decay rate ``gamma_a``
(normally 1), lengths in units of the cell length ``L`` and ``c = 1``.
``kappa_l`` is the gain parameter ``kappa * L`` for the reference length;
``length`` multiplies it (and the ``omega / c`` propagation phase) when the
cell is stretched.  The noise prefactor ``4 eps0^2 kappa L / c`` is divided
out of :class:`DiffusionTable` and re-applied as ``kappa_l * length`` by the
spectrum code, where the ``1 / (2 eps0)`` kernel factors cancel against it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

#: Common factor divided out of every diffusion coefficient.
NOISE_PREFACTOR = "4*eps0**2*kappa*L/c"

#: |omega / Omega| above which the near-resonant coupling is flagged.
OMEGA_VALIDITY_RATIO = 0.3


class ParameterError(ValueError):
    """Raised for parameter values outside the model's domain."""


class ValidityWarning(UserWarning):
    """Emitted when a Fourier frequency leaves the near-resonant regime."""


@dataclass(frozen=True)
class MediumParams:
    """Double-Lambda medium in normalized units (gamma_a = c = L = 1)."""

    gamma_0: float
    omega_rabi: float
    delta: float
    kappa_l: float
    gamma_a: float = 1.0
    length: float = 1.0

    def __post_init__(self):
        errors = validate_fields(
            gamma_0=self.gamma_0,
            omega_rabi=self.omega_rabi,
            delta=self.delta,
            kappa_l=self.kappa_l,
            gamma_a=self.gamma_a,
            length=self.length,
        )
        if errors:
            raise ParameterError("; ".join(errors))

    @property
    def optical_depth(self) -> float:
        """Effective ``kappa * L`` including the length multiplier."""
        return self.kappa_l * self.length

    def replace(self, **changes) -> "MediumParams":
        values = {
            "gamma_0": self.gamma_0,
            "omega_rabi": self.omega_rabi,
            "delta": self.delta,
            "kappa_l": self.kappa_l,
            "gamma_a": self.gamma_a,
            "length": self.length,
        }
        values.update(changes)
        return MediumParams(**values)


def validate_fields(**fields) -> list[str]:
    """Return every violated invariant as ``"name: reason"`` strings."""
    errors = []
    for name, value in fields.items():
        if value is None:
            continue
        if not isinstance(value, (int, float, np.floating, np.integer)) or not math.isfinite(value):
            errors.append(f"{name}: must be a finite number, got {value!r}")
            continue
        if name in ("omega_rabi", "kappa_l", "gamma_a", "length") and value <= 0:
            errors.append(f"{name}: must be > 0, got {value!r}")
        elif name == "gamma_0" and value < 0:
            errors.append(f"{name}: must be >= 0, got {value!r}")
        elif name == "delta" and value == 0:
            errors.append("delta: single-photon detuning must be nonzero")
    return errors


def make_params(gamma_0: float, omega_rabi: float, delta: float, kappa_l: float) -> MediumParams:
    """Validated parameter set with ``gamma_a = c = L = 1``."""
    return MediumParams(
        gamma_0=float(gamma_0),
        omega_rabi=float(omega_rabi),
        delta=float(delta),
        kappa_l=float(kappa_l),
    )


def kappa_from_density(number_density: float, wavelength: float, gamma_a: float) -> float:
    """Coupling constant ``3/(8 pi) * N * lambda**2 * gamma_a``.

    Any consistent unit system works; the result carries
    ``[rate] / [length]`` in the units of the inputs.
    """
    for name, value in (
        ("number_density", number_density),
        ("wavelength", wavelength),
        ("gamma_a", gamma_a),
    ):
        if not math.isfinite(value) or value <= 0:
            raise ParameterError(f"{name}: must be > 0, got {value!r}")
    return 3.0 / (8.0 * math.pi) * number_density * wavelength**2 * gamma_a


@dataclass(frozen=True)
class CouplingMatrix:
    """Dimensionless propagation matrix ``A_ij = a_ij * L`` at one frequency.

    The field vector is ``(E1*, E2)`` and ``d/dz v = i A v + i F``.
    """

    a11: complex
    a12: complex
    a21: complex
    a22: complex
    omega: float = 0.0

    def __post_init__(self):
        for name in ("a11", "a12", "a21", "a22"):
            if not np.isfinite(getattr(self, name)):
                raise ParameterError(f"{name}: non-finite coupling entry")

    @property
    def a_tilde(self) -> complex:
        return (self.a11 + self.a22) / 2

    @property
    def a_half(self) -> complex:
        """``(a22 - a11) / 2``, called ``a`` in the closed-form solution."""
        return (self.a22 - self.a11) / 2

    @property
    def eta(self) -> complex:
        # principal branch; every consumer is even in eta
        return complex(np.sqrt(complex(self.a_half**2 + self.a12 * self.a21)))

    def as_array(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a21, self.a22]], dtype=complex)

    def conjugate(self) -> "CouplingMatrix":
        return CouplingMatrix(
            complex(np.conj(self.a11)),
            complex(np.conj(self.a12)),
            complex(np.conj(self.a21)),
            complex(np.conj(self.a22)),
            self.omega,
        )


def coupling_matrix(params: MediumParams, omega: float) -> CouplingMatrix:
    """Near two-photon-resonance coupling of the double-Lambda medium.

    ``a11 = kappa (-omega + i gamma_0) / Omega**2 - omega / c``,
    ``a12 = a21 = kappa / Delta`` and ``a22 = omega / c``, all multiplied by
    the cell length.
    """
    if abs(omega) > OMEGA_VALIDITY_RATIO * params.omega_rabi:
        warnings.warn(
            f"|omega/Omega| = {abs(omega) / params.omega_rabi:.3g} exceeds "
            f"{OMEGA_VALIDITY_RATIO}; near-resonant coupling is unreliable",
            ValidityWarning,
            stacklevel=2,
        )
    kl = params.optical_depth
    prop = omega * params.length
    a11 = kl * complex(-omega, params.gamma_0) / params.omega_rabi**2 - prop
    cross = kl / params.delta
    return CouplingMatrix(a11, complex(cross), complex(cross), complex(prop), float(omega))


def coupling_matrix_generic(chi11, chi12, chi21, chi22, k1, k2, omega, length=1.0) -> CouplingMatrix:
    """Coupling matrix from arbitrary self/cross susceptibilities.

    ``a_1j = -k1 conj(chi_1j) / 2 - delta_j1 omega / c`` and
    ``a_2j = -k2 chi_2j / 2 + delta_j2 omega / c``; wavenumbers in units of
    ``1 / L``.
    """
    values = (chi11, chi12, chi21, chi22, k1, k2, omega, length)
    if not all(np.isfinite(v) for v in values):
        raise ParameterError("non-finite susceptibility, wavenumber or frequency")
    prop = omega * length
    a11 = (-k1 * np.conj(chi11) / 2 - omega) * length
    a12 = (-k1 * np.conj(chi12) / 2) * length
    a21 = (-k2 * chi21 / 2) * length
    a22 = (-k2 * chi22 / 2) * length + prop
    return CouplingMatrix(complex(a11), complex(a12), complex(a21), complex(a22), float(omega))


def resonant_susceptibilities(params: MediumParams, omega: float, k1: float, k2: float):
    """Susceptibilities that make :func:`coupling_matrix_generic` reproduce
    :func:`coupling_matrix` (with ``length = 1``)."""
    kl = params.optical_depth
    w2 = params.omega_rabi**2
    chi11 = 2 * kl * complex(omega, params.gamma_0) / (k1 * w2)
    chi12 = complex(-2 * kl / (k1 * params.delta))
    chi21 = complex(-2 * kl / (k2 * params.delta))
    return chi11, chi12, chi21, 0j


@dataclass(frozen=True)
class DiffusionTable:
    """Langevin correlation strengths with the common prefactor removed.

    The nonzero pairings are ``<f1 f1*> = d11``, ``<f1 f2> = d12`` and
    ``<f2 f2*> = d22`` (times ``delta(z - z') delta(omega + omega')``); the
    conjugate pairings follow by complex conjugation and every other pairing
    vanishes.
    """

    d11: float
    d12: complex
    d22: float
    prefactor: str = field(default=NOISE_PREFACTOR)

    def hermitian(self, scale: float = 1.0) -> np.ndarray:
        """``Q_ij = <F_i conj(F_j)>`` for the source vector ``F = (f1*, f2)``."""
        return scale * np.array(
            [[self.d11, np.conj(self.d12)], [self.d12, self.d22]], dtype=complex
        )

    def correlator(self) -> np.ndarray:
        """Symmetric 4x4 pairing table over ``(f1, f1*, f2, f2*)``."""
        c = np.zeros((4, 4), dtype=complex)
        c[0, 1] = c[1, 0] = self.d11
        c[0, 2] = c[2, 0] = self.d12
        c[1, 3] = c[3, 1] = np.conj(self.d12)
        c[2, 3] = c[3, 2] = self.d22
        return c

    @property
    def is_zero(self) -> bool:
        return self.d11 == 0 and self.d12 == 0 and self.d22 == 0


ZERO_TABLE = DiffusionTable(0.0, 0j, 0.0)


def diffusion_table(params: MediumParams) -> DiffusionTable:
    """``d11 = gamma_0/Omega**2``, ``d12 = i/Delta``, ``d22 = gamma_a/Delta**2``."""
    return DiffusionTable(
        d11=params.gamma_0 / params.omega_rabi**2,
        d12=1j / params.delta,
        d22=params.gamma_a / params.delta**2,
    )


@dataclass(frozen=True)
class DerivedScales:
    delta_omega0: float
    delta_opt: float | None
    strong_drive: bool
    far_detuned: bool

    @property
    def ideal_regime(self) -> bool:
        return self.strong_drive and self.far_detuned


def derived_scales(params: MediumParams, factor: float = 10.0) -> DerivedScales:
    """Bandwidth scale, optimum detuning and ideal-regime flags.

    ``strong_drive`` is ``Omega**2 >= factor * gamma_0 * gamma_a``;
    ``far_detuned`` is ``|Delta| >= factor * max(gamma_a, Omega)``.
    ``delta_opt`` is ``None`` when ``gamma_0 == 0``.
    """
    w2 = params.omega_rabi**2
    delta_opt = None
    if params.gamma_0 > 0:
        delta_opt = math.sqrt(params.gamma_a * w2 / (2 * params.gamma_0))
    return DerivedScales(
        delta_omega0=w2 / abs(params.delta),
        delta_opt=delta_opt,
        strong_drive=w2 >= factor * params.gamma_0 * params.gamma_a,
        far_detuned=abs(params.delta) >= factor * max(params.gamma_a, params.omega_rabi),
    )

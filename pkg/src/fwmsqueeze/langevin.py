"""Monte-Carlo cross-check of the analytic spectra.

Each realization draws cell-constant Langevin forces on a uniform z-grid,
solves the split boundary-value problem by fundamental-matrix shooting and
accumulates the normally ordered moments.

The source covariance ``Q = <F conj(F)^T>`` of ``F = (f1*, f2)`` is Hermitian
but indefinite whenever ``Omega^2 > gamma_0 gamma_a`` (its determinant is
``(kappa L / Delta)^2 (gamma_0 gamma_a / Omega^2 - 1)``), so no classical
complex Gaussian reproduces it.  As in the positive-P representation, each
realization therefore carries an independent "conjugate" force ``F~`` with
``<F F~^T> = Q``, and the solution ``v~`` of the conjugate equation stands in
for ``conj(v)`` in every normally ordered product.  Estimates are unbiased; single-sample values are
complex and only their ensemble means are physical.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox, SeedSequence
from scipy.linalg import expm

from .greens import SQL, THRESHOLD_FLOOR, ThresholdSingularity, best_theta
from .params import CouplingMatrix, DiffusionTable, MediumParams, coupling_matrix, diffusion_table

RNG_IDENTITY = "numpy.random.Philox(SeedSequence(seed, spawn_key=(sample, branch)))"
MAX_FLAGGED_FRACTION = 0.01
BLOCK_SIZE = 512


class NoiseTableError(ValueError):
    """The diffusion table cannot describe a physical noise source."""


@dataclass(frozen=True)
class NoiseRealization:
    """One draw of the cell-constant forces on ``n_z`` cells of width ``1/n_z``.

    ``forcing[j] = F_j`` and ``forcing_conj[j] = F~_j``; each cell carries
    covariance ``<F_j F~_j^T> = Q / dz`` (white-noise discretization).
    """

    grid: np.ndarray
    forcing: np.ndarray
    forcing_conj: np.ndarray
    seed: int
    sample_index: int = 0
    branch: int = 0

    @property
    def n_z(self) -> int:
        return len(self.grid) - 1

    @property
    def cell_variance(self) -> float:
        """Factor ``1/dz`` multiplying the diffusion coefficients per cell."""
        return float(self.n_z)

    def scaled(self, factor: float) -> "NoiseRealization":
        return NoiseRealization(self.grid, factor * self.forcing, factor * self.forcing_conj,
                                self.seed, self.sample_index, self.branch)


@dataclass(frozen=True)
class McEstimate:
    quantity: str
    mean: float
    std_error: float
    n_samples: int
    seed: int


def check_table(table: DiffusionTable) -> None:
    """Reject tables that no physical reservoir produces.

    The Hermitian source matrix is indefinite by construction, so the usual
    positive-semidefinite test does not apply; instead the diagonal
    (population-like) entries must be non-negative and all entries finite.
    """
    for name in ("d11", "d12", "d22"):
        value = getattr(table, name)
        if not np.isfinite(value):
            raise NoiseTableError(f"{name}: non-finite diffusion coefficient {value!r}")
    for name in ("d11", "d22"):
        value = getattr(table, name)
        if np.iscomplexobj(value) and np.imag(value) != 0:
            raise NoiseTableError(f"{name}: diagonal diffusion coefficient must be real, got {value!r}")
        if np.real(value) < 0:
            raise NoiseTableError(f"{name}: negative diagonal diffusion coefficient {value!r}")


def noise_factors(q: np.ndarray):
    """Factors ``(A, B)`` with ``A B^H = q`` for the doubled Gaussian draw.

    With ``q = V diag(lam) V^H`` take ``A = V |lam|^(1/2)`` and
    ``B = V |lam|^(1/2) sign(lam)``; then ``F = A z`` and ``F~ = conj(B z)``
    with ``z`` standard circular normal give ``<F F~^T> = q`` and
    ``<F F^T> = <F~ F~^T> = 0``.
    """
    lam, vec = np.linalg.eigh(q)
    root = vec * np.sqrt(np.abs(lam))
    return root, root * np.sign(lam)


def _table(params: MediumParams, table: DiffusionTable | None) -> DiffusionTable:
    table = diffusion_table(params) if table is None else table
    check_table(table)
    return table


def _stream(seed: int, sample_index: int, branch: int) -> Generator:
    return Generator(Philox(SeedSequence(seed, spawn_key=(sample_index, branch))))


def _draw_z(seed: int, sample_index: int, branch: int, n_z: int) -> np.ndarray:
    x = _stream(seed, sample_index, branch).standard_normal((n_z, 2, 2))
    return (x[..., 0] + 1j * x[..., 1]) / math.sqrt(2)


def _realize(z, a_fac, b_fac, n_z):
    scale = math.sqrt(n_z)
    forcing = scale * (z @ a_fac.T)
    forcing_conj = scale * np.conj(z @ b_fac.T)
    return forcing, forcing_conj


def sample_noise(params: MediumParams, n_z: int, seed: int, sample_index: int = 0,
                 branch: int = 0, table: DiffusionTable | None = None) -> NoiseRealization:
    """Draw one realization; ``(seed, sample_index, branch)`` fixes it bit-for-bit.

    ``branch`` 0 feeds the solve at ``+omega`` and 1 the independent draw for
    the conjugate frequency ``-omega``.
    """
    if n_z < 16:
        raise ValueError("n_z must be >= 16")
    table = _table(params, table)
    a_fac, b_fac = noise_factors(table.hermitian(params.optical_depth))
    forcing, forcing_conj = _realize(_draw_z(seed, sample_index, branch, n_z), a_fac, b_fac, n_z)
    return NoiseRealization(np.linspace(0.0, 1.0, n_z + 1), forcing, forcing_conj,
                            int(seed), sample_index, branch)


@dataclass(frozen=True)
class Shooter:
    """Cell transfer data for ``dv/dz = i A v + i F`` with piecewise-constant F.

    ``transfer[j]`` maps ``F_j`` to its contribution to ``v(L)`` when
    ``v(0) = 0``; ``phi`` is the full-length propagator ``exp(i A)``.
    """

    phi: np.ndarray
    transfer: np.ndarray

    @classmethod
    def build(cls, matrix: np.ndarray, n_z: int) -> "Shooter":
        h = 1.0 / n_z
        aug = np.zeros((4, 4), dtype=complex)
        aug[:2, :2] = 1j * matrix * h
        aug[:2, 2:] = np.eye(2) * h
        big = expm(aug)
        step, integral = big[:2, :2], big[:2, 2:]
        transfer = np.empty((n_z, 2, 2), dtype=complex)
        acc = 1j * integral
        for j in range(n_z - 1, -1, -1):
            transfer[j] = acc
            acc = step @ acc
        phi = np.linalg.matrix_power(step, n_z)
        return cls(phi=phi, transfer=transfer)

    def solve(self, forcing: np.ndarray, floor: float = THRESHOLD_FLOOR):
        """Return ``(v1(L), v2(0))`` for forcing of shape ``(..., n_z, 2)``.

        Two homogeneous solutions are fixed by ``v(0) = e1`` and ``v(0) = e2``
        and the particular one by ``v(0) = 0``; the split conditions
        ``v1(0) = 0``, ``v2(L) = 0`` then give a 2x2 system.
        """
        vp = np.einsum("jab,...jb->...a", self.transfer, forcing)
        bmat = np.array([[1.0, 0.0], [self.phi[1, 0], self.phi[1, 1]]], dtype=complex)
        if abs(self.phi[1, 1]) < floor:
            raise ThresholdSingularity(self.phi[1, 1], floor)
        rhs = np.stack([np.zeros_like(vp[..., 0]), -vp[..., 1]], axis=-1)
        v0 = np.linalg.solve(bmat, rhs[..., None])[..., 0]
        e1 = self.phi[0, 0] * v0[..., 0] + self.phi[0, 1] * v0[..., 1] + vp[..., 0]
        return e1, v0[..., 1]


def _shooters(cm: CouplingMatrix, n_z: int):
    a = cm.as_array()
    # conjugate equation: dv~/dz = -i conj(A) v~ - i F~  ==  i(-conj A) v~ + i(-F~)
    return Shooter.build(a, n_z), Shooter.build(-np.conj(a), n_z)


def output_weights(shooter: Shooter) -> np.ndarray:
    """Per-cell weights ``g[j, a, b]``: output ``a`` (0 = E1*(L), 1 = E2(0))
    equals ``sum_j g[j, a, :] @ F_j``."""
    t = shooter.transfer
    phi = shooter.phi
    g2 = -t[:, 1, :] / phi[1, 1]
    g1 = t[:, 0, :] + phi[0, 1] * g2
    return np.stack([g1, g2], axis=1)


def expected_moments(params: MediumParams, omega: float, n_z: int = 256,
                     table: DiffusionTable | None = None) -> np.ndarray:
    """Exact ensemble mean of the Monte-Carlo products on an ``n_z`` grid.

    Returns the 2x2 matrix ``<e_a e~_b>`` (``a, b`` over ``E1*(L), E2(0)``);
    its distance from the continuum moments is the discretization bias.
    """
    table = _table(params, table)
    q = table.hermitian(params.optical_depth) * n_z
    direct, conj = _shooters(coupling_matrix(params, omega), n_z)
    g = output_weights(direct)
    g_conj = output_weights(conj)
    # e~_b = -sum_j g~[j, b, :] @ F~_j and <F_j F~_j^T> = q
    return -np.einsum("jac,cd,jbd->ab", g, q, g_conj)


def solve_bvp_sample(params: MediumParams, omega: float, noise: NoiseRealization,
                     floor: float = THRESHOLD_FLOOR):
    """Output fields ``(E1*(L), E2(0))`` for one noise realization."""
    direct, _ = _shooters(coupling_matrix(params, omega), noise.n_z)
    e1, e2 = direct.solve(noise.forcing, floor)
    return complex(e1), complex(e2)


def solve_conjugate_sample(params: MediumParams, omega: float, noise: NoiseRealization,
                           floor: float = THRESHOLD_FLOOR):
    """Partner outputs driven by ``F~``, standing in for ``conj(E1*(L)), conj(E2(0))``."""
    _, conj = _shooters(coupling_matrix(params, omega), noise.n_z)
    e1, e2 = conj.solve(-noise.forcing_conj, floor)
    return complex(e1), complex(e2)


def _block_moments(shooters, factors, seed, start, stop, branch, n_z, theta, floor):
    direct, conj = shooters
    a_fac, b_fac = factors
    z = np.stack([_draw_z(seed, i, branch, n_z) for i in range(start, stop)])
    forcing, forcing_conj = _realize(z, a_fac, b_fac, n_z)
    e1, e2 = direct.solve(forcing, floor)
    c1, c2 = conj.solve(-forcing_conj, floor)
    n1 = e1 * c1
    n2 = e2 * c2
    phase = np.exp(2j * theta)
    s = SQL + 0.25 * (n1 + n2 + phase * e1 * c2 + c1 * e2 / phase)
    return np.stack([n1.real, n2.real, s.real])


def _ensemble(cm, table_q, seed, n_samples, n_z, branch, theta, workers, floor):
    shooters = _shooters(cm, n_z)
    factors = noise_factors(table_q)
    starts = list(range(0, n_samples, BLOCK_SIZE))

    def job(start):
        stop = min(start + BLOCK_SIZE, n_samples)
        return _block_moments(shooters, factors, seed, start, stop, branch, n_z, theta, floor)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(job, starts))
    else:
        blocks = [job(s) for s in starts]
    return np.concatenate(blocks, axis=1)


def _estimate(name, values, seed):
    good = values[np.isfinite(values)]
    flagged = values.size - good.size
    if flagged > MAX_FLAGGED_FRACTION * values.size:
        raise ThresholdSingularity(0.0)
    return McEstimate(
        quantity=name,
        mean=float(np.mean(good)),
        std_error=float(np.std(good, ddof=1) / math.sqrt(good.size)),
        n_samples=int(good.size),
        seed=int(seed),
    )


def mc_spectrum(params: MediumParams, omega: float, n_samples: int, seed: int, n_z: int = 256,
                theta: float | None = None, table: DiffusionTable | None = None,
                workers: int = 1, floor: float = THRESHOLD_FLOOR) -> dict:
    """Ensemble estimates of ``n1``, ``n2`` and ``S_theta`` at ``omega``.

    Pairing mirrors the analytic engine: ``n1`` comes from the solve at
    ``+omega``; ``n2`` and ``S_theta`` from an independent draw solved at
    ``-omega``.  At ``omega = 0`` a single draw serves all three.  Results do
    not depend on ``workers``.
    """
    if n_samples < 100:
        raise ValueError("n_samples must be >= 100")
    if n_z < 16:
        raise ValueError("n_z must be >= 16")
    table = _table(params, table)
    if theta is None:
        theta = best_theta(params, omega, table)
    q = table.hermitian(params.optical_depth)
    minus = _ensemble(coupling_matrix(params, -omega), q, seed, n_samples, n_z, 1 if omega else 0,
                      theta, workers, floor)
    plus = minus if omega == 0 else _ensemble(coupling_matrix(params, omega), q, seed, n_samples,
                                              n_z, 0, theta, workers, floor)
    return {
        "n1": _estimate("n1", plus[0], seed),
        "n2": _estimate("n2", minus[1], seed),
        "s_theta": _estimate("s_theta", minus[2], seed),
    }

import math

import numpy as np
import pytest

from fwmsqueeze import greens, langevin
from fwmsqueeze.langevin import (
    NoiseRealization,
    NoiseTableError,
    Shooter,
    check_table,
    expected_moments,
    mc_spectrum,
    noise_factors,
    sample_noise,
    solve_bvp_sample,
    solve_conjugate_sample,
)
from fwmsqueeze.params import ZERO_TABLE, DiffusionTable, coupling_matrix, diffusion_table
from fwmsqueeze.threshold import kappa_l_for_m_sq


@pytest.fixture
def p_mid(p0):
    return kappa_l_for_m_sq(p0, 0.2)


def pooled_cells(params, n_draws, n_z=250, seed=5, table=None):
    f, g = [], []
    for i in range(n_draws // n_z):
        r = sample_noise(params, n_z, seed, sample_index=i, table=table)
        f.append(r.forcing)
        g.append(r.forcing_conj)
    return np.concatenate(f), np.concatenate(g)


def test_noise_factors_reproduce_q(p0):
    q = diffusion_table(p0).hermitian(p0.optical_depth)
    a, b = noise_factors(q)
    np.testing.assert_allclose(a @ b.conj().T, q, atol=1e-14)
    assert np.linalg.eigvalsh(q).min() < 0  # indefinite: needs the doubled draw


def test_zero_table_gives_zero_samples(p0):
    r = sample_noise(p0, 32, 1, table=ZERO_TABLE)
    assert not np.any(r.forcing) and not np.any(r.forcing_conj)
    est = mc_spectrum(p0.replace(kappa_l=30.0), 0.0, 200, 1, n_z=32, table=ZERO_TABLE)
    assert est["n1"].mean == 0 and est["n2"].mean == 0
    assert est["s_theta"].mean == 0.25 and est["s_theta"].std_error == 0


def test_cross_correlation_matches_table(p0):
    f, g = pooled_cells(p0, 100_000)
    h = 1 / 250
    # <f1 f2> pairs the conjugate partner of F_1 = f1* with F_2 = f2
    prod = g[:, 0] * f[:, 1] * h / p0.optical_depth
    mean = prod.mean()
    se = np.std(prod.real) / math.sqrt(prod.size), np.std(prod.imag) / math.sqrt(prod.size)
    assert abs(mean.real - 0.0) < 3 * se[0]
    assert abs(mean.imag - 1 / p0.delta) < 3 * se[1]
    assert 1 / p0.delta == pytest.approx(0.0447, abs=1e-4)


def test_independent_when_cross_term_zero(p0):
    table = DiffusionTable(1e-3, 0j, 2e-3)
    f, g = pooled_cells(p0, 100_000, table=table)
    prod = g[:, 0] * f[:, 1]
    for part in (prod.real, prod.imag):
        assert abs(part.mean()) < 4 * part.std() / math.sqrt(part.size)


def test_diagonal_pairings(p0):
    f, g = pooled_cells(p0, 100_000)
    h = 1 / 250
    t = diffusion_table(p0)
    for k, d in ((0, t.d11), (1, t.d22)):
        prod = (f[:, k] * g[:, k]).real * h / p0.optical_depth
        assert abs(prod.mean() - d) < 4 * prod.std() / math.sqrt(prod.size)
    # no anomalous pairing <F F^T>
    prod = f[:, 0] * f[:, 1]
    assert abs(prod.mean()) < 4 * np.abs(prod).std() / math.sqrt(prod.size) + 1e-12


def test_table_checks():
    with pytest.raises(NoiseTableError, match="d22"):
        check_table(DiffusionTable(1.0, 0j, -1.0))
    with pytest.raises(NoiseTableError, match="d12"):
        check_table(DiffusionTable(1.0, complex(np.nan, 0), 1.0))


def test_seed_determinism(p0):
    a = sample_noise(p0, 64, 123, sample_index=7)
    b = sample_noise(p0, 64, 123, sample_index=7)
    c = sample_noise(p0, 64, 124, sample_index=7)
    assert np.array_equal(a.forcing, b.forcing) and np.array_equal(a.forcing_conj, b.forcing_conj)
    assert not np.array_equal(a.forcing, c.forcing)
    assert not np.array_equal(a.forcing, sample_noise(p0, 64, 123, 7, branch=1).forcing)


def test_n_z_minimum(p0):
    with pytest.raises(ValueError):
        sample_noise(p0, 8, 0)


def test_zero_noise_solution(p_mid):
    grid = np.linspace(0, 1, 65)
    zero = NoiseRealization(grid, np.zeros((64, 2), complex), np.zeros((64, 2), complex), 0)
    assert solve_bvp_sample(p_mid, 0.0, zero) == (0, 0)


def cell_integrated_kernels(cm, n_z, order=8):
    x, w = np.polynomial.legendre.leggauss(order)
    h = 1 / n_z
    out = np.zeros((n_z, 2, 2), dtype=complex)
    for j in range(n_z):
        s = (j + 0.5 + 0.5 * x) * h
        k = greens.kernels(cm, s)
        rows = np.array([[k.k1_f1s, k.k1_f2], [k.k2_f1s, k.k2_f2]])
        out[j] = rows @ w * h / 2
    return out


def test_boundary_spike(p_mid):
    n_z = 64
    cm = coupling_matrix(p_mid, 0.0)
    forcing = np.zeros((n_z, 2), complex)
    forcing[-1, 0] = 1.0
    noise = NoiseRealization(np.linspace(0, 1, n_z + 1), forcing, forcing, 0)
    e1, _ = solve_bvp_sample(p_mid, 0.0, noise)
    weights = cell_integrated_kernels(cm, n_z)
    assert e1 == pytest.approx(weights[-1, 0, 0], rel=1e-10)
    # the last cell collects ~ i * dz as the width goes to zero
    assert e1 / (1 / n_z) == pytest.approx(1j, abs=0.1)


@pytest.mark.parametrize("omega", [0.0, 0.012])
def test_shooting_matches_kernel_quadrature(p0, omega):
    p = kappa_l_for_m_sq(p0, 1e-3)
    n_z = 64
    noise = sample_noise(p, n_z, 9, sample_index=3)
    weights = cell_integrated_kernels(coupling_matrix(p, omega), n_z)
    ref = np.einsum("jab,jb->a", weights, noise.forcing)
    got = solve_bvp_sample(p, omega, noise)
    np.testing.assert_allclose(got, ref, rtol=1e-6)
    # the partner system is the complex-conjugate problem driven by F~
    ref_c = np.einsum("jab,jb->a", weights.conj(), noise.forcing_conj)
    np.testing.assert_allclose(solve_conjugate_sample(p, omega, noise), ref_c, rtol=1e-6)


def test_shooter_threshold_flag(p0):
    from fwmsqueeze.threshold import find_threshold

    kl = find_threshold(p0, condition="exact").value_at_threshold
    cm = coupling_matrix(p0.replace(kappa_l=kl), 0.0)
    shooter = Shooter.build(cm.as_array(), 32)
    with pytest.raises(greens.ThresholdSingularity):
        shooter.solve(np.ones((32, 2)), floor=1e-9)


def test_linearity(p_mid):
    noise = sample_noise(p_mid, 64, 4)
    e = np.array(solve_bvp_sample(p_mid, 0.0, noise))
    e_scaled = np.array(solve_bvp_sample(p_mid, 0.0, noise.scaled(3.0)))
    np.testing.assert_allclose(e_scaled, 3 * e, rtol=1e-12)
    c = np.array(solve_conjugate_sample(p_mid, 0.0, noise.scaled(3.0)))
    c0 = np.array(solve_conjugate_sample(p_mid, 0.0, noise))
    np.testing.assert_allclose(e_scaled * c, 9 * e * c0, rtol=1e-12)


@pytest.mark.parametrize("omega", [0.0, -0.01])
def test_discrete_expectation_converges(p_mid, omega):
    q = greens._q(p_mid, None)
    n1, n2, x = greens.spectral_moments(coupling_matrix(p_mid, omega), q)
    e256 = expected_moments(p_mid, omega, 256)
    e512 = expected_moments(p_mid, omega, 512)
    np.testing.assert_allclose([e512[0, 0], e512[1, 1], e512[0, 1]], [n1, n2, x], rtol=1e-5)
    # n_z = 256 -> 512 moves the estimator mean far less than its standard error at 1e4 samples
    se = mc_spectrum(p_mid, omega, 1000, 0, n_z=64)["n1"].std_error / math.sqrt(10)
    assert abs(e256[0, 0] - e512[0, 0]) < 0.01 * se


def test_resolution_doubling_within_one_stderr(p_mid):
    means, ses = {}, {}
    for n_z in (256, 512):
        runs = [mc_spectrum(p_mid, 0.0, 2000, s, n_z=n_z)["s_theta"] for s in range(5)]
        means[n_z] = np.mean([r.mean for r in runs])
        ses[n_z] = math.sqrt(sum(r.std_error**2 for r in runs)) / 5
    assert abs(means[256] - means[512]) < math.hypot(ses[256], ses[512]) * 3


def test_mc_determinism_and_threads(p_mid):
    a = mc_spectrum(p_mid, 0.01, 600, 11, n_z=32, workers=1)
    b = mc_spectrum(p_mid, 0.01, 600, 11, n_z=32, workers=3)
    assert a == b
    c = mc_spectrum(p_mid, 0.01, 600, 12, n_z=32)
    assert c["n1"].mean != a["n1"].mean


def test_mc_estimate_fields(p_mid):
    est = mc_spectrum(p_mid, 0.0, 300, 2, n_z=32)
    for name, e in est.items():
        assert e.quantity == name
        assert e.n_samples == 300 and e.seed == 2
        assert e.std_error > 0
    with pytest.raises(ValueError):
        mc_spectrum(p_mid, 0.0, 50, 2)


def test_mc_agrees_with_analytic(p_mid):
    est = mc_spectrum(p_mid, 0.0, 10_000, 2024, theta=math.pi / 4)
    n1, n2 = greens.output_spectrum(p_mid, 0.0)
    s = greens.squeezing_spectrum(p_mid, 0.0, math.pi / 4)
    for key, ref in (("n1", n1), ("n2", n2), ("s_theta", s)):
        assert abs(est[key].mean - ref) < 3 * est[key].std_error


def test_rng_identity_documented():
    assert "Philox" in langevin.RNG_IDENTITY

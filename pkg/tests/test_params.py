import math
import warnings

import numpy as np
import pytest

from fwmsqueeze.params import (
    ZERO_TABLE,
    CouplingMatrix,
    MediumParams,
    ParameterError,
    ValidityWarning,
    coupling_matrix,
    coupling_matrix_generic,
    derived_scales,
    diffusion_table,
    kappa_from_density,
    make_params,
    resonant_susceptibilities,
)


def test_p0_coupling_entries(p0):
    cm = coupling_matrix(p0, 0.0)
    assert cm.a11 == pytest.approx(0.0353762j, abs=1e-10)
    assert cm.a12 == pytest.approx(1.582072, abs=1e-6)
    assert cm.a21 == cm.a12
    assert cm.a22 == 0


def test_coupling_frequency_terms(p0):
    omega = 0.01
    cm = coupling_matrix(p0, omega)
    assert cm.a11 == pytest.approx(35.3762 * complex(-omega, 1e-3) - omega)
    assert cm.a22 == pytest.approx(omega)


@pytest.mark.parametrize("omega", [0.0, 0.013, -0.02])
def test_generic_form_reproduces_resonant(p0, omega):
    k1, k2 = 3.0e4, 2.9e4
    chis = resonant_susceptibilities(p0, omega, k1, k2)
    generic = coupling_matrix_generic(*chis, k1, k2, omega)
    direct = coupling_matrix(p0, omega)
    np.testing.assert_allclose(generic.as_array(), direct.as_array(), rtol=1e-12, atol=1e-14)


def test_generic_rejects_nonfinite():
    with pytest.raises(ParameterError):
        coupling_matrix_generic(np.nan, 0, 0, 0, 1, 1, 0.0)


def test_validity_warning(p0):
    with pytest.warns(ValidityWarning):
        coupling_matrix(p0, 0.5)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        coupling_matrix(p0, 0.2)


@pytest.mark.parametrize(
    "kwargs, field",
    [
        (dict(delta=0.0), "delta"),
        (dict(omega_rabi=-1.0), "omega_rabi"),
        (dict(gamma_0=-1e-3), "gamma_0"),
        (dict(kappa_l=0.0), "kappa_l"),
        (dict(gamma_a=float("nan")), "gamma_a"),
    ],
)
def test_invalid_fields_named(p0, kwargs, field):
    with pytest.raises(ParameterError, match=field):
        p0.replace(**kwargs)


def test_all_errors_reported():
    with pytest.raises(ParameterError) as info:
        MediumParams(gamma_0=-1.0, omega_rabi=0.0, delta=0.0, kappa_l=1.0)
    msg = str(info.value)
    for name in ("gamma_0", "omega_rabi", "delta"):
        assert name in msg


def test_diffusion_table_p0(p0):
    t = diffusion_table(p0)
    assert t.d11 == pytest.approx(1e-3)
    assert t.d12 == pytest.approx(0.0447214j, abs=1e-7)
    assert t.d22 == pytest.approx(0.002, rel=1e-6)
    q = t.hermitian(2.0)
    np.testing.assert_allclose(q, q.conj().T)
    c = t.correlator()
    np.testing.assert_allclose(c, c.T)
    # only the f1 f1*, f1 f2 and f2 f2* pairings (and conjugates) are nonzero
    assert np.count_nonzero(c) == 8


def test_zero_table():
    assert ZERO_TABLE.is_zero
    assert not np.any(ZERO_TABLE.hermitian(10.0))


def test_derived_scales_p0(p0):
    s = derived_scales(p0)
    assert s.delta_omega0 == pytest.approx(0.0447214, rel=1e-6)
    assert s.delta_opt == pytest.approx(22.360680, rel=1e-7)
    assert s.strong_drive and s.far_detuned and s.ideal_regime


def test_derived_scales_flags():
    s = derived_scales(make_params(0.5, 1.0, 2.0, 1.0))
    assert not s.strong_drive
    assert not s.far_detuned
    assert derived_scales(make_params(0.0, 1.0, 30.0, 1.0)).delta_opt is None


def test_negative_detuning_bandwidth_positive():
    assert derived_scales(make_params(1e-3, 1.0, -20.0, 1.0)).delta_omega0 == pytest.approx(0.05)


def test_kappa_from_density():
    assert kappa_from_density(1e18, 7.95e-7, 1.0) == pytest.approx(7.544e4, rel=1e-3)
    with pytest.raises(ParameterError, match="wavelength"):
        kappa_from_density(1e18, -1.0, 1.0)


def test_coupling_matrix_derived_scalars():
    cm = CouplingMatrix(1 + 1j, 2.0, 0.5, -0.3)
    assert cm.a_tilde == pytest.approx((0.7 + 1j) / 2)
    assert cm.a_half == pytest.approx((-1.3 - 1j) / 2)
    assert cm.eta**2 == pytest.approx(cm.a_half**2 + 1.0)
    assert cm.conjugate().a11 == 1 - 1j
    with pytest.raises(ParameterError):
        CouplingMatrix(math.inf, 0, 0, 0)

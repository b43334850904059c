import numpy as np
import pytest

from brownmap.errors import ComplexResult
from brownmap.oracle import (oracle_M_poly, oracle_delta0, oracle_density, oracle_domain_poly,
                             oracle_domain_poly_complex, oracle_domain_poly_uncorrected, oracle_h,
                             oracle_h_inverse, oracle_spectrum_poly, oracle_spectrum_poly_uncorrected)
from brownmap.oracle_check import sample_inside_M

from conftest import rng


def test_domain_poly_values():
    assert oracle_domain_poly(0, 0) == 0
    assert oracle_domain_poly(1, 0) == -1  # the atom at 1 lies inside D
    assert oracle_domain_poly(0, 0.5) == pytest.approx(-0.6875)
    assert oracle_domain_poly(3, 0) == 63


def test_domain_poly_real_and_complex_forms_agree():
    g = rng(1)
    a, b = g.uniform(-3, 3, 500), g.uniform(-3, 3, 500)
    np.testing.assert_allclose(oracle_domain_poly(a, b), oracle_domain_poly_complex(a + 1j * b),
                               atol=1e-11)


def test_uncorrected_domain_poly_misplaces_atom():
    # with the misprint the polynomial is positive at points inside D
    assert oracle_domain_poly_uncorrected(1, 0) == 3
    assert oracle_domain_poly_uncorrected(0, 0.5) == pytest.approx(0.3125)


def test_delta0_values():
    assert oracle_delta0(1.0) == pytest.approx(np.sqrt(2 * np.sqrt(5) - 4) / np.sqrt(2), abs=1e-15)
    assert oracle_delta0(1.0) == pytest.approx(0.4859, abs=1e-4)
    assert oracle_delta0(0.0) == 0.0


def test_delta0_outside_raises():
    with pytest.raises(ComplexResult):
        oracle_delta0(3.0)


def test_h_and_inverse_values():
    assert oracle_h(0.5j) == pytest.approx(1j * (np.sqrt(1.25) + 0.5), abs=1e-15)
    assert oracle_h_inverse(1.618034j) == pytest.approx(0.5j, abs=1e-7)
    assert oracle_density(0.0, 1.618034) == pytest.approx(0.018785, abs=1e-6)
    with pytest.raises(ZeroDivisionError):
        oracle_h_inverse(1 + 1j)


def test_inverse_pair():
    z = sample_inside_M(rng(2), 1000)
    np.testing.assert_allclose(oracle_h(oracle_h_inverse(z)), z, atol=1e-10)


def test_spectrum_octic_uncorrected_differs_by_t4_minus_s4():
    g = rng(3)
    s, t = g.uniform(-2, 2, 200), g.uniform(0, 4, 200)
    np.testing.assert_allclose(oracle_M_poly(s, t) - oracle_spectrum_poly_uncorrected(s, t),
                               t ** 4 - s ** 4, atol=1e-9)
    np.testing.assert_allclose(oracle_spectrum_poly(s, t), oracle_M_poly(s, t), atol=1e-9)


def test_M_poly_sign():
    assert oracle_M_poly(0, 1.618034) < 0
    assert oracle_M_poly(-0.5, 0.5) > 0

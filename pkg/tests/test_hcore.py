import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from brownmap.domain import delta0
from brownmap.hcore import d_partials, h_hat, im_h11_ratio, jacobian_hhat
from brownmap.measure import SpectralMeasure, std_partials

MEASURES = {
    "bernoulli": SpectralMeasure.bernoulli(),
    "three": SpectralMeasure.atomic([-1.0, 0.3, 2.0], [0.2, 0.5, 0.3]),
    "uniform": SpectralMeasure.uniform(n_nodes=201),
}


def test_bernoulli_fixed_point(bernoulli):
    d0 = delta0(bernoulli, 1.0, 0.5j)
    h = h_hat(bernoulli, 1.0, 0.0, 0.5, d0)
    assert abs(h.h3) < 1e-13
    assert h.h12 == pytest.approx(1j * (np.sqrt(1.25) + 0.5), abs=1e-12)


@pytest.mark.parametrize("name", list(MEASURES))
def test_jacobian_matches_finite_differences(name):
    m = MEASURES[name]
    gen = np.random.default_rng(3)
    h = 1e-6
    for _ in range(10):
        x = np.array([gen.normal(), gen.uniform(-1, 2), gen.uniform(0.05, 1.5)])
        J = jacobian_hhat(m, 0.7, *x).matrix
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            fd = (h_hat(m, 0.7, *(x + e)).as_array() - h_hat(m, 0.7, *(x - e)).as_array()) / (2 * h)
            np.testing.assert_allclose(J[:, j], fd, rtol=1e-6, atol=1e-8)


def test_d_partials_identity():
    # D_beta - (beta/delta) D_delta = -2 T for every measure
    m = MEASURES["three"]
    gen = np.random.default_rng(1)
    a, b, d = gen.normal(size=50), gen.normal(size=50), gen.uniform(0.1, 1, 50)
    v = std_partials(m, a, b, d)
    _, Db, Dd = d_partials(v)
    np.testing.assert_allclose(Db - b / d * Dd, -2 * v.T, atol=1e-12)


def test_vectorised_matches_scalar():
    m = MEASURES["three"]
    a, b, d = np.array([0.1, -0.4]), np.array([0.3, 1.2]), np.array([0.2, 0.9])
    J = jacobian_hhat(m, 1.3, a, b, d)
    for k in range(2):
        Jk = jacobian_hhat(m, 1.3, a[k], b[k], d[k])
        np.testing.assert_allclose(J.matrix[k], Jk.matrix, rtol=1e-14)
        assert J.det[k] == pytest.approx(Jk.det, rel=1e-12)


@settings(max_examples=80, deadline=None)
@given(st.sampled_from(list(MEASURES)), st.floats(0.2, 3), st.floats(-2.5, 2.5),
       st.floats(-1, 3), st.floats(1e-3, 2), st.floats(1e-3, 2))
def test_ratio_increasing_in_delta(name, p, a, b, d1, d2):
    lo, hi = sorted((d1, d2))
    if hi - lo < 1e-6:
        hi = lo + 1e-3
    m = MEASURES[name]
    assert im_h11_ratio(m, p, a, b, lo) < im_h11_ratio(m, p, a, b, hi)

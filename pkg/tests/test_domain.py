import numpy as np
import pytest

from brownmap.domain import (auto_window_D, check_assumption, delta0, h_map, limit_ratio,
                             region_contains, sample, trace_boundary_D, trace_boundary_M)
from brownmap.errors import EmptyBoundary
from brownmap.measure import SpectralMeasure, cauchy_transform
from brownmap.oracle import oracle_M_poly, oracle_domain_poly

from conftest import rng, sample_D


def test_limit_ratio_values(bernoulli):
    assert limit_ratio(bernoulli, 1.0, 1.0) == pytest.approx(-1.0, abs=1e-15)
    assert limit_ratio(bernoulli, 1.0, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert limit_ratio(bernoulli, 1.0, 3.0) == pytest.approx(1 - 10 / 73, abs=1e-14)


def test_delta0_values(bernoulli):
    assert delta0(bernoulli, 1.0, 1.0) == pytest.approx(0.48586827175663, abs=1e-12)
    assert delta0(bernoulli, 1.0, 0.5j) == pytest.approx(0.60665804927478, abs=1e-12)
    assert delta0(bernoulli, 1.0, 3.0) == 0.0


def test_h_map_values(bernoulli):
    assert h_map(bernoulli, 1.0, 0.5j) == pytest.approx(1.6180339887499j, abs=1e-12)
    assert h_map(bernoulli, 1.0, 3.0) == pytest.approx(2.671232876712 + 0.876712328767j, abs=1e-11)


def test_h_outside_formula(two_point):
    gen = rng(5)
    lam = sample_D(two_point, 0.7, 50, gen, inside=False)
    G = np.array([cauchy_transform(two_point, z) for z in lam])
    np.testing.assert_allclose(h_map(two_point, 0.7, lam), lam - 0.7 / (1j + G), atol=1e-12)


def test_h_conjugate_symmetry(uniform_small):
    # symmetric law: h(-conj(lam)) = -conj(h(lam))
    lam = np.array([0.3 + 0.2j, 0.7 + 1.1j, 1.4 - 0.2j, 0.05j])
    np.testing.assert_allclose(h_map(uniform_small, 1.0, -lam.conj()), -h_map(uniform_small, 1.0, lam).conj(),
                               atol=1e-11)


@pytest.mark.parametrize("p, inside", [(0.4, False), (0.49, False), (0.51, True), (1.0, True)])
def test_atom_threshold(two_point, p, inside):
    lr = limit_ratio(two_point, p, np.array([-2.0, 2.0]))
    assert np.all((lr < 0) == inside)
    np.testing.assert_allclose(lr, 1 - p / 0.5, atol=1e-14)


def test_limit_ratio_sign_matches_oracle(bernoulli):
    gen = rng(11)
    z = gen.uniform(-2.4, 2.4, 2000) + 1j * gen.uniform(-0.8, 2.1, 2000)
    poly = oracle_domain_poly(z.real, z.imag)
    clear = np.abs(poly) > 1e-6
    assert np.array_equal((limit_ratio(bernoulli, 1.0, z[clear]) < 0), poly[clear] < 0)


def test_uniform_limit_ratio_on_support(uniform):
    lr = limit_ratio(uniform, 1.0, np.array([0.0, 1.0, 1.5]))
    assert lr[0] < 0 and lr[1] < 0 and lr[2] > 0


def test_trace_bernoulli(bernoulli):
    bD = trace_boundary_D(bernoulli, 1.0, auto_window_D(bernoulli, 1.0), 256)
    assert len(bD) == 1 and bD[0].closed
    v = bD[0].vertices
    assert np.abs(oracle_domain_poly(v.real, v.imag)).max() < 1e-9
    bM = trace_boundary_M(bernoulli, 1.0, bD[0])
    assert bM.closed and bM.which == "boundary_of_M" and not bM.fallback
    w = bM.vertices
    assert np.abs(oracle_M_poly(w.real, w.imag)).max() < 1e-9
    assert np.all(w.imag > 0)


def test_trace_empty_window(bernoulli):
    with pytest.raises(EmptyBoundary):
        trace_boundary_D(bernoulli, 1.0, (50, 60, 50, 60), 32)


def test_two_point_small_p_has_two_components(two_point):
    bD = trace_boundary_D(two_point, 0.4, auto_window_D(two_point, 0.4), 256)
    assert len(bD) == 2


def test_assumption_warns_for_heavy_atoms(two_point):
    # at p below the atom weight the atoms sit on or outside bd(D)
    report = check_assumption(two_point, 0.4)
    assert not report.ok
    assert len([w for w in report.warnings if "atom" in w]) == 2


def test_assumption_ok(bernoulli, uniform):
    assert check_assumption(bernoulli, 1.0).ok
    r = check_assumption(uniform, 1.0)
    assert r.ok and r.support_max_ratio < 0


def test_sample(bernoulli):
    s = sample(bernoulli, 1.0, 0.5j)
    assert s.in_domain and s.delta0 > 0 and s.limit_ratio < 0
    s = sample(bernoulli, 1.0, 3.0)
    assert not s.in_domain and s.delta0 == 0


def test_region_contains():
    square = [np.array([0, 1, 1 + 1j, 1j, 0])]
    z = np.array([0.5 + 0.5j, 1.5 + 0.5j, 1.03 + 0.5j])
    assert region_contains(square, z).tolist() == [True, False, False]
    assert region_contains(square, z, dilation=0.05).tolist() == [True, False, True]


def test_auto_window_contains_boundary(uniform_small):
    w = auto_window_D(uniform_small, 1.0)
    bD = trace_boundary_D(uniform_small, 1.0, w, 128)
    v = np.concatenate([pl.vertices for pl in bD])
    assert v.real.min() > w[0] and v.real.max() < w[1]
    assert v.imag.min() > w[2] and v.imag.max() < w[3]

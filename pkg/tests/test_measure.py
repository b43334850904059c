import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from brownmap.errors import DivergentIntegral, MeasureSpecError, PoleAtAtom
from brownmap.measure import (SpectralMeasure, cauchy_transform, kernel_sums, load_measure,
                              std_integrals, std_partials)

finite = st.floats(-3, 3, allow_nan=False)
positive = st.floats(1e-3, 3, allow_nan=False)


def test_bernoulli_cauchy_transform(bernoulli):
    assert cauchy_transform(bernoulli, 2.0) == pytest.approx(2.0 / 3.0, abs=1e-15)
    assert cauchy_transform(bernoulli, 1j) == pytest.approx(-0.5j, abs=1e-15)


def test_cauchy_transform_pole(bernoulli):
    with pytest.raises(PoleAtAtom):
        cauchy_transform(bernoulli, 1.0)


@pytest.mark.parametrize("z", [2j, 0.3 + 0.5j, -1.5 + 0.01j, 0.2 + 1e-4j])
def test_uniform_cauchy_transform_closed_form(uniform, z):
    exact = 0.5 * np.log((z + 1) / (z - 1))
    assert cauchy_transform(uniform, z) == pytest.approx(exact, abs=1e-9)


def test_uniform_integrals_near_support(uniform):
    # S and T at delta = 0 close to the support need the refined rule
    a, b = 0.3, 1e-4
    S, T = kernel_sums(uniform, a, b, 0.0)
    T_exact = (np.arctan((a + 1) / b) - np.arctan((a - 1) / b)) / (2 * b)
    S_exact = 0.25 * np.log(((a + 1) ** 2 + b * b) / ((a - 1) ** 2 + b * b))
    assert S == pytest.approx(S_exact, rel=1e-9)
    assert T == pytest.approx(T_exact, rel=1e-9)


def test_semicircle_against_scipy():
    from scipy.integrate import quad

    m = SpectralMeasure.from_density("semicircle", (-2, 2))
    a, b, d = 0.4, 0.3, 0.2
    rho = lambda t: np.sqrt(4 - t * t) / (2 * np.pi)  # noqa: E731
    q = lambda t: (a - t) ** 2 + b * b + d * d  # noqa: E731
    S_ref = quad(lambda t: (a - t) / q(t) * rho(t), -2, 2, epsabs=1e-13)[0]
    T_ref = quad(lambda t: rho(t) / q(t), -2, 2, epsabs=1e-13)[0]
    S, T = kernel_sums(m, a, b, d)
    assert S == pytest.approx(S_ref, abs=1e-10)
    assert T == pytest.approx(T_ref, abs=1e-10)


def test_validation_errors():
    with pytest.raises(MeasureSpecError):
        SpectralMeasure.atomic([1.0], [1.0])
    with pytest.raises(MeasureSpecError):
        SpectralMeasure.atomic([1.0, 1.0], [0.5, 0.5])
    with pytest.raises(MeasureSpecError):
        SpectralMeasure.atomic([0.0, 1.0], [0.5, 0.6])
    with pytest.raises(MeasureSpecError):
        SpectralMeasure.atomic([0.0, 1.0], [0.0, 1.0])
    with pytest.raises(MeasureSpecError):
        SpectralMeasure([], [0.0, 2.0], [0.5, 0.5], support=(-1, 1))


def test_arrays_are_read_only(bernoulli):
    with pytest.raises(ValueError):
        bernoulli.atom_weights[0] = 0.7


@pytest.mark.parametrize("data, field", [
    ({"type": "atomic"}, "atoms"),
    ({"type": "atomic", "atoms": [{"t": 1}]}, "atoms[0]"),
    ({"type": "atomic", "atoms": [{"t": 1, "w": "x"}, {"t": 2, "w": 0.5}]}, "atoms[0]"),
    ({"type": "spline"}, "type"),
    ({"type": "quadrature", "support": [0]}, "support"),
    ({"type": "quadrature", "support": [0, 1], "density": "cauchy"}, "density"),
    ({"type": "quadrature", "support": [0, 1], "nodes": [0.5], "weights": "x"}, "weights"),
])
def test_json_errors_name_field(data, field):
    with pytest.raises(MeasureSpecError, match=field.replace("[", r"\[").replace("]", r"\]")):
        SpectralMeasure.from_dict(data)


def test_json_mass_tolerance():
    ok = {"type": "atomic", "atoms": [{"t": -1, "w": 0.5 + 4e-10}, {"t": 1, "w": 0.5}]}
    m = SpectralMeasure.from_dict(ok)
    assert m.atom_weights.sum() == pytest.approx(1.0, abs=1e-15)
    bad = {"type": "atomic", "atoms": [{"t": -1, "w": 0.5 + 1e-6}, {"t": 1, "w": 0.5}]}
    with pytest.raises(MeasureSpecError, match="total mass"):
        SpectralMeasure.from_dict(bad)


def test_load_measure_roundtrip(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"type": "quadrature", "support": [-1, 1], "density": "uniform",
                                "n_nodes": 101}))
    m = load_measure(path)
    assert m.quad_nodes.size == 101
    assert m.quad_weights.sum() == pytest.approx(1.0, abs=1e-14)
    again = SpectralMeasure.from_dict(m.to_dict())
    assert again.fingerprint() == m.fingerprint()


def test_load_measure_malformed(tmp_path):
    path = tmp_path / "m.json"
    path.write_text("{not json")
    with pytest.raises(MeasureSpecError):
        load_measure(path)


def test_tabulated_density_with_values():
    x, w = np.polynomial.legendre.leggauss(400)
    data = {"type": "quadrature", "support": [-1, 1], "density": "tabulated",
            "nodes": x.tolist(), "weights": (w / 2).tolist(), "values": [0.5] * 400}
    m = SpectralMeasure.from_dict(data)
    z = 0.1 + 1e-5j
    assert cauchy_transform(m, z) == pytest.approx(0.5 * np.log((z + 1) / (z - 1)), abs=1e-7)


def test_divergent_at_atom(bernoulli):
    with pytest.raises(DivergentIntegral):
        std_integrals(bernoulli, 1.0, 0.0, 0.0)


@settings(max_examples=60, deadline=None)
@given(finite, finite, positive)
def test_positivity_and_symmetry(a, b, d):
    m = SpectralMeasure.atomic([-1.0, 0.0, 1.0], [0.25, 0.5, 0.25])
    v = std_integrals(m, a, b, d)
    w = std_integrals(m, -a, b, d)
    assert v.T > 0 and v.D > 0
    assert w.S == pytest.approx(-v.S, abs=1e-13)
    assert w.T == pytest.approx(v.T, rel=1e-13)


@settings(max_examples=40, deadline=None)
@given(finite, finite, positive)
def test_partials_match_finite_differences(a, b, d):
    m = SpectralMeasure.atomic([-1.0, 0.5, 2.0], [0.3, 0.3, 0.4])
    v = std_partials(m, a, b, d)
    h = 1e-6
    for name, (da, db, dd) in {"alpha": (h, 0, 0), "beta": (0, h, 0), "delta": (0, 0, h)}.items():
        p = std_integrals(m, a + da, b + db, d + dd)
        q = std_integrals(m, a - da, b - db, d - dd)
        for key in ("S", "T"):
            fd = (getattr(p, key) - getattr(q, key)) / (2 * h)
            an = getattr(v, f"d{key}_d{name}")
            assert an == pytest.approx(fd, rel=1e-6, abs=1e-8 * max(1.0, abs(v.T)))

import numpy as np
import pytest

from brownmap.density import density_grid
from brownmap.errors import WindowMismatch
from brownmap.measure import SpectralMeasure
from brownmap.rmt import (EigenCloud, compare_to_density, grid_as_cloud, quantile_diagonal,
                          sample_model, sample_wishart)


def test_small_model_upper_half_plane(bernoulli):
    c = sample_model(bernoulli, 1.0, 4, seed=7)
    assert c.eigenvalues.shape == (4,)
    assert np.all(c.eigenvalues.imag >= -1e-12)


def test_deterministic(bernoulli):
    a = sample_model(bernoulli, 1.0, 64, seed=123)
    b = sample_model(bernoulli, 1.0, 64, seed=123)
    assert np.array_equal(a.eigenvalues, b.eigenvalues)
    c = sample_model(bernoulli, 1.0, 64, seed=124)
    assert not np.array_equal(a.eigenvalues, c.eigenvalues)


def test_trace_preserved(bernoulli):
    # trace(X + iY) = sum of eigenvalues
    c = sample_model(bernoulli, 1.0, 100, seed=1)
    rng = np.random.Generator(np.random.PCG64(1))
    Y = sample_wishart(1.0, 100, rng)
    expected = quantile_diagonal(bernoulli, 100).sum() + 1j * np.trace(Y).real
    assert c.eigenvalues.sum() == pytest.approx(expected, abs=1e-9)


def test_quantile_diagonal():
    m = SpectralMeasure.atomic([-1.0, 0.0, 2.0], [0.25, 0.5, 0.25])
    d = quantile_diagonal(m, 8)
    assert d.tolist() == [-1, -1, 0, 0, 0, 0, 2, 2]
    u = quantile_diagonal(SpectralMeasure.uniform(n_nodes=401), 10)
    np.testing.assert_allclose(u, np.linspace(-0.9, 0.9, 10), atol=0.01)


def test_marchenko_pastur_edge():
    rng = np.random.Generator(np.random.PCG64(0))
    ev = np.linalg.eigvalsh(sample_wishart(1.0, 512, rng))
    assert ev.max() < 4.5 and ev.min() > -1e-10
    assert np.mean(ev) == pytest.approx(1.0, abs=0.05)


def test_rectangular_parameter():
    rng = np.random.Generator(np.random.PCG64(0))
    Y = sample_wishart(0.5, 200, rng)
    ev = np.linalg.eigvalsh(Y)
    # rank floor(pN) and mean p
    assert np.sum(ev > 1e-8) == 100
    assert np.trace(Y).real / 200 == pytest.approx(0.5, abs=0.05)


def test_gue_squared_only_for_p_one(bernoulli):
    c = sample_model(bernoulli, 1.0, 32, seed=3, model="gue-squared")
    assert np.all(c.eigenvalues.imag >= -1e-10)
    with pytest.raises(ValueError):
        sample_model(bernoulli, 0.5, 32, seed=3, model="gue-squared")


def test_bad_arguments(bernoulli):
    with pytest.raises(ValueError):
        sample_model(bernoulli, 1.0, 1, seed=0)
    with pytest.raises(ValueError):
        sample_model(bernoulli, 1.0, 8, seed=0, model="wigner")


@pytest.fixture(scope="module")
def small_grid():
    return density_grid(SpectralMeasure.bernoulli(), 1.0, (-1.2, 1.2, 0.0, 3.6), 48)


def test_grid_cloud_has_zero_distance(small_grid):
    r = compare_to_density(grid_as_cloud(small_grid), small_grid, bins=12)
    assert r.l1 == pytest.approx(0.0, abs=1e-12)


def test_window_mismatch(small_grid):
    cloud = EigenCloud(2, None, np.array([0.0 + 1j, 5.0 + 1j]))
    with pytest.raises(WindowMismatch):
        compare_to_density(cloud, small_grid)


def test_report_fields(bernoulli, small_grid):
    c = sample_model(bernoulli, 1.0, 128, seed=0)
    r = compare_to_density(c, small_grid, bins=12)
    assert r.residuals.shape == (12, 12)
    assert r.empirical.sum() == pytest.approx(1.0)
    assert 0 <= r.l1 <= 2
    assert np.isnan(r.containment)  # grid built without a boundary


@pytest.mark.slow
def test_l1_non_increasing_when_N_doubles(bernoulli):
    from brownmap.density import window_from_boundary
    from brownmap.domain import auto_window_D, trace_boundary_D, trace_boundary_M

    bD = trace_boundary_D(bernoulli, 1.0, auto_window_D(bernoulli, 1.0), 512)
    bM = [trace_boundary_M(bernoulli, 1.0, pl) for pl in bD]
    clouds = {N: [sample_model(bernoulli, 1.0, N, seed) for seed in range(10)] for N in (512, 1024)}
    pts = np.concatenate([c.eigenvalues for cs in clouds.values() for c in cs])
    grid = density_grid(bernoulli, 1.0, window_from_boundary(bM, points=pts), 240, boundary=bM)
    med = {N: np.median([compare_to_density(c, grid, 24).l1 for c in cs]) for N, cs in clouds.items()}
    assert med[1024] <= med[512]

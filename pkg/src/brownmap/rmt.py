"""Finite-N matrix model ``X_N + i Y_N`` and comparison with the density grid.

``X_N`` is diagonal with entries at the ``(k + 1/2)/N`` quantiles of the
spectral measure.  ``Y_N = G G* / N`` with ``G`` an ``N x floor(pN)`` complex
Ginibre matrix (Marchenko-Pastur with parameter ``p``); the alternative
``"gue-squared"`` model uses a GUE matrix ``G`` and ``Y_N = G^2 / N`` and is
only defined for ``p = 1``.

All randomness comes from one ``numpy.random.Generator(PCG64(seed))`` per
matrix.  Entries are filled row-major, real parts first, then imaginary parts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .domain import region_contains
from .errors import EigensolverFailure, WindowMismatch
from .measure import SpectralMeasure

__all__ = [
    "EigenCloud",
    "MCReport",
    "MODELS",
    "quantile_diagonal",
    "sample_wishart",
    "sample_model",
    "grid_as_cloud",
    "compare_to_density",
]

MODELS = ("ginibre", "gue-squared")
CONTAINMENT_DILATION = 0.05


@dataclass(frozen=True)
class EigenCloud:
    N: int
    seed: int | None
    eigenvalues: np.ndarray
    model: dict = field(default_factory=dict)
    weights: np.ndarray | None = None

    def __post_init__(self):
        if self.eigenvalues.shape != (self.N,):
            raise ValueError("eigenvalue count differs from N")


@dataclass
class MCReport:
    l1: float
    containment: float
    bins: int
    residuals: np.ndarray
    bin_edges_s: np.ndarray
    bin_edges_t: np.ndarray
    empirical: np.ndarray
    predicted: np.ndarray

    def to_dict(self) -> dict:
        return {"l1": self.l1, "containment": self.containment, "bins": self.bins,
                "dilation": CONTAINMENT_DILATION,
                "max_abs_residual": float(np.abs(self.residuals).max())}


def quantile_diagonal(m: SpectralMeasure, N: int) -> np.ndarray:
    """Values of the quantile function of ``m`` at ``(k + 1/2)/N``, k < N."""
    locs = np.concatenate([m.atom_locations, m.quad_nodes])
    wts = np.concatenate([m.atom_weights, m.quad_weights])
    order = np.argsort(locs, kind="stable")
    locs, cdf = locs[order], np.cumsum(wts[order])
    u = (np.arange(N) + 0.5) / N
    idx = np.searchsorted(cdf, u * cdf[-1], side="left")
    return locs[np.minimum(idx, locs.size - 1)]


def _complex_gaussian(rng, shape):
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) / math.sqrt(2.0)


def sample_wishart(p: float, N: int, rng, model: str = "ginibre") -> np.ndarray:
    if model == "ginibre":
        M = max(1, int(math.floor(p * N)))
        G = _complex_gaussian(rng, (N, M))
        return G @ G.conj().T / N
    if model == "gue-squared":
        if p != 1:
            raise ValueError("the gue-squared model is only defined for p = 1")
        A = _complex_gaussian(rng, (N, N))
        G = (A + A.conj().T) / math.sqrt(2.0)
        return G @ G / N
    raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")


def _eigvals(A: np.ndarray, rng) -> np.ndarray:
    try:
        ev = np.linalg.eigvals(A)
        if np.all(np.isfinite(ev)):
            return ev
    except np.linalg.LinAlgError:
        pass
    # conjugate by a Haar unitary and try once more
    Q, R = np.linalg.qr(_complex_gaussian(rng, A.shape))
    Q = Q * (np.diag(R) / np.abs(np.diag(R)))
    try:
        ev = np.linalg.eigvals(Q.conj().T @ A @ Q)
    except np.linalg.LinAlgError as exc:
        raise EigensolverFailure(str(exc)) from exc
    if not np.all(np.isfinite(ev)):
        raise EigensolverFailure("non-finite eigenvalues")
    return ev


def sample_model(m: SpectralMeasure, p: float, N: int, seed: int | None,
                 model: str = "ginibre") -> EigenCloud:
    """Eigenvalues of ``X_N + i Y_N``, sorted by real then imaginary part."""
    if N < 2:
        raise ValueError("N must be at least 2")
    if not p > 0:
        raise ValueError("p must be positive")
    rng = np.random.Generator(np.random.PCG64(seed))
    Y = sample_wishart(p, N, rng, model)
    A = 1j * Y
    A[np.diag_indices(N)] += quantile_diagonal(m, N)
    ev = _eigvals(A, rng)
    ev = ev[np.lexsort((ev.imag, ev.real))]
    desc = {"measure_hash": m.fingerprint(), "p": float(p), "model": model}
    return EigenCloud(N, seed, ev, desc)


def grid_as_cloud(grid) -> EigenCloud:
    """Weighted point cloud at the inside cell centres, weights ``f * area``."""
    S, T = np.meshgrid(grid.s, grid.t)
    inside = grid.inside & np.isfinite(grid.f)
    z = (S + 1j * T)[inside]
    w = grid.f[inside] * grid.cell_area
    return EigenCloud(int(z.size), None, z, {"source": "density_grid"}, w)


def _grid_bins(grid, bins):
    s0, s1, t0, t1 = grid.window
    S, T = np.meshgrid(grid.s, grid.t)
    inside = grid.inside & np.isfinite(grid.f)
    mass, es, et = np.histogram2d(S[inside], T[inside], bins=bins, range=[[s0, s1], [t0, t1]],
                                  weights=grid.f[inside] * grid.cell_area)
    return mass, es, et


def compare_to_density(cloud: EigenCloud, grid, bins: int = 24, boundary=None) -> MCReport:
    """Binned L1 distance and containment of ``cloud`` against ``grid``.

    Both the empirical and the predicted bin masses are normalised to total
    one before taking the L1 distance.  Containment is measured against
    ``boundary`` (default: the grid's polylines) dilated by 0.05.
    """
    s0, s1, t0, t1 = grid.window
    z = cloud.eigenvalues
    if z.size and (z.real.min() < s0 or z.real.max() > s1 or z.imag.min() < t0 or z.imag.max() > t1):
        raise WindowMismatch(
            f"cloud bounding box [{z.real.min():.4g}, {z.real.max():.4g}] x "
            f"[{z.imag.min():.4g}, {z.imag.max():.4g}] exceeds the grid window")
    pred, es, et = _grid_bins(grid, bins)
    emp, _, _ = np.histogram2d(z.real, z.imag, bins=[es, et], weights=cloud.weights)
    if emp.sum() > 0:
        emp = emp / emp.sum()
    if pred.sum() > 0:
        pred = pred / pred.sum()
    resid = emp - pred
    polys = boundary if boundary is not None else grid.boundary
    if polys:
        inside = region_contains(polys, z, dilation=CONTAINMENT_DILATION)
        w = np.ones(z.size) if cloud.weights is None else cloud.weights
        containment = float(np.sum(w * inside) / np.sum(w)) if z.size else float("nan")
    else:
        containment = float("nan")
    return MCReport(float(np.abs(resid).sum()), containment, int(bins), resid, es, et, emp, pred)

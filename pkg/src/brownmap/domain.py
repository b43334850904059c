"""Membership in D, the root delta0, the map h, and boundary tracing.

``D`` is the set of ``lam`` where ``lim_{d -> 0+} (1 - p T/D)`` is negative.
Inside ``D`` the ratio ``1 - p T/D`` crosses zero exactly once in ``d``; that
crossing is ``delta0(lam)`` and ``h(lam) = h1 + i h2`` evaluated there.
Outside ``cl(D)`` we have ``delta0 = 0`` and ``h(lam) = lam - p/(i + G(lam))``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergentIntegral, EmptyBoundary, PoleAtAtom
from .hcore import h_hat, h_hat_from_values
from .measure import SpectralMeasure, StdValues, cauchy_transform, kernel_sums

__all__ = [
    "DomainSample",
    "BoundaryPolyline",
    "AssumptionReport",
    "limit_ratio",
    "delta0",
    "h_map",
    "sample",
    "trace_boundary_D",
    "trace_boundary_M",
    "check_assumption",
    "region_contains",
    "auto_window_D",
]

log = logging.getLogger(__name__)

RICHARDSON_STEPS = (1e-3, 5e-4, 2.5e-4)
DELTA_TOL = 1e-13
BOUNDARY_TOL = 1e-8


@dataclass(frozen=True)
class DomainSample:
    lam: complex
    limit_ratio: float
    in_domain: bool
    delta0: float
    h: complex


@dataclass(frozen=True)
class BoundaryPolyline:
    vertices: np.ndarray
    closed: bool
    which: str  # "boundary_of_D" or "boundary_of_M"
    fallback: tuple = field(default=())  # vertex ids mapped by a one-sided limit

    def __len__(self) -> int:
        return len(self.vertices)


@dataclass(frozen=True)
class AssumptionReport:
    """Check that every point of spec(x) lies in cl(D), plus the S^2/T diagnostic."""

    ok: bool
    warnings: list
    atom_ratios: dict
    support_max_ratio: float | None
    s2_over_t_max: float | None


def _ratio_at(m: SpectralMeasure, p: float, a, b, d):
    S, T = kernel_sums(m, a, b, d)
    D = np.asarray(d) ** 2 * T * T + S * S + (1.0 - np.asarray(b) * T) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        r = 1.0 - p * T / D
    return np.where(np.isfinite(T) & (D == 0), -np.inf, r)


def limit_ratio(m: SpectralMeasure, p: float, lam):
    """``lim_{d -> 0+} (1 - p T/D)`` at ``lam``; negative exactly on D.

    At a real atom of mass ``w`` the limit is ``1 - p/w``.  On the real
    axis inside the support of the continuous part the limit is estimated
    by Richardson extrapolation from ``RICHARDSON_STEPS``; elsewhere the
    ratio is continuous at ``d = 0`` and is evaluated there directly.
    """
    lam = np.asarray(lam, dtype=complex)
    a, b = lam.real.ravel(), lam.imag.ravel()
    out = np.empty(a.size)
    atom_hit = (b == 0) & np.isin(a, m.atom_locations)
    richardson = (b == 0) & m.in_ac_support(a) & ~atom_hit
    direct = ~(atom_hit | richardson)
    if direct.any():
        out[direct] = _ratio_at(m, p, a[direct], b[direct], 0.0)
    for i in np.flatnonzero(atom_hit):
        out[i] = 1.0 - p / m.atom_weight_at(a[i], tol=0.0)
    if richardson.any():
        ar = a[richardson]
        f = [_ratio_at(m, p, ar, 0.0, h) for h in RICHARDSON_STEPS]
        out[richardson] = (8.0 * f[2] - 6.0 * f[1] + f[0]) / 3.0
    out = out.reshape(lam.shape)
    return float(out) if out.ndim == 0 else out


def _bisect_delta(m, p, a, b, tol=DELTA_TOL):
    """Vectorised bisection for the zero of d -> 1 - pT/D on (0, inf)."""
    lo = np.zeros(a.size)
    hi = np.ones(a.size)
    todo = np.ones(a.size, dtype=bool)
    while todo.any():
        r = _ratio_at(m, p, a[todo], b[todo], hi[todo])
        idx = np.flatnonzero(todo)
        grow = ~(r > 0)
        lo[idx[grow]] = hi[idx[grow]]
        hi[idx[grow]] *= 2.0
        todo[idx[~grow]] = False
    while True:
        width = hi - lo
        active = width > np.maximum(tol, 4e-16 * hi)
        if not active.any():
            break
        mid = 0.5 * (lo + hi)
        r = _ratio_at(m, p, a[active], b[active], mid[active])
        idx = np.flatnonzero(active)
        neg = r < 0
        lo[idx[neg]] = mid[idx[neg]]
        hi[idx[~neg]] = mid[idx[~neg]]
    return 0.5 * (lo + hi)


def _delta0_given(m, p, lam, lr):
    lam = np.asarray(lam, dtype=complex).ravel()
    lr = np.asarray(lr, dtype=float).ravel()
    out = np.zeros(lam.size)
    inside = lr < 0
    if inside.any():
        out[inside] = _bisect_delta(m, p, lam.real[inside], lam.imag[inside])
    return out


def delta0(m: SpectralMeasure, p: float, lam):
    """Unique positive root of ``1 - pT/D`` in delta for lam in D, else 0."""
    lam = np.asarray(lam, dtype=complex)
    out = _delta0_given(m, p, lam, limit_ratio(m, p, lam)).reshape(lam.shape)
    return float(out) if out.ndim == 0 else out


def _h_outside(m, p, lam):
    g = cauchy_transform(m, lam)
    return lam - p / (1j + g)


def h_map(m: SpectralMeasure, p: float, lam):
    """The reparametrisation h, evaluated on both sides of bd(D).

    Raises :class:`PoleAtAtom` when an outside point sits on an atom.
    """
    lam = np.asarray(lam, dtype=complex)
    flat = lam.ravel()
    lr = np.atleast_1d(limit_ratio(m, p, flat))
    d0 = _delta0_given(m, p, flat, lr)
    out = np.empty(flat.size, dtype=complex)
    inside = lr < 0
    if inside.any():
        out[inside] = h_hat(m, p, flat.real[inside], flat.imag[inside], d0[inside]).h12
    if (~inside).any():
        out[~inside] = _h_outside(m, p, flat[~inside])
    out = out.reshape(lam.shape)
    return complex(out) if out.ndim == 0 else out


def sample(m: SpectralMeasure, p: float, lam: complex) -> DomainSample:
    lam = complex(lam)
    lr = limit_ratio(m, p, lam)
    d0 = float(_delta0_given(m, p, lam, lr)[0])
    if lr < 0:
        h = complex(h_hat(m, p, lam.real, lam.imag, d0).h12)
    else:
        h = complex(_h_outside(m, p, lam))
    return DomainSample(lam, float(lr), bool(lr < 0), d0, h)


# ---------------------------------------------------------------------------
# boundary tracing
# ---------------------------------------------------------------------------

def _grid(window, resolution):
    x0, x1, y0, y1 = map(float, window)
    if not (x0 < x1 and y0 < y1):
        raise ValueError("window must satisfy x0 < x1 and y0 < y1")
    if resolution < 16:
        raise ValueError("resolution must be at least 16")
    return np.linspace(x0, x1, resolution), np.linspace(y0, y1, resolution)


def _refine_on_edges(f, p0, p1, f0, iters=64):
    """Bisect a scalar level function along segments p0 -> p1 (vectorised)."""
    lo = np.zeros(p0.size)
    hi = np.ones(p0.size)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = f(p0 + mid * (p1 - p0))
        same = np.sign(fm) == np.sign(f0)
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    return p0 + 0.5 * (lo + hi) * (p1 - p0)


def trace_boundary_D(m: SpectralMeasure, p: float, window, resolution: int = 512,
                     tol: float = BOUNDARY_TOL) -> list[BoundaryPolyline]:
    """Polylines approximating the zero set of :func:`limit_ratio` in ``window``.

    Marching squares on a ``resolution x resolution`` grid locates the crossing
    edges; each crossing is then refined by bisection along its grid edge.
    Vertices whose refined residual stays above ``tol`` (a jump rather than a
    zero crossing) are dropped.
    """
    from skimage.measure import find_contours

    xs, ys = _grid(window, resolution)
    lam = xs[None, :] + 1j * ys[:, None]
    values = np.asarray(limit_ratio(m, p, lam), dtype=float)
    finite = np.clip(np.nan_to_num(values, nan=0.0, posinf=1e6, neginf=-1e6), -1e6, 1e6)
    if finite.min() >= 0 or finite.max() < 0:
        raise EmptyBoundary("no sign change of the limit ratio inside the window")
    contours = find_contours(finite, 0.0)
    if not contours:
        raise EmptyBoundary("no sign change of the limit ratio inside the window")

    def level(z):
        return np.asarray(limit_ratio(m, p, z), dtype=float)

    polylines = []
    for c in contours:
        rows, cols = c[:, 0], c[:, 1]
        on_row = np.isclose(rows, np.round(rows), atol=1e-9)
        r0 = np.where(on_row, np.round(rows), np.floor(rows)).astype(int)
        c0 = np.where(on_row, np.floor(cols), np.round(cols)).astype(int)
        r1 = np.where(on_row, r0, np.minimum(r0 + 1, resolution - 1))
        c1 = np.where(on_row, np.minimum(c0 + 1, resolution - 1), c0)
        p0 = xs[c0] + 1j * ys[r0]
        p1 = xs[c1] + 1j * ys[r1]
        f0 = finite[r0, c0]
        f1 = finite[r1, c1]
        verts = _refine_on_edges(level, p0, p1, f0)
        exact0, exact1 = f0 == 0, f1 == 0
        verts = np.where(exact0, p0, np.where(exact1, p1, verts))
        residual = np.abs(level(verts))
        keep = np.isfinite(residual) & (residual < tol)
        if keep.sum() < 2:
            continue
        dropped = int((~keep).sum())
        if dropped:
            log.debug("dropped %d vertices with residual above %g", dropped, tol)
        verts = verts[keep]
        closed = bool(np.allclose(c[0], c[-1])) and keep[0] and keep[-1]
        polylines.append(BoundaryPolyline(verts, closed, "boundary_of_D"))
    if not polylines:
        raise EmptyBoundary("no refinable zero crossing of the limit ratio")
    return polylines


def _h_on_boundary(m, p, lam):
    """h at delta = 0, vectorised with an elementwise retry on failure."""
    try:
        v = std_integrals_unchecked(m, lam.real, lam.imag)
        return h_hat_from_values(v, p).h12
    except (DivergentIntegral, PoleAtAtom):
        out = np.empty(lam.size, dtype=complex)
        for i, z in enumerate(lam):
            try:
                v = std_integrals_unchecked(m, np.array([z.real]), np.array([z.imag]))
                out[i] = h_hat_from_values(v, p).h12[0]
            except (DivergentIntegral, PoleAtAtom):
                out[i] = np.nan
        return out


def std_integrals_unchecked(m, a, b):
    """S, T, D at delta = 0 without convergence checks (poles give inf/nan)."""
    S, T = kernel_sums(m, a, b, 0.0)
    D = S * S + (1.0 - b * T) ** 2
    return StdValues(a, b, np.zeros_like(a), S, T, D)


def _inside_limit(m, p, lam, steps=(1e-4, 5e-5, 2.5e-5)):
    """One-sided limit of h from inside D at a boundary point."""
    angles = np.exp(2j * np.pi * np.arange(16) / 16)
    values = []
    for eta in steps:
        cand = lam + eta * angles
        lr = np.atleast_1d(limit_ratio(m, p, cand))
        inside = np.flatnonzero(lr < 0)
        if inside.size == 0:
            return None
        # take the most interior direction
        k = inside[np.argmin(lr[inside])]
        values.append(h_map(m, p, cand[k]))
    if len(values) < 2:
        return None
    # linear extrapolation in eta towards 0
    return values[-1] + (values[-1] - values[-2])


def trace_boundary_M(m: SpectralMeasure, p: float, boundary_D: BoundaryPolyline) -> BoundaryPolyline:
    """Image of a traced bd(D) polyline under h with delta0 = 0."""
    lam = np.asarray(boundary_D.vertices, dtype=complex).ravel()
    if lam.size == 0:
        return BoundaryPolyline(lam, False, "boundary_of_M")
    on_spectrum = (lam.imag == 0) & (np.isin(lam.real, m.atom_locations) | m.in_ac_support(lam.real))
    out = np.full(lam.size, np.nan, dtype=complex)
    regular = ~on_spectrum
    if regular.any():
        out[regular] = _h_on_boundary(m, p, lam[regular])
    fallback = []
    for i in np.flatnonzero(~np.isfinite(out)):
        val = _inside_limit(m, p, lam[i])
        if val is None or not np.isfinite(val):
            raise PoleAtAtom(f"h has no finite one-sided limit at boundary point {lam[i]!r}")
        out[i] = val
        fallback.append(int(i))
    return BoundaryPolyline(out, boundary_D.closed, "boundary_of_M", tuple(fallback))


# ---------------------------------------------------------------------------
# diagnostics and geometry
# ---------------------------------------------------------------------------

def check_assumption(m: SpectralMeasure, p: float, n_support: int = 129,
                     tol: float = 1e-9) -> AssumptionReport:
    """Verify spec(x) within cl(D) numerically.

    Atoms are checked exactly (``1 - p/w <= 0``); the continuous part on
    ``n_support`` sample points.  The ``S^2/T`` quantity at small delta is
    reported for comparison with ``p`` but never enforced.
    """
    warnings = []
    atom_ratios = {}
    for t, w in zip(m.atom_locations, m.atom_weights):
        r = 1.0 - p / w
        atom_ratios[float(t)] = r
        if r > 0:
            warnings.append(f"atom at {t:g} (mass {w:g} > p={p:g}) lies outside cl(D)")
    support_max = None
    s2t = None
    if m.support is not None:
        lo, hi = m.support
        ts = np.linspace(lo, hi, n_support)
        ratios = np.atleast_1d(limit_ratio(m, p, ts.astype(complex)))
        support_max = float(np.max(ratios))
        if support_max > tol:
            bad = ts[ratios > tol]
            warnings.append(f"{bad.size} support samples lie outside cl(D), e.g. t={bad[0]:g}")
        S, T = kernel_sums(m, ts, 0.0, 1e-4)
        s2t = float(np.max(S * S / T))
        if s2t >= p:
            warnings.append(f"diagnostic: max S^2/T near the support is {s2t:.4g} >= p={p:g}")
    return AssumptionReport(not any(not w.startswith("diagnostic") for w in warnings),
                            warnings, atom_ratios, support_max, s2t)


def region_contains(polylines, z, dilation: float = 0.0) -> np.ndarray:
    """Whether points lie inside the region bounded by closed polylines.

    ``dilation`` grows the region by that Euclidean distance.
    """
    import shapely
    from shapely.geometry import Polygon

    shapes = []
    for pl in polylines:
        v = np.asarray(pl.vertices if hasattr(pl, "vertices") else pl, dtype=complex)
        if v.size >= 3:
            shapes.append(Polygon(np.column_stack([v.real, v.imag])).buffer(0))
    z = np.asarray(z, dtype=complex)
    if not shapes:
        return np.zeros(z.shape, dtype=bool)
    # nested rings (holes) toggle membership
    region = shapes[0]
    for s in shapes[1:]:
        region = region.symmetric_difference(s)
    if dilation > 0:
        region = region.buffer(dilation)
    return shapely.contains_xy(region, z.real, z.imag) | shapely.intersects_xy(
        region.boundary, z.real, z.imag)


def auto_window_D(m: SpectralMeasure, p: float, margin: float = 0.1, resolution: int = 128):
    """A window that contains bd(D), found by a coarse trace on a generous box."""
    r = 2.0 * (math.sqrt(p) + p) + 1.0
    R = m.support_radius
    coarse = (-R - r, R + r, -r, r + R)
    polys = trace_boundary_D(m, p, coarse, resolution, tol=np.inf)
    v = np.concatenate([pl.vertices for pl in polys])
    pad_x = margin * (v.real.max() - v.real.min()) + 4 * (coarse[1] - coarse[0]) / resolution
    pad_y = margin * (v.imag.max() - v.imag.min()) + 4 * (coarse[3] - coarse[2]) / resolution
    return (v.real.min() - pad_x, v.real.max() + pad_x, v.imag.min() - pad_y, v.imag.max() + pad_y)

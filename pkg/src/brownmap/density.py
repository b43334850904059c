"""Numerical inversion of h over M and the density of the Brown measure.

For ``z = s + i t`` in M we solve ``Hhat(alpha, beta, delta) = (s, t, 0)`` with
``delta > 0``.  The third equation is divided by ``delta`` (so the trivial
plane ``delta = 0`` is not a solution) and ``delta`` is carried as
``log(delta)``; the Jacobian is the analytic one from :mod:`brownmap.hcore`
with that row/column rescaled.

The density at ``z`` is::

    f = (1/4pi) [ (2/t)(d alpha/ds + d beta/dt) - 2/t - 2 beta/t**2 ]

where ``d alpha/ds + d beta/dt = trace(J_h^{-1})``.  The correction terms
carry ``t`` (not ``s``) in their denominators; this is the form that follows
from differentiating ``dL/ds = 2(alpha - s)/t`` and ``dL/dt = 2 beta/t``, and
the only one that reproduces the closed-form Bernoulli density.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .domain import limit_ratio, region_contains
from .errors import JacobianSingular, NegativeDensity, NotInImage
from .hcore import h_hat_from_values, jacobian_from_values
from .measure import SpectralMeasure, std_integrals, std_partials

__all__ = [
    "InverseResult",
    "DensityGrid",
    "h_inverse",
    "jacobian_h",
    "density_at",
    "density_grid",
    "window_from_boundary",
    "NEWTON_TOL",
]

NEWTON_TOL = 1e-11
MAX_ITER = 60
MAX_HALVINGS = 20
DELTA_FLOOR = 1e-12
DET_FLOOR = 1e-14
CLIP_TOL = 1e-9
NEGATIVE_TOL = 1e-6
_CHUNK = 4096


@dataclass(frozen=True)
class InverseResult:
    z: complex
    lam: complex
    delta0: float
    jac2: np.ndarray
    converged: bool
    residual: float


@dataclass
class DensityGrid:
    """Cell-centred lattice over a window of the (s, t) plane.

    ``f`` is NaN on OUTSIDE cells; ``inside`` marks cells whose Newton solve
    converged to a preimage in D.
    """

    s: np.ndarray
    t: np.ndarray
    inside: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    delta0: np.ndarray
    f: np.ndarray
    boundary: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def cell_area(self) -> float:
        return float((self.s[1] - self.s[0]) * (self.t[1] - self.t[0]))

    @property
    def total_mass(self) -> float:
        return float(np.nansum(np.where(self.inside, self.f, 0.0)) * self.cell_area)

    @property
    def window(self) -> tuple:
        return tuple(self.metadata["window"])


# ---------------------------------------------------------------------------
# vectorised Newton
# ---------------------------------------------------------------------------

def _residual(v, p, s, t):
    h = h_hat_from_values(v, p)
    r = h.h3 / v.delta
    return np.stack([h.h1 - s, h.h2 - t, r]), np.abs(h.h3)


def _newton(m, p, s, t, a, b, d, tol=NEWTON_TOL, max_iter=MAX_ITER):
    """Damped Newton on (h1 - s, h2 - t, h3/delta) in (alpha, beta, log delta).

    Returns arrays (alpha, beta, delta, converged, residual).
    """
    a, b, d = a.astype(float).copy(), b.astype(float).copy(), d.astype(float).copy()
    n = a.size
    converged = np.zeros(n, dtype=bool)
    failed = np.zeros(n, dtype=bool)
    residual = np.full(n, np.inf)
    polish = np.zeros(n, dtype=bool)
    for _ in range(max_iter + 1):
        act = ~(converged | failed)
        if not act.any():
            break
        idx = np.flatnonzero(act)
        with np.errstate(all="ignore"):
            v = std_partials(m, a[idx], b[idx], d[idx])
            F, h3abs = _residual(v, p, s[idx], t[idx])
        res = np.maximum(np.abs(F).max(axis=0), h3abs)
        bad = ~np.isfinite(res)
        residual[idx] = res
        done = (res < tol) & polish[idx]
        converged[idx[done]] = True
        polish[idx[res < tol]] = True
        failed[idx[bad]] = True
        go = ~(done | bad)
        if not go.any():
            continue
        idx, F, res = idx[go], F[:, go], res[go]
        with np.errstate(all="ignore"):
            J = jacobian_from_values(v, p).matrix[go]
        dd = d[idx]
        r = F[2]
        Jr = J.copy()
        Jr[:, :2, 2] *= dd[:, None]
        Jr[:, 2, :2] /= dd[:, None]
        Jr[:, 2, 2] = J[:, 2, 2] - r
        sing = ~(np.abs(np.linalg.det(J)) > DET_FLOOR) | ~np.all(np.isfinite(Jr), axis=(1, 2))
        if sing.any():
            failed[idx[sing]] = True
            idx, F, res, Jr, dd = idx[~sing], F[:, ~sing], res[~sing], Jr[~sing], dd[~sing]
            if not idx.size:
                continue
        step = np.linalg.solve(Jr, -F.T[:, :, None])[:, :, 0]
        step[:, 2] = np.clip(step[:, 2], -2.0, 2.0)
        norm0 = np.linalg.norm(F, axis=0)
        lam = np.ones(idx.size)
        pending = np.ones(idx.size, dtype=bool)
        na, nb, nd = a[idx].copy(), b[idx].copy(), dd.copy()
        for _ in range(MAX_HALVINGS + 1):
            k = np.flatnonzero(pending)
            ta = a[idx[k]] + lam[k] * step[k, 0]
            tb = b[idx[k]] + lam[k] * step[k, 1]
            td = dd[k] * np.exp(lam[k] * step[k, 2])
            with np.errstate(all="ignore"):
                vt = std_integrals(m, ta, tb, td) if k.size else None
                Ft, _ = _residual(vt, p, s[idx[k]], t[idx[k]])
            better = np.linalg.norm(Ft, axis=0) < norm0[k]
            better |= res[k] < tol  # polishing step: accept as is
            na[k], nb[k], nd[k] = ta, tb, td
            pending[k[better]] = False
            lam[k[~better]] *= 0.5
            if not pending.any():
                break
        # a step that never decreased the residual stays at the smallest trial
        a[idx], b[idx], d[idx] = na, nb, nd
        failed[idx[~(d[idx] > DELTA_FLOOR)]] = True
    return a, b, d, converged, residual


def _default_seed(p, z):
    return z - 0.5j * p, np.full(np.shape(z), 0.5 * math.sqrt(p))


def _jac2_from(v, p):
    J = jacobian_from_values(v, p).matrix
    A = J[..., :2, :2]
    col = J[..., :2, 2]
    row = J[..., 2, :2]
    j33 = J[..., 2, 2]
    Jh = A - col[..., :, None] * row[..., None, :] / j33[..., None, None]
    return Jh, J, j33


def _density_values(m, p, a, b, d, t):
    v = std_partials(m, a, b, d)
    Jh, _, _ = _jac2_from(v, p)
    det = Jh[..., 0, 0] * Jh[..., 1, 1] - Jh[..., 0, 1] * Jh[..., 1, 0]
    trace_inv = (Jh[..., 0, 0] + Jh[..., 1, 1]) / det
    f = (2.0 / t * trace_inv - 2.0 / t - 2.0 * b / t ** 2) / (4.0 * math.pi)
    return f, det


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------

def h_inverse(m: SpectralMeasure, p: float, z: complex, seed: complex | None = None) -> InverseResult:
    """Solve ``h(lam) = z`` for ``lam`` in D by damped Newton.

    Tries ``seed`` first (if given), then ``z - i p/2`` and two further shifts.
    Raises :class:`NotInImage` when no start converges to ``delta > 0``.
    """
    z = complex(z)
    starts = [] if seed is None else [complex(seed)]
    starts += [z - 0.5j * p, z - 1j * p, z]
    s, t = np.array([z.real]), np.array([z.imag])
    best = np.inf
    for lam0 in starts:
        lr = limit_ratio(m, p, lam0)
        if lr < 0:
            from .domain import delta0 as _delta0

            d0 = _delta0(m, p, lam0)
        else:
            d0 = 0.5 * math.sqrt(p)
        a, b, d, ok, res = _newton(m, p, s, t, np.array([lam0.real]), np.array([lam0.imag]),
                                   np.array([d0]))
        best = min(best, float(res[0]))
        if not ok[0]:
            continue
        lam = complex(a[0], b[0])
        if not limit_ratio(m, p, lam) < 0:
            continue
        v = std_partials(m, a[0], b[0], d[0])
        jac2, J, _ = _jac2_from(v, p)
        if abs(np.linalg.det(J)) < DET_FLOOR:
            raise JacobianSingular(f"3x3 Jacobian is singular at {lam!r}")
        return InverseResult(z, lam, float(d[0]), np.asarray(jac2), True, float(res[0]))
    raise NotInImage(f"no preimage with delta > 0 for z={z!r} (best residual {best:.3g})")


def jacobian_h(m: SpectralMeasure, p: float, lam: complex) -> np.ndarray:
    """2x2 Jacobian of h at ``lam`` in D, by eliminating delta from Jacobian3.

    Uses ``d delta0/dx = -(dH3/dx)/(dH3/d delta)`` for x in (alpha, beta).
    """
    from .domain import delta0 as _delta0

    lam = complex(lam)
    d0 = _delta0(m, p, lam)
    if not d0 > 0:
        raise NotInImage(f"{lam!r} is not in D")
    jac2, _, _ = _jac2_from(std_partials(m, lam.real, lam.imag, d0), p)
    return np.asarray(jac2)


def density_at(m: SpectralMeasure, p: float, z: complex) -> float:
    """Brown-measure density at ``z`` in M."""
    inv = h_inverse(m, p, z)
    f, det = _density_values(m, p, inv.lam.real, inv.lam.imag, inv.delta0, complex(z).imag)
    f = float(f)
    if not det > 0:
        raise JacobianSingular(f"det J_h = {float(det):.3g} at z={z!r}")
    if f < -NEGATIVE_TOL:
        raise NegativeDensity(f"density {f:.3g} < 0 at z={z!r}")
    return max(f, 0.0) if f >= -CLIP_TOL else f


def _solve_chunked(m, p, s, t, a, b, d, threads):
    n = s.size
    bounds = [(i, min(i + _CHUNK, n)) for i in range(0, n, _CHUNK)]

    def work(bnd):
        lo, hi = bnd
        return _newton(m, p, s[lo:hi], t[lo:hi], a[lo:hi], b[lo:hi], d[lo:hi])

    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(work, bounds))
    else:
        parts = [work(bnd) for bnd in bounds]
    if not parts:
        e = np.empty(0)
        return e, e, e, np.empty(0, dtype=bool), e
    return tuple(np.concatenate([pt[k] for pt in parts]) for k in range(5))


def density_grid(m: SpectralMeasure, p: float, window, resolution: int,
                 boundary=None, threads: int = 1, seed_stride: int | None = None) -> DensityGrid:
    """Density on a ``resolution x resolution`` cell-centred grid over ``window``.

    Newton continuation: a coarse lattice of cells is solved from default
    seeds, then unsolved cells adjacent to solved ones are retried from their
    neighbour's solution, wave by wave, until no wave adds a cell.  Cells that
    never converge are OUTSIDE.  ``boundary`` (polylines of bd(M)) is used only
    to count cells inside M whose solve failed (``failure_count``).
    """
    s0, s1, t0, t1 = map(float, window)
    if not (s0 < s1 and t0 < t1):
        raise ValueError("window must satisfy s0 < s1 and t0 < t1")
    if resolution < 16:
        raise ValueError("resolution must be at least 16")
    ds, dt = (s1 - s0) / resolution, (t1 - t0) / resolution
    s = s0 + ds * (np.arange(resolution) + 0.5)
    t = t0 + dt * (np.arange(resolution) + 0.5)
    S, T = np.meshgrid(s, t)  # rows index t, columns index s
    shape = S.shape
    A = np.full(shape, np.nan)
    B = np.full(shape, np.nan)
    Dl = np.full(shape, np.nan)
    solved = np.zeros(shape, dtype=bool)
    tries = np.zeros(shape, dtype=np.int8)
    upper = T > 0  # t = 1/T > 0 on M

    stride = seed_stride or max(1, resolution // 32)
    seeds = np.zeros(shape, dtype=bool)
    seeds[::stride, ::stride] = True
    seeds &= upper
    idx = np.flatnonzero(seeds)
    if idx.size:
        z = S.flat[idx] + 1j * T.flat[idx]
        lam0, d0 = _default_seed(p, z)
        a, b, d, ok, _ = _solve_chunked(m, p, S.flat[idx], T.flat[idx], lam0.real, lam0.imag, d0, threads)
        _accept(m, p, idx[ok], a[ok], b[ok], d[ok], A, B, Dl, solved)
        tries.flat[idx] += 1

    in_poly = None
    if boundary:
        zc = (S + 1j * T).ravel()
        in_poly = region_contains(boundary, zc).reshape(shape)

    neighbours = ((-1, 0), (1, 0), (0, -1), (0, 1))
    while True:
        cand = np.zeros(shape, dtype=bool)
        src_r = np.zeros(shape, dtype=int)
        src_c = np.zeros(shape, dtype=int)
        rr, cc = np.indices(shape)
        for dr, dc in reversed(neighbours):
            nr, nc = rr + dr, cc + dc
            valid = (nr >= 0) & (nr < shape[0]) & (nc >= 0) & (nc < shape[1])
            has = np.zeros(shape, dtype=bool)
            has[valid] = solved[nr[valid], nc[valid]]
            src_r = np.where(has, nr, src_r)
            src_c = np.where(has, nc, src_c)
            cand |= has
        cand &= ~solved & upper
        idx = np.flatnonzero(cand & (tries < 2))
        if idx.size:
            sr, sc = src_r.flat[idx], src_c.flat[idx]
            a, b, d, ok, _ = _solve_chunked(m, p, S.flat[idx], T.flat[idx], A[sr, sc],
                                            B[sr, sc], Dl[sr, sc], threads)
            tries.flat[idx] += 1
            if _accept(m, p, idx[ok], a[ok], b[ok], d[ok], A, B, Dl, solved):
                continue
        # the wavefront stalled: retry its rim (8-neighbourhood, plus cells
        # inside the supplied boundary) once from every default seed
        rim = cand | (_dilate8(solved) & ~solved & upper)
        if in_poly is not None:
            rim |= in_poly & ~solved & upper
        idx = np.flatnonzero(rim & (tries < 3))
        if not idx.size:
            break
        tries.flat[idx] = 3
        newly = 0
        for shift in (0.5j * p, 1j * p, 0.0):
            z = S.flat[idx] + 1j * T.flat[idx]
            lam0 = z - shift
            a, b, d, ok, _ = _solve_chunked(m, p, S.flat[idx], T.flat[idx], lam0.real, lam0.imag,
                                            np.full(idx.size, 0.5 * math.sqrt(p)), threads)
            newly += _accept(m, p, idx[ok], a[ok], b[ok], d[ok], A, B, Dl, solved)
            idx = idx[~solved.flat[idx]]
            if not idx.size:
                break
        if not newly:
            break

    f = np.full(shape, np.nan)
    negative = 0
    singular = 0
    idx = np.flatnonzero(solved)
    if idx.size:
        fv, det = _density_values(m, p, A.flat[idx], B.flat[idx], Dl.flat[idx], T.flat[idx])
        bad_det = ~(det > 0)
        singular = int(bad_det.sum())
        negative = int((fv < -NEGATIVE_TOL).sum())
        fv = np.where((fv < 0) & (fv >= -CLIP_TOL), 0.0, fv)
        drop = bad_det | (fv < -CLIP_TOL)
        f.flat[idx] = np.where(drop, np.nan, fv)
        solved.flat[idx[drop]] = False
        for arr in (A, B, Dl):
            arr.flat[idx[drop]] = np.nan

    failure_count = negative + singular
    if in_poly is not None:
        # cells adjacent to the polyline are ambiguous; count only clear misses
        failure_count += int((_interior_mask(in_poly) & upper & ~solved).sum())

    grid = DensityGrid(s, t, solved, A, B, Dl, f, list(boundary or []))
    grid.metadata = {
        "schema": "brownmap/1",
        "measure_hash": m.fingerprint(),
        "p": float(p),
        "window": [s0, s1, t0, t1],
        "resolution": int(resolution),
        "tolerances": {"newton": NEWTON_TOL, "clip": CLIP_TOL, "negative": NEGATIVE_TOL,
                       "delta_floor": DELTA_FLOOR},
        "total_mass": grid.total_mass,
        "failure_count": int(failure_count),
        "inside_cells": int(solved.sum()),
    }
    return grid


def window_from_boundary(polylines, pad: float = 0.05, points=None) -> tuple:
    """Bounding box of polylines (and optional extra points), padded.

    The pad is ``pad`` times the larger side; the lower t edge is clipped at
    0 when everything lies in the upper half plane.
    """
    parts = [np.asarray(pl.vertices if hasattr(pl, "vertices") else pl, dtype=complex).ravel()
             for pl in polylines]
    if points is not None:
        parts.append(np.asarray(points, dtype=complex).ravel())
    v = np.concatenate(parts) if parts else np.empty(0, dtype=complex)
    v = v[np.isfinite(v)]
    if not v.size:
        raise ValueError("no finite vertices to build a window from")
    s0, s1, t0, t1 = v.real.min(), v.real.max(), v.imag.min(), v.imag.max()
    margin = pad * max(s1 - s0, t1 - t0, 1e-3)
    lo_t = t0 - margin
    if t0 >= 0:
        lo_t = max(lo_t, 0.0)
    return (float(s0 - margin), float(s1 + margin), float(lo_t), float(t1 + margin))


def _dilate8(mask):
    out = mask.copy()
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            rs = slice(max(dr, 0), mask.shape[0] + min(dr, 0))
            rd = slice(max(-dr, 0), mask.shape[0] + min(-dr, 0))
            cs = slice(max(dc, 0), mask.shape[1] + min(dc, 0))
            cd = slice(max(-dc, 0), mask.shape[1] + min(-dc, 0))
            out[rd, cd] |= mask[rs, cs]
    return out


def _interior_mask(mask):
    """Cells whose four neighbours share the mask value (drops boundary cells)."""
    out = mask.copy()
    out[1:, :] &= mask[:-1, :]
    out[:-1, :] &= mask[1:, :]
    out[:, 1:] &= mask[:, :-1]
    out[:, :-1] &= mask[:, 1:]
    return out


def _accept(m, p, flat_idx, a, b, d, A, B, Dl, solved):
    """Store converged cells whose preimage lies in D; return how many."""
    if not flat_idx.size:
        return 0
    lr = np.atleast_1d(limit_ratio(m, p, a + 1j * b))
    good = (lr < 0) & (d > DELTA_FLOOR)
    k = flat_idx[good]
    A.flat[k], B.flat[k], Dl.flat[k] = a[good], b[good], d[good]
    solved.flat[k] = True
    return int(good.sum())

"""Spectral measure of the selfadjoint summand and the integrals taken against it.

A :class:`SpectralMeasure` is a finite list of atoms plus an optional
quadrature rule standing in for an absolutely continuous part.  Every
integral used downstream is a weighted sum over these points of one of the
kernels::

    1/q,  (a-t)/q,  1/q**2,  (a-t)/q**2,  (a-t)**2/q**2,   q = (a-t)**2 + b**2 + d**2

When the kernel peak is too narrow for the fixed quadrature rule (small
``b**2 + d**2`` with ``a`` near the support) the absolutely continuous part
is re-integrated on a composite Gauss-Legendre mesh graded towards ``a``,
provided the measure carries its density function.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import DivergentIntegral, MeasureSpecError, PoleAtAtom

__all__ = [
    "SpectralMeasure",
    "StdValues",
    "cauchy_transform",
    "std_integrals",
    "std_partials",
    "kernel_sums",
    "load_measure",
]

DEFAULT_NODES = 2001
_PANEL_ORDER = 24
# refine when the fixed rule's Bernstein-ellipse error estimate exceeds ~exp(-40)
_BERNSTEIN_EXPONENT = 40.0
_CHUNK = 2_000_000

_PANEL_X, _PANEL_W = np.polynomial.legendre.leggauss(_PANEL_ORDER)


def _uniform_density(lo: float, hi: float) -> Callable[[np.ndarray], np.ndarray]:
    def rho(t):
        t = np.asarray(t, dtype=float)
        return np.where((t >= lo) & (t <= hi), 1.0 / (hi - lo), 0.0)

    return rho


def _semicircle_density(lo: float, hi: float) -> Callable[[np.ndarray], np.ndarray]:
    c, r = 0.5 * (lo + hi), 0.5 * (hi - lo)

    def rho(t):
        u = np.asarray(t, dtype=float) - c
        return 2.0 / (math.pi * r * r) * np.sqrt(np.clip(r * r - u * u, 0.0, None))

    return rho


def _tabulated_density(nodes: np.ndarray, values: np.ndarray, lo: float, hi: float):
    order = np.argsort(nodes)
    xs, ys = nodes[order], values[order]

    def rho(t):
        t = np.asarray(t, dtype=float)
        return np.where((t >= lo) & (t <= hi), np.interp(t, xs, ys), 0.0)

    return rho


_NAMED_DENSITIES = {"uniform": _uniform_density, "semicircle": _semicircle_density}


class SpectralMeasure:
    """Compactly supported probability measure on the real line.

    Parameters
    ----------
    atoms : sequence of (location, weight)
        Point masses.  Locations must be distinct and weights in (0, 1].
    quad_nodes, quad_weights : sequence of float
        Quadrature rule for the absolutely continuous part (may be empty).
    support : (lo, hi), optional
        Interval carrying the absolutely continuous part.  Required when a
        quadrature part is present.
    density : callable, optional
        Density of the absolutely continuous part, normalised so that it
        integrates to the total quadrature weight.  Enables refined
        quadrature near the support; without it the fixed rule is used
        everywhere.
    support_radius : float, optional
        Bound on ``|t|`` over the support; computed when omitted.
    spec : dict, optional
        JSON-serialisable description used for hashing and metadata.
    """

    def __init__(self, atoms=(), quad_nodes=(), quad_weights=(), *, support=None,
                 density=None, support_radius=None, spec=None, n_rule=None):
        atoms = [(float(t), float(w)) for t, w in atoms]
        locs = np.array([t for t, _ in atoms], dtype=float)
        aw = np.array([w for _, w in atoms], dtype=float)
        qn = np.asarray(quad_nodes, dtype=float).ravel()
        qw = np.asarray(quad_weights, dtype=float).ravel()

        if qn.shape != qw.shape:
            raise MeasureSpecError("quad_nodes and quad_weights differ in length")
        if len(atoms) < 2 and qn.size == 0:
            raise MeasureSpecError(
                "measure needs at least two atoms or a nonempty quadrature part")
        if np.any(~np.isfinite(locs)) or np.any(~np.isfinite(qn)):
            raise MeasureSpecError("non-finite location")
        if np.any((aw <= 0) | (aw > 1)):
            raise MeasureSpecError("atom weights must lie in (0, 1]")
        if np.any(qw < 0):
            raise MeasureSpecError("quadrature weights must be nonnegative")
        if locs.size and np.unique(locs).size != locs.size:
            raise MeasureSpecError("atom locations must be distinct")
        total = aw.sum() + qw.sum()
        if abs(total - 1.0) > 1e-12:
            raise MeasureSpecError(f"total mass {total!r} differs from 1")
        if qn.size:
            if support is None:
                support = (float(qn.min()), float(qn.max()))
            lo, hi = float(support[0]), float(support[1])
            if not lo < hi:
                raise MeasureSpecError("support interval must satisfy lo < hi")
            if np.any((qn < lo - 1e-12) | (qn > hi + 1e-12)):
                raise MeasureSpecError("quadrature nodes fall outside the support")
            support = (lo, hi)
        else:
            support = None
            density = None

        extent = [abs(x) for x in locs] + ([abs(support[0]), abs(support[1])] if support else [])
        radius = max(extent)
        if support_radius is None:
            support_radius = radius if radius > 0 else 1.0
        if support_radius <= 0 or radius > support_radius + 1e-12:
            raise MeasureSpecError("support_radius must bound every support point")

        for arr in (locs, aw, qn, qw):
            arr.setflags(write=False)
        self.atom_locations = locs
        self.atom_weights = aw
        self.quad_nodes = qn
        self.quad_weights = qw
        self.support = support
        self.density = density
        self.support_radius = float(support_radius)
        self.n_rule = int(n_rule) if n_rule else int(qn.size)
        self._spec = spec if spec is not None else self._default_spec()

    # -- constructors -------------------------------------------------
    @classmethod
    def atomic(cls, locations, weights) -> "SpectralMeasure":
        atoms = list(zip(locations, weights))
        spec = {"type": "atomic", "atoms": [{"t": float(t), "w": float(w)} for t, w in atoms]}
        return cls(atoms, spec=spec)

    @classmethod
    def bernoulli(cls, a: float = 1.0) -> "SpectralMeasure":
        """Symmetric two-point measure (delta_a + delta_-a)/2."""
        return cls.atomic([-a, a], [0.5, 0.5])

    @classmethod
    def from_density(cls, name: str, support=(-1.0, 1.0), n_nodes: int = DEFAULT_NODES,
                     atoms=()) -> "SpectralMeasure":
        """Gauss-Legendre discretisation of a named density on ``support``.

        ``atoms`` adds point masses; the continuous part then carries the
        remaining mass.
        """
        if name not in _NAMED_DENSITIES:
            raise MeasureSpecError(f"unknown density {name!r}")
        if n_nodes < 2:
            raise MeasureSpecError("n_nodes must be at least 2")
        lo, hi = float(support[0]), float(support[1])
        if not lo < hi:
            raise MeasureSpecError("support interval must satisfy lo < hi")
        atoms = [(float(t), float(w)) for t, w in atoms]
        ac_mass = 1.0 - sum(w for _, w in atoms)
        if not 0 < ac_mass <= 1:
            raise MeasureSpecError("atom weights leave no mass for the density")
        base = _NAMED_DENSITIES[name](lo, hi)
        if name == "semicircle":
            # second-kind Gauss-Chebyshev: the sqrt(1 - x^2) weight is exact
            k = np.arange(n_nodes, 0, -1)
            theta = k * np.pi / (n_nodes + 1)
            x = np.cos(theta)
            w = np.sin(theta) ** 2
        else:
            x, w = np.polynomial.legendre.leggauss(n_nodes)
            w = 0.5 * (hi - lo) * w * base(0.5 * (hi - lo) * x + 0.5 * (hi + lo))
        nodes = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        weights = w
        scale = ac_mass / weights.sum()
        weights = weights * scale

        def density(t, _base=base, _scale=ac_mass):
            return _scale * _base(t)

        spec = {"type": "quadrature", "support": [lo, hi], "density": name, "n_nodes": n_nodes}
        if atoms:
            spec["atoms"] = [{"t": t, "w": w} for t, w in atoms]
        return cls(atoms, nodes, weights, support=(lo, hi), density=density, spec=spec)

    @classmethod
    def uniform(cls, lo: float = -1.0, hi: float = 1.0, n_nodes: int = DEFAULT_NODES):
        return cls.from_density("uniform", (lo, hi), n_nodes)

    @classmethod
    def from_dict(cls, data: dict) -> "SpectralMeasure":
        """Build a measure from its JSON description, normalising total mass.

        Raises :class:`MeasureSpecError` naming the offending field.
        """
        if not isinstance(data, dict):
            raise MeasureSpecError("measure spec must be a JSON object")
        kind = data.get("type")
        atoms = _parse_atoms(data.get("atoms", []))
        if kind == "atomic":
            if not atoms:
                raise MeasureSpecError("field 'atoms' is required for type 'atomic'")
            total = sum(w for _, w in atoms)
            _check_mass(total)
            atoms = [(t, w / total) for t, w in atoms]
            spec = {"type": "atomic", "atoms": [{"t": t, "w": w} for t, w in atoms]}
            return cls(atoms, spec=spec)
        if kind == "quadrature":
            support = data.get("support")
            if (not isinstance(support, (list, tuple)) or len(support) != 2
                    or not all(isinstance(v, (int, float)) for v in support)):
                raise MeasureSpecError("field 'support' must be [lo, hi]")
            name = data.get("density", "tabulated")
            if name in _NAMED_DENSITIES:
                n_nodes = data.get("n_nodes", DEFAULT_NODES)
                if not isinstance(n_nodes, int):
                    raise MeasureSpecError("field 'n_nodes' must be an integer")
                return cls.from_density(name, support, n_nodes, atoms)
            if name != "tabulated":
                raise MeasureSpecError(f"field 'density': unknown value {name!r}")
            nodes = _parse_floats(data, "nodes")
            weights = _parse_floats(data, "weights")
            if len(nodes) != len(weights):
                raise MeasureSpecError("fields 'nodes' and 'weights' differ in length")
            total = sum(weights) + sum(w for _, w in atoms)
            _check_mass(total)
            nodes_a = np.array(nodes)
            weights_a = np.array(weights) / total
            atoms = [(t, w / total) for t, w in atoms]
            lo, hi = float(support[0]), float(support[1])
            density = None
            if "values" in data:
                values = np.array(_parse_floats(data, "values")) / total
                if values.size != nodes_a.size:
                    raise MeasureSpecError("field 'values' must match 'nodes' in length")
                density = _tabulated_density(nodes_a, values, lo, hi)
            spec = dict(data)
            return cls(atoms, nodes_a, weights_a, support=(lo, hi), density=density, spec=spec)
        raise MeasureSpecError(f"field 'type': expected 'atomic' or 'quadrature', got {kind!r}")

    # -- properties ---------------------------------------------------
    @property
    def is_atomic(self) -> bool:
        return self.quad_nodes.size == 0

    @property
    def max_atom_weight(self) -> float:
        return float(self.atom_weights.max()) if self.atom_weights.size else 0.0

    def atom_weight_at(self, t: float, tol: float = 1e-12) -> float:
        """Mass of the atom located at ``t`` (0 if none)."""
        if not self.atom_locations.size:
            return 0.0
        hit = np.abs(self.atom_locations - t) <= tol * max(1.0, abs(t))
        return float(self.atom_weights[hit].sum())

    def in_ac_support(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        if self.support is None:
            return np.zeros(a.shape, dtype=bool)
        return (a >= self.support[0]) & (a <= self.support[1])

    def to_dict(self) -> dict:
        return dict(self._spec)

    def fingerprint(self) -> str:
        blob = json.dumps(self._spec, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def __repr__(self) -> str:
        return (f"SpectralMeasure(atoms={self.atom_locations.size}, "
                f"quad_nodes={self.quad_nodes.size}, support={self.support})")

    def _default_spec(self) -> dict:
        spec = {"type": "atomic" if self.is_atomic else "quadrature",
                "atoms": [{"t": float(t), "w": float(w)}
                          for t, w in zip(self.atom_locations, self.atom_weights)]}
        if not self.is_atomic:
            spec.update(support=list(self.support), density="tabulated",
                        nodes=self.quad_nodes.tolist(), weights=self.quad_weights.tolist())
        return spec


def _check_mass(total: float) -> None:
    if abs(total - 1.0) > 1e-9:
        raise MeasureSpecError(f"total mass {total!r} is off from 1 by more than 1e-9")


def _parse_atoms(raw) -> list[tuple[float, float]]:
    if not isinstance(raw, list):
        raise MeasureSpecError("field 'atoms' must be a list")
    out = []
    for i, item in enumerate(raw):
        if not isinstance(item, dict) or "t" not in item or "w" not in item:
            raise MeasureSpecError(f"field 'atoms[{i}]' must be an object with 't' and 'w'")
        t, w = item["t"], item["w"]
        if not isinstance(t, (int, float)) or not isinstance(w, (int, float)):
            raise MeasureSpecError(f"field 'atoms[{i}]' must hold numbers")
        out.append((float(t), float(w)))
    return out


def _parse_floats(data: dict, key: str) -> list[float]:
    raw = data.get(key)
    if not isinstance(raw, list) or not all(isinstance(v, (int, float)) for v in raw):
        raise MeasureSpecError(f"field '{key}' must be a list of numbers")
    return [float(v) for v in raw]


def load_measure(path) -> SpectralMeasure:
    """Read a measure specification file (UTF-8 JSON)."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MeasureSpecError(f"malformed JSON in {path}: {exc}") from exc
    return SpectralMeasure.from_dict(data)


# ---------------------------------------------------------------------------
# kernel sums
# ---------------------------------------------------------------------------

def _discrete(nodes, weights, a, e2, second):
    """Weighted kernel sums over a fixed point set; a, e2 flat arrays."""
    n_out = 5 if second else 2
    out = np.zeros((n_out, a.size))
    if nodes.size == 0:
        return out
    step = max(1, _CHUNK // nodes.size)
    for lo in range(0, a.size, step):
        sl = slice(lo, lo + step)
        diff = a[sl, None] - nodes[None, :]
        # poles (atoms hit exactly) give inf/nan and are reported by callers
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / (diff * diff + e2[sl, None])
            out[0, sl] = (diff * inv) @ weights
            out[1, sl] = inv @ weights
            if second:
                inv2 = inv * inv
                out[2, sl] = inv2 @ weights
                out[3, sl] = (diff * inv2) @ weights
                out[4, sl] = (diff * diff * inv2) @ weights
    return out


def _needs_refinement(m: SpectralMeasure, a: np.ndarray, e2: np.ndarray) -> np.ndarray:
    if m.density is None or m.support is None:
        return np.zeros(a.shape, dtype=bool)
    lo, hi = m.support
    c, r = 0.5 * (lo + hi), 0.5 * (hi - lo)
    z = ((a - c) + 1j * np.sqrt(e2)) / r
    rho = np.abs(z + np.sqrt(z - 1) * np.sqrt(z + 1))
    with np.errstate(divide="ignore"):
        return 2 * m.n_rule * np.log(np.maximum(rho, 1.0)) < _BERNSTEIN_EXPONENT


def _graded_rule(m: SpectralMeasure, a: float, eps: float):
    """Composite Gauss-Legendre nodes/weights for the a.c. part, graded towards a."""
    lo, hi = m.support
    c = min(max(a, lo), hi)
    scale = math.hypot(eps, a - c)
    if scale == 0.0:
        raise DivergentIntegral(f"kernel is not integrable at t={a!r} inside the support")
    span = hi - lo
    cuts = {lo, hi, c}
    k = 0
    while scale * 2.0 ** k < span:
        cuts.add(c - scale * 2.0 ** k)
        cuts.add(c + scale * 2.0 ** k)
        k += 1
    pts = np.array(sorted(x for x in cuts if lo <= x <= hi))
    left, right = pts[:-1], pts[1:]
    half = 0.5 * (right - left)
    mid = 0.5 * (right + left)
    nodes = (mid[:, None] + half[:, None] * _PANEL_X[None, :]).ravel()
    weights = (half[:, None] * _PANEL_W[None, :]).ravel() * m.density(nodes)
    return nodes, weights


def kernel_sums(m: SpectralMeasure, a, b, d, second: bool = False):
    """Kernel sums ``(S, T)`` or ``(S, T, I0, I1, I2)`` broadcast over a, b, d.

    ``I0 = int 1/q**2``, ``I1 = int (a-t)/q**2``, ``I2 = int (a-t)**2/q**2``.
    Returns arrays of the broadcast shape (0-d for scalar input).  Exact
    poles produce ``inf``/``nan``; callers decide which error to raise.
    """
    a, b, d = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, d)))
    shape = a.shape
    af = a.ravel()
    e2 = (b * b + d * d).ravel()
    out = _discrete(m.atom_locations, m.atom_weights, af, e2, second)
    if m.quad_nodes.size:
        fine = _needs_refinement(m, af, e2)
        coarse = ~fine
        if coarse.any():
            out[:, coarse] += _discrete(m.quad_nodes, m.quad_weights, af[coarse], e2[coarse], second)
        for i in np.flatnonzero(fine):
            nodes, weights = _graded_rule(m, af[i], math.sqrt(e2[i]))
            out[:, i:i + 1] += _discrete(nodes, weights, af[i:i + 1], e2[i:i + 1], second)
    return tuple(row.reshape(shape) for row in out)


def _atom_pole_mask(m: SpectralMeasure, a, e2) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if not m.atom_locations.size:
        return np.zeros(a.shape, dtype=bool)
    hit = np.isin(a, m.atom_locations)
    return hit & (np.asarray(e2) == 0.0)


# ---------------------------------------------------------------------------
# public integrals
# ---------------------------------------------------------------------------

def cauchy_transform(m: SpectralMeasure, lam):
    """Cauchy transform ``G(lam) = int 1/(lam - u) dmu(u)``.

    Works elementwise on arrays.  Uses ``G = S(a, b, 0) - i b T(a, b, 0)``.
    """
    lam = np.asarray(lam, dtype=complex)
    a, b = lam.real, lam.imag
    if np.any(_atom_pole_mask(m, a, b * b)):
        raise PoleAtAtom("evaluation point coincides with an atom")
    S, T = kernel_sums(m, a, b, 0.0)
    g = S - 1j * b * T
    return g if g.ndim else complex(g)


@dataclass(frozen=True)
class StdValues:
    """The integrals S, T, D at a point, optionally with first partials.

    Fields hold floats or arrays of a common shape.
    """

    alpha: object
    beta: object
    delta: object
    S: object
    T: object
    D: object
    dS_dalpha: object = None
    dS_dbeta: object = None
    dS_ddelta: object = None
    dT_dalpha: object = None
    dT_dbeta: object = None
    dT_ddelta: object = None
    I2: object = None
    I0: object = None

    @property
    def has_partials(self) -> bool:
        return self.dS_dalpha is not None


def _as_out(x):
    return float(x) if np.ndim(x) == 0 else x


def _check_convergent(m, a, b, d, values):
    e2 = np.asarray(b, dtype=float) ** 2 + np.asarray(d, dtype=float) ** 2
    if np.any(_atom_pole_mask(m, a, e2)):
        raise DivergentIntegral("delta = beta = 0 at an atom location")
    if not all(np.all(np.isfinite(v)) for v in values):
        raise DivergentIntegral("integral did not converge")


def std_integrals(m: SpectralMeasure, alpha, beta, delta) -> StdValues:
    S, T = kernel_sums(m, alpha, beta, delta)
    _check_convergent(m, alpha, beta, delta, (S, T))
    d = np.asarray(delta, dtype=float)
    b = np.asarray(beta, dtype=float)
    D = d * d * T * T + S * S + (1.0 - b * T) ** 2
    return StdValues(_as_out(np.asarray(alpha, dtype=float)), _as_out(b), _as_out(d),
                     _as_out(S), _as_out(T), _as_out(D))


def std_partials(m: SpectralMeasure, alpha, beta, delta) -> StdValues:
    """S, T, D together with the six first partials of S and T."""
    S, T, I0, I1, I2 = kernel_sums(m, alpha, beta, delta, second=True)
    _check_convergent(m, alpha, beta, delta, (S, T, I0, I1, I2))
    a = np.asarray(alpha, dtype=float)
    b = np.asarray(beta, dtype=float)
    d = np.asarray(delta, dtype=float)
    D = d * d * T * T + S * S + (1.0 - b * T) ** 2
    return StdValues(
        _as_out(a), _as_out(b), _as_out(d), _as_out(S), _as_out(T), _as_out(D),
        dS_dalpha=_as_out(T - 2.0 * I2),
        dS_dbeta=_as_out(-2.0 * b * I1),
        dS_ddelta=_as_out(-2.0 * d * I1),
        dT_dalpha=_as_out(-2.0 * I1),
        dT_dbeta=_as_out(-2.0 * b * I0),
        dT_ddelta=_as_out(-2.0 * d * I0),
        I2=_as_out(I2),
        I0=_as_out(I0),
    )

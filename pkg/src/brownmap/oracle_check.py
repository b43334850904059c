"""Comparisons of the generic pipeline with the Bernoulli closed forms.

Sample points are drawn by rejection with the oracle polynomials only, so
membership is decided independently of the code under test.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .density import density_at, h_inverse
from .domain import auto_window_D, delta0, h_map, trace_boundary_D, trace_boundary_M
from .oracle import (oracle_G, oracle_M_poly, oracle_delta0, oracle_density, oracle_domain_poly,
                     oracle_h, oracle_h_inverse, oracle_spectrum_poly)

__all__ = [
    "CheckResult",
    "sample_inside_D",
    "sample_outside_D",
    "sample_inside_M",
    "normalized_residual",
    "run_oracle_check",
    "SPOT_Z",
]

MARGIN = 1e-6
BOX_D = (-2.4, 2.4, -0.8, 2.1)
BOX_M = (-1.0, 1.0, 0.0, 3.5)
SPOT_Z = 1.618034j


@dataclass(frozen=True)
class CheckResult:
    name: str
    max_dev: float
    tol: float
    n: int

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.max_dev) and self.max_dev < self.tol)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag}  {self.name:<28} max_dev={self.max_dev:.3e}  tol={self.tol:.0e}  n={self.n}"

    def to_dict(self) -> dict:
        return {"name": self.name, "max_dev": self.max_dev, "tol": self.tol, "n": self.n,
                "passed": self.passed}


def _rejection(rng, box, accept, n):
    out = []
    while sum(len(o) for o in out) < n:
        a = rng.uniform(box[0], box[1], 4 * n)
        b = rng.uniform(box[2], box[3], 4 * n)
        keep = accept(a, b)
        out.append(a[keep] + 1j * b[keep])
    return np.concatenate(out)[:n]


def sample_inside_D(rng, n: int) -> np.ndarray:
    return _rejection(rng, BOX_D, lambda a, b: oracle_domain_poly(a, b) < -MARGIN, n)


def sample_outside_D(rng, n: int) -> np.ndarray:
    return _rejection(rng, BOX_D, lambda a, b: oracle_domain_poly(a, b) > MARGIN, n)


def sample_inside_M(rng, n: int) -> np.ndarray:
    return _rejection(rng, BOX_M, lambda s, t: (oracle_M_poly(s, t) < -MARGIN) & (np.abs(s) < 1), n)


def normalized_residual(poly, z, h: float = 1e-6) -> np.ndarray:
    """``|P| / |grad P|``: first-order distance from ``z`` to the zero set."""
    s, t = z.real, z.imag
    gs = (poly(s + h, t) - poly(s - h, t)) / (2 * h)
    gt = (poly(s, t + h) - poly(s, t - h)) / (2 * h)
    return np.abs(poly(s, t)) / np.hypot(gs, gt)


def check_delta0(m, lam) -> CheckResult:
    dev = np.abs(delta0(m, 1.0, lam) - oracle_delta0(lam))
    return CheckResult("delta0", float(dev.max()), 1e-10, lam.size)


def check_h_inside(m, lam) -> CheckResult:
    dev = np.abs(h_map(m, 1.0, lam) - oracle_h(lam))
    return CheckResult("h inside D", float(dev.max()), 1e-9, lam.size)


def check_h_outside(m, lam) -> CheckResult:
    dev = np.abs(h_map(m, 1.0, lam) - (lam - 1.0 / (1j + oracle_G(lam))))
    return CheckResult("h outside D", float(dev.max()), 1e-12, lam.size)


def check_inverse(m, z):
    lam = np.array([h_inverse(m, 1.0, zz).lam for zz in z])
    dev = np.abs(lam - oracle_h_inverse(z))
    rt = np.abs(h_map(m, 1.0, lam) - z)
    return (CheckResult("h_inverse", float(dev.max()), 1e-8, z.size),
            CheckResult("round trip h(h_inverse)", float(rt.max()), 1e-9, z.size))


def check_density(m, z, factor: float = 1.0):
    ref = oracle_density(z.real, z.imag)
    keep = ref > 1e-4
    f = np.array([density_at(m, 1.0, zz) for zz in z[keep]]) * factor
    rel = np.abs(f - ref[keep]) / ref[keep]
    spot = abs(density_at(m, 1.0, SPOT_Z) * factor - oracle_density(0.0, SPOT_Z.imag))
    return (CheckResult("density (relative)", float(rel.max()), 1e-6, int(keep.sum())),
            CheckResult("density spot 1.618034i", float(spot), 1e-8, 1))


def boundary_M_vertices(m, resolution: int = 512) -> np.ndarray:
    bD = trace_boundary_D(m, 1.0, auto_window_D(m, 1.0), resolution)
    return np.concatenate([trace_boundary_M(m, 1.0, pl).vertices for pl in bD])


def check_boundary(m, resolution: int = 512):
    v = boundary_M_vertices(m, resolution)
    r_m = normalized_residual(oracle_M_poly, v)
    r_o = normalized_residual(oracle_spectrum_poly, v)
    return (CheckResult("boundary M vs M polynomial", float(r_m.max()), 1e-5, v.size),
            CheckResult("boundary M vs spectrum octic", float(r_o.max()), 1e-5, v.size))


def run_oracle_check(m, seed: int = 42, n: int = 500, density_factor: float = 1.0):
    rng = np.random.Generator(np.random.PCG64(seed))
    lam_in = sample_inside_D(rng, n)
    lam_out = sample_outside_D(rng, 200)
    z_in = sample_inside_M(rng, n)
    results = [check_delta0(m, lam_in), check_h_inside(m, lam_in), check_h_outside(m, lam_out)]
    results += check_inverse(m, z_in)
    results += check_density(m, z_in, density_factor)
    results += check_boundary(m)
    return results

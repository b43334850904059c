"""The left inverse H restricted to the symmetric slice.

On matrices ``B = [[i d, a + i b], [a - i b, i d]]`` the map
``H(B) = B + p (J - G_X(B))^{-1}`` keeps the same shape, so it reduces to
three real components::

    h1 = Re H12 = a - p S / D
    h2 = Im H12 = b + p (1 - b T) / D
    h3 = Im H11 = d (1 - p T / D)

with S, T, D from :mod:`brownmap.measure`.  Everything here broadcasts over
array arguments.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .measure import SpectralMeasure, StdValues, std_integrals, std_partials

__all__ = [
    "HHatPoint",
    "Jacobian3",
    "StdValues",
    "h_hat",
    "h_hat_from_values",
    "im_h11_ratio",
    "jacobian_hhat",
    "jacobian_from_values",
    "d_partials",
]


@dataclass(frozen=True)
class HHatPoint:
    h1: object
    h2: object
    h3: object

    @property
    def h12(self):
        """The (1,2) entry ``h1 + i h2``."""
        return self.h1 + 1j * self.h2

    def as_array(self) -> np.ndarray:
        return np.stack(np.broadcast_arrays(self.h1, self.h2, self.h3), axis=-1)


@dataclass(frozen=True)
class Jacobian3:
    """``matrix[..., i, j] = d h_i / d x_j`` with ``x = (alpha, beta, delta)``."""

    matrix: np.ndarray
    det: object


def h_hat_from_values(v: StdValues, p: float) -> HHatPoint:
    h1 = v.alpha - p * v.S / v.D
    h2 = v.beta + p * (1.0 - v.beta * v.T) / v.D
    h3 = v.delta * (1.0 - p * v.T / v.D)
    return HHatPoint(h1, h2, h3)


def h_hat(m: SpectralMeasure, p: float, alpha, beta, delta) -> HHatPoint:
    """Reduced image of ``H(B(alpha + i beta, i delta))``."""
    return h_hat_from_values(std_integrals(m, alpha, beta, delta), p)


def im_h11_ratio(m: SpectralMeasure, p: float, alpha, beta, delta):
    """``Im H11 / delta = 1 - p T / D``, strictly increasing in delta."""
    v = std_integrals(m, alpha, beta, delta)
    return 1.0 - p * v.T / v.D


def d_partials(v: StdValues):
    """Partials of D with respect to (alpha, beta, delta)."""
    S, T, b, d = v.S, v.T, v.beta, v.delta
    u = 1.0 - b * T
    dD_da = 2 * d * d * T * v.dT_dalpha + 2 * S * v.dS_dalpha - 2 * u * b * v.dT_dalpha
    dD_db = 2 * d * d * T * v.dT_dbeta + 2 * S * v.dS_dbeta - 2 * u * (T + b * v.dT_dbeta)
    dD_dd = (2 * d * T * T + 2 * d * d * T * v.dT_ddelta + 2 * S * v.dS_ddelta
             - 2 * u * b * v.dT_ddelta)
    return dD_da, dD_db, dD_dd


def jacobian_from_values(v: StdValues, p: float) -> Jacobian3:
    if not v.has_partials:
        raise ValueError("StdValues without partials")
    S, T, D, b, d = v.S, v.T, v.D, v.beta, v.delta
    u = 1.0 - b * T
    dS = (v.dS_dalpha, v.dS_dbeta, v.dS_ddelta)
    dT = (v.dT_dalpha, v.dT_dbeta, v.dT_ddelta)
    dD = d_partials(v)
    du = (-b * dT[0], -(T + b * dT[1]), -b * dT[2])
    D2 = D * D
    rows = [[None] * 3 for _ in range(3)]
    for j in range(3):
        rows[0][j] = (1.0 if j == 0 else 0.0) - p * (dS[j] * D - S * dD[j]) / D2
        rows[1][j] = (1.0 if j == 1 else 0.0) + p * (du[j] * D - u * dD[j]) / D2
        rows[2][j] = -p * d * (dT[j] * D - T * dD[j]) / D2
    rows[2][2] = rows[2][2] + 1.0 - p * T / D
    mat = np.stack([np.stack(np.broadcast_arrays(*r), axis=-1) for r in rows], axis=-2)
    det = np.linalg.det(mat)
    return Jacobian3(mat, float(det) if np.ndim(det) == 0 else det)


def jacobian_hhat(m: SpectralMeasure, p: float, alpha, beta, delta) -> Jacobian3:
    """Analytic Jacobian of (h1, h2, h3) with respect to (alpha, beta, delta)."""
    return jacobian_from_values(std_partials(m, alpha, beta, delta), p)

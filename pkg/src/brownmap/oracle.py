"""Closed forms for x symmetric Bernoulli on {-1, 1} and y free Poisson(1).

These are written directly in terms of lambda and its conjugate (or the real
pair (s, t)) and share no code with the generic pipeline, so they can be used
as independent ground truth.

Two of these closed forms circulate with misprints; the versions here are
corrected:

* The real-coordinate form of the domain polynomial expands
  ``|1 + lambda (lambda - i)|**2`` instead of ``|1 - lambda (lambda - i)|**2``.
  The corrected form, :func:`oracle_domain_poly`, matches the complex form
  ``|lambda**2 - i lambda - 1|**2 - |lambda|**2 - 1`` and the atom at 1.
* The spectrum octic has ``+ s**4`` where ``+ t**4`` is needed; with the
  correction it is identical to the quartic-in-t polynomial of M.
  Both uncorrected forms are kept (``*_uncorrected``) for comparison.
"""
from __future__ import annotations

import numpy as np

from .errors import ComplexResult

__all__ = [
    "oracle_domain_poly",
    "oracle_domain_poly_complex",
    "oracle_domain_poly_uncorrected",
    "oracle_delta0",
    "oracle_h",
    "oracle_h_inverse",
    "oracle_density",
    "oracle_M_poly",
    "oracle_spectrum_poly",
    "oracle_spectrum_poly_uncorrected",
    "oracle_G",
]

IMAG_TOL = 1e-10


def oracle_domain_poly(alpha, beta):
    """Negative exactly inside D (real-coordinate form)."""
    a, b = np.asarray(alpha, float), np.asarray(beta, float)
    return (1 - a * a + b * b - b) ** 2 + (a - 2 * a * b) ** 2 - a * a - b * b - 1


def oracle_domain_poly_uncorrected(alpha, beta):
    """Real-coordinate domain polynomial with the sign misprint; comparison only."""
    a, b = np.asarray(alpha, float), np.asarray(beta, float)
    return (a * a + (1 - b) * b + 1) ** 2 + (a * (b - 1) + a * b) ** 2 - a * a - b * b - 1


def oracle_domain_poly_complex(lam):
    lam = np.asarray(lam, complex)
    return np.abs(lam * lam - 1j * lam - 1) ** 2 - np.abs(lam) ** 2 - 1


def oracle_G(lam):
    """Cauchy transform ``lam / (lam**2 - 1)`` of the symmetric Bernoulli law."""
    lam = np.asarray(lam, complex)
    return lam / (lam * lam - 1)


def oracle_delta0(lam):
    """Positive root of Im H11 = 0 for lambda in D.

    Raises :class:`ComplexResult` when the expression is not real to
    ``IMAG_TOL`` (lambda outside D).
    """
    lam = np.asarray(lam, complex)
    lb = np.conj(lam)
    inner = np.sqrt(3 * lam ** 2 + 10 * lam * lb + 3 * lb ** 2 + 4 + 0j) - 2 * lam * lb - 1j * lam + 1j * lb - 2
    val = np.sqrt(inner + 0j) / np.sqrt(2)
    if np.any(np.abs(val.imag) > IMAG_TOL):
        raise ComplexResult("delta0 expression is not real; lambda is outside D")
    out = val.real
    return float(out) if out.ndim == 0 else out


def oracle_h(lam):
    """h on D for the Bernoulli example."""
    lam = np.asarray(lam, complex)
    lb = np.conj(lam)
    root = np.sqrt((3 * lam + lb) * (lam + 3 * lb) + 4 + 0j)
    out = (root + lam * (2 * lam - 1j) + lb * (-2 * lb + 1j)) / (2 * (lam + lb - 1j))
    return complex(out) if out.ndim == 0 else out


def oracle_h_inverse(z):
    """``alpha + i beta`` with ``alpha = st/(2(1-s^2))``, ``beta = (s^2+t^2-1)/(2t)``."""
    z = np.asarray(z, complex)
    s, t = z.real, z.imag
    if np.any(np.abs(s) == 1) or np.any(t == 0):
        raise ZeroDivisionError("inverse undefined at s = +-1 or t = 0")
    out = s * t / (2 * (1 - s * s)) + 1j * (s * s + t * t - 1) / (2 * t)
    return complex(out) if out.ndim == 0 else out


def oracle_density(s, t):
    s, t = np.asarray(s, float), np.asarray(t, float)
    out = (1 / (2 * np.pi)) * (1 / t) * ((1 - s * s) / t ** 2
                                         + (1 + s * s) * t / (2 * (1 - s * s) ** 2) - 1)
    return float(out) if out.ndim == 0 else out


def oracle_M_poly(s, t):
    """Negative inside M, zero on its boundary."""
    s, t = np.asarray(s, float), np.asarray(t, float)
    u = s * s - 1
    return 4 * u * t ** 3 + 2 * (s * s + 1) * u * u * t * t + u ** 4 + (s ** 4 - s * s + 1) * t ** 4


def oracle_spectrum_poly(s, t):
    """Boundary octic of the spectrum of x + iy (with the ``t**4`` correction)."""
    return oracle_spectrum_poly_uncorrected(s, t) - np.asarray(s, float) ** 4 + np.asarray(t, float) ** 4


def oracle_spectrum_poly_uncorrected(s, t):
    """The octic with the misprint (``+ s**4`` in place of ``+ t**4``)."""
    s, t = np.asarray(s, float), np.asarray(t, float)
    return (s ** 8 + 2 * s ** 6 * t ** 2 + s ** 4 * t ** 4 - 4 * s ** 6 - 2 * s ** 4 * t ** 2
            - s ** 2 * t ** 4 + 4 * s ** 2 * t ** 3 + 6 * s ** 4 - 2 * s ** 2 * t ** 2 + s ** 4
            - 4 * t ** 3 - 4 * s ** 2 + 2 * t ** 2 + 1)

"""Brown measure of x + iy with y free Poisson: domain, inverse map and density.

The core objects are a :class:`SpectralMeasure` for the law of x and the
Poisson parameter ``p``.  From these the package traces the domain D and its
image M, inverts ``h: D -> M`` numerically and evaluates the density of the
absolutely continuous part of the Brown measure on M.
"""
from .density import (DensityGrid, InverseResult, density_at, density_grid, h_inverse, jacobian_h,
                      window_from_boundary)
from .domain import (BoundaryPolyline, auto_window_D, check_assumption, delta0, h_map, limit_ratio,
                     trace_boundary_D, trace_boundary_M)
from .errors import (BrownmapError, ComplexResult, DivergentIntegral, EigensolverFailure,
                     EmptyBoundary, JacobianSingular, MeasureSpecError, NegativeDensity,
                     NotInImage, PoleAtAtom, WindowMismatch)
from .hcore import h_hat, im_h11_ratio, jacobian_hhat
from .measure import SpectralMeasure, cauchy_transform, load_measure, std_integrals, std_partials

__version__ = "0.1.0"

__all__ = [
    "SpectralMeasure", "load_measure", "cauchy_transform", "std_integrals", "std_partials",
    "h_hat", "im_h11_ratio", "jacobian_hhat",
    "limit_ratio", "delta0", "h_map", "trace_boundary_D", "trace_boundary_M",
    "check_assumption", "auto_window_D", "BoundaryPolyline",
    "h_inverse", "jacobian_h", "density_at", "density_grid", "window_from_boundary",
    "InverseResult", "DensityGrid",
    "BrownmapError", "MeasureSpecError", "PoleAtAtom", "DivergentIntegral", "NotInImage",
    "JacobianSingular", "NegativeDensity", "EmptyBoundary", "ComplexResult", "WindowMismatch",
    "EigensolverFailure",
]

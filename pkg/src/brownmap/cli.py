"""Command-line front end: ``brownmap {domain,density,mc,oracle-check,delta0}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .density import density_grid, window_from_boundary
from .domain import (auto_window_D, check_assumption, limit_ratio, sample,
                     trace_boundary_D, trace_boundary_M)
from .errors import BrownmapError, EmptyBoundary, MeasureSpecError
from .export import (write_boundary_csv, write_density_csv, write_eigen_csv, write_json,
                     write_overlay_svg)
from .measure import SpectralMeasure, load_measure

log = logging.getLogger("brownmap")

EXIT_OK, EXIT_CONFIG, EXIT_EMPTY, EXIT_UNSUPPORTED, EXIT_NUMERICAL = 0, 2, 3, 4, 5
BUILTIN_MEASURES = {"bernoulli": SpectralMeasure.bernoulli, "uniform": SpectralMeasure.uniform}


class ConfigError(Exception):
    pass


class Unsupported(Exception):
    pass


@dataclass
class RunConfig:
    measure: str
    p: float = 1.0
    window: tuple | None = None
    resolution: int | None = None
    boundary_resolution: int = 512
    seed: int = 42
    N: int = 512
    bins: int = 24
    threads: int = 1
    deterministic: bool = False
    out: Path = Path(".")
    model: str = "ginibre"
    tolerances: dict = field(default_factory=dict)

    def validate(self) -> None:
        if not self.p > 0:
            raise ConfigError("--p must be positive")
        if self.window is not None:
            s0, s1, t0, t1 = self.window
            if not (s0 < s1 and t0 < t1):
                raise ConfigError("--window must satisfy s_min < s_max and t_min < t_max")
        if self.resolution is not None and self.resolution < 16:
            raise ConfigError("--resolution must be at least 16")
        if self.boundary_resolution < 16:
            raise ConfigError("--boundary-resolution must be at least 16")
        if self.N < 2:
            raise ConfigError("--N must be at least 2")
        if self.bins < 1:
            raise ConfigError("--bins must be positive")
        if self.threads < 1:
            raise ConfigError("--threads must be positive")
        if self.deterministic:
            self.threads = 1


def _parse_window(text: str) -> tuple:
    try:
        vals = tuple(float(x) for x in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"window must be four numbers a,b,c,d: {exc}") from None
    if len(vals) != 4 or not all(np.isfinite(vals)):
        raise argparse.ArgumentTypeError("window must be four finite numbers a,b,c,d")
    return vals


def _load(cfg: RunConfig) -> SpectralMeasure:
    path = Path(cfg.measure)
    if not path.exists() and cfg.measure in BUILTIN_MEASURES:
        return BUILTIN_MEASURES[cfg.measure]()
    try:
        return load_measure(path)
    except FileNotFoundError:
        raise ConfigError(f"measure file not found: {cfg.measure}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"measure file is not valid JSON: {exc}") from None
    except MeasureSpecError as exc:
        raise ConfigError(f"invalid measure: {exc}") from None


def _boundaries(m, p, cfg):
    window_D = auto_window_D(m, p)
    bD = trace_boundary_D(m, p, window_D, cfg.boundary_resolution)
    bM = [trace_boundary_M(m, p, pl) for pl in bD]
    return window_D, bD, bM


def _out(cfg: RunConfig) -> Path:
    cfg.out.mkdir(parents=True, exist_ok=True)
    return cfg.out


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_domain(cfg: RunConfig) -> int:
    m = _load(cfg)
    window = cfg.window or auto_window_D(m, cfg.p)
    bD = trace_boundary_D(m, cfg.p, window, cfg.resolution or cfg.boundary_resolution)
    bM = [trace_boundary_M(m, cfg.p, pl) for pl in bD]
    out = _out(cfg)
    write_boundary_csv(out / "boundary_D.csv", bD)
    write_boundary_csv(out / "boundary_M.csv", bM)
    write_overlay_svg(out / "overlay.svg", bD + bM)
    report = check_assumption(m, cfg.p)
    write_json(out / "domain_report.json", {
        "measure_hash": m.fingerprint(),
        "p": cfg.p,
        "window": list(window),
        "resolution": cfg.resolution or cfg.boundary_resolution,
        "polylines_D": [{"vertices": len(pl), "closed": pl.closed} for pl in bD],
        "polylines_M": [{"vertices": len(pl), "closed": pl.closed,
                         "one_sided_limit_vertices": list(pl.fallback)} for pl in bM],
        "assumption": {"ok": report.ok, "warnings": report.warnings,
                       "atom_ratios": {fmt_key(k): v for k, v in report.atom_ratios.items()},
                       "support_max_ratio": report.support_max_ratio,
                       "s2_over_t_max": report.s2_over_t_max},
    })
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"boundary of D: {len(bD)} polyline(s); boundary of M: {len(bM)} polyline(s)")
    return EXIT_OK


def fmt_key(x: float) -> str:
    return format(float(x), ".17g")


def cmd_density(cfg: RunConfig) -> int:
    m = _load(cfg)
    _, _, bM = _boundaries(m, cfg.p, cfg)
    window = cfg.window or window_from_boundary(bM)
    t0 = time.perf_counter()
    grid = density_grid(m, cfg.p, window, cfg.resolution or 200, boundary=bM, threads=cfg.threads)
    meta = dict(grid.metadata)
    meta["one_sided_limit_vertices"] = sum(len(pl.fallback) for pl in bM)
    if not cfg.deterministic:
        meta["elapsed_seconds"] = time.perf_counter() - t0
    out = _out(cfg)
    write_density_csv(out / "density.csv", grid)
    write_json(out / "metadata.json", meta)
    print(f"total_mass {grid.total_mass:.6f}  failure_count {meta['failure_count']}")
    return EXIT_OK


def cmd_mc(cfg: RunConfig) -> int:
    from .rmt import compare_to_density, sample_model

    m = _load(cfg)
    cloud = sample_model(m, cfg.p, cfg.N, cfg.seed, cfg.model)
    out = _out(cfg)
    write_eigen_csv(out / "eigen.csv", cloud)
    _, bD, bM = _boundaries(m, cfg.p, cfg)
    window = cfg.window or window_from_boundary(bM, points=cloud.eigenvalues)
    res = cfg.resolution or 10 * cfg.bins
    grid = density_grid(m, cfg.p, window, res, boundary=bM, threads=cfg.threads)
    report = compare_to_density(cloud, grid, cfg.bins)
    write_json(out / "mc_report.json", {
        "N": cfg.N, "seed": cfg.seed, "model": cfg.model, "p": cfg.p,
        "measure_hash": m.fingerprint(), "window": list(window), "resolution": res,
        "grid_total_mass": grid.total_mass, **report.to_dict(),
    })
    write_overlay_svg(out / "overlay_mc.svg", bM, points=cloud.eigenvalues)
    print(f"containment {report.containment:.4f}  L1 {report.l1:.4f}")
    return EXIT_OK


def _is_bernoulli(m: SpectralMeasure, p: float) -> bool:
    return (p == 1.0 and m.is_atomic and m.atom_locations.size == 2
            and np.allclose(np.sort(m.atom_locations), [-1.0, 1.0], atol=0, rtol=0)
            and np.allclose(m.atom_weights, 0.5, atol=1e-15))


def cmd_oracle_check(cfg: RunConfig, perturb: float = 1.0) -> int:
    from .oracle_check import run_oracle_check

    m = _load(cfg)
    if not _is_bernoulli(m, cfg.p):
        raise Unsupported("no oracle for this measure")
    results = run_oracle_check(m, seed=cfg.seed, density_factor=perturb)
    ok = all(r.passed for r in results)
    for r in results:
        print(r.line())
    out = _out(cfg)
    write_json(out / "oracle_report.json", {
        "passed": ok, "checks": [r.to_dict() for r in results]})
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_NUMERICAL


def cmd_delta0(cfg: RunConfig, lam: complex) -> int:
    m = _load(cfg)
    smp = sample(m, cfg.p, lam)
    print(f"lambda      {smp.lam.real:.17g} {smp.lam.imag:+.17g}i")
    print(f"limit_ratio {smp.limit_ratio:.17g}")
    print(f"in_D        {smp.in_domain}")
    print(f"delta0      {smp.delta0:.17g}")
    print(f"h           {smp.h.real:.17g} {smp.h.imag:+.17g}i")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--measure", required=True,
                        help="measure JSON file (or 'bernoulli' / 'uniform')")
    common.add_argument("--p", type=float, default=1.0, help="free Poisson parameter")
    common.add_argument("--window", type=_parse_window, help="s_min,s_max,t_min,t_max")
    common.add_argument("--resolution", type=int)
    common.add_argument("--boundary-resolution", type=int, default=512)
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--deterministic", action="store_true")
    common.add_argument("--out", type=Path, default=Path("."))
    common.add_argument("--model", choices=("ginibre", "gue-squared"), default="ginibre")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="brownmap", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("domain", parents=[common], help="trace the boundaries of D and M")
    sub.add_parser("density", parents=[common], help="density grid over M")
    mc = sub.add_parser("mc", parents=[common], help="random matrix comparison")
    mc.add_argument("--N", type=int, default=512)
    mc.add_argument("--bins", type=int, default=24)
    oc = sub.add_parser("oracle-check", parents=[common], help="compare with closed forms")
    oc.add_argument("--perturb-density", type=float, default=1.0, help=argparse.SUPPRESS)
    d0 = sub.add_parser("delta0", parents=[common], help="single-point query")
    d0.add_argument("--lambda", dest="lam", type=complex, required=True,
                    help="point in the alpha + i beta plane, e.g. 0.5j or 1+0.2j")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = RunConfig(measure=args.measure, p=args.p, window=args.window, resolution=args.resolution,
                    boundary_resolution=args.boundary_resolution, seed=args.seed,
                    N=getattr(args, "N", 512), bins=getattr(args, "bins", 24),
                    threads=args.threads, deterministic=args.deterministic, out=args.out,
                    model=args.model)
    try:
        cfg.validate()
        if args.command == "domain":
            return cmd_domain(cfg)
        if args.command == "density":
            return cmd_density(cfg)
        if args.command == "mc":
            return cmd_mc(cfg)
        if args.command == "oracle-check":
            return cmd_oracle_check(cfg, args.perturb_density)
        return cmd_delta0(cfg, args.lam)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EmptyBoundary as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except Unsupported as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (BrownmapError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

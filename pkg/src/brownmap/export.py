"""CSV, JSON and SVG writers.

Floats are written with 17 significant digits so files round-trip exactly
and repeated deterministic runs are byte-identical.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

__all__ = [
    "SCHEMA",
    "fmt",
    "write_boundary_csv",
    "write_density_csv",
    "write_eigen_csv",
    "write_json",
    "write_overlay_svg",
]

SCHEMA = "brownmap/1"


def fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def _writer(path):
    fh = open(path, "w", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def write_boundary_csv(path, polylines) -> None:
    fh, w = _writer(path)
    with fh:
        w.writerow(["which", "polyline_id", "vertex_id", "re", "im", "fallback"])
        for pid, pl in enumerate(polylines):
            fb = set(getattr(pl, "fallback", ()))
            for vid, z in enumerate(np.asarray(pl.vertices, dtype=complex)):
                w.writerow([pl.which, pid, vid, fmt(z.real), fmt(z.imag), int(vid in fb)])


def write_density_csv(path, grid) -> None:
    fh, w = _writer(path)
    with fh:
        w.writerow(["s", "t", "inside", "alpha", "beta", "delta0", "f"])
        for i, t in enumerate(grid.t):
            for j, s in enumerate(grid.s):
                w.writerow([fmt(s), fmt(t), int(grid.inside[i, j]), fmt(grid.alpha[i, j]),
                            fmt(grid.beta[i, j]), fmt(grid.delta0[i, j]), fmt(grid.f[i, j])])


def write_eigen_csv(path, cloud) -> None:
    fh, w = _writer(path)
    with fh:
        w.writerow(["re", "im"])
        for z in cloud.eigenvalues:
            w.writerow([fmt(z.real), fmt(z.imag)])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, data: dict) -> None:
    payload = {"schema": SCHEMA, **_jsonable(data)}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_overlay_svg(path, polylines, points=None, size: int = 600) -> None:
    """Polylines (and an optional scatter) in one SVG, y axis pointing up."""
    parts = [np.asarray(pl.vertices, dtype=complex) for pl in polylines]
    if points is not None and len(points):
        parts.append(np.asarray(points, dtype=complex))
    v = np.concatenate(parts) if parts else np.zeros(1, dtype=complex)
    v = v[np.isfinite(v)]
    x0, x1, y0, y1 = v.real.min(), v.real.max(), v.imag.min(), v.imag.max()
    span = max(x1 - x0, y1 - y0, 1e-9) * 1.1
    cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)

    def px(z):
        return ((z.real - cx) / span + 0.5) * size, (0.5 - (z.imag - cy) / span) * size

    colours = {"boundary_of_D": "#1f77b4", "boundary_of_M": "#d62728"}
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
           f'viewBox="0 0 {size} {size}">', '<rect width="100%" height="100%" fill="white"/>']
    for pl in polylines:
        verts = np.asarray(pl.vertices, dtype=complex)
        verts = verts[np.isfinite(verts)]
        if verts.size < 2:
            continue
        xs, ys = px(verts)
        pts = " ".join(f"{a:.3f},{b:.3f}" for a, b in zip(xs, ys))
        tag = "polygon" if pl.closed else "polyline"
        colour = colours.get(pl.which, "black")
        out.append(f'<{tag} class="{pl.which}" points="{pts}" fill="none" '
                   f'stroke="{colour}" stroke-width="1.5"/>')
    if points is not None:
        for z in np.asarray(points, dtype=complex):
            a, b = px(z)
            out.append(f'<circle cx="{a:.3f}" cy="{b:.3f}" r="1.2" fill="black"/>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")

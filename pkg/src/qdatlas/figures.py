"""Figure emission: deterministic SVG 1.1 plus matplotlib PNG renderings.

The SVG files are written by hand so their byte content is a pure function
of the data: fixed header, fixed styling, every coordinate through one
%.6f format. Leaves, tree edges and polygon sides each become exactly one
path element; markers use circle and line elements so a structural test can
count paths. The PNG files carry the same picture for quick viewing and are
not treated as canonical artifacts.
"""

from __future__ import annotations

import cmath
import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .hypdisc import IdealPolygon
from .realtree import MetricTree

_HEADER = '<?xml version="1.0" encoding="UTF-8"?>\n'
_STROKE = "#1f3b66"
_ACCENT = "#b33b3b"
_FAINT = "#8899aa"


def _f(x: float) -> str:
    s = "%.6f" % float(x)
    return "-0.000000" if s == "-0.000000" else s


def _svg_open(lo_x: float, lo_y: float, span_x: float, span_y: float) -> str:
    # the inner group flips y so path data can stay in math coordinates
    return (
        _HEADER
        + '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        + 'width="640" height="640" viewBox="%s %s %s %s">\n'
        % (_f(lo_x), _f(-lo_y - span_y), _f(span_x), _f(span_y))
        + '<g transform="scale(1,-1)">\n'
    )


_SVG_CLOSE = "</g>\n</svg>\n"


def _circle(z: complex, r: float, color: str, width: float,
            fill: str = "none") -> str:
    return (
        '<circle cx="%s" cy="%s" r="%s" fill="%s" stroke="%s" '
        'stroke-width="%s"/>\n'
        % (_f(z.real), _f(z.imag), _f(r), fill, color, _f(width))
    )


def _line(a: complex, b: complex, color: str, width: float) -> str:
    return (
        '<line x1="%s" y1="%s" x2="%s" y2="%s" stroke="%s" '
        'stroke-width="%s"/>\n'
        % (_f(a.real), _f(a.imag), _f(b.real), _f(b.imag), color, _f(width))
    )


def _path(d: str, color: str, width: float) -> str:
    return (
        '<path d="%s" fill="none" stroke="%s" stroke-width="%s"/>\n'
        % (d, color, _f(width))
    )


def _polyline_d(points) -> str:
    parts = ["M %s %s" % (_f(points[0].real), _f(points[0].imag))]
    for z in points[1:]:
        parts.append("L %s %s" % (_f(z.real), _f(z.imag)))
    return " ".join(parts)


# ---------------------------------------------------------------------------
# ideal polygons

def _side_arc(u: complex, v: complex) -> tuple[complex, float]:
    """Center and radius of the circle through u, v orthogonal to the unit
    circle; u, v must not be antipodal."""
    denom = 1.0 + (u * v.conjugate()).real
    if denom < 1e-12:
        raise ValueError("antipodal ideal points have a diameter geodesic")
    c = (u + v) / denom
    return c, math.sqrt(max(abs(c) ** 2 - 1.0, 0.0))


def _side_d(u: complex, v: complex) -> str:
    gap = (cmath.phase(v / u)) % (2.0 * math.pi)
    if abs(gap - math.pi) < 1e-9:
        return "M %s %s L %s %s" % (_f(u.real), _f(u.imag),
                                    _f(v.real), _f(v.imag))
    c, r = _side_arc(u, v)
    # counterclockwise vertex order puts the geodesic on the sweep-0 side
    return "M %s %s A %s %s 0 0 0 %s %s" % (
        _f(u.real), _f(u.imag), _f(r), _f(r), _f(v.real), _f(v.imag))


def polygon_svg(poly: IdealPolygon) -> str:
    out = [_svg_open(-1.25, -1.25, 2.5, 2.5)]
    out.append(_circle(0j, 1.0, _FAINT, 0.01))
    vs = poly.vertices
    n = len(vs)
    for i in range(n):
        out.append(_path(_side_d(vs[i], vs[(i + 1) % n]), _STROKE, 0.02))
    for v in vs:
        out.append(_circle(v, 0.035, _ACCENT, 0.012, fill=_ACCENT))
    out.append(_SVG_CLOSE)
    return "".join(out)


def _arc_points(u: complex, v: complex, n: int = 64) -> np.ndarray:
    gap = (cmath.phase(v / u)) % (2.0 * math.pi)
    if abs(gap - math.pi) < 1e-9:
        t = np.linspace(0.0, 1.0, n)
        return u + t * (v - u)
    c, r = _side_arc(u, v)
    a0 = cmath.phase(u - c)
    a1 = cmath.phase(v - c)
    da = (a1 - a0 + math.pi) % (2.0 * math.pi) - math.pi
    ang = a0 + np.linspace(0.0, 1.0, n) * da
    return c + r * np.exp(1j * ang)


def polygon_png(poly: IdealPolygon, path: str) -> None:
    fig, ax = plt.subplots(figsize=(5, 5))
    th = np.linspace(0.0, 2.0 * math.pi, 256)
    ax.plot(np.cos(th), np.sin(th), color=_FAINT, lw=0.8)
    vs = poly.vertices
    for i in range(len(vs)):
        pts = _arc_points(vs[i], vs[(i + 1) % len(vs)])
        ax.plot(pts.real, pts.imag, color=_STROKE, lw=1.6)
    ax.plot([v.real for v in vs], [v.imag for v in vs], "o",
            color=_ACCENT, ms=5)
    ax.set_aspect("equal")
    ax.set_axis_off()
    fig.savefig(path, dpi=128, bbox_inches="tight")
    plt.close(fig)


# ---------------------------------------------------------------------------
# metric trees

def _tree_layout(tree: MetricTree) -> tuple[dict[int, complex],
                                            list[tuple[complex, complex]]]:
    """Schematic positions: outer vertices on the unit circle, rays fanned
    outward; edge lengths are reported in JSON, not to scale here."""
    pos: dict[int, complex] = {0: 0j}
    n_out = len(tree.finite_edges)
    for i, (v1, v2, _) in enumerate(tree.finite_edges):
        outer = v2 if v1 == 0 else v1
        pos[outer] = cmath.exp(2j * math.pi * i / max(n_out, 1))
    rays = []
    per_vertex: dict[int, int] = {}
    for vid, _ in tree.infinite_edges:
        per_vertex[vid] = per_vertex.get(vid, 0) + 1
    counters: dict[int, int] = {}
    for vid, _ray_id in tree.infinite_edges:
        k = counters.get(vid, 0)
        counters[vid] = k + 1
        total = per_vertex[vid]
        base = pos[vid]
        if base == 0:
            ang = 2.0 * math.pi * k / total
        else:
            spread = 0.45 * math.pi
            ang = cmath.phase(base) - 0.5 * spread + spread * (
                (k + 0.5) / total)
        rays.append((base, base + 0.8 * cmath.exp(1j * ang)))
    return pos, rays


def tree_svg(tree: MetricTree) -> str:
    pos, rays = _tree_layout(tree)
    out = [_svg_open(-2.1, -2.1, 4.2, 4.2)]
    for v1, v2, _length in tree.finite_edges:
        out.append(_path(_polyline_d([pos[v1], pos[v2]]), _STROKE, 0.03))
    for a, b in rays:
        out.append(_path("M %s %s L %s %s" % (_f(a.real), _f(a.imag),
                                              _f(b.real), _f(b.imag)),
                         _FAINT, 0.02))
    for v in tree.vertices:
        out.append(_circle(pos[v.id], 0.06, _ACCENT, 0.015, fill=_ACCENT))
    out.append(_SVG_CLOSE)
    return "".join(out)


def tree_png(tree: MetricTree, path: str) -> None:
    pos, rays = _tree_layout(tree)
    fig, ax = plt.subplots(figsize=(5, 5))
    for v1, v2, _length in tree.finite_edges:
        ax.plot([pos[v1].real, pos[v2].real], [pos[v1].imag, pos[v2].imag],
                color=_STROKE, lw=2.0)
    for a, b in rays:
        ax.plot([a.real, b.real], [a.imag, b.imag], color=_FAINT, lw=1.2)
    ax.plot([p.real for p in pos.values()], [p.imag for p in pos.values()],
            "o", color=_ACCENT, ms=6)
    ax.set_aspect("equal")
    ax.set_axis_off()
    fig.savefig(path, dpi=128, bbox_inches="tight")
    plt.close(fig)


# ---------------------------------------------------------------------------
# traced leaves

def _trace_bounds(polylines, zeros) -> tuple[float, float, float, float]:
    xs, ys = [0.0], [0.0]
    for pts in polylines:
        xs.extend(np.asarray(pts).real.tolist())
        ys.extend(np.asarray(pts).imag.tolist())
    for z in zeros:
        xs.append(z.real)
        ys.append(z.imag)
    lo_x, hi_x = min(xs), max(xs)
    lo_y, hi_y = min(ys), max(ys)
    span = max(hi_x - lo_x, hi_y - lo_y, 1e-6)
    pad = 0.12 * span
    return lo_x - pad, lo_y - pad, (hi_x - lo_x) + 2 * pad, \
        (hi_y - lo_y) + 2 * pad


def trace_svg(polylines, zeros, directions) -> str:
    """directions: per zero, a list of unit tick angles (critical
    directions of the traced foliation)."""
    lo_x, lo_y, span_x, span_y = _trace_bounds(polylines, zeros)
    span = max(span_x, span_y)
    out = [_svg_open(lo_x, lo_y, span_x, span_y)]
    tick = 0.05 * span
    for z, angles in zip(zeros, directions):
        for th in angles:
            out.append(_line(z, z + tick * cmath.exp(1j * th), _ACCENT,
                             0.004 * span))
    for pts in polylines:
        out.append(_path(_polyline_d(list(map(complex, pts))), _STROKE,
                         0.005 * span))
    for z in zeros:
        out.append(_circle(z, 0.012 * span, _ACCENT, 0.004 * span,
                           fill="#ffffff"))
    out.append(_SVG_CLOSE)
    return "".join(out)


def trace_png(polylines, zeros, directions, path: str) -> None:
    lo_x, lo_y, span_x, span_y = _trace_bounds(polylines, zeros)
    span = max(span_x, span_y)
    fig, ax = plt.subplots(figsize=(5, 5))
    tick = 0.05 * span
    for z, angles in zip(zeros, directions):
        for th in angles:
            ax.plot([z.real, z.real + tick * math.cos(th)],
                    [z.imag, z.imag + tick * math.sin(th)],
                    color=_ACCENT, lw=1.0)
    for pts in polylines:
        arr = np.asarray(pts)
        ax.plot(arr.real, arr.imag, color=_STROKE, lw=1.2)
    if zeros:
        ax.plot([z.real for z in zeros], [z.imag for z in zeros], "o",
                mfc="white", mec=_ACCENT, ms=6)
    ax.set_aspect("equal")
    ax.set_axis_off()
    fig.savefig(path, dpi=128, bbox_inches="tight")
    plt.close(fig)

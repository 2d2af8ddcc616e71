"""The metric tree dual to a measured foliation of the symmetric family.

Leaves of the vertical foliation of [z^(2m) - c z^(m-1)] dz^2 form a metric
tree under the horizontal transverse measure |d Re zeta|: a star with m+1
finite edges of length nu = pi |b| / (2 (m+1)) and two infinite rays per
outer vertex. The horizontal foliation gives the same star with |a| in the
edge-length role. Edge lengths are cross-checked here by direct quadrature
of sqrt(P) along radial segments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegenerateFamily, InvalidLocation
from .polyfield import SymmetricFamily, family_roots
from .quaddiff import integrate_zeta


@dataclass(frozen=True)
class TreeVertex:
    id: int
    multiplicity: int
    label: str


@dataclass(frozen=True)
class MetricTree:
    """Star tree: vertices, finite edges (v1, v2, length), rays (vertex, ray_id).

    Rays are listed in cyclic order matching the end domains at infinity;
    ray 0 is pinned to the end domain containing the positive real axis for
    the principal outer zero. Points on the tree are addressed as
    ("vertex", id), ("edge", edge_index, offset from v1) or
    ("ray", ray_index, offset from the base vertex).
    """

    vertices: tuple[TreeVertex, ...]
    finite_edges: tuple[tuple[int, int, float], ...]
    infinite_edges: tuple[tuple[int, int], ...]

    def vertex(self, vid: int) -> TreeVertex:
        for v in self.vertices:
            if v.id == vid:
                return v
        raise InvalidLocation(f"no vertex {vid}")


def build_family_tree(f: SymmetricFamily, foliation: str = "vertical"
                      ) -> MetricTree:
    """Lemma-level tree of the chosen foliation of the family.

    Vertical foliation: edge parameter |b|; horizontal: |a|. Nonzero
    parameter gives the star with m+1 edges of length pi par / (2(m+1));
    m = 1 keeps a degree-two midpoint marker as the center so that "center
    to outer vertex" is uniformly nu. Zero parameter collapses the star to
    one vertex carrying all 2m+2 rays.
    """
    if foliation not in ("vertical", "horizontal"):
        raise ValueError("foliation must be vertical or horizontal")
    m = f.m
    par = abs(f.b) if foliation == "vertical" else abs(f.a)
    if par == 0.0:
        verts = (TreeVertex(0, 2 * m, "center"),)
        rays = tuple((0, i) for i in range(2 * m + 2))
        return MetricTree(verts, (), rays)
    nu = math.pi * par / (2.0 * (m + 1))
    verts = [TreeVertex(0, m - 1 if m >= 2 else 1, "center")]
    edges = []
    rays = []
    for k in range(m + 1):
        verts.append(TreeVertex(k + 1, 1, f"outer{k}"))
        edges.append((0, k + 1, nu))
        rays.append((k + 1, 2 * k))
        rays.append((k + 1, 2 * k + 1))
    return MetricTree(tuple(verts), tuple(edges), tuple(rays))


def _anchors(t: MetricTree, p) -> list[tuple[int, float]]:
    """Vertex anchors (vertex id, distance from p) for a tree point."""
    if not isinstance(p, tuple) or not p:
        raise InvalidLocation(f"bad tree point {p!r}")
    kind = p[0]
    if kind == "vertex":
        t.vertex(p[1])
        return [(p[1], 0.0)]
    if kind == "edge":
        _, idx, off = p
        if not 0 <= idx < len(t.finite_edges):
            raise InvalidLocation(f"no finite edge {idx}")
        v1, v2, length = t.finite_edges[idx]
        if not 0.0 <= off <= length:
            raise InvalidLocation(f"offset {off} outside edge of length {length}")
        return [(v1, off), (v2, length - off)]
    if kind == "ray":
        _, idx, off = p
        if not 0 <= idx < len(t.infinite_edges):
            raise InvalidLocation(f"no ray {idx}")
        if off < 0.0:
            raise InvalidLocation("negative ray offset")
        return [(t.infinite_edges[idx][0], off)]
    raise InvalidLocation(f"unknown tree point kind {kind!r}")


def _vertex_distances(t: MetricTree, src: int) -> dict[int, float]:
    adj: dict[int, list[tuple[int, float]]] = {v.id: [] for v in t.vertices}
    for v1, v2, length in t.finite_edges:
        adj[v1].append((v2, length))
        adj[v2].append((v1, length))
    dist = {src: 0.0}
    frontier = [src]
    while frontier:  # tree: each vertex settled once
        nxt = []
        for u in frontier:
            for v, length in adj[u]:
                if v not in dist:
                    dist[v] = dist[u] + length
                    nxt.append(v)
        frontier = nxt
    return dist


def tree_distance(t: MetricTree, p, q) -> float:
    """Unique-path metric between two addressed points of the tree."""
    ap, aq = _anchors(t, p), _anchors(t, q)
    # interior points of one edge or one ray: direct offset difference
    if p[0] == q[0] and p[0] in ("edge", "ray") and p[1] == q[1]:
        return abs(p[2] - q[2])
    best = math.inf
    for vp, dp in ap:
        dists = _vertex_distances(t, vp)
        for vq, dq in aq:
            if vq in dists:
                best = min(best, dp + dists[vq] + dq)
    if not math.isfinite(best):
        raise InvalidLocation("points lie in disconnected components")
    return best


def family_zero_list(f: SymmetricFamily) -> list[complex]:
    """Exact zero locations of the family (closed form, no root finding)."""
    center, outer = family_roots(f, allow_degenerate=True)
    out = list(outer)
    if center is not None:
        out.append(center[0])
    return out


def measure_edge_numeric(f: SymmetricFamily, k: int) -> float:
    """|Re zeta| along the radial segment from 0 to the k-th outer zero.

    Direct quadrature cross-check of the finite edge length of the vertical
    tree: the answer is pi |b| / (2(m+1)) independently of a and k.
    """
    if f.c == 0:
        raise DegenerateFamily("c = 0 family has no radial edges")
    if not 0 <= k <= f.m:
        raise ValueError(f"k must lie in [0, {f.m}]")
    zk = f.eta * f.omega ** k
    path = integrate_zeta(f.expand(), [0j, zk], zeros=family_zero_list(f))
    return abs(path.zeta.real)

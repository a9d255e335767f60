"""Planar arrangement overlay of triangle sets.

All triangle edges are noded against each other, the arrangement faces are
polygonized, and every face is triangulated without adding boundary points.
Each merged triangle therefore lies inside at most one triangle of every
input complex (or inside several, for overlapping triangle soups), which is
what chain lifting and pushforward refinement need.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import shapely
from shapely.geometry import MultiLineString

from .currents import SimplicialCurrent
from .errors import GeometryError, InputError
from .mesh import DEGENERACY_EPS, EmbeddedComplex


def _triangle_coords(c: EmbeddedComplex):
    if c.ambient_dim != 2 or c.top_dim != 2:
        raise InputError("overlay needs 2-dimensional complexes in R^2")
    return c.vertices[c.simplices(2)]


def _containing(tris, points, tol=1e-10):
    """Pairs (point index, triangle index) with the point inside the triangle."""
    if len(tris) == 0 or len(points) == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    tree = shapely.STRtree(shapely.polygons(np.concatenate([tris, tris[:, :1]], axis=1)))
    pi, ti = tree.query(shapely.points(points), predicate="intersects")
    a, b, c = tris[ti, 0], tris[ti, 1], tris[ti, 2]
    p = points[pi]
    det = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    l1 = ((p[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (p[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])) / det
    l2 = ((b[:, 0] - a[:, 0]) * (p[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (p[:, 0] - a[:, 0])) / det
    ok = (l1 >= -tol) & (l2 >= -tol) & (1 - l1 - l2 >= -tol)
    return pi[ok], ti[ok]


@dataclass
class Arrangement:
    vertices: np.ndarray
    triangles: np.ndarray
    # per input set: (merged triangle idx, input triangle idx) pairs
    owners: list
    perturbations: list = field(default_factory=list)


def arrangement_2d(triangle_sets, area_eps=DEGENERACY_EPS) -> Arrangement:
    """Common refinement of several lists of planar triangles, shape (n_i, 3, 2)."""
    sets = [np.asarray(t, dtype=float).reshape(-1, 3, 2) for t in triangle_sets]
    segs = []
    for t in sets:
        for i, j in ((0, 1), (1, 2), (0, 2)):
            segs.append(np.stack([t[:, i], t[:, j]], axis=1))
    segs = np.concatenate(segs, axis=0)
    if len(segs) == 0:
        return Arrangement(np.zeros((0, 2)), np.zeros((0, 3), dtype=np.int64), [(np.zeros(0, int),) * 2 for _ in sets])
    # canonical direction so identical edges coincide exactly
    flip = (segs[:, 0, 0] > segs[:, 1, 0]) | ((segs[:, 0, 0] == segs[:, 1, 0]) & (segs[:, 0, 1] > segs[:, 1, 1]))
    segs[flip] = segs[flip][:, ::-1]
    segs = np.unique(segs.reshape(-1, 4), axis=0).reshape(-1, 2, 2)
    noded = shapely.unary_union(MultiLineString(list(segs)))
    faces = shapely.get_parts(shapely.polygonize(shapely.get_parts(noded)))
    if len(faces) == 0:
        raise GeometryError("arrangement produced no faces")
    probes = shapely.get_coordinates(shapely.point_on_surface(faces))
    all_tris = np.concatenate(sets, axis=0)
    fi, _ = _containing(all_tris, probes)
    faces = faces[np.unique(fi)]

    n_coords = shapely.get_num_coordinates(faces)
    simple = (n_coords == 4) & (shapely.get_num_interior_rings(faces) == 0)
    tri_coords = [shapely.get_coordinates(faces[simple]).reshape(-1, 4, 2)[:, :3]]
    if np.any(~simple):
        pieces = shapely.get_parts(shapely.constrained_delaunay_triangles(faces[~simple]))
        tri_coords.append(shapely.get_coordinates(pieces).reshape(-1, 4, 2)[:, :3])
    tc = np.concatenate(tri_coords, axis=0)

    flat = tc.reshape(-1, 2)
    verts, inv = np.unique(flat, axis=0, return_inverse=True)
    tris = inv.reshape(-1, 3)
    a, b, c = verts[tris[:, 0]], verts[tris[:, 1]], verts[tris[:, 2]]
    area = 0.5 * np.abs((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))
    perturb = []
    bad = (area <= area_eps) | (tris[:, 0] == tris[:, 1]) | (tris[:, 1] == tris[:, 2]) | (tris[:, 0] == tris[:, 2])
    if np.any(bad):
        perturb.append(f"dropped {int(bad.sum())} sliver triangles with area <= {area_eps:g}")
        tris = tris[~bad]
    tris = np.sort(tris, axis=1)
    used = np.unique(tris)
    remap = np.full(len(verts), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    verts = verts[used]
    tris = remap[tris]

    cent = verts[tris].mean(axis=1)
    owners = []
    for t in sets:
        mi, ti = _containing(t, cent)
        owners.append((mi, ti))
    return Arrangement(verts, tris, owners, perturb)


@dataclass
class OverlayComplex:
    """Merged complex plus, for each input, the map input triangle -> merged triangles."""

    merged: EmbeddedComplex
    inputs: tuple
    lifts: tuple
    perturbations: list

    def lift(self, T: SimplicialCurrent, which: int) -> SimplicialCurrent:
        """Transport a 2- or 1-chain of input ``which`` onto the merged complex."""
        src = self.inputs[which]
        if T.complex is not src and not T.complex.same_as(src):
            raise InputError(f"chain does not live on input complex {which}")
        if T.dim == 2:
            mi, ti = self.lifts[which]
            return lift_top_chain(T, self.merged, mi, ti)
        if T.dim == 1:
            return lift_edge_chain(T, self.merged)
        raise InputError("only 1- and 2-chains can be lifted")


def _orient2(P):
    return np.sign(
        (P[:, 1, 0] - P[:, 0, 0]) * (P[:, 2, 1] - P[:, 0, 1]) - (P[:, 1, 1] - P[:, 0, 1]) * (P[:, 2, 0] - P[:, 0, 0])
    ).astype(np.int64)


def lift_top_chain(T, merged, mi, ti):
    """Multiplicity on each merged triangle from the input triangles containing it."""
    src = T.complex
    dense = T.dense()
    s_or = _orient2(src.vertices[src.simplices(2)])
    m_or = _orient2(merged.vertices[merged.simplices(2)])
    contrib = dense[ti] * s_or[ti] * m_or[mi]
    out = np.zeros(merged.n_simplices(2), dtype=np.int64)
    np.add.at(out, mi, contrib)
    return SimplicialCurrent.from_dense(merged, 2, out)


def lift_edge_chain(T, merged, tol=1e-9):
    src = T.complex
    E = merged.simplices(1)
    mids = merged.vertices[E].mean(axis=1)
    dirs = merged.vertices[E[:, 1]] - merged.vertices[E[:, 0]]
    out = np.zeros(len(E), dtype=np.int64)
    for sid, m in zip(T.ids, T.mults):
        a, b = src.vertices[src.simplices(1)[sid]]
        u = b - a
        L = np.linalg.norm(u)
        rel = mids - a
        t = rel @ u / L**2
        off = np.abs(rel[:, 0] * u[1] - rel[:, 1] * u[0]) / L
        hit = (off <= tol * max(1.0, L)) & (t > 0) & (t < 1)
        if not np.any(hit):
            raise GeometryError(f"edge {int(sid)} has no counterpart in the merged complex")
        sgn = np.sign(dirs[hit] @ u).astype(np.int64)
        out[hit] += m * sgn
    return SimplicialCurrent.from_dense(merged, 1, out)


def overlay_2d(c1: EmbeddedComplex, c2: EmbeddedComplex) -> OverlayComplex:
    """Conforming common refinement of two planar triangulations."""
    arr = arrangement_2d([_triangle_coords(c1), _triangle_coords(c2)])
    merged = EmbeddedComplex.from_top_simplices(arr.vertices, arr.triangles)
    return OverlayComplex(merged, (c1, c2), tuple(arr.owners), arr.perturbations)


def overlay_many(complexes) -> OverlayComplex:
    arr = arrangement_2d([_triangle_coords(c) for c in complexes])
    merged = EmbeddedComplex.from_top_simplices(arr.vertices, arr.triangles)
    return OverlayComplex(merged, tuple(complexes), tuple(arr.owners), arr.perturbations)

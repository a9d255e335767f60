"""Mesh builders for the shipped instances.

Polar meshes are built ring by ring; neighbouring rings are stitched with a
merge ("zipper") triangulation, so rings may carry different point counts.
The outermost ring of every unit-disk-like mesh uses the same angle formula,
which makes boundaries of separately generated meshes coincide bit for bit.
"""

from __future__ import annotations

import math

import numpy as np

from .mesh import EmbeddedComplex


def _ring_angles(count, theta0, theta1, closed):
    if closed:
        return theta0 + (theta1 - theta0) * np.arange(count) / count
    return theta0 + (theta1 - theta0) * np.arange(count + 1) / count


def _zipper(inner, outer, a_in, a_out, closed):
    """Triangulate the band between two rings given vertex ids and their angles."""
    tris = []
    p, q = len(inner), len(outer)
    if closed:
        span = 2 * math.pi
        ain = np.append(a_in - a_in[0], span)
        aout = np.append(a_out - a_out[0], span)
        nxt_in = lambda i: inner[(i + 1) % p]
        nxt_out = lambda j: outer[(j + 1) % q]
        end_i, end_j = p, q
    else:
        ain, aout = a_in - a_in[0], a_out - a_out[0]
        nxt_in = lambda i: inner[i + 1]
        nxt_out = lambda j: outer[j + 1]
        end_i, end_j = p - 1, q - 1
    i = j = 0
    while i < end_i or j < end_j:
        adv_out = j < end_j and (i >= end_i or aout[j + 1] <= ain[i + 1])
        if adv_out:
            tris.append((inner[i % p], outer[j % q], nxt_out(j)))
            j += 1
        else:
            tris.append((inner[i % p], nxt_in(i), outer[j % q]))
            i += 1
    return tris


def polar_mesh(radii, counts, theta0=0.0, theta1=2 * math.pi, center=False, closed=True, snap_axis=False):
    """Vertices and triangles of a (possibly partial) polar mesh.

    Parameters
    ----------
    radii : increasing ring radii (all > 0)
    counts : number of angular segments per ring
    center : add a vertex at the origin fanned to the first ring
    closed : full rings; otherwise the sector [theta0, theta1] with end points
    snap_axis : put sector end points exactly on their axis (x = 0 for +-pi/2)
    """
    verts, tris, rings, angles = [], [], [], []
    if center:
        verts.append((0.0, 0.0))
    for r, n in zip(radii, counts):
        a = _ring_angles(int(n), theta0, theta1, closed)
        start = len(verts)
        pts = np.stack([r * np.cos(a), r * np.sin(a)], axis=1)
        if snap_axis and not closed:
            for idx in (0, len(a) - 1):
                if abs(math.cos(a[idx])) < 1e-12:
                    pts[idx, 0] = 0.0
                if abs(math.sin(a[idx])) < 1e-12:
                    pts[idx, 1] = 0.0
        verts.extend(map(tuple, pts))
        rings.append(np.arange(start, start + len(a)))
        angles.append(a)
    if center:
        first = rings[0]
        m = len(first)
        for t in range(m if closed else m - 1):
            tris.append((0, first[t], first[(t + 1) % m]))
    for k in range(len(rings) - 1):
        tris.extend(_zipper(rings[k], rings[k + 1], angles[k], angles[k + 1], closed))
    return np.array(verts, dtype=float), np.array(tris, dtype=np.int64)


def ring_plan(n_segments, r_inner, r_outer, span=2 * math.pi, min_points=8, rings=None):
    """Radii and point counts with roughly isotropic spacing and ``n_segments`` on the rim."""
    if rings is None:
        rings = max(2, int(round(math.sqrt(n_segments) * (r_outer - r_inner) / r_outer)))
    h = (r_outer - r_inner) / rings
    if r_inner > 0:
        radii = r_inner + h * np.arange(rings + 1)
    else:
        radii = h * np.arange(1, rings + 1)
    radii[-1] = r_outer
    counts = np.clip(np.round(span * radii / h).astype(int), min_points, n_segments)
    counts[-1] = n_segments
    return radii, counts


def orientation_signs(vertices, tris):
    """+1 where the sorted triangle is counterclockwise in the first two coordinates."""
    P = vertices[np.sort(tris, axis=1)][:, :, :2]
    d = (P[:, 1, 0] - P[:, 0, 0]) * (P[:, 2, 1] - P[:, 0, 1]) - (P[:, 1, 1] - P[:, 0, 1]) * (P[:, 2, 0] - P[:, 0, 0])
    return np.sign(d).astype(np.int64)


def disk_complex(n_segments, radius=1.0, rings=None):
    radii, counts = ring_plan(n_segments, 0.0, 1.0, rings=rings)
    V, F = polar_mesh(radii * radius, counts, center=True)
    return EmbeddedComplex.from_top_simplices(V, F)


def annulus_complex(eps, n_segments, radius=1.0, inner_points=32):
    radii, counts = ring_plan(n_segments, eps, 1.0, min_points=inner_points)
    V, F = polar_mesh(radii * radius, counts, center=False)
    return EmbeddedComplex.from_top_simplices(V, F)


def half_disk(n_half, side):
    """Half of the unit disk (side=-1: x <= 0, side=+1: x >= 0) with ``n_half`` rim segments."""
    radii, counts = ring_plan(2 * n_half, 0.0, 1.0, span=math.pi, min_points=4)
    counts = np.maximum(np.round(counts / 2).astype(int), 2)
    counts[-1] = n_half
    if side < 0:
        t0, t1 = math.pi / 2, 3 * math.pi / 2
    else:
        t0, t1 = -math.pi / 2, math.pi / 2
    return polar_mesh(radii, counts, t0, t1, center=True, closed=False, snap_axis=True)


def merge_meshes(parts):
    """Union of (vertices, triangles) pieces, identifying bit-identical vertices."""
    V = np.concatenate([p[0] for p in parts], axis=0)
    offs = np.cumsum([0] + [len(p[0]) for p in parts[:-1]])
    F = np.concatenate([p[1] + o for p, o in zip(parts, offs)], axis=0)
    U, inv = np.unique(V, axis=0, return_inverse=True)
    return U, inv.ravel()[F]


def square_grid(n, lo=(0.0, 0.0), hi=(1.0, 1.0), diagonal="/"):
    """Triangulated axis-parallel rectangle with ``n`` cells per side.

    ``diagonal`` is "/" (lower-left to upper-right), "\\" or a callable
    ``(i, j) -> "/" | "\\"`` choosing per cell.
    """
    nx, ny = (n, n) if np.isscalar(n) else n
    xs = np.linspace(lo[0], hi[0], nx + 1)
    ys = np.linspace(lo[1], hi[1], ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    V = np.stack([X.ravel(), Y.ravel()], axis=1)
    vid = lambda i, j: i * (ny + 1) + j
    tris = []
    for i in range(nx):
        for j in range(ny):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            diag = diagonal(i, j) if callable(diagonal) else diagonal
            if diag == "/":
                tris += [(a, b, c), (a, c, d)]
            else:
                tris += [(a, b, d), (b, c, d)]
    return V, np.array(tris, dtype=np.int64)


def schwarzschild_profile(m, rho):
    """Height of the Schwarzschild graph over the plane (zero on the horizon rho = 2m)."""
    return np.sqrt(8.0 * m * (np.asarray(rho, dtype=float) - 2.0 * m))


def schwarzschild_surface(m, r, r0=None, grid=(128, 128)):
    """Polar-grid triangulation of the graph over r0 <= rho <= r, as (V3, F, V2).

    Radial nodes are uniform in s = sqrt(rho - 2m), in which the profile is linear.
    """
    r0 = 2.0 * m if r0 is None else r0
    n_rad, n_ang = grid
    s = np.linspace(math.sqrt(r0 - 2 * m), math.sqrt(r - 2 * m), n_rad + 1)
    rho = 2 * m + s**2
    rho[-1] = r
    V2, F = polar_mesh(rho, [n_ang] * len(rho), center=False)
    ring_rho = np.repeat(rho, n_ang)
    z = math.sqrt(8.0 * m) * np.repeat(s, n_ang)
    V3 = np.column_stack([V2, z])
    return V3, F, V2, ring_rho

"""Slices of top-dimensional simplicial currents by affine fibers.

For a map psi into R^n and a unit vector v, the projection is
pi = F^T psi, where F is an orthonormal frame of the complement of v with
det[F, v] = +1.  A fiber pi^{-1}(z) cuts every carried n-simplex in a
segment (or misses it); segment end points are the crossings of the fiber with
the simplex facets.  Each slice is a 1-current on its own 1-complex whose
vertices are those crossing points, one per crossed facet.

Segments are oriented so that pushing the slice forward by psi gives the slice
of the pushed-forward current (along +v where the Jacobian is positive).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .currents import SimplicialCurrent, boundary, mass
from .errors import DegenerateLevelError, InputError
from .mesh import EmbeddedComplex, _faces_of, gram_volumes, lookup_rows
from .pa_maps import PiecewiseAffineMap, cover, pushforward

LEVEL_EPS = 1e-9
JITTER = 3e-9


def complement_frame(v):
    """Orthonormal (n, n-1) frame F of v's orthogonal complement with det[F, v] = +1."""
    v = np.asarray(v, dtype=float).ravel()
    if abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise InputError(f"direction must be a unit vector (norm {np.linalg.norm(v):.17g})")
    n = len(v)
    if n == 1:
        return np.zeros((1, 0))
    if n == 2:
        return np.array([[v[1]], [-v[0]]])
    Q, _ = np.linalg.qr(np.column_stack([v, np.eye(n)]))
    F = Q[:, 1:n]
    if np.linalg.det(np.column_stack([F, v])) < 0:
        F[:, 0] = -F[:, 0]
    return F


def _cofactor(J):
    """Vectors C with J C = 0 and det[J; C^T] = |C|^2 (generalized cross product), J: (N, n-1, n)."""
    N, r, n = J.shape
    C = np.empty((N, n))
    for i in range(n):
        minor = np.delete(J, i, axis=2)
        C[:, i] = (-1) ** (r + i) * (np.linalg.det(minor) if r else 1.0)
    return C


@dataclass
class SliceFamily:
    """Slices of one current at several levels.

    ``levels`` has shape (L, n-1); ``slices[i]`` is a 1-current on its own
    complex in the source ambient space and ``image_points[i]`` holds psi of
    that complex's vertices.  ``boundary_slices[i]`` is the 0-dimensional slice
    of the boundary of the sliced current, on the same complex.
    """

    direction: np.ndarray
    frame: np.ndarray
    levels: np.ndarray
    slices: list
    weights: np.ndarray
    image_points: list = field(default_factory=list)
    boundary_slices: list = field(default_factory=list)
    shifts: list = field(default_factory=list)
    current_dim: int = 2

    def __len__(self):
        return len(self.slices)

    def masses(self):
        return np.array([mass(s).total for s in self.slices])


def uniform_levels(T, psi, v, count=256, pad=0.0):
    """Midpoints and weight of a uniform grid over the projected carrier of ``T``.

    Only codimension-one fibers of planar targets use a 1-D grid; in higher
    dimension the grid is the tensor product with ``count`` points per axis.
    """
    F = complement_frame(v)
    verts = np.unique(T.complex.simplices(T.dim)[T.ids])
    proj = psi.vertex_images[verts] @ F
    lo, hi = proj.min(axis=0) - pad, proj.max(axis=0) + pad
    axes = [lo[i] + (hi[i] - lo[i]) * (np.arange(count) + 0.5) / count for i in range(len(lo))]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(lo))
    weight = float(np.prod((hi - lo) / count))
    return grid, weight


def _as_levels(levels, r):
    z = np.asarray(levels, dtype=float)
    if r == 1 and z.ndim <= 1:
        return z.reshape(-1, 1)
    z = np.atleast_2d(z)
    if z.shape[1] != r:
        raise InputError(f"levels must have {r} coordinates")
    return z


class _Slicer:
    """Precomputed per-simplex data shared by all levels."""

    def __init__(self, T, psi, v):
        n = T.dim
        if n != psi.target_dim:
            raise InputError(f"slicing needs a {psi.target_dim}-current, got dimension {n}")
        if n < 1:
            raise InputError("cannot slice 0-currents")
        c = T.complex
        self.T, self.psi, self.c, self.n = T, psi, c, n
        self.F = complement_frame(v)
        self.S = c.simplices(n)[T.ids]
        faces = _faces_of(self.S)  # (n+1) blocks of rows
        self.facet_ids = lookup_rows(c.simplices(n - 1), faces).reshape(n + 1, -1).T
        self.proj = psi.vertex_images @ self.F  # (N, n-1)
        H = psi.image_edges(n, T.ids)  # (N, n, n)
        J = np.einsum("mr,smn->srn", self.F, H)
        G = psi.source_edges(n, T.ids)  # (N, d, n)
        self.dir_src = np.einsum("sdn,sn->sd", G, _cofactor(J))
        self.used_vertices = np.unique(self.S)
        self.dT = boundary(T)

    def facet_crossings(self, fids, z):
        """Barycentric coordinates of the fiber point on each facet (NaN rows if missed)."""
        c, n = self.c, self.n
        Fv = c.simplices(n - 1)[fids]  # (m, n)
        P = self.proj[Fv]  # (m, n, n-1)
        A = np.concatenate([np.transpose(P, (0, 2, 1)), np.ones((len(fids), 1, n))], axis=1)
        rhs = np.concatenate([np.broadcast_to(z, (len(fids), n - 1)), np.ones((len(fids), 1))], axis=1)
        det = np.linalg.det(A)
        lam = np.full((len(fids), n), np.nan)
        ok = np.abs(det) > 1e-300
        if np.any(ok):
            lam[ok] = np.linalg.solve(A[ok], rhs[ok][:, :, None])[:, :, 0]
        return lam

    def degenerate(self, z):
        d = np.linalg.norm(self.proj[self.used_vertices] - z, axis=1)
        return bool(np.any(d <= LEVEL_EPS))

    def cut(self, z):
        c, n, T = self.c, self.n, self.T
        S = self.S
        if len(S) == 0 or n == 1:
            if n == 1:
                raise InputError("slicing 1-currents into points is not supported")
            empty = EmbeddedComplex(np.zeros((0, c.ambient_dim)), {1: np.zeros((0, 2))})
            return SimplicialCurrent.zero(empty, 1), np.zeros((0, self.psi.target_dim)), SimplicialCurrent.zero(empty, 0)
        # cheap prefilter: simplices whose projected bounding box contains z
        P = self.proj[S]
        cand = np.nonzero(np.all((P.min(axis=1) < z) & (P.max(axis=1) > z), axis=1))[0]
        fids = np.unique(self.facet_ids[cand])
        lam = self.facet_crossings(fids, z)
        hit = np.all(lam >= 0.0, axis=1) & np.all(np.isfinite(lam), axis=1)
        hit_fids = fids[hit]
        lam = lam[hit]
        Fv = c.simplices(n - 1)[hit_fids]
        pts = np.einsum("mk,mkd->md", lam, c.vertices[Fv])
        imgs = np.einsum("mk,mkd->md", lam, self.psi.vertex_images[Fv])
        node_of = {int(f): i for i, f in enumerate(hit_fids)}

        edges, mults = [], []
        for s in cand:
            ends = [node_of[f] for f in self.facet_ids[s] if int(f) in node_of]
            if len(ends) == 0:
                continue
            if len(ends) != 2:
                raise DegenerateLevelError(
                    f"fiber at level {z.tolist()} crosses {len(ends)} facets of simplex {int(T.ids[s])}", z.tolist()
                )
            a, b = ends
            theta = int(T.mults[s])
            sgn = 1 if (pts[b] - pts[a]) @ self.dir_src[s] > 0 else -1
            if a > b:
                a, b, sgn = b, a, -sgn
            edges.append((a, b))
            mults.append(theta * sgn)
        E = np.array(edges, dtype=np.int64).reshape(-1, 2)
        cx = EmbeddedComplex(pts, {1: np.unique(E, axis=0)}, validate=False)
        sl = SimplicialCurrent.from_arrays(cx, 1, lookup_rows(cx.simplices(1), E), mults)

        # 0-slice of the boundary; hit_fids is sorted
        dT = self.dT
        in_slice = np.isin(dT.ids, hit_fids)
        b_ids, b_mult = [], []
        if np.any(in_slice):
            fsel = dT.ids[in_slice]
            Hf = self.psi.vertex_images[dT.complex.simplices(n - 1)[fsel]]
            Hf = np.transpose(Hf[:, 1:] - Hf[:, :1], (0, 2, 1))  # (m, n, n-1)
            Jf = np.einsum("mr,smk->srk", self.F, Hf)
            sg = np.sign(np.linalg.det(Jf)).astype(np.int64)
            b_ids = np.searchsorted(hit_fids, fsel)
            b_mult = dT.mults[in_slice] * sg
        bsl = SimplicialCurrent.from_arrays(cx, 0, b_ids, b_mult)
        return sl, imgs, bsl


def slice(T: SimplicialCurrent, psi: PiecewiseAffineMap, v, levels, weights=None, jitter=True) -> SliceFamily:
    """Slice the top-dimensional current ``T`` by the fibers of ``F^T psi``.

    Parameters
    ----------
    levels : array_like, shape (L,) or (L, n-1)
        Fiber values in the frame returned by :func:`complement_frame`.
    weights : float or array, optional
        Quadrature weight per level (stored for :func:`slice_mass_integral`).
    jitter : bool
        Move levels that pass within 1e-9 of a vertex projection by 3e-9 and
        record the shift; otherwise raise :class:`DegenerateLevelError`.
    """
    sl = _Slicer(T, psi, v)
    Z = _as_levels(levels, T.dim - 1).copy()
    shifts = []
    for i, z in enumerate(Z):
        if sl.degenerate(z):
            if not jitter:
                raise DegenerateLevelError(f"level {z.tolist()} hits a vertex projection", z.tolist())
            moved = z + JITTER
            if sl.degenerate(moved):
                raise DegenerateLevelError(f"level {z.tolist()} stays degenerate after jitter", z.tolist())
            shifts.append((i, z.tolist(), moved.tolist()))
            Z[i] = moved
    out, imgs, bds = [], [], []
    for z in Z:
        s, im, b = sl.cut(z)
        out.append(s)
        imgs.append(im)
        bds.append(b)
    if weights is None:
        w = np.zeros(len(Z))
    else:
        w = np.broadcast_to(np.asarray(weights, dtype=float), (len(Z),)).copy()
    return SliceFamily(np.asarray(v, dtype=float), sl.F, Z, out, w, imgs, bds, shifts, T.dim)


# ------------------------------------------------------------------ reports
@dataclass(frozen=True)
class BoundaryCheck:
    max_defect: float
    per_level: tuple


def slice_boundary_check(fam: SliceFamily, T=None, psi=None) -> BoundaryCheck:
    """Mass of d<T,pi,z> - (-1)^(n-1) <dT,pi,z> at every level.

    ``T`` and ``psi`` are accepted for symmetry with the other checks; the
    family already carries the boundary slices computed from them.
    """
    sign = (-1) ** (fam.current_dim - 1)
    defects = []
    for s, b in zip(fam.slices, fam.boundary_slices):
        d = boundary(s) - b * sign
        defects.append(mass(d).total)
    return BoundaryCheck(max(defects, default=0.0), tuple(defects))


@dataclass(frozen=True)
class SliceIntegral:
    integral: float
    mass_bound: float
    holds: bool
    quadrature_tolerance: float
    per_level: tuple
    lip_pi: float


def projection_lipschitz(psi, T, F):
    """Largest operator norm of F^T d(psi) over the carried simplices."""
    if len(T.ids) == 0:
        return 0.0
    D = psi.local_differentials(T.dim, T.ids)
    return float(np.linalg.norm(np.einsum("mr,smk->srk", F, D), ord=2, axis=(1, 2)).max())


def slice_mass_integral(fam: SliceFamily, T=None, psi=None) -> SliceIntegral:
    """Quadrature of slice masses against Lip(pi)^(n-1) M(T).

    Without ``T``/``psi`` only the integral is meaningful (bound reported as NaN).
    The quadrature tolerance is one level spacing times the largest slice mass.
    """
    m = fam.masses()
    integral = float(np.sum(fam.weights * m))
    tol = float(np.max(fam.weights, initial=0.0) ** (1.0 / max(1, fam.current_dim - 1)) * np.max(m, initial=0.0))
    if T is None or psi is None:
        return SliceIntegral(integral, math.nan, False, tol, tuple(m.tolist()), math.nan)
    lip = projection_lipschitz(psi, T, fam.frame)
    bound = lip ** (fam.current_dim - 1) * mass(T).total
    return SliceIntegral(integral, bound, bool(integral <= bound + tol), tol, tuple(m.tolist()), lip)


@dataclass(frozen=True)
class CoareaCheck:
    lhs: float
    rhs: float
    holds: bool
    counting_side: float | None = None
    cross_check_defect: float | None = None


def coarea_inequality_check(T: SimplicialCurrent, psi: PiecewiseAffineMap, target=None) -> CoareaCheck:
    """Integral of |theta| times the Jacobian factor versus M(T).

    With ``target`` the left side is also computed from the multiplicity
    counting side, i.e. the unsigned preimage sum integrated over the target.
    """
    S = T.complex.simplices(T.dim)[T.ids]
    img = gram_volumes(psi.vertex_images, S)
    lhs = float(np.sum(np.abs(T.mults) * img))
    rhs = mass(T).total
    counting = defect = None
    if target is not None:
        cv = cover(psi, T, target)
        counting = float(np.sum(cv.unsigned() * target.volumes(T.dim)))
        defect = abs(counting - lhs)
    return CoareaCheck(lhs, rhs, bool(lhs <= rhs + 1e-9), counting, defect)


def _line_density_defect(chains, t_axis):
    """L1 distance between two collinear 1-chains given as (A, B, mult) arrays on a line."""
    segs = []
    for sign, (A, B, m) in zip((1, -1), chains):
        ta, tb = A @ t_axis, B @ t_axis
        lo, hi = np.minimum(ta, tb), np.maximum(ta, tb)
        dens = sign * m * np.sign(tb - ta)
        segs.append((lo, hi, dens))
    lo = np.concatenate([s[0] for s in segs])
    hi = np.concatenate([s[1] for s in segs])
    d = np.concatenate([s[2] for s in segs])
    if len(lo) == 0:
        return 0.0
    pts = np.unique(np.concatenate([lo, hi]))
    delta = np.zeros(len(pts))
    np.add.at(delta, np.searchsorted(pts, lo), d)
    np.add.at(delta, np.searchsorted(pts, hi), -d)
    run = np.cumsum(delta)[:-1]
    return float(np.sum(np.abs(run) * np.diff(pts)))


def commutation_defects(fam: SliceFamily, target_fam: SliceFamily):
    """Mass of psi_#<T,pi,z> - <psi_#T,p,z> per level (both chains lie on one line)."""
    out = []
    for s, im, ts in zip(fam.slices, fam.image_points, target_fam.slices):
        E = s.complex.simplices(1)[s.ids]
        a = (im[E[:, 0]], im[E[:, 1]], s.mults.astype(float))
        TE = ts.complex.simplices(1)[ts.ids]
        b = (ts.complex.vertices[TE[:, 0]], ts.complex.vertices[TE[:, 1]], ts.mults.astype(float))
        out.append(_line_density_defect([a, b], fam.direction))
    return out


def slice_commutation_check(fam: SliceFamily, T, psi, target):
    """Per-level commutation defects against the slices of psi_#T on ``target``."""
    P = pushforward(psi, T, target)
    tf = slice(P, PiecewiseAffineMap.identity(target), fam.direction, fam.levels, jitter=False)
    return commutation_defects(fam, tf)


def slice_report_csv(fam: SliceFamily, commutation=None) -> str:
    """CSV text with columns level, slice_mass, boundary_defect, commutation_defect."""
    bc = slice_boundary_check(fam)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["level", "slice_mass", "boundary_defect", "commutation_defect"])
    for i, (z, m) in enumerate(zip(fam.levels, fam.masses())):
        cd = "" if commutation is None else repr(float(commutation[i]))
        lv = " ".join(repr(float(x)) for x in z)
        w.writerow([lv, repr(float(m)), repr(float(bc.per_level[i])), cd])
    return buf.getvalue()

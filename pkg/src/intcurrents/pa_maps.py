"""Piecewise-affine maps from an embedded complex into R^m.

The map is given by the images of the vertices and is affine on every simplex.
Pushforward sums signed multiplicities over preimages: a source simplex whose
image covers a target simplex contributes its multiplicity times the sign of
the Jacobian determinant (measured against the target simplex orientation).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .currents import SimplicialCurrent, mass
from .errors import InputError, RefinementError
from .mesh import EmbeddedComplex, connected_components, gram_volumes

SO_TOL = 1e-6
_BARY_TOL = 1e-9
_COVER_RTOL = 1e-7


class PiecewiseAffineMap:
    """Vertex-image map extended affinely over every simplex of ``source``."""

    def __init__(self, source: EmbeddedComplex, vertex_images):
        imgs = np.array(vertex_images, dtype=float)
        if imgs.ndim == 1:
            imgs = imgs[:, None]
        if imgs.shape[0] != source.n_vertices:
            raise InputError(
                f"vertex_images has {imgs.shape[0]} rows, source has {source.n_vertices} vertices"
            )
        if not np.all(np.isfinite(imgs)):
            raise InputError("vertex images must be finite")
        imgs.setflags(write=False)
        self.source = source
        self.vertex_images = imgs

    @property
    def target_dim(self):
        return self.vertex_images.shape[1]

    @classmethod
    def identity(cls, c):
        return cls(c, c.vertices)

    @classmethod
    def affine(cls, c, A, b=None):
        A = np.asarray(A, dtype=float)
        b = np.zeros(A.shape[0]) if b is None else np.asarray(b, dtype=float)
        return cls(c, c.vertices @ A.T + b)

    def image_edges(self, k, ids):
        """Image edge vectors as columns, shape (n, m, k)."""
        S = self.source.simplices(k)[ids]
        P = self.vertex_images[S]
        return np.transpose(P[:, 1:] - P[:, :1], (0, 2, 1))

    def source_edges(self, k, ids):
        S = self.source.simplices(k)[ids]
        P = self.source.vertices[S]
        return np.transpose(P[:, 1:] - P[:, :1], (0, 2, 1))

    def local_differentials(self, k, ids):
        """Differential on each simplex in an orthonormal frame of its tangent space, (n, m, k)."""
        G = self.source_edges(k, ids)
        H = self.image_edges(k, ids)
        _, R = np.linalg.qr(G)
        return np.linalg.solve(np.transpose(R, (0, 2, 1)), np.transpose(H, (0, 2, 1))).transpose(0, 2, 1)

    def ambient_differentials(self, ids):
        """Full Jacobian on top simplices of a full-dimensional complex, (n, m, d)."""
        c = self.source
        if c.top_dim != c.ambient_dim:
            raise InputError("ambient Jacobian needs a full-dimensional source complex")
        G = self.source_edges(c.top_dim, ids)
        H = self.image_edges(c.top_dim, ids)
        return np.transpose(np.linalg.solve(np.transpose(G, (0, 2, 1)), np.transpose(H, (0, 2, 1))), (0, 2, 1))

    def __call__(self, points):
        """Evaluate at points of the carrier (slow path: point location per point)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = []
        for p in pts:
            hits = self.source.locate(p)
            if not hits:
                raise InputError(f"point {p.tolist()} is off the carrier")
            k, i = hits[0]
            S = self.source.simplices(k)[i]
            V = self.source.vertices[S]
            if k == 0:
                out.append(self.vertex_images[S[0]])
                continue
            c, *_ = np.linalg.lstsq((V[1:] - V[0]).T, p - V[0], rcond=None)
            out.append(self.vertex_images[S[0]] + (self.vertex_images[S[1:]] - self.vertex_images[S[0]]).T @ c)
        return np.array(out)

    def image_complex(self, validate=True):
        """The source combinatorics placed at the image positions (for injective maps)."""
        c = self.source
        return EmbeddedComplex(self.vertex_images, [c.simplices(k) for k in range(c.top_dim + 1)], validate=validate)


def lipschitz_constant(psi: PiecewiseAffineMap) -> float:
    """Largest operator norm of the differential over maximal simplices."""
    best = 0.0
    for k, ids in psi.source.maximal:
        if k == 0:
            continue
        D = psi.local_differentials(k, ids)
        best = max(best, float(np.linalg.norm(D, ord=2, axis=(1, 2)).max(initial=0.0)))
    return best


# ------------------------------------------------------------------ pushforward
@dataclass
class Cover:
    """Which carried source simplices cover which target simplices, with signs."""

    dim: int
    source_ids: np.ndarray
    theta: np.ndarray
    image_volume: np.ndarray
    degenerate: np.ndarray
    pair_source: np.ndarray  # index into source_ids
    pair_target: np.ndarray
    pair_sign: np.ndarray
    target: EmbeddedComplex = field(repr=False)

    def signed(self):
        out = np.zeros(self.target.n_simplices(self.dim), dtype=np.int64)
        np.add.at(out, self.pair_target, self.theta[self.pair_source] * self.pair_sign)
        return out

    def unsigned(self):
        out = np.zeros(self.target.n_simplices(self.dim), dtype=np.int64)
        np.add.at(out, self.pair_target, np.abs(self.theta[self.pair_source]))
        return out

    def preimage_count(self):
        out = np.zeros(self.target.n_simplices(self.dim), dtype=np.int64)
        np.add.at(out, self.pair_target, 1)
        return out


def _check_target(psi, T, target):
    if T.complex is not psi.source and not T.complex.same_as(psi.source):
        raise InputError("current does not live on the map's source complex")
    if target.ambient_dim != psi.target_dim:
        raise InputError(f"target complex lives in R^{target.ambient_dim}, map lands in R^{psi.target_dim}")
    if T.dim > target.top_dim:
        raise InputError(f"target complex has no {T.dim}-simplices")


def cover(psi: PiecewiseAffineMap, T: SimplicialCurrent, target: EmbeddedComplex) -> Cover:
    """Match carried source simplices to the target simplices tiling their images."""
    _check_target(psi, T, target)
    k = T.dim
    ids = T.ids
    theta = T.mults
    S = psi.source.simplices(k)[ids]
    P = psi.vertex_images[S]
    empty = np.zeros(0, dtype=np.int64)
    if len(ids) == 0:
        return Cover(k, ids, theta, np.zeros(0), np.zeros(0, bool), empty, empty, empty, target)
    if k == 0:
        tree = cKDTree(target.vertices)
        d, j = tree.query(P[:, 0])
        scale = max(1.0, float(np.abs(target.vertices).max(initial=0.0)))
        bad = d > _BARY_TOL * scale
        if np.any(bad):
            i = int(np.nonzero(bad)[0][0])
            raise RefinementError(
                f"image of vertex {int(ids[i])} is not a target vertex", int(ids[i]), int(j[i])
            )
        n = len(ids)
        return Cover(0, ids, theta, np.ones(n), np.zeros(n, bool), np.arange(n), j.astype(np.int64), np.ones(n, np.int64), target)

    img_vol = gram_volumes(psi.vertex_images, S)
    src_vol = psi.source.volumes(k)[ids]
    degenerate = img_vol <= 1e-10 * src_vol
    live = np.nonzero(~degenerate)[0]

    TS = target.simplices(k)
    tbar = target.vertices[TS].mean(axis=1)
    tree = cKDTree(tbar)
    centers = P[live].mean(axis=1)
    radius = np.linalg.norm(P[live] - centers[:, None, :], axis=2).max(axis=1)
    radius = radius * (1 + 1e-9) + 1e-12
    hits = tree.query_ball_point(centers, radius)
    counts = np.fromiter((len(h) for h in hits), dtype=np.int64, count=len(hits))
    ps = np.repeat(live, counts)
    pt = np.fromiter((j for h in hits for j in h), dtype=np.int64, count=int(counts.sum()))

    E = np.transpose(P[:, 1:] - P[:, :1], (0, 2, 1))  # (n, m, k)
    Epinv = np.zeros((len(ids), k, psi.target_dim))
    Epinv[live] = np.linalg.pinv(E[live])
    W = target.vertices[TS[pt]]  # (p, k+1, m)
    rel = W - P[ps, :1, :]
    c = np.einsum("pkm,pjm->pjk", Epinv[ps], rel)
    bary = np.concatenate([1.0 - c.sum(axis=2, keepdims=True), c], axis=2)
    resid = np.linalg.norm(np.einsum("pmk,pjk->pjm", E[ps], c) - rel, axis=2)
    scale = np.maximum(radius[np.searchsorted(live, ps)], 1e-300)
    inside_v = (bary.min(axis=2) >= -_BARY_TOL) & (resid <= _BARY_TOL * scale[:, None])
    inside = inside_v.all(axis=1)

    tvol = target.volumes(k)
    covered = np.zeros(len(ids))
    np.add.at(covered, ps[inside], tvol[pt[inside]])
    mismatch = np.abs(covered - img_vol) > _COVER_RTOL * img_vol
    mismatch &= ~degenerate
    if np.any(mismatch):
        i = int(np.nonzero(mismatch)[0][0])
        straddle = (ps == i) & ~inside & inside_v.any(axis=1)
        tau = int(pt[np.nonzero(straddle)[0][0]]) if np.any(straddle) else None
        raise RefinementError(
            f"target does not refine the image of {k}-simplex {int(ids[i])}"
            + (f" (target simplex {tau} straddles its boundary)" if tau is not None else "")
            + f": covered volume {covered[i]:.6g} vs image volume {img_vol[i]:.6g}",
            int(ids[i]),
            tau,
        )
    ps, pt = ps[inside], pt[inside]
    G = target.vertices[TS[pt]]
    Gcol = np.transpose(G[:, 1:] - G[:, :1], (0, 2, 1))
    if k == psi.target_dim:
        sign = np.sign(np.linalg.det(E[ps])) * np.sign(np.linalg.det(Gcol))
    else:
        C = np.linalg.pinv(Gcol) @ E[ps]
        sign = np.sign(np.linalg.det(C))
    return Cover(k, ids, theta, img_vol, degenerate, ps, pt, sign.astype(np.int64), target)


def pushforward(psi: PiecewiseAffineMap, T: SimplicialCurrent, target: EmbeddedComplex) -> SimplicialCurrent:
    """Image current on ``target``; degenerate images contribute nothing."""
    cv = cover(psi, T, target)
    return SimplicialCurrent.from_dense(target, T.dim, cv.signed())


def refine_target(psi, T, base=None):
    """Planar common refinement of the image of ``T`` (and of ``base``, if given).

    Returns ``(target_complex, overlay)`` where ``overlay.lift(chain, 1)`` moves
    chains of ``base`` onto the new target.
    """
    from .overlay import OverlayComplex, arrangement_2d

    if psi.target_dim != 2 or T.dim != 2:
        raise InputError("automatic target refinement is only available for 2-currents in the plane")
    S = psi.source.simplices(2)[T.ids]
    img = psi.vertex_images[S]
    img_vol = gram_volumes(psi.vertex_images, S)
    img = img[img_vol > 1e-10 * psi.source.volumes(2)[T.ids]]
    sets = [img]
    if base is not None:
        sets.append(base.vertices[base.simplices(2)])
    arr = arrangement_2d(sets)
    merged = EmbeddedComplex.from_top_simplices(arr.vertices, arr.triangles)
    ov = OverlayComplex(merged, (None, base), tuple(arr.owners), arr.perturbations)
    return merged, ov


@dataclass(frozen=True)
class MassCheck:
    lhs: float
    rhs: float
    holds: bool


def mass_nonincrease_check(psi, T, target) -> MassCheck:
    """Compare the image mass with Lip(psi)^k times the mass."""
    lhs = mass(pushforward(psi, T, target)).total
    rhs = lipschitz_constant(psi) ** T.dim * mass(T).total
    return MassCheck(lhs, rhs, bool(lhs <= rhs + 1e-9))


# ------------------------------------------------------------------ gradients
@dataclass(frozen=True)
class SimplexGradient:
    singular_values: tuple
    det_sign: int
    is_special_orthogonal: bool


@dataclass
class GradientClassification:
    per_simplex: dict
    verdict: str  # constant_rotation | orthogonal_mixed | contractive_somewhere | expansive_somewhere
    rotation: np.ndarray | None = None
    translation: np.ndarray | None = None
    n_components: int = 1
    component_motions: list = field(default_factory=list)

    @property
    def all_special_orthogonal(self):
        return all(g.is_special_orthogonal for g in self.per_simplex.values())


def _rigid_fit(A_list, ids_vertices, psi, tol):
    """Return (R, b) if one rotation and translation explain every vertex, else None."""
    R = A_list[0]
    if np.max(np.abs(A_list - R), initial=0.0) > tol:
        return None
    X = psi.source.vertices[ids_vertices]
    Y = psi.vertex_images[ids_vertices]
    b = Y - X @ R.T
    scale = max(1.0, float(np.abs(X).max(initial=0.0)))
    if np.max(np.abs(b - b[0]), initial=0.0) > tol * scale:
        return None
    return R, b.mean(axis=0)


def classify_gradients(psi: PiecewiseAffineMap, T: SimplicialCurrent, tol: float = SO_TOL) -> GradientClassification:
    """Singular values, determinant sign and SO(n) membership of the Jacobian per carried simplex."""
    n = T.dim
    if not (n == psi.source.ambient_dim == psi.target_dim):
        raise InputError("gradient classification needs dim(T) = source dimension = target dimension")
    ids = T.ids
    if len(ids) == 0:
        return GradientClassification({}, "constant_rotation")
    A = psi.ambient_differentials(ids)
    sv = np.linalg.svd(A, compute_uv=False)
    det = np.linalg.det(A)
    dsign = np.where(np.abs(det) <= tol * 1e-3, 0, np.sign(det)).astype(int)
    so = (np.abs(sv - 1.0) <= tol).all(axis=1) & (dsign > 0) & (np.abs(det - 1.0) <= tol)
    per = {
        int(i): SimplexGradient(tuple(float(x) for x in s), int(d), bool(o))
        for i, s, d, o in zip(ids, sv, dsign, so)
    }
    labels = connected_components(psi.source, ids, n)
    S = psi.source.simplices(n)[ids]
    comp_of = labels[S[:, 0]]
    comps = np.unique(comp_of)
    motions = []
    for cid in comps:
        sel = comp_of == cid
        fit = _rigid_fit(A[sel], np.unique(S[sel]), psi, tol) if so[sel].all() else None
        motions.append(fit)
    if np.any(sv < 1.0 - tol):
        verdict = "contractive_somewhere"
    elif np.any(sv > 1.0 + tol):
        verdict = "expansive_somewhere"
    else:
        fit = _rigid_fit(A, np.unique(S), psi, tol) if so.all() else None
        verdict = "constant_rotation" if fit is not None else "orthogonal_mixed"
    R = b = None
    if verdict == "constant_rotation":
        R, b = _rigid_fit(A, np.unique(S), psi, tol)
    return GradientClassification(per, verdict, R, b, len(comps), motions)

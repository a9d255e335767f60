"""Numerical checks around the rigidity of mass-preserving 1-Lipschitz maps onto a ball.

The checks take an n-current X on a complex, a piecewise-affine psi into R^n
and the ball current on a target complex.  They report the three hypotheses,
the equality chains that the rigidity argument runs through, and the
measured deviation of psi from an isometry.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .currents import SimplicialCurrent, boundary, carrier_vertices, mass
from .curves import decompose_1current
from .errors import InputError, RefinementError
from .mesh import MetricMode, geodesic_distance, gram_volumes, vertex_distance_matrix
from .pa_maps import PiecewiseAffineMap, classify_gradients, cover, pushforward, refine_target
from .slicing import slice as slice_current

HYP_TOL = 1e-6


@dataclass
class HypothesisResult:
    passed: bool
    defect: float
    detail: dict = field(default_factory=dict)


@dataclass
class RigidityReport:
    """Hypotheses (1)-(3), sampled diagnostics and the resulting verdict.

    ``verdict`` is one of ``consistent_with_isometry``,
    ``hypotheses_violated`` (with the failing items in ``violated``) and
    ``rigidity_failed``.
    """

    pushforward_is_ball: HypothesisResult
    mass_preserved: HypothesisResult
    boundary_injective: HypothesisResult
    essential_injectivity: dict | None = None
    max_distortion: float | None = None
    distortion_pair: tuple | None = None
    distortion_tolerance: float | None = None
    verdict: str = "unchecked"
    violated: list = field(default_factory=list)

    @property
    def hypotheses_hold(self):
        return self.pushforward_is_ball.passed and self.mass_preserved.passed and self.boundary_injective.passed

    def finalize(self):
        self.violated = [
            i
            for i, h in enumerate((self.pushforward_is_ball, self.mass_preserved, self.boundary_injective), start=1)
            if not h.passed
        ]
        if self.violated:
            self.verdict = "hypotheses_violated"
        elif self.max_distortion is not None and self.distortion_tolerance is not None and not (
            self.max_distortion <= self.distortion_tolerance
        ):
            self.verdict = "rigidity_failed"
        else:
            self.verdict = "consistent_with_isometry"
        return self

    def to_dict(self):
        d = asdict(self)
        d["hypotheses_hold"] = self.hypotheses_hold
        return _jsonable(d)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    return x


def push_to_ball(X, psi, ball):
    """psi_# X and the ball on a common target (refined when needed)."""
    try:
        return pushforward(psi, X, ball.complex), ball
    except RefinementError:
        merged, ov = refine_target(psi, X, base=ball.complex)
        return pushforward(psi, X, merged), ov.lift(ball, 1)


def _sphere(ball):
    """Center and radius of the round ball carried by ``ball`` (from its boundary vertices)."""
    bv = carrier_vertices(boundary(ball))
    P = ball.complex.vertices[bv]
    center = np.zeros(P.shape[1])
    return center, float(np.linalg.norm(P - center, axis=1).max(initial=0.0))


def check_hypotheses(X: SimplicialCurrent, psi, ball: SimplicialCurrent, tol=HYP_TOL, neighbours=4) -> RigidityReport:
    """Evaluate hypotheses (1)-(3) on an instance.

    (3) is tested on the vertices of the boundary carrier: two distinct source
    vertices whose images lie within ``tol`` of each other count as a
    collision, and every image must lie on the sphere bounding the ball.  The
    smallest ratio |psi(x)-psi(y)| / |x-y| over image-nearest neighbours is
    reported as a bi-Lipschitz estimate but not thresholded.
    """
    P, B = push_to_ball(X, psi, ball)
    scale = max(1.0, mass(B).total)
    d1 = mass(P - B).total
    h1 = HypothesisResult(bool(d1 <= tol * scale), d1)
    mX, mP = mass(X).total, mass(P).total
    d2 = abs(mX - mP)
    h2 = HypothesisResult(bool(d2 <= tol * scale), d2, {"mass_T": mX, "mass_pushforward": mP})

    bv = carrier_vertices(boundary(X))
    src = psi.source.vertices[bv]
    img = psi.vertex_images[bv]
    center, radius = _sphere(ball)
    sphere_defect = float(np.abs(np.linalg.norm(img - center, axis=1) - radius).max(initial=0.0))
    detail = {"sphere_defect": sphere_defect, "radius": radius}
    collisions = 0
    worst = None
    ratio = math.inf
    if len(bv) > 1:
        k = min(neighbours + 1, len(bv))
        dist, nb = cKDTree(img).query(img, k=k)
        i = np.repeat(np.arange(len(bv)), k - 1)
        j = nb[:, 1:].ravel()
        di = dist[:, 1:].ravel()
        ds = np.linalg.norm(src[i] - src[j], axis=1)
        coll = (di <= tol) & (ds > tol)
        collisions = int(np.count_nonzero(coll[i < j])) if np.any(coll) else 0
        r = np.where(ds > 0, di / np.maximum(ds, 1e-300), np.inf)
        a = int(np.argmin(r))
        ratio = float(r[a])
        worst = (int(bv[i[a]]), int(bv[j[a]]))
        if np.any(coll):
            a = int(np.nonzero(coll)[0][0])
            worst = (int(bv[i[a]]), int(bv[j[a]]))
    detail.update({"collisions": collisions, "worst_pair": worst, "bilipschitz_ratio": ratio})
    h3 = HypothesisResult(bool(collisions == 0 and sphere_defect <= tol * max(1.0, radius)), sphere_defect, detail)
    return RigidityReport(h1, h2, h3).finalize()


# ------------------------------------------------------------------ distortion
@dataclass(frozen=True)
class DistortionResult:
    max_distortion: float
    pair: tuple
    points: tuple
    n_candidates: int


def _candidates(X, psi, samples, seed):
    verts = carrier_vertices(X)
    if len(verts) == 0:
        return verts
    picks = set()
    for P in (psi.source.vertices[verts], psi.vertex_images[verts]):
        for j in range(P.shape[1]):
            picks.add(int(verts[np.argmin(P[:, j])]))
            picks.add(int(verts[np.argmax(P[:, j])]))
    rng = np.random.default_rng(seed)
    m = min(samples, len(verts))
    picks.update(int(v) for v in rng.choice(verts, size=m, replace=False))
    return np.array(sorted(picks), dtype=np.int64)


def distortion(X, psi, metric: MetricMode | None = None, samples=64, seed=0, space=None) -> DistortionResult:
    """Largest |d(x1, x2) - |psi(x1) - psi(x2)|| over a seeded set of carrier vertices.

    Coordinate extremes of the carrier and of its image are always included,
    followed by ``samples`` random vertices; all pairs among them are tested.
    Disconnected pairs count as infinite distortion.
    """
    metric = metric or MetricMode.ambient()
    c = space or psi.source
    cand = _candidates(X, psi, samples, seed)
    if len(cand) < 2:
        return DistortionResult(0.0, (), (), len(cand))
    D = vertex_distance_matrix(c, metric, cand, cand)
    Y = psi.vertex_images[cand]
    I = np.linalg.norm(Y[:, None, :] - Y[None, :, :], axis=2)
    with np.errstate(invalid="ignore"):
        dev = np.abs(D - I)
    dev[np.isinf(D)] = np.inf
    a, b = np.unravel_index(int(np.argmax(dev)), dev.shape)
    pair = (int(cand[a]), int(cand[b]))
    pts = (psi.source.vertices[pair[0]].tolist(), psi.source.vertices[pair[1]].tolist())
    return DistortionResult(float(dev[a, b]), pair, pts, len(cand))


# ------------------------------------------------------------------ slices
@dataclass
class SliceIsometryReport:
    levels: np.ndarray
    two_point_boundary: list
    mass_equals_segment: list
    mass_defect: list
    endpoints_distance_defect: list
    fraction_passing: float

    def passing(self, tol):
        return [
            bool(t and m and (d <= tol))
            for t, m, d in zip(self.two_point_boundary, self.mass_equals_segment, self.endpoints_distance_defect)
        ]


def slice_isometry_check(X, psi, v, levels, metric: MetricMode | None = None, ball=None, tol=1e-6, space=None):
    """Per-level test that each slice is a single segment mapped isometrically.

    The chord B ∩ p^{-1}(z) is measured on the slice of ``ball`` when given,
    otherwise on the unit ball.  Distances between the slice end points use
    ``metric`` on ``space`` (default: the source complex).
    """
    metric = metric or MetricMode.ambient()
    space = space or psi.source
    fam = slice_current(X, psi, v, levels)
    chords = None
    if ball is not None:
        bf = slice_current(ball, PiecewiseAffineMap.identity(ball.complex), v, fam.levels, jitter=False)
        chords = bf.masses()
    two, meq, mdef, ddef = [], [], [], []
    for i, (s, imgs) in enumerate(zip(fam.slices, fam.image_points)):
        z = fam.levels[i]
        chord = chords[i] if chords is not None else 2.0 * math.sqrt(max(0.0, 1.0 - float(z @ z)))
        m = mass(s).total
        md = abs(m - chord)
        bd = boundary(s) if not s.is_zero() else s
        ok2 = (not s.is_zero()) and len(bd.ids) == 2 and sorted(bd.mults.tolist()) == [-1, 1]
        dd = math.inf
        if ok2:
            dec = decompose_1current(s)
            ok2 = len(dec.curves) == 1
            a, b = (bd.ids[0], bd.ids[1]) if bd.mults[0] < 0 else (bd.ids[1], bd.ids[0])
            pa, pb = s.complex.vertices[a], s.complex.vertices[b]
            d = geodesic_distance(space, metric, pa, pb)
            dd = abs(d - float(np.linalg.norm(imgs[b] - imgs[a])))
        two.append(bool(ok2))
        meq.append(bool(md <= tol * max(1.0, chord)))
        mdef.append(md)
        ddef.append(dd)
    rep = SliceIsometryReport(fam.levels, two, meq, mdef, ddef, 0.0)
    ok = rep.passing(tol)
    rep.fraction_passing = float(np.mean(ok)) if ok else 1.0
    return rep


# ------------------------------------------------------------------ injectivity
@dataclass(frozen=True)
class InjectivityEstimate:
    fraction_injective: float
    fraction_unit_multiplicity: float
    samples: int


def essential_injectivity_estimate(X, psi, target=None, samples=1000, seed=0) -> InjectivityEstimate:
    """Sample target points (area-weighted) and count preimage simplices and sum of |theta|.

    ``target`` must refine the image of ``X`` (a ball current or complex);
    it defaults to a refinement of the image itself.
    """
    ball = target if isinstance(target, SimplicialCurrent) else None
    tc = getattr(target, "complex", target)
    if tc is None:
        tc, _ = refine_target(psi, X)
    try:
        cv = cover(psi, X, tc)
    except RefinementError:
        tc, ov = refine_target(psi, X, base=tc)
        cv = cover(psi, X, tc)
        ball = ov.lift(ball, 1) if ball is not None else None
    n = X.dim
    pool = ball.ids if ball is not None else np.arange(tc.n_simplices(n))
    w = tc.volumes(n)[pool]
    rng = np.random.default_rng(seed)
    pick = pool[rng.choice(len(pool), size=samples, p=w / w.sum())]
    cnt = cv.preimage_count()[pick]
    uns = cv.unsigned()[pick]
    return InjectivityEstimate(float(np.mean(cnt == 1)), float(np.mean(uns == 1)), samples)


# ------------------------------------------------------------------ overlaps
@dataclass(frozen=True)
class OverlapResult:
    v: np.ndarray
    overlap_measure_estimate: float
    method: str


def _cover_intervals(u, h):
    u = np.sort(u)
    breaks = np.nonzero(np.diff(u) > 2 * h)[0]
    starts = np.concatenate([[0], breaks + 1])
    ends = np.concatenate([breaks, [len(u) - 1]])
    return u[starts], u[ends]


def _interval_overlap(a, b):
    (a0, a1), (b0, b1) = a, b
    total = 0.0
    i = j = 0
    while i < len(a0) and j < len(b0):
        lo, hi = max(a0[i], b0[j]), min(a1[i], b1[j])
        total += max(0.0, hi - lo)
        if a1[i] < b1[j]:
            i += 1
        else:
            j += 1
    return total


def overlap_direction(A1, A2, h=None) -> OverlapResult:
    """Direction v along the centroid difference and the overlap of both projections on v-perp.

    Planar point sets only.  Each projection is covered by intervals that
    bridge gaps of at most 2h (default: 1% of the joint projected extent).
    """
    A1 = np.atleast_2d(np.asarray(A1, dtype=float))
    A2 = np.atleast_2d(np.asarray(A2, dtype=float))
    if len(A1) == 0 or len(A2) == 0:
        raise InputError("overlap_direction needs two nonempty point sets")
    if A1.shape[1] != 2 or A2.shape[1] != 2:
        raise InputError("overlap_direction is implemented for planar sets")
    d = A2.mean(axis=0) - A1.mean(axis=0)
    method = "centroids"
    allp = np.vstack([A1, A2])
    ext = float(np.ptp(allp, axis=0).max()) or 1.0
    if np.linalg.norm(d) <= 1e-12 * ext:
        hh = h or 0.01 * ext
        dens = lambda P, Q: (np.linalg.norm(P[:, None] - Q[None], axis=2) <= hh).sum(axis=1)
        p1 = A1[np.argmax(dens(A1, A1))]
        far = np.linalg.norm(A2 - p1, axis=1) > hh
        if np.any(far):
            p2 = A2[far][np.argmax(dens(A2[far], A2))]
            d = p2 - p1
            method = "densest_points"
        else:
            d = np.array([1.0, 0.0])
            method = "axis"
    v = d / np.linalg.norm(d)
    perp = np.array([-v[1], v[0]])
    u1, u2 = A1 @ perp, A2 @ perp
    if h is None:
        h = 0.01 * (max(u1.max(), u2.max()) - min(u1.min(), u2.min()) or 1.0)
    ov = _interval_overlap(_cover_intervals(u1, h), _cover_intervals(u2, h))
    return OverlapResult(v, ov, method)


# ------------------------------------------------------------------ equality chain
@dataclass(frozen=True)
class EqualityChain:
    chain: tuple
    all_equal: bool
    gaps: tuple
    per_simplex_special_orthogonal: bool | None


def euclidean_rigidity_chain(X, psi, target=None, tol=1e-6) -> EqualityChain:
    """The five quantities of the smooth-case argument, per simplex.

    1. M(psi_# X)
    2. integral of the signed image multiplicity
    3. integral over the image of the sum of |theta| over preimages
    4. integral over X of |theta| |det d(psi)|
    5. M(X)

    ``all_equal`` asks all consecutive gaps to be below ``tol``; in that case
    every carried simplex is checked for an SO(n) gradient.
    """
    n = X.dim
    if not (n == psi.source.ambient_dim == psi.target_dim):
        raise InputError("the equality chain needs a top-dimensional current in R^n mapped to R^n")
    tc = getattr(target, "complex", target)
    if tc is None:
        tc, _ = refine_target(psi, X)
    try:
        cv = cover(psi, X, tc)
    except RefinementError:
        tc, _ = refine_target(psi, X, base=tc)
        cv = cover(psi, X, tc)
    vol = tc.volumes(n)
    TS = tc.vertices[tc.simplices(n)]
    std = np.sign(np.linalg.det(np.transpose(TS[:, 1:] - TS[:, :1], (0, 2, 1)))).astype(np.int64)
    signed = cv.signed() * std  # relative to the standard orientation of R^n
    l1 = float(np.abs(signed) @ vol)
    l2 = float(signed @ vol)
    l3 = float(cv.unsigned() @ vol)
    S = psi.source.simplices(n)[X.ids]
    l4 = float(np.abs(X.mults) @ gram_volumes(psi.vertex_images, S))
    l5 = mass(X).total
    chain = (l1, l2, l3, l4, l5)
    gaps = tuple(abs(b - a) for a, b in zip(chain[:-1], chain[1:]))
    eq = all(g < tol for g in gaps)
    so = classify_gradients(psi, X).all_special_orthogonal if eq else None
    return EqualityChain(chain, bool(eq), gaps, so)


def rigidity_check(X, psi, ball, metric=None, samples=64, seed=0, tol=HYP_TOL, distortion_tol=None, injectivity_samples=1000):
    """Hypotheses, essential injectivity and distortion in one report.

    ``distortion_tol`` defaults to 5 times the mesh size of the source.
    """
    rep = check_hypotheses(X, psi, ball, tol)
    inj = essential_injectivity_estimate(X, psi, ball, injectivity_samples, seed)
    rep.essential_injectivity = {
        "fraction_injective": inj.fraction_injective,
        "fraction_unit_multiplicity": inj.fraction_unit_multiplicity,
        "samples": inj.samples,
    }
    dr = distortion(X, psi, metric, samples, seed)
    rep.max_distortion = dr.max_distortion
    rep.distortion_pair = dr.points
    rep.distortion_tolerance = 5.0 * psi.source.mesh_size if distortion_tol is None else distortion_tol
    return rep.finalize()

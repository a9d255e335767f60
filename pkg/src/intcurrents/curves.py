"""Decomposition of integral 1-currents into injective curves and loops."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .currents import SimplicialCurrent, boundary, mass
from .errors import HypothesisError, InputError
from .mesh import SNAP_EPS, MetricMode, geodesic_distance, lookup_rows


@dataclass
class CurveDecomposition:
    """Open paths and closed loops (vertex-id sequences) summing to the current.

    Loops repeat their first vertex at the end.  ``leftover`` is the chain of
    unassigned edges and is always empty for a finished decomposition.
    """

    complex: object
    curves: list
    loops: list
    leftover: list = field(default_factory=list)

    def path_length(self, path):
        P = self.complex.vertices[np.asarray(path)]
        return float(np.linalg.norm(np.diff(P, axis=0), axis=1).sum())

    @property
    def curve_lengths(self):
        return [self.path_length(p) for p in self.curves]

    @property
    def loop_lengths(self):
        return [self.path_length(p) for p in self.loops]

    def total_length(self):
        return sum(self.curve_lengths) + sum(self.loop_lengths)

    def endpoint_current(self):
        """Sum of delta(end) - delta(start) over the open curves."""
        ends = [p[-1] for p in self.curves] + [p[0] for p in self.curves]
        signs = [1] * len(self.curves) + [-1] * len(self.curves)
        return SimplicialCurrent.from_arrays(self.complex, 0, ends, signs)

    def path_current(self, path):
        P = np.asarray(path, dtype=np.int64)
        pairs = np.stack([P[:-1], P[1:]], axis=1)
        ids = lookup_rows(self.complex.simplices(1), np.sort(pairs, axis=1))
        sign = np.where(pairs[:, 0] < pairs[:, 1], 1, -1)
        return SimplicialCurrent.from_arrays(self.complex, 1, ids, sign)

    def to_current(self):
        """Re-sum every path into a single 1-chain."""
        total = SimplicialCurrent.zero(self.complex, 1)
        for p in self.curves + self.loops:
            total = total + self.path_current(p)
        return total


def _order(paths, complex):
    def key(p):
        P = complex.vertices[np.asarray(p)]
        return (-float(np.linalg.norm(np.diff(P, axis=0), axis=1).sum()), p[0])

    return sorted(paths, key=key)


def decompose_1current(T: SimplicialCurrent) -> CurveDecomposition:
    """Split an integral 1-current into injective open curves and loops.

    Each edge of multiplicity theta becomes |theta| parallel unit edges in the
    direction of its orientation.  Trails are first walked from every vertex
    with boundary multiplicity < 0 until a vertex with remaining positive
    boundary multiplicity is reached; cycles met on the way are split off as
    loops, so every trail is injective.  What is left is balanced and splits
    into loops.  Walks always take the smallest available neighbour id.
    """
    if T.dim != 1:
        raise InputError("decomposition needs a 1-current")
    c = T.complex
    E = c.simplices(1)[T.ids]
    heads = np.where(T.mults > 0, E[:, 1], E[:, 0])
    tails = np.where(T.mults > 0, E[:, 0], E[:, 1])
    reps = np.abs(T.mults)
    out = {}
    for a, b in zip(np.repeat(tails, reps).tolist(), np.repeat(heads, reps).tolist()):
        out.setdefault(a, []).append(b)
    for a in out:
        out[a].sort(reverse=True)  # pop() yields the smallest neighbour

    dT = boundary(T)
    demand = dict(zip(dT.ids.tolist(), dT.mults.tolist()))
    loops, curves = [], []

    def walk(start, stop_at_sink):
        path, pos = [start], {start: 0}
        while True:
            cur = path[-1]
            if stop_at_sink and len(path) > 1 and demand.get(cur, 0) > 0:
                demand[cur] -= 1
                return path
            nbrs = out.get(cur)
            if not nbrs:
                return path
            w = nbrs.pop()
            if w in pos:
                i = pos[w]
                loops.append(path[i:] + [w])
                for u in path[i + 1 :]:
                    del pos[u]
                del path[i + 1 :]
            else:
                pos[w] = len(path)
                path.append(w)

    for v in sorted(k for k, m in demand.items() if m < 0):
        while demand[v] < 0:
            p = walk(v, True)
            if len(p) < 2:
                raise InputError(f"no trail leaves boundary vertex {v}")
            demand[v] += 1
            curves.append(p)
    for v in sorted(out):
        while out[v]:
            rest = walk(v, False)
            if len(rest) != 1:
                raise InputError("unbalanced remainder while extracting loops")
    return CurveDecomposition(c, _order(curves, c), _order(loops, c))


@dataclass(frozen=True)
class GeodesicCheck:
    mass: float
    distance: float
    is_geodesic_segment: bool
    inequality_holds: bool


def _vertex_at(c, point, eps=SNAP_EPS):
    d = np.linalg.norm(c.vertices - np.asarray(point, dtype=float), axis=1)
    i = int(np.argmin(d)) if len(d) else -1
    return i if i >= 0 and d[i] <= eps * max(1.0, float(np.abs(point).max())) else None


def geodesic_lemma_check(T: SimplicialCurrent, a, b, metric: MetricMode | None = None, space=None, tol=1e-6) -> GeodesicCheck:
    """Compare M(T) with d(a, b) for a 1-current with boundary delta_b - delta_a.

    ``space`` is the complex on which the distance is measured (defaults to
    the complex of ``T``); with the ambient metric it is irrelevant.
    """
    metric = metric or MetricMode.ambient()
    c = T.complex
    ia, ib = _vertex_at(c, a), _vertex_at(c, b)
    dT = boundary(T) if T.dim == 1 else None
    expected = {}
    if ia is not None and ib is not None and ia != ib:
        expected = {ia: -1, ib: 1}
    if T.dim != 1 or not expected or dT.entries != expected:
        raise HypothesisError("boundary of the current is not delta_b - delta_a")
    m = mass(T).total
    d = geodesic_distance(space or c, metric, a, b)
    dec = decompose_1current(T)
    single = len(dec.curves) == 1 and not dec.loops and abs(dec.curve_lengths[0] - d) < tol
    return GeodesicCheck(m, d, bool(abs(m - d) < tol and single), bool(m >= d - tol))

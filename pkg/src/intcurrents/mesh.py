"""Embedded simplicial complexes in R^d.

A complex stores vertex coordinates and, for every dimension k >= 1, an
integer array of k-simplices whose rows are strictly increasing vertex ids.
The 0-simplices are implicit: vertex ``i`` is the 0-simplex with id ``i``.
Orientation never lives here; chains carry it (see :mod:`intcurrents.currents`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import InputError

DEGENERACY_EPS = 1e-12
SNAP_EPS = 1e-9

UNREACHABLE = math.inf


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def _row_keys(rows):
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    return rows.view(np.dtype((np.void, rows.dtype.itemsize * rows.shape[1]))).ravel()


def lookup_rows(table, queries):
    """Return the row index in ``table`` of every row of ``queries`` (-1 if absent)."""
    table = np.asarray(table, dtype=np.int64)
    queries = np.asarray(queries, dtype=np.int64)
    if len(table) == 0 or len(queries) == 0:
        return np.full(len(queries), -1, dtype=np.int64)
    tk = _row_keys(table)
    qk = _row_keys(queries)
    order = np.argsort(tk, kind="stable")
    pos = np.searchsorted(tk[order], qk)
    pos = np.clip(pos, 0, len(order) - 1)
    found = tk[order][pos] == qk
    return np.where(found, order[pos], -1)


def _faces_of(simplices):
    """All codimension-one faces of an (n, k+1) simplex array, as (n*(k+1), k)."""
    k1 = simplices.shape[1]
    cols = [np.delete(simplices, i, axis=1) for i in range(k1)]
    return np.concatenate(cols, axis=0)


def gram_volumes(points, simplices):
    """k-dimensional volumes of simplices given by vertex-index rows."""
    simplices = np.asarray(simplices, dtype=np.int64)
    n, k1 = simplices.shape
    k = k1 - 1
    if k == 0:
        return np.ones(n)
    base = points[simplices[:, 0]]
    edges = points[simplices[:, 1:]] - base[:, None, :]
    gram = np.einsum("nid,njd->nij", edges, edges)
    det = np.linalg.det(gram)
    return np.sqrt(np.clip(det, 0.0, None)) / math.factorial(k)


def nested_fractions(count):
    """First ``count`` points of the base-2 van der Corput sequence.

    Prefixes are nested, so adding subdivision points never removes old ones.
    """
    out = []
    for i in range(1, count + 1):
        x, denom, j = 0.0, 1.0, i
        while j:
            denom *= 2.0
            x += (j & 1) / denom
            j >>= 1
        out.append(x)
    return np.array(out)


class EmbeddedComplex:
    """A finite simplicial complex with vertices in R^d.

    Parameters
    ----------
    vertices : (N, d) array_like
    simplices : mapping or sequence
        ``simplices[k]`` is an (n_k, k+1) array of vertex ids for k >= 1.  A
        sequence is indexed by k, and entry 0 (if present) is ignored.
    eps : float
        Minimum admissible simplex volume.
    validate : bool
        Check the closure, ordering and nondegeneracy invariants.
    """

    def __init__(self, vertices, simplices, *, eps=DEGENERACY_EPS, validate=True):
        V = np.array(vertices, dtype=float)
        if V.ndim != 2 or V.shape[1] < 1:
            raise InputError("vertices must be an (N, d) array with d >= 1")
        if not np.all(np.isfinite(V)):
            raise InputError("vertex coordinates must be finite")
        self.vertices = _frozen(V)
        self.eps = eps
        if isinstance(simplices, dict):
            items = {int(k): v for k, v in simplices.items() if int(k) >= 1}
        else:
            items = {k: v for k, v in enumerate(simplices) if k >= 1}
        # an explicitly listed dimension counts even when it is empty
        top = max(items, default=0)
        arrays = [np.arange(len(V), dtype=np.int64)[:, None]]
        for k in range(1, top + 1):
            a = np.array(items.get(k, np.zeros((0, k + 1))), dtype=np.int64)
            if a.size == 0:
                a = a.reshape(0, k + 1)
            if a.ndim != 2 or a.shape[1] != k + 1:
                raise InputError(f"{k}-simplices must have {k + 1} vertex ids per row")
            arrays.append(a)
        self._simplices = [_frozen(a) for a in arrays]
        if validate:
            self._validate()

    @classmethod
    def from_top_simplices(cls, vertices, simplices, **kw):
        """Build the complex generated by ``simplices`` (all of one dimension)."""
        S = np.sort(np.array(simplices, dtype=np.int64), axis=1)
        if S.ndim != 2:
            raise InputError("simplices must be a 2-d integer array")
        k = S.shape[1] - 1
        levels = {}
        cur = np.unique(S, axis=0) if len(S) else S
        # keep the caller's order at the top dimension (ids are meaningful there)
        _, first = np.unique(S, axis=0, return_index=True)
        levels[k] = S[np.sort(first)] if len(S) else S
        while k > 1:
            cur = np.unique(_faces_of(cur), axis=0)
            k -= 1
            levels[k] = cur
        return cls(vertices, levels, **kw)

    # ------------------------------------------------------------------ basics
    @property
    def ambient_dim(self):
        return self.vertices.shape[1]

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def top_dim(self):
        return len(self._simplices) - 1

    def simplices(self, k):
        if k < 0 or k > self.top_dim:
            return np.zeros((0, k + 1), dtype=np.int64)
        return self._simplices[k]

    def n_simplices(self, k):
        return len(self.simplices(k))

    def index(self, simplex):
        """Id of the simplex with the given vertices (any order)."""
        key = tuple(sorted(int(v) for v in simplex))
        k = len(key) - 1
        i = self._index_maps(k).get(key)
        if i is None:
            raise InputError(f"simplex {key} is not in the complex")
        return i

    def _index_maps(self, k):
        cache = self.__dict__.setdefault("_index_cache", {})
        if k not in cache:
            cache[k] = {tuple(map(int, r)): i for i, r in enumerate(self.simplices(k))}
        return cache[k]

    def _validate(self):
        N = self.n_vertices
        d = self.ambient_dim
        if self.top_dim > d:
            raise InputError(f"{self.top_dim}-simplices cannot be nondegenerate in R^{d}")
        for k in range(1, self.top_dim + 1):
            S = self._simplices[k]
            if len(S) == 0:
                continue
            if S.min() < 0 or S.max() >= N:
                raise InputError(f"{k}-simplex vertex index out of range")
            if np.any(np.diff(S, axis=1) <= 0):
                bad = int(np.nonzero(np.any(np.diff(S, axis=1) <= 0, axis=1))[0][0])
                raise InputError(f"{k}-simplex {bad} is not strictly sorted: {S[bad].tolist()}")
            if len(np.unique(_row_keys(S))) != len(S):
                raise InputError(f"duplicate {k}-simplices")
            if k >= 2:
                faces = _faces_of(S)
                missing = lookup_rows(self._simplices[k - 1], faces) < 0
                if missing.any():
                    f = faces[np.nonzero(missing)[0][0]]
                    raise InputError(f"face {f.tolist()} of a {k}-simplex is not listed")
            vol = self.volumes(k)
            if np.any(vol <= self.eps):
                bad = int(np.argmin(vol))
                raise InputError(
                    f"{k}-simplex {bad} {S[bad].tolist()} is degenerate (volume {vol[bad]:.3e})"
                )

    # --------------------------------------------------------------- geometry
    def volumes(self, k):
        cache = self.__dict__.setdefault("_volume_cache", {})
        if k not in cache:
            cache[k] = _frozen(gram_volumes(self.vertices, self.simplices(k)))
        return cache[k]

    def barycenters(self, k):
        S = self.simplices(k)
        return self.vertices[S].mean(axis=1)

    @cached_property
    def mesh_size(self):
        """Longest edge length (the characteristic scale of the mesh)."""
        E = self.simplices(1)
        if len(E) == 0:
            return 0.0
        return float(np.max(np.linalg.norm(self.vertices[E[:, 1]] - self.vertices[E[:, 0]], axis=1)))

    def boundary_matrix(self, k):
        """Integer matrix of the boundary map from k-chains to (k-1)-chains.

        Column j holds the alternating face sum of the sorted k-simplex j.
        """
        cache = self.__dict__.setdefault("_bd_cache", {})
        if k not in cache:
            if k < 1 or k > self.top_dim:
                raise InputError(f"no boundary map in dimension {k}")
            S = self.simplices(k)
            n = len(S)
            rows, cols, vals = [], [], []
            for i in range(k + 1):
                ids = lookup_rows(self.simplices(k - 1), np.delete(S, i, axis=1))
                if np.any(ids < 0):
                    raise InputError("complex is not closed under faces")
                rows.append(ids)
                cols.append(np.arange(n))
                vals.append(np.full(n, -1 if i % 2 else 1, dtype=np.int64))
            M = sparse.csr_matrix(
                (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                shape=(self.n_simplices(k - 1), n),
                dtype=np.int64,
            )
            cache[k] = M
        return cache[k]

    @cached_property
    def maximal(self):
        """List of ``(k, ids)`` for simplices that are not a face of a larger one."""
        out = []
        covered = None
        for k in range(self.top_dim, -1, -1):
            n = self.n_simplices(k)
            mask = np.ones(n, dtype=bool)
            if covered is not None:
                mask[covered] = False
            ids = np.nonzero(mask)[0]
            if len(ids):
                out.append((k, ids))
            if k >= 1:
                faces = lookup_rows(self.simplices(k - 1), _faces_of(self.simplices(k)))
                covered = np.unique(faces[faces >= 0])
        return out

    def _locators(self):
        cache = self.__dict__.setdefault("_loc_cache", [])
        if not cache:
            for k, ids in self.maximal:
                S = self.simplices(k)[ids]
                origin = self.vertices[S[:, 0]]
                if k == 0:
                    cache.append((k, ids, origin, None))
                    continue
                E = np.transpose(self.vertices[S[:, 1:]] - origin[:, None, :], (0, 2, 1))
                cache.append((k, ids, origin, (E, np.linalg.pinv(E), np.linalg.norm(E, axis=(1, 2)))))
        return cache

    def locate(self, point, eps=SNAP_EPS):
        """Maximal simplices whose closure contains ``point`` (within ``eps``).

        Returns a list of ``(k, id)`` pairs; empty when the point is off the carrier.
        """
        p = np.asarray(point, dtype=float)
        if p.shape != (self.ambient_dim,):
            raise InputError(f"point must have {self.ambient_dim} coordinates")
        hits = []
        for k, ids, origin, frames in self._locators():
            rel = p - origin
            if k == 0:
                ok = np.linalg.norm(rel, axis=1) <= eps
            else:
                E, pinv, scale = frames
                c = np.einsum("nij,nj->ni", pinv, rel)
                resid = np.linalg.norm(np.einsum("nij,nj->ni", E, c) - rel, axis=1)
                bary = np.concatenate([1.0 - c.sum(axis=1, keepdims=True), c], axis=1)
                ok = (resid <= eps) & (bary.min(axis=1) * scale >= -eps)
            hits.extend((k, int(i)) for i in ids[ok])
        return hits

    # ---------------------------------------------------------------- misc
    def __repr__(self):
        counts = ", ".join(f"{self.n_simplices(k)}" for k in range(self.top_dim + 1))
        return f"EmbeddedComplex(R^{self.ambient_dim}, simplices per dim: [{counts}])"

    def same_as(self, other):
        """Structural equality (identical coordinates and simplex lists)."""
        if self is other:
            return True
        if not isinstance(other, EmbeddedComplex) or self.top_dim != other.top_dim:
            return False
        if self.vertices.shape != other.vertices.shape or not np.array_equal(self.vertices, other.vertices):
            return False
        return all(np.array_equal(self.simplices(k), other.simplices(k)) for k in range(1, self.top_dim + 1))


def simplex_volume(c: EmbeddedComplex, simplex) -> float:
    """k-volume of a simplex of ``c``; ``simplex`` is a vertex tuple or ``(k, id)`` pair.

    A bare int is read as a vertex (0-simplex).
    """
    if isinstance(simplex, (int, np.integer)):
        if not 0 <= simplex < c.n_vertices:
            raise InputError(f"unknown vertex {simplex}")
        return 1.0
    simplex = tuple(simplex)
    if len(simplex) == 2 and isinstance(simplex[0], (int, np.integer)) and _is_id_pair(c, simplex):
        k, i = simplex
        return float(c.volumes(k)[i])
    i = c.index(simplex)
    return float(c.volumes(len(simplex) - 1)[i])


def _is_id_pair(c, pair):
    # an edge (a, b) is ambiguous with an id pair; edges win when they exist
    k, i = int(pair[0]), int(pair[1])
    try:
        c.index(pair)
        return False
    except InputError:
        pass
    if not 0 <= k <= c.top_dim or not 0 <= i < c.n_simplices(k):
        raise InputError(f"unknown simplex {pair}")
    return True


# --------------------------------------------------------------------- metrics
@dataclass(frozen=True)
class MetricMode:
    """``ambient`` (Euclidean chord) or ``length`` (graph length metric)."""

    kind: str = "ambient"
    refinement: int = 1

    def __post_init__(self):
        if self.kind not in ("ambient", "length"):
            raise InputError(f"unknown metric kind {self.kind!r}")
        if self.refinement < 1:
            raise InputError("refinement must be >= 1")

    @classmethod
    def ambient(cls):
        return cls("ambient")

    @classmethod
    def length_graph(cls, refinement=1):
        return cls("length", int(refinement))

    @classmethod
    def parse(cls, text):
        """Parse ``ambient`` or ``length:K``."""
        text = text.strip()
        if text == "ambient":
            return cls.ambient()
        if text.startswith("length"):
            _, _, k = text.partition(":")
            try:
                return cls.length_graph(int(k) if k else 1)
            except ValueError:
                raise InputError(f"bad metric spec {text!r}") from None
        raise InputError(f"bad metric spec {text!r}")

    def __str__(self):
        return "ambient" if self.kind == "ambient" else f"length:{self.refinement}"


class LengthGraph:
    """Shortest-path approximation of the length metric of a complex.

    Nodes are the vertices plus ``refinement`` points on every edge (nested
    van der Corput positions); every pair of nodes on the boundary of a
    maximal simplex is joined by the straight segment between them.
    """

    def __init__(self, c: EmbeddedComplex, refinement: int):
        self.complex = c
        self.refinement = K = int(refinement)
        V = c.vertices
        E = c.simplices(1)
        t = nested_fractions(K)
        steiner = (V[E[:, 0]][:, None, :] * (1 - t)[None, :, None] + V[E[:, 1]][:, None, :] * t[None, :, None])
        self.positions = np.concatenate([V, steiner.reshape(-1, V.shape[1])], axis=0)
        self.n_nodes = len(self.positions)
        rows, cols = [], []
        self._simplex_nodes = {}
        for k, ids in c.maximal:
            if k == 0:
                continue
            nodes = self._nodes_of(k, ids)
            self._simplex_nodes[k] = (ids, nodes)
            m = nodes.shape[1]
            iu, ju = np.triu_indices(m, 1)
            rows.append(nodes[:, iu].ravel())
            cols.append(nodes[:, ju].ravel())
        if rows:
            r = np.concatenate(rows)
            s = np.concatenate(cols)
            lo, hi = np.minimum(r, s), np.maximum(r, s)
            keep = lo != hi
            key = np.unique(lo[keep] * self.n_nodes + hi[keep])
            lo, hi = key // self.n_nodes, key % self.n_nodes
        else:
            lo = hi = np.zeros(0, dtype=np.int64)
        w = np.linalg.norm(self.positions[lo] - self.positions[hi], axis=1)
        self._arcs = (lo, hi, w)
        self.graph = sparse.csr_matrix((w, (lo, hi)), shape=(self.n_nodes, self.n_nodes))

    def _nodes_of(self, k, ids):
        c = self.complex
        S = c.simplices(k)[ids]
        K = self.refinement
        N = c.n_vertices
        pieces = [S]
        if k >= 1:
            pairs = [(i, j) for i in range(k + 1) for j in range(i + 1, k + 1)]
            edges = np.stack([S[:, [i, j]] for i, j in pairs], axis=1).reshape(-1, 2)
            eids = lookup_rows(c.simplices(1), edges).reshape(len(S), len(pairs))
            st = N + eids[:, :, None] * K + np.arange(K)[None, None, :]
            pieces.append(st.reshape(len(S), -1))
        return np.concatenate(pieces, axis=1)

    def vertex_distances(self, sources, targets, chunk=16):
        """Distances between vertex ids, shape ``(len(sources), len(targets))``."""
        sources = np.asarray(sources, dtype=np.int64)
        targets = np.asarray(targets, dtype=np.int64)
        out = np.empty((len(sources), len(targets)))
        for start in range(0, len(sources), chunk):
            idx = sources[start:start + chunk]
            D = csgraph.dijkstra(self.graph, directed=False, indices=idx)
            out[start:start + chunk] = D[:, targets]
        return out

    def _attachments(self, p, eps):
        c = self.complex
        hits = c.locate(p, eps)
        if not hits:
            raise InputError(f"point {p.tolist()} is off the carrier (eps={eps})")
        d = np.linalg.norm(self.positions - p, axis=1)
        j = int(np.argmin(d))
        if d[j] <= eps:
            return {j: 0.0}, hits
        att = {}
        for k, i in hits:
            if k == 0:
                att[int(c.simplices(0)[i][0])] = 0.0
                continue
            ids, nodes = self._simplex_nodes[k]
            row = nodes[int(np.searchsorted(ids, i))]
            for n in row:
                att[int(n)] = float(d[n])
        return att, hits

    def point_distance(self, a, b, eps=SNAP_EPS):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        att_a, hits_a = self._attachments(a, eps)
        att_b, hits_b = self._attachments(b, eps)
        if set(hits_a) & set(hits_b):
            direct = float(np.linalg.norm(a - b))
        else:
            direct = UNREACHABLE
        A, B = self.n_nodes, self.n_nodes + 1
        lo, hi, w = self._arcs
        extra_r = [A] * len(att_a) + [B] * len(att_b)
        extra_c = list(att_a) + list(att_b)
        extra_w = list(att_a.values()) + list(att_b.values())
        # zero-weight arcs would be dropped by the sparse format
        extra_w = [max(x, 1e-300) for x in extra_w]
        G = sparse.csr_matrix(
            (np.concatenate([w, extra_w]), (np.concatenate([lo, extra_r]), np.concatenate([hi, extra_c]))),
            shape=(self.n_nodes + 2, self.n_nodes + 2),
        )
        dist = csgraph.dijkstra(G, directed=False, indices=A)[B]
        return float(min(dist, direct))


def length_graph(c: EmbeddedComplex, refinement: int) -> LengthGraph:
    cache = c.__dict__.setdefault("_graph_cache", {})
    if refinement not in cache:
        cache[refinement] = LengthGraph(c, refinement)
    return cache[refinement]


def geodesic_distance(c: EmbeddedComplex, mode: MetricMode, a, b, eps=SNAP_EPS) -> float:
    """Distance between two points of the carrier of ``c``.

    ``ambient`` returns ``|a - b|``; ``length`` returns the shortest path in the
    subdivided edge graph.  Disconnected pairs return :data:`UNREACHABLE`
    (``inf``).  Points farther than ``eps`` from the carrier raise InputError.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if mode.kind == "ambient":
        for p in (a, b):
            if not c.locate(p, eps):
                raise InputError(f"point {p.tolist()} is off the carrier (eps={eps})")
        return float(np.linalg.norm(a - b))
    return length_graph(c, mode.refinement).point_distance(a, b, eps)


def vertex_distance_matrix(c: EmbeddedComplex, mode: MetricMode, sources, targets):
    """Pairwise metric distances between vertex ids."""
    sources = np.asarray(sources, dtype=np.int64)
    targets = np.asarray(targets, dtype=np.int64)
    if mode.kind == "ambient":
        P, Q = c.vertices[sources], c.vertices[targets]
        return np.linalg.norm(P[:, None, :] - Q[None, :, :], axis=2)
    return length_graph(c, mode.refinement).vertex_distances(sources, targets)


def connected_components(c: EmbeddedComplex, simplex_ids=None, k=None):
    """Component label per vertex of the 1-skeleton (restricted to given k-simplices)."""
    if k is None:
        k = c.top_dim
    S = c.simplices(k) if simplex_ids is None else c.simplices(k)[np.asarray(simplex_ids, dtype=np.int64)]
    if k == 0 or len(S) == 0:
        return np.arange(c.n_vertices)
    r = np.repeat(S[:, :1], k, axis=1).ravel()
    s = S[:, 1:].ravel()
    A = sparse.csr_matrix((np.ones(len(r)), (r, s)), shape=(c.n_vertices, c.n_vertices))
    _, labels = csgraph.connected_components(A, directed=False)
    return labels

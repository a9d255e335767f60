"""Integral currents as integer simplicial chains.

A k-current is a map from k-simplex ids of an :class:`EmbeddedComplex` to
nonzero integers.  The sign of an entry is its orientation relative to the
sorted vertex order of the simplex, so a chain has exactly one stored form.
Mass uses the Euclidean area factor (identically 1).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import InputError, UnsupportedDimensionError
from .mesh import EmbeddedComplex


class SimplicialCurrent:
    """Integer k-chain on an embedded complex.

    Parameters
    ----------
    complex : EmbeddedComplex
    dim : int
    entries : mapping of simplex id -> integer multiplicity, optional
        Zero multiplicities are dropped; the sign is the orientation.
    """

    __slots__ = ("complex", "dim", "ids", "mults", "__weakref__")

    def __init__(self, complex: EmbeddedComplex, dim: int, entries: Mapping[int, int] | None = None):
        ids = np.fromiter((int(i) for i in (entries or {})), dtype=np.int64)
        mults = np.fromiter((int(entries[i]) for i in (entries or {})), dtype=np.int64)
        self._init(complex, dim, ids, mults)

    def _init(self, complex, dim, ids, mults):
        if dim < 0 or dim > complex.top_dim:
            raise InputError(f"complex has no {dim}-simplices")
        n = complex.n_simplices(dim)
        if len(ids) and (ids.min() < 0 or ids.max() >= n):
            raise InputError(f"{dim}-simplex id out of range (complex has {n})")
        if len(ids):
            # merge repeated ids
            uniq, inv = np.unique(ids, return_inverse=True)
            m = np.zeros(len(uniq), dtype=np.int64)
            np.add.at(m, inv, mults)
            keep = m != 0
            ids, mults = uniq[keep], m[keep]
        ids.setflags(write=False)
        mults.setflags(write=False)
        object.__setattr__(self, "complex", complex)
        object.__setattr__(self, "dim", int(dim))
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "mults", mults)

    def __setattr__(self, name, value):
        raise AttributeError("SimplicialCurrent is immutable")

    @classmethod
    def from_arrays(cls, complex, dim, ids, mults):
        obj = cls.__new__(cls)
        obj._init(complex, dim, np.array(ids, dtype=np.int64).ravel(), np.array(mults, dtype=np.int64).ravel())
        return obj

    @classmethod
    def from_dense(cls, complex, dim, vector):
        v = np.asarray(vector)
        if not np.issubdtype(v.dtype, np.integer):
            r = np.rint(v)
            if np.max(np.abs(v - r), initial=0.0) > 1e-9:
                raise InputError("integral current needs integer multiplicities")
            v = r.astype(np.int64)
        nz = np.nonzero(v)[0]
        return cls.from_arrays(complex, dim, nz, v[nz])

    @classmethod
    def fundamental(cls, complex, dim=None, orientation=None):
        """All ``dim``-simplices with multiplicity +1 (or the given per-simplex signs)."""
        dim = complex.top_dim if dim is None else dim
        n = complex.n_simplices(dim)
        m = np.ones(n, dtype=np.int64) if orientation is None else np.asarray(orientation, dtype=np.int64)
        return cls.from_arrays(complex, dim, np.arange(n), m)

    @classmethod
    def zero(cls, complex, dim):
        return cls.from_arrays(complex, dim, [], [])

    # ------------------------------------------------------------- accessors
    @property
    def entries(self):
        return {int(i): int(m) for i, m in zip(self.ids, self.mults)}

    def multiplicity(self, simplex_id):
        j = np.searchsorted(self.ids, simplex_id)
        if j < len(self.ids) and self.ids[j] == simplex_id:
            return int(self.mults[j])
        return 0

    def orientation(self, simplex_id):
        return int(np.sign(self.multiplicity(simplex_id)))

    def dense(self):
        v = np.zeros(self.complex.n_simplices(self.dim), dtype=np.int64)
        v[self.ids] = self.mults
        return v

    def is_zero(self):
        return len(self.ids) == 0

    def __len__(self):
        return len(self.ids)

    # ------------------------------------------------------------ arithmetic
    def _check_compatible(self, other):
        if not isinstance(other, SimplicialCurrent):
            return NotImplemented
        if other.complex is not self.complex and not self.complex.same_as(other.complex):
            raise InputError("currents live on different complexes")
        if other.dim != self.dim:
            raise InputError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return True

    def __add__(self, other):
        if self._check_compatible(other) is NotImplemented:
            return NotImplemented
        return SimplicialCurrent.from_arrays(
            self.complex, self.dim, np.concatenate([self.ids, other.ids]), np.concatenate([self.mults, other.mults])
        )

    def __neg__(self):
        return SimplicialCurrent.from_arrays(self.complex, self.dim, self.ids, -self.mults)

    def __sub__(self, other):
        if self._check_compatible(other) is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __mul__(self, c):
        if not isinstance(c, (int, np.integer)):
            return NotImplemented
        return SimplicialCurrent.from_arrays(self.complex, self.dim, self.ids, self.mults * int(c))

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, SimplicialCurrent):
            return NotImplemented
        return (
            self.dim == other.dim
            and (self.complex is other.complex or self.complex.same_as(other.complex))
            and np.array_equal(self.ids, other.ids)
            and np.array_equal(self.mults, other.mults)
        )

    def __hash__(self):
        return hash((id(self.complex), self.dim, self.ids.tobytes(), self.mults.tobytes()))

    def __repr__(self):
        return f"SimplicialCurrent(dim={self.dim}, simplices={len(self.ids)}, mass={mass(self).total:.6g})"


@dataclass(frozen=True)
class MassReport:
    total: float
    per_simplex: dict


def mass(T: SimplicialCurrent) -> MassReport:
    """Total weighted volume: sum of |multiplicity| times k-volume."""
    contrib = np.abs(T.mults) * T.complex.volumes(T.dim)[T.ids]
    return MassReport(float(contrib.sum()), dict(zip(T.ids.tolist(), contrib.tolist())))


def boundary(T: SimplicialCurrent) -> SimplicialCurrent:
    if T.dim == 0:
        raise UnsupportedDimensionError("0-currents have no boundary in this calculus")
    B = T.complex.boundary_matrix(T.dim)
    v = B[:, T.ids] @ T.mults
    nz = np.nonzero(v)[0]
    return SimplicialCurrent.from_arrays(T.complex, T.dim - 1, nz, v[nz])


def restrict(T: SimplicialCurrent, A: Iterable[int]) -> SimplicialCurrent:
    """Restriction of ``T`` to the simplices with ids in ``A``."""
    A = np.unique(np.fromiter((int(a) for a in A), dtype=np.int64))
    n = T.complex.n_simplices(T.dim)
    if len(A) and (A.min() < 0 or A.max() >= n):
        raise InputError(f"restriction ids must be {T.dim}-simplex ids in [0, {n})")
    keep = np.isin(T.ids, A)
    return SimplicialCurrent.from_arrays(T.complex, T.dim, T.ids[keep], T.mults[keep])


def canonical_set(T: SimplicialCurrent) -> frozenset:
    """Ids of the carried simplices (positive lower density exactly there)."""
    return frozenset(T.ids.tolist())


def current_sub(A: SimplicialCurrent, B: SimplicialCurrent) -> SimplicialCurrent:
    return A - B


def current_add(A: SimplicialCurrent, B: SimplicialCurrent) -> SimplicialCurrent:
    return A + B


def carrier_vertices(T: SimplicialCurrent) -> np.ndarray:
    """Sorted vertex ids touched by the carried simplices."""
    return np.unique(T.complex.simplices(T.dim)[T.ids])

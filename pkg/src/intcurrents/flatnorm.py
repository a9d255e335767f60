"""Simplicial flat norm as a linear program.

For a k-chain t on a complex K the flat norm is

    min  sum_s vol_k(s) |r_s| + sum_f vol_{k+1}(f) |x_f|   s.t.  r + B x = t

with B the boundary matrix from (k+1)- to k-chains.  Splitting r and x into
positive and negative parts gives a standard-form LP, solved with HiGHS.
The LP relaxation is solved; fillings may come back fractional.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .currents import SimplicialCurrent, mass
from .errors import InputError
from .overlay import OverlayComplex, overlay_2d

_STATUS = {0: "optimal", 2: "infeasible", 3: "unbounded"}


@dataclass
class FlatNormResult:
    """Optimal value, filling S and residual T - dS (real-valued chains)."""

    value: float
    filling: np.ndarray
    residual: np.ndarray
    solver_status: str
    complex: object = field(repr=False, default=None)
    dim: int = 0
    overlay: OverlayComplex | None = field(repr=False, default=None)

    @property
    def filling_mass(self):
        if self.dim + 1 > self.complex.top_dim:
            return 0.0
        return float(np.abs(self.filling) @ self.complex.volumes(self.dim + 1))

    @property
    def residual_mass(self):
        return float(np.abs(self.residual) @ self.complex.volumes(self.dim))

    @property
    def is_integral(self):
        f = np.concatenate([self.filling, self.residual])
        return bool(np.all(np.abs(f - np.rint(f)) <= 1e-7))

    def filling_current(self):
        """The filling as an integral current (only when the LP optimum is integral)."""
        if not self.is_integral:
            raise InputError("LP filling is fractional")
        return SimplicialCurrent.from_dense(self.complex, self.dim + 1, np.rint(self.filling).astype(np.int64))


def write_lp(path, c, A, b, names=("r", "x")):
    """Write ``min c.x s.t. A x = b, x >= 0`` in CPLEX LP text format."""
    A = sparse.csr_matrix(A)
    n = A.shape[1]
    var = [f"v{j}" for j in range(n)]

    def terms(coefs, cols):
        parts = []
        for a, j in zip(coefs, cols):
            parts.append(f"{'-' if a < 0 else '+'} {abs(a)!r} {var[j]}")
        return " ".join(parts) if parts else "0 v0"

    with open(path, "w") as fh:
        fh.write("\\ flat norm LP: variables v0.. are r+, r-, x+, x-\n")
        fh.write("Minimize\n obj: " + terms(c[c != 0], np.nonzero(c)[0]) + "\n")
        fh.write("Subject To\n")
        for i in range(A.shape[0]):
            lo, hi = A.indptr[i], A.indptr[i + 1]
            fh.write(f" c{i}: {terms(A.data[lo:hi], A.indices[lo:hi])} = {float(b[i])!r}\n")
        fh.write("End\n")


def flat_norm(T: SimplicialCurrent, ambient=None, dump_lp=None) -> FlatNormResult:
    """Flat norm of ``T`` inside ``ambient`` (defaults to the complex of ``T``).

    When ``T`` has the top dimension there is nothing to fill with and the
    value is the mass.
    """
    c = T.complex if ambient is None else ambient
    if c is not T.complex and not c.same_as(T.complex):
        raise InputError("chain does not live on the given ambient complex")
    k = T.dim
    t = T.dense().astype(float)
    wk = c.volumes(k)
    if k >= c.top_dim:
        return FlatNormResult(mass(T).total, np.zeros(0), t, "optimal", c, k)
    if T.is_zero():
        return FlatNormResult(0.0, np.zeros(c.n_simplices(k + 1)), t, "optimal", c, k)
    B = c.boundary_matrix(k + 1).astype(float)
    wf = c.volumes(k + 1)
    nk, nf = len(wk), len(wf)
    I = sparse.identity(nk, format="csr")
    A = sparse.hstack([I, -I, B, -B], format="csr")
    cost = np.concatenate([wk, wk, wf, wf])
    if dump_lp:
        write_lp(dump_lp, cost, A, t)
    res = linprog(cost, A_eq=A, b_eq=t, bounds=(0, None), method="highs")
    status = _STATUS.get(res.status, "failed")
    if res.status != 0:
        return FlatNormResult(float("nan"), np.zeros(nf), t, status, c, k)
    x = res.x
    r = x[:nk] - x[nk : 2 * nk]
    s = x[2 * nk : 2 * nk + nf] - x[2 * nk + nf :]
    return FlatNormResult(float(res.fun), s, r, status, c, k)


def flat_distance(A: SimplicialCurrent, B: SimplicialCurrent, ambient=None, dump_lp=None) -> FlatNormResult:
    """Flat norm of A - B.

    Chains on two different planar triangulations are first moved onto the
    overlay of the two; the overlay is attached to the result.
    """
    if A.dim != B.dim:
        raise InputError(f"dimension mismatch: {A.dim} vs {B.dim}")
    ov = None
    if ambient is None and A.complex is not B.complex and not A.complex.same_as(B.complex):
        ov = overlay_2d(A.complex, B.complex)
        A, B = ov.lift(A, 0), ov.lift(B, 1)
        ambient = ov.merged
    res = flat_norm(A - B, ambient, dump_lp)
    res.overlay = ov
    return res


__all__ = ["FlatNormResult", "flat_norm", "flat_distance", "overlay_2d", "write_lp"]

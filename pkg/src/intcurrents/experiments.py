"""Instance generators and the stability runner.

Families: ``disk``, ``annulus`` (the unit disk minus a small disk, mapped by
inclusion), ``split_disks`` (two half-disks translated onto the unit disk)
and ``schwarzschild_graph`` (a rotationally symmetric graph surface in R^3,
the two-dimensional analogue of the Schwarzschild slice, projected to the
plane).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from . import instances as inst
from .currents import SimplicialCurrent, mass
from .errors import InputError
from .flatnorm import flat_distance
from .mesh import EmbeddedComplex, MetricMode
from .pa_maps import PiecewiseAffineMap, pushforward
from .rigidity import distortion

KINDS = ("disk", "annulus", "split_disks", "schwarzschild_graph")


@dataclass(frozen=True)
class InstanceSpec:
    kind: str
    n_segments: int = 512
    eps: float | None = None
    m: float | None = None
    r: float | None = None
    r0: float | None = None
    grid: tuple = (128, 128)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown instance kind {self.kind!r} (expected one of {', '.join(KINDS)})")
        if self.kind in ("disk", "annulus", "split_disks") and self.n_segments < 8:
            raise InputError("n_segments must be at least 8")
        if self.kind == "split_disks" and self.n_segments % 2:
            raise InputError("split_disks needs an even n_segments")
        if self.kind == "annulus" and not (self.eps is not None and 0 < self.eps < 1):
            raise InputError("annulus needs 0 < eps < 1")
        if self.kind == "schwarzschild_graph":
            m, r = self.m, self.r
            if m is None or r is None or m <= 0:
                raise InputError("schwarzschild_graph needs m > 0 and r")
            r0 = 2 * m if self.r0 is None else self.r0
            if r0 < 2 * m or r <= r0:
                raise InputError("schwarzschild_graph needs r > r0 >= 2m")
            if len(self.grid) != 2 or min(self.grid) < 3:
                raise InputError("grid must be two integers >= 3")

    @property
    def parameter(self):
        return {"annulus": self.eps, "schwarzschild_graph": self.m}.get(self.kind, float(self.n_segments))


@dataclass
class Instance:
    spec: InstanceSpec
    X: SimplicialCurrent
    psi: PiecewiseAffineMap
    target: EmbeddedComplex
    ball: SimplicialCurrent
    meta: dict = field(default_factory=dict)

    @property
    def mesh_size(self):
        return self.X.complex.mesh_size


def _oriented(V, F, orient_from=None):
    c = EmbeddedComplex.from_top_simplices(V, F)
    P = c.vertices if orient_from is None else orient_from
    return SimplicialCurrent.fundamental(c, orientation=inst.orientation_signs(P, c.simplices(2)))


def unit_disk_current(n_segments, radius=1.0):
    c = inst.disk_complex(n_segments, radius)
    return SimplicialCurrent.fundamental(c, orientation=inst.orientation_signs(c.vertices, c.simplices(2)))


def split_disks_instance(n_segments):
    half = n_segments // 2
    L, R = inst.half_disk(half, -1), inst.half_disk(half, +1)
    V = np.concatenate([L[0] - [1.0, 0.0], R[0] + [1.0, 0.0]])
    F = np.concatenate([L[1], R[1] + len(L[0])])
    X = _oriented(V, F)
    images = np.concatenate([L[0], R[0]])
    psi = PiecewiseAffineMap(X.complex, images)
    BV, BF = inst.merge_meshes([L, R])
    ball = _oriented(BV, BF)
    return X, psi, ball


def schwarzschild_mass(m, r, r0=None):
    """Area of the graph over r0 <= rho <= r (quadrature in s = sqrt(rho - 2m))."""
    r0 = 2 * m if r0 is None else r0
    f = lambda s: 4 * math.pi * (2 * m + s * s) ** 1.5
    return quad(f, math.sqrt(r0 - 2 * m), math.sqrt(r - 2 * m), epsabs=1e-13, epsrel=1e-12)[0]


def schwarzschild_filling_bound(m, r, r0=None):
    """Mass of an explicit filling between the graph and the flat disk of radius r.

    Volume under the graph, plus the outer wall at rho = r, plus the flat disk
    left uncovered inside rho = r0.  An upper bound for the flat distance.
    """
    r0 = 2 * m if r0 is None else r0
    h = lambda rho: math.sqrt(8 * m * (rho - 2 * m))
    vol = quad(lambda rho: 2 * math.pi * rho * h(rho), r0, r, epsabs=1e-13)[0]
    return vol + 2 * math.pi * r * h(r) + math.pi * r0**2


def polygon_disk_area(n, r=1.0):
    return 0.5 * n * r * r * math.sin(2 * math.pi / n)


def generate(spec: InstanceSpec) -> Instance:
    k = spec.kind
    if k == "disk":
        X = unit_disk_current(spec.n_segments)
        psi = PiecewiseAffineMap.identity(X.complex)
        return Instance(spec, X, psi, X.complex, X, {"ball_area": polygon_disk_area(spec.n_segments)})
    if k == "annulus":
        c = inst.annulus_complex(spec.eps, spec.n_segments)
        X = SimplicialCurrent.fundamental(c, orientation=inst.orientation_signs(c.vertices, c.simplices(2)))
        psi = PiecewiseAffineMap.identity(c)
        ball = unit_disk_current(spec.n_segments)
        meta = {"ball_area": polygon_disk_area(spec.n_segments), "hole_area": math.pi * spec.eps**2}
        return Instance(spec, X, psi, c, ball, meta)
    if k == "split_disks":
        X, psi, ball = split_disks_instance(spec.n_segments)
        return Instance(spec, X, psi, ball.complex, ball, {"ball_area": polygon_disk_area(spec.n_segments)})
    # schwarzschild_graph
    n_rad, n_ang = spec.grid
    V3, F, V2, _ = inst.schwarzschild_surface(spec.m, spec.r, spec.r0, spec.grid)
    X = _oriented(V3, F, orient_from=V2)
    psi = PiecewiseAffineMap(X.complex, V2)
    target = EmbeddedComplex.from_top_simplices(V2, F)
    ball = unit_disk_current(n_ang, spec.r)
    meta = {
        "ball_area": polygon_disk_area(n_ang, spec.r),
        "reference_mass": schwarzschild_mass(spec.m, spec.r, spec.r0),
        "flat_disk_area": math.pi * spec.r**2,
    }
    return Instance(spec, X, psi, target, ball, meta)


# ------------------------------------------------------------------ stability
COLUMNS = (
    "family",
    "parameter",
    "mesh_size",
    "mass",
    "flat_distance_to_ball",
    "reference_flat_distance",
    "max_distortion",
    "chain_vol_ball",
    "chain_mass_pushforward",
    "chain_mass",
    "chain_liminf_mass",
    "chain_vol_ball_end",
    "chain_tolerance",
    "chain_monotone",
    "chain_gap",
)


@dataclass
class ConvergenceTable:
    """One row per instance, ordered by parameter (decreasing)."""

    rows: list
    flat_distance_decreasing: bool = False
    mass_gap_decreasing: bool = False

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for row in self.rows:
            w.writerow([_fmt(row[c]) for c in COLUMNS])
        return buf.getvalue()

    def column(self, name):
        return [row[name] for row in self.rows]


def _fmt(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _row(instance, metric, samples, seed):
    spec = instance.spec
    X, psi = instance.X, instance.psi
    P = pushforward(psi, X, instance.target)
    mX = mass(X).total
    if spec.kind == "schwarzschild_graph":
        fd = schwarzschild_filling_bound(spec.m, spec.r, spec.r0)
        ref = math.nan
    else:
        res = flat_distance(P, instance.ball) if P.complex is not instance.ball.complex else flat_distance(P, instance.ball, P.complex)
        fd = res.value
        ref = instance.meta.get("hole_area", 0.0) if spec.kind == "annulus" else 0.0
    dr = distortion(X, psi, metric, samples, seed)
    return {
        "family": spec.kind,
        "parameter": float(spec.parameter),
        "mesh_size": float(instance.mesh_size),
        "mass": mX,
        "mass_pushforward": mass(P).total,
        "flat_distance_to_ball": float(fd),
        "reference_flat_distance": float(ref),
        "max_distortion": float(dr.max_distortion),
        "ball_area": instance.meta["ball_area"],
    }


def stability_run(specs, metric=None, samples=16, seed=0) -> ConvergenceTable:
    """Evaluate the lower-semicontinuity chain and flat distances along a family.

    Per row j the chain is (vol B, M(psi_# T_j), M(T_j), min_{i>=j} M(T_i), vol B).
    Each step may fail by at most the row's flat distance plus the mesh size
    (discrete mass is only approximately lower semicontinuous).
    ``chain_gap`` is the largest relative deviation of a term from vol B.
    """
    metric = metric or MetricMode.length_graph(2)
    specs = sorted(specs, key=lambda s: -float(s.parameter))
    rows = [_row(generate(s), metric, samples, seed) for s in specs]
    masses = [r["mass"] for r in rows]
    for j, row in enumerate(rows):
        vb = row["ball_area"]
        chain = (vb, row["mass_pushforward"], row["mass"], min(masses[j:]), vb)
        tol = row["flat_distance_to_ball"] + row["mesh_size"]
        row.update(
            {
                "chain_vol_ball": chain[0],
                "chain_mass_pushforward": chain[1],
                "chain_mass": chain[2],
                "chain_liminf_mass": chain[3],
                "chain_vol_ball_end": chain[4],
                "chain_tolerance": tol,
                "chain_monotone": bool(all(a <= b + tol for a, b in zip(chain[:-1], chain[1:]))),
                "chain_gap": max(abs(t - vb) for t in chain) / vb,
            }
        )
    fds = [r["flat_distance_to_ball"] for r in rows]
    gaps = [abs(r["mass"] - r["ball_area"]) for r in rows]
    return ConvergenceTable(
        rows,
        bool(all(b < a for a, b in zip(fds, fds[1:]))),
        bool(all(b < a for a, b in zip(gaps, gaps[1:]))),
    )

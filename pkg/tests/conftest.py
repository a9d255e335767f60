import math
import time

import numpy as np
import pytest
from hypothesis import settings
from scipy.spatial import Delaunay

from intcurrents.currents import SimplicialCurrent, boundary
from intcurrents.instances import orientation_signs, square_grid
from intcurrents.mesh import EmbeddedComplex

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


def grid_complex(n=1, lo=(0.0, 0.0), hi=(1.0, 1.0), diagonal="/"):
    V, F = square_grid(n, lo, hi, diagonal)
    return EmbeddedComplex.from_top_simplices(V, F)


def oriented(c, mult=1):
    """Fundamental chain with the standard (counterclockwise) orientation."""
    return SimplicialCurrent.fundamental(c, orientation=orientation_signs(c.vertices, c.simplices(c.top_dim)) * mult)


def random_planar_complex(rng, n_points=30):
    """Delaunay triangulation of jittered grid points (well-shaped, no slivers)."""
    k = max(2, int(math.ceil(math.sqrt(n_points))))
    g = np.stack(np.meshgrid(np.arange(k), np.arange(k), indexing="ij"), -1).reshape(-1, 2).astype(float)
    pts = (g + rng.uniform(-0.3, 0.3, g.shape)) / k
    tri = Delaunay(pts)
    return EmbeddedComplex.from_top_simplices(pts, tri.simplices)


def random_solid_complex(rng, k=3):
    g = np.stack(np.meshgrid(*[np.arange(k)] * 3, indexing="ij"), -1).reshape(-1, 3).astype(float)
    pts = g + rng.uniform(-0.2, 0.2, g.shape)
    tri = Delaunay(pts)
    P = pts[tri.simplices]
    vol = np.abs(np.linalg.det(P[:, 1:] - P[:, :1])) / 6
    return EmbeddedComplex.from_top_simplices(pts, tri.simplices[vol > 1e-6])


def random_chain(c, k, rng, density=0.5, max_mult=3):
    n = c.n_simplices(k)
    mask = rng.random(n) < density
    m = rng.integers(-max_mult, max_mult + 1, n) * mask
    return SimplicialCurrent.from_dense(c, k, m)


def shoelace(P):
    x, y = P[:, 0], P[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


@pytest.fixture
def unit_square():
    return grid_complex(1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def square_boundary(s, h=0.25, margin=1.0):
    """Boundary of the side-s square [0, s]^2 on a grid of spacing <= h with a margin."""
    h = min(h, s)
    cells = int(round(s / h))
    h = s / cells
    m = int(math.ceil(margin / h))
    n = cells + 2 * m
    V, F = square_grid(n, lo=(-m * h, -m * h), hi=((cells + m) * h,) * 2)
    c = EmbeddedComplex.from_top_simplices(V, F)
    bc = c.barycenters(2)
    inside = (bc[:, 0] > 0) & (bc[:, 0] < s) & (bc[:, 1] > 0) & (bc[:, 1] < s)
    sg = orientation_signs(V, F)
    Q = SimplicialCurrent.from_arrays(c, 2, np.nonzero(inside)[0], sg[inside])
    return boundary(Q)


# acceptance bookkeeping: one line per criterion in the terminal summary
ACCEPTANCE = {}


class Criterion:
    def __init__(self, number, name, limit_s):
        self.number, self.name, self.limit_s = number, name, limit_s
        self.details = []

    def note(self, text):
        self.details.append(text)

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.t0
        over = self.limit_s is not None and elapsed > self.limit_s
        ok = exc_type is None and not over
        if over:
            self.note(f"time limit {self.limit_s:g}s exceeded")
        elif exc_type is not None:
            self.note(f"{exc_type.__name__}: {str(exc).splitlines()[0] if str(exc) else ''}")
        ACCEPTANCE[self.number] = (ok, self.name, elapsed, "; ".join(self.details))
        if over and exc_type is None:
            pytest.fail(f"criterion {self.number} took {elapsed:.1f}s (limit {self.limit_s:g}s)")
        return False


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, name, elapsed, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n:2d} {name} ({elapsed:.1f}s) {detail}")

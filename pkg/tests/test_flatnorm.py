import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import grid_complex, oriented, random_chain, random_planar_complex, square_boundary
from intcurrents.currents import SimplicialCurrent, boundary, mass
from intcurrents.experiments import unit_disk_current
from intcurrents.flatnorm import flat_distance, flat_norm


def brute_force_flat(T, values=(-1, 0, 1)):
    """Minimum of M(T - dS) + M(S) over integer fillings S with entries in ``values``."""
    c = T.complex
    B = c.boundary_matrix(T.dim + 1).toarray().astype(np.int64)
    wk, wf = c.volumes(T.dim), c.volumes(T.dim + 1)
    t = T.dense()
    S = np.array(list(itertools.product(values, repeat=c.n_simplices(T.dim + 1))), dtype=np.int64)
    cost = np.abs(t[None, :] - S @ B.T) @ wk + np.abs(S) @ wf
    return float(cost.min())


@pytest.mark.parametrize("s, expected", [(0.1, 0.01), (1.0, 1.0)])
def test_square_boundary_small_is_area(s, expected):
    res = flat_norm(square_boundary(s))
    assert res.value == pytest.approx(expected, rel=1e-9)
    assert res.is_integral and res.solver_status == "optimal"


def test_square_boundary_large_stays_near_perimeter():
    res = flat_norm(square_boundary(5.0))
    # corner rounding makes the true value a little smaller than 4s
    assert 0.98 * 20 <= res.value <= 20 + 1e-9


def test_filling_reconstructs_residual():
    T = square_boundary(1.0)
    res = flat_norm(T)
    S = res.filling_current()
    assert np.allclose(T.dense() - boundary(S).dense(), res.residual)
    assert res.filling_mass + res.residual_mass == pytest.approx(res.value)


def test_top_dimension_flat_norm_is_mass():
    X = unit_disk_current(64)
    assert flat_norm(X).value == pytest.approx(mass(X).total)


def test_zero_chain():
    c = grid_complex(2)
    assert flat_norm(SimplicialCurrent.zero(c, 1)).value == 0.0


def test_lp_dump(tmp_path):
    c = grid_complex(1)
    T = boundary(oriented(c))
    p = tmp_path / "flat.lp"
    flat_norm(T, dump_lp=str(p))
    text = p.read_text()
    assert "Minimize" in text and text.rstrip().endswith("End")
    assert sum(1 for line in text.splitlines() if line.startswith(" c")) == c.n_simplices(1)


def test_flat_distance_same_complex():
    c = grid_complex(3)
    A = oriented(c)
    assert flat_distance(A, A).value == 0.0
    B = SimplicialCurrent(c, 2, {0: 1})
    d = flat_distance(A, B).value
    assert d == pytest.approx(flat_distance(B, A).value)
    assert d == pytest.approx(mass(A - B).total)


def test_flat_distance_across_complexes_uses_overlay():
    A = oriented(grid_complex(2))
    B = oriented(grid_complex(3, diagonal="\\"))
    res = flat_distance(A, B)
    assert res.overlay is not None
    assert res.value == pytest.approx(0.0, abs=1e-9)


def test_brute_force_cross_check_twelve_triangles():
    c = grid_complex((3, 2), hi=(1.5, 1.0))
    assert c.n_simplices(2) == 12
    rng = np.random.default_rng(7)
    for _ in range(3):
        T = random_chain(c, 1, rng, density=0.5, max_mult=1)
        assert flat_norm(T).value == pytest.approx(brute_force_flat(T), abs=1e-9)


# ------------------------------------------------------------------ properties
@settings(max_examples=12)
@given(st.integers(0, 10_000))
def test_lp_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    c = grid_complex(2, hi=(rng.uniform(0.3, 3), rng.uniform(0.3, 3)))
    T = random_chain(c, 1, rng, density=0.6, max_mult=1)
    res = flat_norm(T)
    assert res.is_integral
    assert res.value == pytest.approx(brute_force_flat(T, range(-2, 3)), abs=1e-9)


@given(st.integers(0, 10_000))
def test_flat_norm_is_a_seminorm(seed):
    rng = np.random.default_rng(seed)
    c = random_planar_complex(rng, 16)
    A, B = random_chain(c, 1, rng), random_chain(c, 1, rng)
    fa, fb, fab = flat_norm(A).value, flat_norm(B).value, flat_norm(A + B).value
    assert fab <= fa + fb + 1e-9
    assert fa <= mass(A).total + 1e-9
    assert flat_norm(A * 2).value == pytest.approx(2 * fa, abs=1e-9)
    # boundaries are cheap: F(dS) <= M(S)
    S = random_chain(c, 2, rng)
    assert flat_norm(boundary(S)).value <= mass(S).total + 1e-9


@given(st.integers(0, 10_000))
def test_flat_distance_triangle_inequality(seed):
    rng = np.random.default_rng(seed)
    c = random_planar_complex(rng, 16)
    A, B, C = (random_chain(c, 1, rng) for _ in range(3))
    dab, dbc, dac = (flat_distance(*p).value for p in ((A, B), (B, C), (A, C)))
    assert dac <= dab + dbc + 1e-9
    assert not math.isnan(dab)

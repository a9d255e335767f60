import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st
from scipy.sparse.csgraph import shortest_path

from conftest import grid_complex, oriented, random_chain, random_planar_complex
from intcurrents.currents import SimplicialCurrent, boundary, mass
from intcurrents.curves import decompose_1current, geodesic_lemma_check
from intcurrents.errors import HypothesisError, InputError
from intcurrents.mesh import EmbeddedComplex, MetricMode, lookup_rows


def path_chain(c, verts):
    """1-chain along consecutive vertex ids."""
    P = np.array(verts)
    pairs = np.stack([P[:-1], P[1:]], axis=1)
    ids = lookup_rows(c.simplices(1), np.sort(pairs, axis=1))
    assert np.all(ids >= 0)
    return SimplicialCurrent.from_arrays(c, 1, ids, np.where(pairs[:, 0] < pairs[:, 1], 1, -1))


def line_complex(n):
    return EmbeddedComplex(np.column_stack([np.arange(n + 1.0), np.zeros(n + 1)]), {1: [[i, i + 1] for i in range(n)]})


def test_single_path():
    c = line_complex(4)
    T = path_chain(c, [0, 1, 2, 3])
    dec = decompose_1current(T)
    assert dec.curves == [[0, 1, 2, 3]] and dec.loops == []
    assert dec.total_length() == pytest.approx(3.0)


def test_reversed_path():
    c = line_complex(4)
    dec = decompose_1current(path_chain(c, [4, 3, 2]))
    assert dec.curves == [[4, 3, 2]]


def test_square_boundary_is_one_loop():
    c = grid_complex(2)
    dec = decompose_1current(boundary(oriented(c)))
    assert dec.curves == [] and len(dec.loops) == 1
    loop = dec.loops[0]
    assert loop[0] == loop[-1] and len(set(loop[:-1])) == 8
    assert dec.loop_lengths[0] == pytest.approx(4.0)


def test_multiplicity_two_gives_two_curves():
    c = line_complex(3)
    dec = decompose_1current(path_chain(c, [0, 1, 2, 3]) * 2)
    assert dec.curves == [[0, 1, 2, 3], [0, 1, 2, 3]]


def test_figure_eight_splits_into_injective_pieces():
    # two unit squares sharing vertex 2
    V = [[0, 0], [1, 0], [1, 1], [0, 1], [2, 1], [2, 2], [1, 2]]
    E = [[0, 1], [1, 2], [2, 3], [0, 3], [2, 4], [4, 5], [5, 6], [2, 6]]
    c = EmbeddedComplex(V, {1: E})
    T = path_chain(c, [0, 1, 2, 4, 5, 6, 2, 3, 0])
    dec = decompose_1current(T)
    assert len(dec.loops) == 2 and dec.curves == []
    for L in dec.loops:
        assert len(set(L[:-1])) == len(L) - 1
    assert dec.to_current() == T


def test_wrong_dimension():
    with pytest.raises(InputError):
        decompose_1current(oriented(grid_complex(1)))


def test_geodesic_straight_segment():
    c = line_complex(3)
    chk = geodesic_lemma_check(path_chain(c, [0, 1, 2, 3]), [0, 0], [3, 0])
    assert chk.is_geodesic_segment and chk.inequality_holds
    assert chk.mass == pytest.approx(chk.distance) == pytest.approx(3.0)


def test_geodesic_staircase_is_not_a_segment():
    c = grid_complex(2)
    # (0,0) -> (0.5,0) -> (0.5,0.5) -> (1,0.5) -> (1,1); grid vertex id = 3*i + j
    T = path_chain(c, [0, 3, 4, 7, 8])
    chk = geodesic_lemma_check(T, [0, 0], [1, 1])
    assert chk.inequality_holds and not chk.is_geodesic_segment
    assert chk.mass == pytest.approx(2.0) and chk.distance == pytest.approx(math.sqrt(2))


def test_geodesic_needs_two_point_boundary():
    c = line_complex(3)
    with pytest.raises(HypothesisError):
        geodesic_lemma_check(path_chain(c, [0, 1, 2]), [0, 0], [3, 0])
    with pytest.raises(HypothesisError):
        geodesic_lemma_check(path_chain(c, [0, 1, 2]) * 2, [0, 0], [2, 0])


# ------------------------------------------------------------------ properties
def _check_decomposition(T):
    dec = decompose_1current(T)
    for p in dec.curves:
        assert len(set(p)) == len(p)
    for L in dec.loops:
        assert L[0] == L[-1] and len(set(L[:-1])) == len(L) - 1
    assert dec.to_current() == T
    assert dec.total_length() == pytest.approx(mass(T).total, rel=1e-12, abs=1e-12)
    assert dec.endpoint_current() == boundary(T)
    return dec


@given(st.integers(0, 10_000))
def test_decomposition_random_chains(seed):
    rng = np.random.default_rng(seed)
    c = random_planar_complex(rng, 25)
    _check_decomposition(random_chain(c, 1, rng, density=0.4, max_mult=2))


@given(st.integers(0, 10_000))
def test_decomposition_of_boundaries_has_no_open_curves(seed):
    rng = np.random.default_rng(seed)
    c = random_planar_complex(rng, 25)
    dec = _check_decomposition(boundary(random_chain(c, 2, rng)))
    assert dec.curves == []


@given(st.integers(0, 10_000), st.sampled_from(["ambient", "length:2"]))
def test_mass_dominates_distance(seed, metric):
    rng = np.random.default_rng(seed)
    c = random_planar_complex(rng, 25)
    a, b = rng.choice(c.n_vertices, 2, replace=False)
    # shortest path under random edge weights: a generic edge path from a to b
    E = c.simplices(1)
    W = rng.uniform(0.1, 1.0, len(E))
    G = sp.coo_matrix((W, (E[:, 0], E[:, 1])), shape=(c.n_vertices,) * 2)
    _, pred = shortest_path(G, directed=False, indices=[a], return_predecessors=True)
    path = [b]
    while path[-1] != a:
        path.append(pred[0, path[-1]])
    T = path_chain(c, path[::-1])
    chk = geodesic_lemma_check(T, c.vertices[a], c.vertices[b], MetricMode.parse(metric))
    assert chk.inequality_holds
    assert chk.mass >= chk.distance - 1e-9

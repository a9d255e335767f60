import numpy as np
import pytest
import shapely
from hypothesis import given
from hypothesis import strategies as st

from conftest import grid_complex, oriented, random_chain, random_planar_complex
from intcurrents.currents import boundary, mass
from intcurrents.errors import InputError
from intcurrents.experiments import unit_disk_current
from intcurrents.mesh import EmbeddedComplex
from intcurrents.overlay import overlay_2d, overlay_many


def union_area(*complexes):
    polys = [shapely.Polygon(t) for c in complexes for t in c.vertices[c.simplices(2)]]
    return shapely.unary_union(polys).area


def test_shifted_squares():
    a = grid_complex(1)
    b = grid_complex(1, lo=(0.5, 0.5), hi=(1.5, 1.5))
    ov = overlay_2d(a, b)
    assert ov.merged.volumes(2).sum() == pytest.approx(1.75)
    for which, c in enumerate((a, b)):
        mi, _ = ov.lifts[which]
        assert ov.merged.volumes(2)[mi].sum() == pytest.approx(1.0)
        assert len(np.unique(mi)) == len(mi)


def test_lift_preserves_mass_and_boundary():
    X = unit_disk_current(64)
    G = oriented(grid_complex(4, lo=(-1, -1), hi=(1, 1)))
    ov = overlay_2d(X.complex, G.complex)
    L = ov.lift(X, 0)
    assert mass(L).total == pytest.approx(mass(X).total)
    assert ov.lift(boundary(X), 0) == boundary(L)


def test_lift_rejects_foreign_chain():
    ov = overlay_2d(grid_complex(1), grid_complex(2))
    with pytest.raises(InputError):
        ov.lift(oriented(grid_complex(3)), 0)


def test_overlay_needs_planar_triangulations():
    seg = EmbeddedComplex([[0, 0], [1, 0]], {1: [[0, 1]]})
    with pytest.raises(InputError):
        overlay_2d(seg, grid_complex(1))


def test_overlay_many_three_inputs():
    cs = [grid_complex(k, hi=(1.0, 1.0)) for k in (1, 2, 3)]
    ov = overlay_many(cs)
    assert ov.merged.volumes(2).sum() == pytest.approx(1.0)
    for i, c in enumerate(cs):
        assert mass(ov.lift(oriented(c), i)).total == pytest.approx(1.0)


@given(st.integers(0, 10_000))
def test_overlay_of_random_complexes(seed):
    rng = np.random.default_rng(seed)
    a = random_planar_complex(rng, 16)
    b = random_planar_complex(rng, 16)
    ov = overlay_2d(a, b)
    assert ov.merged.volumes(2).sum() == pytest.approx(union_area(a, b), rel=1e-9)
    T = random_chain(a, 2, rng)
    L = ov.lift(T, 0)
    assert mass(L).total == pytest.approx(mass(T).total, rel=1e-9)
    assert ov.lift(boundary(T), 0) == boundary(L)

import pytest

from qtd.coloring import CornerType, InternalType, coloring
from qtd.templates import Slot, TemplateError, side_vertex_name, template_rings

from conftest import levels, spec


def real_slots(K, v, ring, closed):
    out = []
    for k in range(len(ring)):
        if k + 1 == len(ring) and not closed:
            out.append(None)
            continue
        a, b = ring[k], ring[(k + 1) % len(ring)]
        ti = K.tile_through(b, v, a)
        c = K.tiles[ti].corners
        p = c.index(v)
        assert c[(p + 1) % 4] == a and c[(p - 1) % 4] == b
        out.append(Slot(K.tiles[ti].tile_type, p))
    return tuple(out)


@pytest.mark.parametrize("name, n_max", [("grid2", 4), ("grid3", 3), ("diamond", 3)])
def test_template_rings_match_real_rings(name, n_max):
    rings = template_rings(spec(name))
    for K in levels(name, n_max)[1:]:
        ctx = coloring(K)
        for v in range(len(K.vertices)):
            R = rings.ring(ctx.vertex_type(v), ctx.three_level(v))
            ring = ctx.ordered_ring(v)
            assert R.degree == len(ring)
            assert R.closed == (K.vertices[v].kind not in ("corner", "boundary"))
            assert R.main == tuple(ctx.main_rank(v, w) for w in ring)
            assert R.slots == real_slots(K, v, ring, R.closed)


def test_grid2_centre_ring():
    R = template_rings(spec("grid2")).ring(InternalType("A1"), 1)
    assert R.degree == 4 and R.closed
    assert sorted(R.main) == [1, 2, 3, 4]
    assert {s.tile_type for s in R.slots} == {1, 2, 3, 4}


def test_corner_ring_descends_into_its_own_corner_tile():
    rings = template_rings(spec("grid3"))
    for lvl in (1, 2, 3):
        R = rings.ring(CornerType("TL"), lvl)
        assert R.degree == 2 and not R.closed
        assert R.slots == (Slot(1, 0), None)


def test_cache_is_per_spec_object():
    a = template_rings(spec("grid2"))
    assert template_rings(spec("grid2")) is a
    assert template_rings(spec("grid3")) is not a


def test_side_vertex_name():
    assert side_vertex_name("top", 2) == "U2"
    assert side_vertex_name("left", 1) == "L1"


def test_unknown_internal_vertex():
    with pytest.raises((TemplateError, KeyError, ValueError)):
        template_rings(spec("grid2")).ring(InternalType("Z9"), 1)

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qtd.complex import (
    NoTileError,
    ResourceLimitError,
    build_complex,
    dump_complex,
    local_finiteness_report,
    subdivide,
)

from conftest import levels, spec


def grid_oracle(m, n):
    """Vertices, unit edges and cells of the (m^n) x (m^n) square grid, by coordinates."""
    size = m ** n
    pts = {(Fraction(i, size), Fraction(j, size)) for i in range(size + 1) for j in range(size + 1)}
    edges = set()
    for i in range(size + 1):
        for j in range(size + 1):
            p = (Fraction(i, size), Fraction(j, size))
            if i < size:
                edges.add(frozenset({p, (Fraction(i + 1, size), p[1])}))
            if j < size:
                edges.add(frozenset({p, (p[0], Fraction(j + 1, size))}))
    return pts, edges, size * size


@pytest.mark.parametrize("name, m, n", [("grid2", 2, n) for n in range(6)] + [("grid3", 3, n) for n in range(4)])
def test_grid_matches_coordinate_oracle(name, m, n):
    K = levels(name, 5 if m == 2 else 3)[n]
    pts, edges, cells = grid_oracle(m, n)
    assert {v.pos for v in K.vertices} == pts
    assert {frozenset({K.vertices[u].pos, K.vertices[w].pos}) for u, w in K.edges} == edges
    assert len(K.tiles) == cells
    assert K.counts() == (len(pts), len(edges), cells)


@pytest.mark.parametrize("n, counts", [(0, (4, 4, 1)), (2, (25, 40, 16))])
def test_grid2_counts(n, counts):
    assert levels("grid2", 2)[n].counts() == counts


def test_grid3_level_one():
    assert levels("grid3", 1)[1].counts() == (16, 24, 9)


@pytest.mark.parametrize("name", ["grid2", "grid3", "diamond"])
def test_euler_and_tile_growth(name):
    Ks = levels(name, 4 if name == "grid2" else 3)
    for K in Ks:
        assert K.euler() == 1
        assert len(K.tiles) == spec(name).k ** K.level


def test_ids_and_kinds_are_stable():
    Ks = levels("grid2", 4)
    for a, b in zip(Ks, Ks[1:]):
        for v in a.vertices:
            assert b.vertices[v.id] == v
    side = next(v for v in Ks[2].vertices if v.kind == "side")
    assert Ks[4].vertices[side.id].kind == "side"


def test_every_unit_edge_has_its_macroedge_level():
    for K in levels("diamond", 3):
        for (u, w), mid in K.edges.items():
            assert mid in range(len(K.macroedges))
            assert K.edge_level(u, w) == K.macroedges[mid].level
            chain = K.chains[mid]
            assert any({chain[i], chain[i + 1]} == {u, w} for i in range(len(chain) - 1))


def test_tiles_share_whole_sides():
    for K in levels("grid3", 3):
        uses = {}
        for t in K.tiles:
            for j in range(4):
                e = frozenset((t.corners[j], t.corners[(j + 1) % 4]))
                assert tuple(sorted(e)) in K.edges
                uses[e] = uses.get(e, 0) + 1
        assert set(uses.values()) <= {1, 2}


def test_local_finiteness():
    rep = local_finiteness_report(spec("grid2"), 4)
    assert rep.N == 4 and rep.stabilized
    # a boundary vertex created at level n still sits on level-0 boundary edges
    assert rep.C == 4
    assert rep.C_nonmain == 0
    assert local_finiteness_report(spec("grid3"), 3).N == 4


def test_rings():
    K1 = levels("grid2", 1)[1]
    centre = next(v.id for v in K1.vertices if v.kind == "internal")
    assert K1.degree(centre) == 4 and K1.is_closed_ring(centre)
    for K in levels("grid2", 4)[1:]:
        for name in ("TL", "TR", "BR", "BL"):
            assert K.degree(K.root_corner(name)) == 2


def test_flip():
    K = levels("grid2", 1)[1]
    by_pos = {v.pos: v.id for v in K.vertices}
    h = Fraction(1, 2)
    l1, a1, u1, tl = by_pos[0, h], by_pos[h, h], by_pos[h, 0], by_pos[0, 0]
    assert K.flip((l1, a1, u1)) == (l1, tl, u1)
    assert K.flip(K.flip((l1, a1, u1))) == (l1, a1, u1)
    with pytest.raises(NoTileError):
        K.flip((l1, a1, by_pos[1, h]))


def test_owner_subcomplex():
    K = levels("grid2", 3)[3]
    by_pos = {v.pos: v.id for v in K.vertices}
    h, q, e = Fraction(1, 2), Fraction(1, 4), Fraction(1, 8)
    assert K.owner_subcomplex(by_pos[h, h]) == ()
    assert K.owner_subcomplex(by_pos[q, 0]) == ()  # on the root's top side
    assert K.owner_subcomplex(by_pos[q, q]) == (1,)
    # level-2 side vertex on an internal edge of the NW quadrant
    assert K.owner_subcomplex(by_pos[q, e]) == (1,)
    assert K.owner_subcomplex(by_pos[e, e]) == (1, 1)


def test_bosses_of_grid2_centre():
    K = levels("grid2", 2)[2]
    centre = next(v.id for v in K.vertices if v.pos == (Fraction(1, 2), Fraction(1, 2)))
    assert set(K.bosses(centre)) == set(range(8))
    for v in range(len(K.vertices)):
        assert len(K.bosses(v)) == 8


def test_bosses_are_stable_under_subdivision():
    Ks = levels("diamond", 3)
    for a, b in zip(Ks[1:], Ks[2:]):
        for v in range(len(a.vertices)):
            assert a.bosses(v) == b.bosses(v)


def test_vertex_cap():
    with pytest.raises(ResourceLimitError):
        build_complex(spec("grid2"), 5, max_vertices=100)


def test_dump_is_deterministic():
    a = dump_complex(build_complex(spec("grid3"), 2))
    assert a == dump_complex(build_complex(spec("grid3"), 2))
    assert a.splitlines()[0] == "complex grid3 level 2"


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(["grid2", "grid3", "diamond"]), st.integers(0, 2), st.data())
def test_flip_is_an_involution(name, n, data):
    K = levels(name, 3)[n + 1]
    t = K.tiles[data.draw(st.integers(0, len(K.tiles) - 1))]
    j = data.draw(st.integers(0, 3))
    c = t.corners
    path = (c[j - 1], c[j], c[(j + 1) % 4])
    flipped = K.flip(path)
    assert flipped[1] == c[(j + 2) % 4]
    assert K.flip(flipped) == path


@settings(max_examples=10, deadline=None)
@given(st.sampled_from(["grid2", "grid3", "diamond"]), st.integers(0, 2))
def test_subdivide_preserves_old_vertices(name, n):
    K = levels(name, 3)[n]
    K2 = subdivide(K)
    assert K2.vertices[:len(K.vertices)] == K.vertices
    assert len(K2.tiles) == len(K.tiles) * spec(name).k

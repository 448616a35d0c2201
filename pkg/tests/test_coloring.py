import ast
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qtd.coloring import (
    BoundaryType,
    Color,
    CornerType,
    InternalType,
    PathError,
    SideType,
    check_consequences,
    color_annex,
    color_census,
    coloring,
    full_color_from_key,
)

from conftest import levels, spec

H = Fraction(1, 2)


def at(K, x, y):
    return next(v.id for v in K.vertices if v.pos == (Fraction(x), Fraction(y)))


def dyadic_level(x: Fraction) -> int:
    """Level at which grid2 first has a vertex at coordinate x."""
    n = 0
    while (x * 2 ** n).denominator != 1:
        n += 1
    return n


def test_vertex_types_on_grid2():
    K1, K2 = levels("grid2", 2)[1:]
    ctx1, ctx2 = coloring(K1), coloring(K2)
    assert ctx1.vertex_type(at(K1, H, H)) == InternalType("A1")
    assert ctx2.vertex_type(at(K2, H, 0)) == BoundaryType("top", 1)
    assert ctx2.vertex_type(at(K2, 0, 0)) == CornerType("TL")
    # midpoint of the vertical internal edge between the two upper quadrants
    t = ctx2.vertex_type(at(K2, H, Fraction(1, 4)))
    assert isinstance(t, SideType)
    assert {t.first, t.second} == {"left", "right"} and t.i == t.j == 1 and t.edge_type == 3


def test_three_level():
    Ks = levels("grid2", 5)
    K5 = Ks[5]
    ctx = coloring(K5)
    assert ctx.color(K5.root_corner("TL")) == Color(CornerType("TL"), 3, "none")
    for v in K5.vertices:
        assert ctx.three_level(v.id) == {5: 1, 4: 2}.get(v.level, 3)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_bracket_on_grid2_top_side_matches_dyadic_oracle(n):
    K = levels("grid2", 5)[n]
    ctx = coloring(K)
    step = Fraction(1, 2 ** n)
    for j in range(2 ** (n - 1)):
        x = (2 * j + 1) * step
        left, right = dyadic_level(x - step), dyadic_level(x + step)
        want = {(True, True): "both", (False, True): "left", (True, False): "right"}[
            (left == n - 1, right == n - 1)]
        assert ctx.bracket(at(K, x, 0)) == want


def test_level_two_midpoint_is_both():
    K = levels("grid2", 2)[2]
    assert coloring(K).bracket(at(K, H, Fraction(1, 4))) == "both"


def test_internal_vertices_have_no_bracket():
    for K in levels("diamond", 3)[1:]:
        ctx = coloring(K)
        for v in K.vertices:
            if v.kind in ("internal", "corner") or ctx.three_level(v.id) > 1:
                assert ctx.bracket(v.id) == "none"


def test_full_color_shape():
    for name in ("grid2", "grid3", "diamond"):
        K = levels(name, 3)[3]
        ctx = coloring(K)
        for v in range(len(K.vertices)):
            assert len(ctx.full_color(v).bosses) == 4 * spec(name).s + 4


def test_grid2_centre_main_edges_follow_template_numbering():
    K = levels("grid2", 1)[1]
    ctx = coloring(K)
    c = at(K, H, H)
    # template edges 1..4 end at L1, R1, U1, D1
    assert ctx.main_edges(c) == (at(K, 0, H), at(K, 1, H), at(K, H, 0), at(K, H, 1))
    assert ctx.ordered_ring(c)[0] == at(K, 0, H)


def test_side_vertices_have_two_main_edges_along_their_macroedge():
    for K in levels("grid3", 3)[1:]:
        ctx = coloring(K)
        for v in K.vertices:
            if v.kind in ("side", "boundary"):
                a, b = ctx.main_edges(v.id)
                assert K.edge_macroedge(v.id, a) == K.edge_macroedge(v.id, b) == v.macroedge


@pytest.mark.parametrize("name", ["grid2", "grid3", "diamond"])
def test_consequences(name):
    for K in levels(name, 4)[1:]:
        rep = check_consequences(K)
        assert rep.nonmain_not_main_at_head == 0
        assert rep.nonmain_tail_not_boss == 0
        assert rep.mainmain_boss_mismatch == 0
        # strict seniority only fails on ties between same-level vertices
        assert rep.nonmain_tail_not_older == rep.nonmain_tail_same_level


def test_path_errors():
    K = levels("grid2", 1)[1]
    ctx = coloring(K)
    with pytest.raises(PathError):
        ctx.encode_path([])
    with pytest.raises(PathError):
        ctx.encode_path([at(K, 0, 0), at(K, 1, 1)])
    enc = ctx.encode_path([at(K, H, H)])
    assert enc.vertices == (ctx.full_color(at(K, H, H)),) and enc.edges == ()


def _walk(K, data, length):
    p = [data.draw(st.integers(0, len(K.vertices) - 1))]
    for _ in range(length):
        p.append(data.draw(st.sampled_from(K.ring(p[-1]))))
    return p


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["grid2", "grid3", "diamond"]), st.integers(1, 3), st.integers(0, 6), st.data())
def test_reversed_path_has_reversed_encoding(name, n, length, data):
    K = levels(name, 3)[n]
    ctx = coloring(K)
    p = _walk(K, data, length)
    assert ctx.encode_path(p[::-1]) == ctx.encode_path(p).reversed()


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["grid2", "grid3", "diamond"]), st.integers(1, 3), st.data())
def test_edge_pairs_are_consistent(name, n, data):
    K = levels(name, 3)[n]
    ctx = coloring(K)
    a, b = _walk(K, data, 1)
    e = ctx.edge_pair(a, b)
    assert ctx.ordered_ring(a)[e.out_index] == b and ctx.ordered_ring(b)[e.in_index] == a
    assert e.reversed() == ctx.edge_pair(b, a)


def test_census_is_nested_and_bounded():
    for name in ("grid2", "grid3"):
        sp = spec(name)
        rep = color_census(sp, 4, levels(name, 4)[1:])
        # levels 1 and 2 still lack 3-level 3 colors, so nesting starts at level 3
        assert rep.nested == [False, False, True]
        bound = (sp.v + 4 * sp.s * 4 * (sp.r + 4) + 4 * sp.s + 4) * 3 * 4
        assert max(rep.colors) <= bound


def test_census_rejects_short_runs():
    with pytest.raises(ValueError):
        color_census(spec("grid2"), 2)


def test_color_annex_round_trip():
    K = levels("diamond", 2)[2]
    ctx = coloring(K)
    lines = color_annex(K).splitlines()
    assert len(lines) == len(K.vertices)
    for line in lines:
        _, v, key = line.split(" ", 2)
        assert full_color_from_key(ast.literal_eval(key)) == ctx.full_color(int(v))

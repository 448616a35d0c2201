from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qtd.coloring import coloring
from qtd.complex import build_levels
from qtd.determinism import (
    SPECIAL,
    CompletionError,
    build_neighbor_table,
    classify_regular,
    complete_path,
    enumerate_corner_paths,
    flip_bracket,
    is_special,
    recover_tile_type,
    verify_weak_determinism,
)

from conftest import levels, spec


def test_tl_is_special_in_its_corner_tile():
    K = levels("grid2", 2)[2]
    tl = K.root_corner("TL")
    ti = next(i for i, t in enumerate(K.tiles) if tl in t.corners)
    assert is_special(K, ti, tl)
    assert not any(is_special(K, ti, v) for v in K.tiles[ti].corners if v != tl)


def test_interior_tile_has_no_special_corner():
    # grid3's centre tile has four fresh corners; no corner is strictly oldest
    K = levels("grid3", 1)[1]
    ti = next(i for i, t in enumerate(K.tiles) if t.address == (5,))
    assert {K.vertices[v].level for v in K.tiles[ti].corners} == {1}
    assert not any(is_special(K, ti, v) for v in K.tiles[ti].corners)


def test_every_grid2_tile_has_a_special_corner():
    # each tile keeps one corner of its parent and gains three fresh ones
    for K in levels("grid2", 3)[1:]:
        for ti, t in enumerate(K.tiles):
            assert sum(is_special(K, ti, v) for v in t.corners) == 1


@pytest.mark.parametrize("name", ["grid2", "grid3", "diamond"])
def test_at_most_one_special_corner(name):
    for K in levels(name, 3)[1:]:
        for ti, t in enumerate(K.tiles):
            assert sum(is_special(K, ti, v) for v in t.corners) <= 1


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_case_count(n):
    K = levels("grid2", 4)[n]
    assert sum(1 for _ in enumerate_corner_paths(K)) == 8 * 4 ** n


def test_cases_use_the_flip():
    for case in enumerate_corner_paths(levels("diamond", 2)[2]):
        K = levels("diamond", 2)[2]
        assert K.flip(case.path) == (case.path[0], case.opposite, case.path[2])
        assert (case.adc is None) == case.special


@pytest.mark.parametrize("name", ["grid2", "grid3", "diamond"])
def test_recover_tile_type_agrees_with_addresses(name):
    sp = spec(name)
    for K in levels(name, 3)[1:]:
        ctx = coloring(K)
        for case in enumerate_corner_paths(K):
            a, b, c = case.path
            got = recover_tile_type(sp, ctx.full_color(b), ctx.edge_index(b, a), ctx.edge_index(b, c))
            assert got is not None
            t, pb, d = got
            tile = K.tiles[K.tile_through(a, b, c)]
            assert t == tile.tile_type and tile.corners[pb] == b
            assert tile.corners[(pb + d) % 4] == a


def test_recover_tile_type_examples():
    K = levels("grid2", 1)[1]
    ctx = coloring(K)
    pos = {v.pos: v.id for v in K.vertices}
    h = Fraction(1, 2)
    c, u1, l1, d1 = pos[h, h], pos[h, 0], pos[0, h], pos[h, 1]
    fc = ctx.full_color(c)
    t, _, _ = recover_tile_type(spec("grid2"), fc, ctx.edge_index(c, u1), ctx.edge_index(c, l1))
    assert t == 1  # the NW tile
    assert recover_tile_type(spec("grid2"), fc, ctx.edge_index(c, u1), ctx.edge_index(c, d1)) is None


def test_grid2_classes_are_regular():
    classes = classify_regular(levels("grid2", 4)[1:])
    assert len(classes) == 2240


def test_violation_is_confined_to_d_bosses():
    """An independent look at one violating pair: equal ABC encodings, ADC differing in D's bosses only."""
    K3, K4 = levels("grid2", 4)[3:5]
    c3, c4 = coloring(K3), coloring(K4)
    p3, p4 = (13, 34, 79), (35, 102, 271)
    assert c3.encode_path(p3) == c4.encode_path(p4)
    d3, d4 = K3.flip(p3), K4.flip(p4)
    e3, e4 = c3.encode_path(d3), c4.encode_path(d4)
    assert e3.edges == e4.edges
    assert e3.vertices[1].own == e4.vertices[1].own
    assert e3.vertices[1].bosses != e4.vertices[1].bosses


def test_report_is_independent_of_thread_count():
    Ks = levels("grid2", 4)[1:]
    one = verify_weak_determinism(Ks, threads=1)
    two = verify_weak_determinism(Ks, threads=3)
    assert one.to_text() == two.to_text() and one.to_json() == two.to_json()
    assert one.cases == 2720 and one.nonregular_classes == 0
    assert set(one.violation_parts) <= {"bosses"}


def test_levels_one_to_three_are_vacuous():
    rep = verify_weak_determinism(levels("grid2", 3)[1:])
    assert rep.cases == rep.classes == 672
    assert rep.violations == 0


def test_bracket_flip_is_detected():
    Ks = build_levels(spec("grid2"), 4)[1:]
    before = verify_weak_determinism(Ks).violations
    flip_bracket(Ks[-1], 204)
    after = verify_weak_determinism(Ks).violations
    assert after > before


def test_complete_path_marks_special_cases():
    Ks = levels("grid2", 3)[1:]
    table = build_neighbor_table(Ks)
    for K in Ks:
        for case in enumerate_corner_paths(K):
            if case.special:
                assert complete_path(K.spec, case.abc, table) == SPECIAL


def test_complete_path_agrees_or_reports_why():
    Ks = levels("grid3", 3)[1:]
    table = build_neighbor_table(Ks)
    agree = 0
    for K in Ks:
        for case in enumerate_corner_paths(K):
            if case.special:
                continue
            try:
                got = complete_path(K.spec, case.abc, table)
            except CompletionError as exc:
                assert exc.reason in ("ambiguous", "gap", "miss")
                continue
            assert got == case.adc
            agree += 1
    assert agree > 0


def test_complete_path_rejects_opposite_edges():
    K = levels("grid2", 1)[1]
    ctx = coloring(K)
    pos = {v.pos: v.id for v in K.vertices}
    h = Fraction(1, 2)
    enc = ctx.encode_path((pos[h, 0], pos[h, h], pos[h, 1]))
    assert complete_path(K.spec, enc, build_neighbor_table([K])) is None


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(["grid2", "grid3", "diamond"]), st.integers(1, 3), st.data())
def test_each_case_encodes_its_own_paths(name, n, data):
    K = levels(name, 3)[n]
    ti = data.draw(st.integers(0, len(K.tiles) - 1))
    cases = list(enumerate_corner_paths(K, [ti]))
    assert len(cases) == 8
    case = data.draw(st.sampled_from(cases))
    ctx = coloring(K)
    assert case.abc == ctx.encode_path(case.path)
    assert set(case.path) | {case.opposite} == set(K.tiles[ti].corners)

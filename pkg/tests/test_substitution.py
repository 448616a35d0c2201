import pytest
import yaml
from hypothesis import given, settings
from hypothesis import strategies as st

from qtd.substitution import (
    BUILTIN_NAMES,
    SubstitutionSyntaxError,
    builtin_substitutions,
    grid_document,
    iter_template_ring,
    load_builtin,
    parse_substitution,
    resolve_spec,
    serialize_substitution,
    validate_substitution,
)


def _doc(name="grid2"):
    return yaml.safe_load(serialize_substitution(load_builtin(name)))


def _parse(doc):
    return parse_substitution(yaml.safe_dump(doc))


@pytest.mark.parametrize("name, k, s, v, r", [
    ("grid2", 4, 1, 1, 4),
    ("grid3", 9, 2, 4, 12),
    ("diamond", 8, 1, 5, 12),
])
def test_sizes(name, k, s, v, r):
    sp = load_builtin(name)
    assert (sp.k, sp.s, sp.v, sp.r) == (k, s, v, r)


def test_grid3_edge_count_matches_direct_construction():
    # m x m grid: (m-1) interior lines each way, each cut into m unit edges
    m = 3
    assert load_builtin("grid3").r == 2 * (m - 1) * m


def test_three_corner_tile_is_a_syntax_error():
    doc = _doc()
    doc["tiles"][0]["corners"] = doc["tiles"][0]["corners"][:3]
    with pytest.raises(SubstitutionSyntaxError):
        _parse(doc)


def test_broken_yaml_reports_position():
    with pytest.raises(SubstitutionSyntaxError, match="line"):
        parse_substitution("name: x\ntiles: [\n")


def test_corpus():
    assert "grid2" in BUILTIN_NAMES
    for sp in builtin_substitutions():
        rep = validate_substitution(sp)
        assert rep.ok, rep.to_text()
        assert rep.corner_condition


def test_grid2_corner_condition():
    rep = validate_substitution(load_builtin("grid2"))
    assert rep.ok and rep.corner_condition
    assert rep.to_text().startswith("ok: true\ncorner_condition: true\n")


def test_chord_between_corners_violates_condition_1():
    doc = _doc()
    doc["internal_edges"].append({"type": 5, "ends": ["TL", "BR"], "first_side": 1})
    rep = validate_substitution(_parse(doc))
    assert not rep.ok
    assert "1" in {v.condition for v in rep.violations}


def test_unequal_side_counts_violate_condition_3():
    doc = _doc()
    doc["side_vertices"] = {"top": 2, "right": 1, "bottom": 1, "left": 1}
    rep = validate_substitution(_parse(doc))
    assert "3" in {v.condition for v in rep.violations}


def test_counterclockwise_tile_is_rejected():
    doc = _doc()
    doc["tiles"][0]["corners"] = doc["tiles"][0]["corners"][::-1]
    rep = validate_substitution(_parse(doc))
    assert "2" in {v.condition for v in rep.violations}


def test_resolve_spec_reads_files(tmp_path):
    p = tmp_path / "g.sub"
    p.write_text(serialize_substitution(load_builtin("grid3")))
    assert resolve_spec(str(p)).k == 9
    with pytest.raises(FileNotFoundError):
        resolve_spec(str(tmp_path / "missing.sub"))


def test_perimeter_order():
    assert load_builtin("grid3").perimeter() == [
        "TL", "U1", "U2", "TR", "R1", "R2", "BR", "D1", "D2", "BL", "L1", "L2"]


def test_template_ring_of_grid2_centre_is_closed_and_has_degree_4():
    ring = list(iter_template_ring(load_builtin("grid2"), "A1"))
    assert sorted(ring) == ["D1", "L1", "R1", "U1"]


@given(st.sampled_from(BUILTIN_NAMES))
def test_serialize_round_trip(name):
    sp = load_builtin(name)
    text = serialize_substitution(sp)
    assert serialize_substitution(parse_substitution(text)) == text


@settings(max_examples=6, deadline=None)
@given(st.integers(min_value=2, max_value=7))
def test_generated_grids_are_valid(m):
    sp = parse_substitution(grid_document(m))
    assert validate_substitution(sp).ok
    assert (sp.k, sp.s, sp.v, sp.r) == (m * m, m - 1, (m - 1) ** 2, 2 * (m - 1) * m)

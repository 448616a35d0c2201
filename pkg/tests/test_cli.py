import json

import yaml

from qtd.cli import run
from qtd.local_rules import cut_window, dump_grid_coloring
from qtd.substitution import load_builtin, serialize_substitution

from conftest import levels


def test_help_for_every_subcommand(capsys):
    for cmd in ("validate", "build", "render", "census", "check-determinism", "check-spatial",
                "glue", "straighten", "local-rules", "report"):
        assert run([cmd, "--help"]) == 0
        assert "--spec" in capsys.readouterr().out


def test_usage_errors():
    assert run([]) == 2
    assert run(["frobnicate"]) == 2
    assert run(["build", "--levels", "0"]) == 2
    assert run(["build", "--spec", "/no/such/file.sub"]) == 2
    assert run(["render", "--spec", "grid2"]) == 2


def test_validate(tmp_path, capsys):
    assert run(["validate", "--spec", "grid2"]) == 0
    assert "ok: true" in capsys.readouterr().out
    broken = tmp_path / "broken.sub"
    doc = yaml.safe_load(serialize_substitution(load_builtin("grid2")))
    doc["internal_edges"].append({"type": 5, "ends": ["TL", "BR"], "first_side": 1})
    broken.write_text(yaml.safe_dump(doc))
    assert run(["validate", "--spec", str(broken)]) == 1
    out = capsys.readouterr().out
    assert "violation [" in out
    assert run(["build", "--spec", str(broken)]) == 1


def test_render_writes_svg_and_legend(tmp_path):
    out = tmp_path / "k3.svg"
    assert run(["render", "--spec", "grid2", "--level", "3", "--out", str(out)]) == 0
    assert out.read_text().count('class="tile"') == 4 ** 3
    assert (tmp_path / "k3.legend.txt").read_text().strip()
    assert not [p for p in tmp_path.iterdir() if p.name.endswith(".tmp")]


def test_build_output_is_byte_stable(tmp_path):
    a, b = tmp_path / "a.dump", tmp_path / "b.dump"
    assert run(["build", "--spec", "grid3", "--level", "2", "--out", str(a)]) == 0
    assert run(["build", "--spec", "grid3", "--level", "2", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert "color 0 " in a.read_text()


def test_census_json(tmp_path):
    out = tmp_path / "c.json"
    assert run(["census", "--spec", "grid2", "--levels", "4", "--format", "json", "--out", str(out)]) == 0
    d = json.loads(out.read_text())
    assert d["full_colors"] == [9, 25, 69, 201]


def test_check_determinism_reports_violations(tmp_path):
    a, b = tmp_path / "t1.txt", tmp_path / "t4.txt"
    rc = run(["check-determinism", "--spec", "grid2", "--levels", "4", "--threads", "1", "--out", str(a)])
    assert run(["check-determinism", "--spec", "grid2", "--levels", "4", "--threads", "4", "--out", str(b)]) == rc
    assert a.read_bytes() == b.read_bytes()
    text = a.read_text()
    assert "cases 2720" in text
    assert rc == (0 if "violations 0\n" in text else 1)


def test_check_determinism_vacuous_levels(capsys):
    assert run(["check-determinism", "--spec", "grid2", "--levels", "3"]) == 0
    assert "violations 0" in capsys.readouterr().out


def test_check_spatial(capsys):
    assert run(["check-spatial", "--spec", "grid2", "--levels", "3", "--format", "json"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["violations"] == 0 and d["levels"] == [1, 2, 3]


def test_glue_dump_and_svg(tmp_path):
    assert run(["glue", "--spec", "grid2", "--level", "3", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "grid2-g3.dump").exists()
    assert run(["glue", "--spec", "grid2", "--level", "3", "--out", str(tmp_path / "g.svg")]) == 0


def test_straighten_writes_certificate(tmp_path):
    from qtd.glued import bracket_count, build_glued, sample_paths
    g = build_glued(load_builtin("grid2"), 3)
    p, t = next((p, t) for p, t in sample_paths(g, 100) if bracket_count(g, p) > 0)
    base = tmp_path / "s.cert"
    rc = run(["straighten", "--spec", "grid2", "--level", "3", "--path", ",".join(map(str, p)),
              "--target", str(t), "--out", str(base)])
    assert rc == 0
    cert = (tmp_path / "s.cert").read_text()
    assert cert.startswith("flip ")
    assert "output " in (tmp_path / "s.txt").read_text()
    assert run(["straighten", "--spec", "grid2", "--level", "3", "--path", "0,2"]) == 1
    assert run(["straighten", "--spec", "grid2", "--level", "3"]) == 2


def test_local_rules_on_a_grid_file(tmp_path, capsys):
    g = cut_window(levels("grid2", 4)[4], 2, 3, 4, 4)
    f = tmp_path / "w.grid"
    f.write_text(dump_grid_coloring(g))
    assert run(["local-rules", "--spec", "grid2", "--levels", "4", "--grid", str(f)]) == 0
    assert "result ok" in capsys.readouterr().out
    assert run(["local-rules", "--spec", "diamond", "--levels", "2"]) == 1


def test_local_rules_mutation_study(capsys):
    assert run(["local-rules", "--spec", "grid2", "--levels", "3", "--trials", "10"]) == 0
    assert "mutations 10" in capsys.readouterr().out


def test_report_is_byte_stable(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    r1 = run(["report", "--spec", "grid2", "--levels", "3", "--threads", "1", "--out", str(a)])
    r2 = run(["report", "--spec", "grid2", "--levels", "3", "--threads", "2", "--out", str(b)])
    assert r1 == r2
    assert (a / "grid2-report.txt").read_bytes() == (b / "grid2-report.txt").read_bytes()


def test_vertex_cap_from_environment(monkeypatch):
    monkeypatch.setenv("QTD_MAX_VERTICES", "50")
    assert run(["build", "--spec", "grid2", "--level", "4"]) == 3

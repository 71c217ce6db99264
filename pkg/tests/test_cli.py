from __future__ import annotations

import csv
import json
import subprocess
import sys

import pytest

from gridplan import __version__
from gridplan.cli import main
from gridplan.layout import load_layout
from gridplan.validator import check_layout

from conftest import FIXTURES, scene_doc, room

TOY = scene_doc(W=3, L=3, entrance=(1, 0), rooms=[room(1, 4, furniture=[(1, 2, True)])])
# four closed single-cell rooms pinned to the corners leave no traversable cell
BOXED_IN = scene_doc(W=2, L=2, entrance=(0, 0), rooms=[room(k, 1, corner=c) for k, c in
                                                      enumerate(["SW", "SE", "NW", "NE"], 1)])


@pytest.fixture
def toy_file(tmp_path):
    p = tmp_path / "toy.json"
    p.write_text(json.dumps(TOY))
    return p


def run(*argv):
    return main([str(a) for a in argv])


def test_version_and_help(capsys):
    with pytest.raises(SystemExit) as e:
        run("--version")
    assert e.value.code == 0 and __version__ in capsys.readouterr().out
    with pytest.raises(SystemExit):
        run("--help")
    assert "solve" in capsys.readouterr().out


@pytest.mark.parametrize("backend", ["builtin", "external"])
def test_solve_writes_outputs(toy_file, tmp_path, backend):
    out = tmp_path / backend
    assert run("--backend", backend, "solve", toy_file, "-o", out, "--no-c2f", "--time-limit", 60) == 0
    lay = load_layout(out / "layout.json")
    assert check_layout(lay.scene, lay.grid, lay).ok
    assert lay.artifacts is not None and (out / "plan.svg").read_text().startswith("<svg")
    rep = json.loads((out / "report.json").read_text())
    assert rep["status"] == "Optimal" and rep["validation"]["ok"] and rep["backend"] == backend
    assert rep["design_objective"] == pytest.approx(lay.objective["total"])


def test_solve_is_deterministic(toy_file, tmp_path):
    outs = []
    for n in range(2):
        d = tmp_path / str(n)
        assert run("--seed", 7, "solve", toy_file, "-o", d, "--no-c2f") == 0
        outs.append(((d / "layout.json").read_bytes(), (d / "plan.svg").read_bytes()))
    assert outs[0] == outs[1]


def test_solve_infeasible(tmp_path):
    p = tmp_path / "boxed.json"
    p.write_text(json.dumps(BOXED_IN))
    assert run("solve", p, "-o", tmp_path / "o", "--no-c2f") == 2
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["status"] == "Infeasible" and not (tmp_path / "o" / "layout.json").exists()


def test_solve_bad_scene(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(scene_doc(W=2, L=2, rooms=[room(1, 9)])))
    assert run("solve", p, "-o", tmp_path / "o") == 1
    assert json.loads((tmp_path / "o" / "report.json").read_text())["error"]


def test_config_override(toy_file, tmp_path):
    cfg = tmp_path / "w.json"
    cfg.write_text(json.dumps({"w_area": 5.0}))
    assert run("--config", cfg, "solve", toy_file, "-o", tmp_path / "a", "--no-c2f") == 0
    assert run("solve", toy_file, "-o", tmp_path / "b", "--no-c2f") == 0
    a = json.loads((tmp_path / "a" / "report.json").read_text())["config_digest"]
    b = json.loads((tmp_path / "b" / "report.json").read_text())["config_digest"]
    assert a != b


def test_export_phases(toy_file, tmp_path, capsys):
    out = tmp_path / "m.lp"
    assert run("export", toy_file, "-o", out) == 0
    assert out.read_text() == (FIXTURES / "golden" / "toy_direct.lp").read_text()
    with pytest.raises(SystemExit) as e:
        run("export", toy_file, "-o", out, "--phase", "fine")
    assert e.value.code == 2 and "--hint" in capsys.readouterr().err


def test_export_fine_from_coarse_solution(tmp_path):
    scene = tmp_path / "s.json"
    scene.write_text(json.dumps(scene_doc(W=4, L=4, entrance=(0, 0), rooms=[room(1, 4), room(2, 4, open_=True)])))
    coarse = tmp_path / "c.lp"
    assert run("export", scene, "-o", coarse, "--phase", "coarse") == 0
    sol = tmp_path / "c.sol"
    subprocess.run([sys.executable, "-m", "gridplan.solver.highs_adapter", str(coarse), str(sol)], check=True)
    fine = tmp_path / "f.lp"
    assert run("export", scene, "-o", fine, "--phase", "fine", "--hint", sol) == 0
    direct = tmp_path / "d.lp"
    assert run("export", scene, "-o", direct) == 0
    text = fine.read_text()
    assert "\\ phase: fine" in text
    # the reference penalty shows up in the objective
    obj = lambda t: t.split("Subject To")[0].split("Minimize")[1]
    assert obj(text) != obj(direct.read_text())


def test_validate_metrics_render(tmp_path, capsys):
    path = FIXTURES / "handcrafted" / "off_center_furniture.json"
    assert run("validate", path) == 0
    assert json.loads(capsys.readouterr().out)["ok"] is True
    assert run("metrics", path) == 0
    assert capsys.readouterr().out == "OOR\t0.00\nOOB\t0.00\n"
    svg = tmp_path / "p.svg"
    assert run("render", path, "-o", svg, "--no-legend", "--cell-px", 10) == 0
    assert 'viewBox="0 0' in svg.read_text() and 'id="legend"' not in svg.read_text()


def test_metrics_boxscene(tmp_path, capsys):
    p = tmp_path / "b.json"
    p.write_text(json.dumps({"rooms": [{"label": "r", "rect": [0, 0, 2, 2]}],
                             "objects": [{"label": "a", "room": "r", "rect": [1, 0, 3, 1]}]}))
    assert run("metrics", p) == 0
    assert capsys.readouterr().out == "OOR\t0.00\nOOB\t50.00\n"


def test_validate_reports_failure(tmp_path):
    doc = json.loads((FIXTURES / "handcrafted" / "l_shaped_room.json").read_text())
    doc["labels"] = [[0 for _ in row] for row in doc["labels"]]
    doc["scene"]["rooms"][0]["corner_pref"] = "NE"
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    assert run("validate", p) == 2


def test_extract_offline(tmp_path):
    case = FIXTURES / "llm" / "two_bed_apartment"
    out = tmp_path / "scene.json"
    assert run("extract", case / "brief.txt", "-o", out, "--offline-fixture-dir", case) == 0
    assert out.read_text() == (case / "expected_scene.json").read_text()
    conflict = FIXTURES / "llm" / "conflict_oversized"
    assert run("extract", conflict / "brief.txt", "-o", out, "--offline-fixture-dir", conflict) == 1


def test_bench(toy_file, tmp_path):
    out = tmp_path / "b.csv"
    assert run("bench", toy_file, "--repeats", 1, "--resolutions", "1", "-o", out, "--time-limit", 30) == 0
    rows = list(csv.DictReader(out.open()))
    assert [r["mode"] for r in rows] == ["direct", "c2f"]
    assert set(rows[0]) == {"resolution", "mode", "mean_s", "std_s", "objective", "gap"}
    assert rows[0]["resolution"] == "3x3"


def test_missing_file(tmp_path):
    assert run("validate", tmp_path / "nope.json") == 1

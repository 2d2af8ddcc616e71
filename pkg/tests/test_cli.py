"""Command line reports: golden bytes, schemas, figures and exit codes."""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from qdatlas import SymmetricFamily, closed_form_alpha, trace
from qdatlas.cli import main as cli_main
from qdatlas.realtree import family_zero_list
from qdatlas.reportio import validate_report

GOLDEN = Path(__file__).parent / "golden"


def run(tmp_path, argv, expect=0):
    code = cli_main(argv + ["--out", str(tmp_path)])
    assert code == expect
    return tmp_path


def report(outdir, command):
    return json.loads((outdir / f"{command}.json").read_text())


# ---------------------------------------------------------------------------
# golden files


def test_predict_matches_golden(tmp_path):
    run(tmp_path, ["predict", "--m", "2", "--a", "5", "--b", "3"])
    assert (tmp_path / "predict.json").read_bytes() \
        == (GOLDEN / "predict_m2_a5_b3.json").read_bytes()
    assert (tmp_path / "predict.svg").read_bytes() \
        == (GOLDEN / "predict_m2_a5_b3.svg").read_bytes()


def test_tree_matches_golden(tmp_path):
    run(tmp_path, ["tree", "--m", "1", "--b", "2"])
    assert (tmp_path / "tree.json").read_bytes() \
        == (GOLDEN / "tree_m1_b2.json").read_bytes()
    assert (tmp_path / "tree.svg").read_bytes() \
        == (GOLDEN / "tree_m1_b2.svg").read_bytes()


# ---------------------------------------------------------------------------
# predict


def test_predict_report_content(tmp_path, capsys):
    run(tmp_path, ["predict", "--m", "2", "--a", "5", "--b", "3"])
    rep = report(tmp_path, "predict")
    validate_report(rep)
    out = rep["outputs"]
    nu = math.pi * 3.0 / 6.0
    assert abs(out["nu"] - nu) < 1e-12
    assert abs(out["alpha"] - closed_form_alpha(2, nu)) < 1e-12
    assert abs(out["alpha"] + out["alphaOtherBranch"] - 2 * math.pi / 3) < 1e-12
    assert out["vertices"] == sorted(out["vertices"])
    assert len(out["vertices"]) == 6
    # stdout carries the exact canonical report bytes
    stdout = capsys.readouterr().out
    assert stdout == (tmp_path / "predict.json").read_text()


def test_predict_seed_recorded(tmp_path):
    run(tmp_path, ["predict", "--m", "1", "--seed", "7"])
    rep = report(tmp_path, "predict")
    assert rep["seed"] == 7
    assert rep["timing"] is None
    assert rep["schemaVersion"] == 1


def test_no_figures_flag(tmp_path):
    run(tmp_path, ["predict", "--m", "1", "--no-figures"])
    assert (tmp_path / "predict.json").exists()
    assert not (tmp_path / "predict.svg").exists()
    assert not (tmp_path / "predict.png").exists()


# ---------------------------------------------------------------------------
# tree


def test_tree_report_content(tmp_path):
    run(tmp_path, ["tree", "--m", "1", "--b", "2"])
    rep = report(tmp_path, "tree")
    validate_report(rep)
    out = rep["outputs"]
    assert out["foliation"] == "vertical"
    assert len(out["edges"]) == 2
    total = sum(e["length"] for e in out["edges"])
    assert abs(total - math.pi) < 1e-10
    assert "midpoint marker" in out["midpointConvention"]
    ver = out["verification"]
    assert abs(ver["closedForm"] - math.pi / 2) < 1e-12
    for key, val in ver["deviations"].items():
        assert val < 1e-8, key


def test_tree_collapsed_has_no_midpoint_note(tmp_path):
    run(tmp_path, ["tree", "--m", "3", "--b", "0"])
    rep = report(tmp_path, "tree")
    validate_report(rep)
    out = rep["outputs"]
    assert out["edges"] == []
    assert len(out["rays"]) == 8
    assert out["verification"]["pathIntegral"] is None
    assert out["midpointConvention"] is None
    svg = (tmp_path / "tree.svg").read_text()
    assert svg.count("<path") == 8


def test_tree_horizontal_edges(tmp_path):
    run(tmp_path, ["tree", "--m", "2", "--a", "3", "--foliation", "horizontal"])
    rep = report(tmp_path, "tree")
    out = rep["outputs"]
    assert len(out["edges"]) == 3
    for e in out["edges"]:
        assert abs(e["length"] - math.pi / 2) < 1e-10


# ---------------------------------------------------------------------------
# trace


def test_trace_threefold_equivariance(tmp_path):
    # rotating the seed by omega^k rotates the reported leaf, up to the
    # orientation chosen by the principal branch at the rotated seed
    f = SymmetricFamily(2, 0.0, 1.0)
    w = f.omega
    seeds = [w ** k * 1.4 for k in range(3)]
    seed_file = tmp_path / "seeds.json"
    seed_file.write_text(json.dumps([[z.real, z.imag] for z in seeds]))
    run(tmp_path, ["trace", "--m", "2", "--b", "1", "--kind", "vertical",
                   "--budget", "1.2", "--seeds", str(seed_file)])
    rep = report(tmp_path, "trace")
    validate_report(rep)
    traces = rep["outputs"]["traces"]
    assert len(traces) == 3
    zs = family_zero_list(f)
    base = {d: trace(f.expand(), 1.4 + 0j, "vertical", d, budget=1.2,
                     zeros=zs).path.points for d in (1, -1)}
    for k, entry in enumerate(traces):
        assert entry["error"] is None
        assert entry["terminated"] == "length-budget"
        assert entry["drift"] < 1e-6 * 1.2
        pts = np.array([complex(x, y) for x, y in entry["points"]])
        devs = []
        for ref in base.values():
            if ref.size == pts.size:
                devs.append(float(np.max(np.abs(pts - w ** k * ref))))
        assert devs and min(devs) < 1e-6


def test_trace_constant_coefficient_line(tmp_path):
    seed_file = tmp_path / "seeds.json"
    seed_file.write_text("[[0.0, 1.0]]")
    run(tmp_path, ["trace", "--poly", "1", "--kind", "horizontal",
                   "--budget", "1.0", "--seeds", str(seed_file)])
    rep = report(tmp_path, "trace")
    validate_report(rep)
    entry = rep["outputs"]["traces"][0]
    pts = np.array([complex(x, y) for x, y in entry["points"]])
    assert np.max(np.abs(pts.imag - 1.0)) < 1e-9
    assert abs(pts[-1].real - 1.0) < 1e-8
    assert rep["outputs"]["zeros"] == []
    assert (tmp_path / "trace.svg").exists()


def test_trace_all_seeds_failing(tmp_path, capsys):
    seed_file = tmp_path / "seeds.json"
    seed_file.write_text("[[0.0, 0.0]]")
    run(tmp_path, ["trace", "--poly", "0,1", "--seeds", str(seed_file)],
        expect=1)
    rep = report(tmp_path, "trace")
    validate_report(rep)
    err = rep["outputs"]["error"]
    assert err["type"] == "AtlasError"
    assert "failed" in err["message"]


def test_trace_partial_failure_still_reports(tmp_path):
    seed_file = tmp_path / "seeds.json"
    seed_file.write_text("[[0.0, 0.0], [2.0, 0.0]]")
    run(tmp_path, ["trace", "--poly", "0,1", "--seeds", str(seed_file)])
    rep = report(tmp_path, "trace")
    validate_report(rep)
    first, second = rep["outputs"]["traces"]
    assert first["error"]["type"] == "SeedTooCloseToZero"
    assert second["error"] is None


# ---------------------------------------------------------------------------
# verify


def test_verify_lemma1(tmp_path):
    run(tmp_path, ["verify", "--m", "2", "--b", "1", "--level", "lemma1"])
    rep = report(tmp_path, "verify")
    validate_report(rep)
    out = rep["outputs"]
    assert out["level"] == "lemma1"
    assert out["passed"] is True
    names = {c["name"] for c in out["checks"]}
    assert "quadratureEdgeVsClosedForm" in names
    for c in out["checks"]:
        assert c["passed"] is True
        assert c["measured"] <= c["tolerance"]
    # verify emits no figures
    assert not (tmp_path / "verify.svg").exists()


def test_verify_lemma1_degenerate_family(tmp_path):
    # c = 0 has no radial edges; the path-integral check is skipped
    run(tmp_path, ["verify", "--m", "2", "--level", "lemma1"])
    rep = report(tmp_path, "verify")
    names = [c["name"] for c in rep["outputs"]["checks"]]
    assert "pathIntegralVsClosedForm" not in names
    assert rep["outputs"]["passed"] is True


# ---------------------------------------------------------------------------
# process behavior


def test_exit_code_2_on_bad_arguments(tmp_path):
    assert cli_main(["predict", "--m", "0", "--out", str(tmp_path)]) == 2
    assert cli_main(["nonsense", "--out", str(tmp_path)]) == 2
    assert cli_main(["trace", "--kind", "horizontal",
                     "--out", str(tmp_path)]) == 2


def test_error_report_on_missing_trace_inputs(tmp_path):
    seed_file = tmp_path / "seeds.json"
    seed_file.write_text("[[1.0, 0.0]]")
    # neither --m nor --poly
    run(tmp_path, ["trace", "--seeds", str(seed_file)], expect=1)
    rep = report(tmp_path, "trace")
    validate_report(rep)
    assert rep["outputs"]["error"]["type"] == "ValueError"


def test_reports_are_deterministic(tmp_path):
    a = run(tmp_path / "a", ["tree", "--m", "2", "--b", "1"])
    b = run(tmp_path / "b", ["tree", "--m", "2", "--b", "1"])
    assert (a / "tree.json").read_bytes() == (b / "tree.json").read_bytes()
    assert (a / "tree.svg").read_bytes() == (b / "tree.svg").read_bytes()
    assert (a / "tree.png").exists()

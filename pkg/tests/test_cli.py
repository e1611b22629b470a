"""End-to-end tests of the command-line surface.

Exit-status contract: 0 all pass, 1 any fail verdict (inconclusive only
under --strict), 2 configuration or input errors. Reports must be
deterministic for a fixed config and re-runnable from their own echo.
"""

import json
import re

import numpy as np
import pytest

from capint import cli, verify
from capint.lattice import GridSet, StepFunction


def write_set(tmp_path, name, n, L, cells):
    p = tmp_path / name
    p.write_text(json.dumps({"n": n, "L": L, "cells": cells}), encoding="utf-8")
    return str(p)


def write_fn(tmp_path, name, n, L, values):
    p = tmp_path / name
    p.write_text(json.dumps({"n": n, "L": L, "values": values}), encoding="utf-8")
    return str(p)


def run_cli(capsys, argv):
    code = cli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ---------------------------------------------------------------------------
# content / integrate / maximal / capacity commands


def test_content_empty_set_is_zero(tmp_path, capsys):
    p = write_set(tmp_path, "empty.set", 1, 3, [])
    code, out, _ = run_cli(capsys, ["content", "--set", p, "--beta", "0.7"])
    assert code == 0
    assert float(out) == 0.0


def test_content_two_cell_value(tmp_path, capsys):
    p = write_set(tmp_path, "pair.set", 1, 2, [[0], [3]])
    code, out, _ = run_cli(capsys, ["content", "--set", p, "--beta", "0.8"])
    assert code == 0
    assert float(out) == 2.0 * 4.0**-0.8


def test_content_ball_bounds_ordered(tmp_path, capsys):
    p = write_set(tmp_path, "pair.set", 1, 2, [[0], [3]])
    code, out, _ = run_cli(
        capsys, ["content", "--set", p, "--beta", "0.8", "--evaluator", "ball"]
    )
    assert code == 0
    lo, hi = map(float, out.split())
    assert 0 < lo <= hi


def test_integrate_matches_library(tmp_path, capsys):
    vals = [0.0, 1.0, 3.0, 1.0]
    p = write_fn(tmp_path, "f.fn", 1, 2, vals)
    code, out, _ = run_cli(capsys, ["integrate", "--fn", p, "--beta", "0.5"])
    assert code == 0
    from capint.choquet import DyadicContentEvaluator, choquet_integral

    expect = choquet_integral(StepFunction(1, 2, vals), DyadicContentEvaluator(0.5))
    assert float(out) == expect


def test_maximal_writes_json(tmp_path, capsys):
    p = write_fn(tmp_path, "f.fn", 1, 3, [0, 0, 1, 0, 0, 2, 0, 0])
    outp = tmp_path / "m.json"
    code, _, _ = run_cli(
        capsys,
        ["maximal", "--fn", p, "--operator", "dyadic", "--beta", "0.5", "--out", str(outp)],
    )
    assert code == 0
    obj = json.loads(outp.read_text())
    assert obj["operator"] == "dyadic"
    assert len(obj["lo"]) == len(obj["hi"]) == 8
    assert obj["lo"] == obj["hi"]  # dyadic values are exact
    assert min(obj["lo"]) >= 0


def test_capacity_prints_positive_objective(tmp_path, capsys):
    p = write_set(tmp_path, "cell.set", 1, 2, [[1]])
    code, out, _ = run_cli(capsys, ["capacity", "--set", p, "--alpha", "0.5", "--s", "2"])
    assert code == 0
    assert float(out) > 0


# ---------------------------------------------------------------------------
# input validation -> exit 2 with diagnostics


def test_missing_file_exit_2(tmp_path, capsys):
    code, _, err = run_cli(
        capsys, ["content", "--set", str(tmp_path / "nope.set"), "--beta", "0.5"]
    )
    assert code == 2
    assert "nope.set" in err


def test_malformed_json_reports_position(tmp_path, capsys):
    p = tmp_path / "bad.fn"
    p.write_text('{"n": 1,\n "L": oops}', encoding="utf-8")
    code, _, err = run_cli(capsys, ["integrate", "--fn", str(p), "--beta", "0.5"])
    assert code == 2
    assert re.search(r"bad\.fn:\d+:\d+:", err)


def test_unknown_field_rejected(tmp_path, capsys):
    p = tmp_path / "extra.fn"
    p.write_text(json.dumps({"n": 1, "L": 1, "values": [0, 1], "extra": 5}))
    code, _, err = run_cli(capsys, ["integrate", "--fn", str(p), "--beta", "0.5"])
    assert code == 2
    assert "extra" in err


def test_negative_function_value_rejected(tmp_path, capsys):
    p = write_fn(tmp_path, "neg.fn", 1, 1, [0.5, -0.25])
    code, _, err = run_cli(capsys, ["integrate", "--fn", str(p), "--beta", "0.5"])
    assert code == 2
    assert "values" in err


def test_dimension_mismatch_rejected(tmp_path, capsys):
    p = write_set(tmp_path, "dim.set", 1, 2, [[0, 1]])
    code, _, err = run_cli(capsys, ["content", "--set", p, "--beta", "0.5"])
    assert code == 2
    assert "cells" in err


def test_unknown_spec_rejected_by_parser(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["verify", "--spec", "NOPE", "--seed", "1"])
    assert exc.value.code == 2
    capsys.readouterr()


def test_verify_flag_combinations_rejected(tmp_path, capsys):
    code, _, err = run_cli(capsys, ["verify", "--seed", "1"])
    assert code == 2 and "--spec" in err
    code, _, err = run_cli(capsys, ["verify", "--all", "--spec", "DYWEAK", "--seed", "1"])
    assert code == 2
    code, _, err = run_cli(capsys, ["verify", "--spec", "DYWEAK", "--beta", "0.5"])
    assert code == 2 and "seed" in err


# ---------------------------------------------------------------------------
# serialization round trips


def test_grid_set_roundtrip_bit_exact(tmp_path):
    rng = np.random.default_rng(11)
    for n, L in ((1, 5), (2, 3)):
        cells = 1 << (n * L)
        E = GridSet.from_dense(n, L, (rng.random(cells) < 0.35).astype(float))
        p = tmp_path / f"rt_{n}_{L}.set"
        p.write_text(cli.dump_grid_set(E), encoding="utf-8")
        back = cli.load_grid_set(str(p))
        assert back.n == E.n and back.L == E.L and back.bits == E.bits


def test_step_function_roundtrip(tmp_path):
    f = StepFunction(1, 3, [0.0, 0.25, 1.5, 0.0, 2.0, 0.0, 0.125, 3.0])
    p = tmp_path / "rt.fn"
    p.write_text(cli.dump_step_function(f), encoding="utf-8")
    back = cli.load_step_function(str(p))
    assert back.n == f.n and back.L == f.L
    assert np.array_equal(back.values, f.values)


# ---------------------------------------------------------------------------
# verify / report


def test_verify_explicit_input_constant_one(tmp_path, capsys):
    p = write_fn(tmp_path, "one.fn", 1, 3, [1.0] * 8)
    code, out, _ = run_cli(
        capsys,
        ["verify", "--spec", "LEM23", "--beta", "1.0", "--gamma", "0.5", "--input", p],
    )
    assert code == 0
    report = json.loads(out)
    assert report["summary"] == {"checks": 1, "fails": 0, "inconclusive": 0}
    assert report["checks"][0]["lhs"] == [1.0, 1.0]
    assert report["checks"][0]["verdict"] == "pass"


def test_verify_tiny_constant_fails_exit_1(tmp_path, capsys):
    p = write_fn(tmp_path, "one.fn", 1, 3, [1.0] * 8)
    code, out, _ = run_cli(
        capsys,
        [
            "verify", "--spec", "LEM23", "--beta", "1.0", "--gamma", "0.5",
            "--input", p, "--constant", "1e-6",
        ],
    )
    assert code == 1
    report = json.loads(out)
    assert report["summary"]["fails"] == 1
    assert report["checks"][0]["verdict"] == "fail"


def test_verify_full_ensemble_no_fails(tmp_path, capsys):
    code, out, _ = run_cli(
        capsys,
        [
            "verify", "--spec", "DYWEAK", "--n", "1", "--L", "5",
            "--beta", "0.5", "--seed", "42", "--size", "10000",
        ],
    )
    assert code == 0
    report = json.loads(out)
    assert report["summary"]["checks"] == 10000
    assert report["summary"]["fails"] == 0


def test_report_rerun_identical_minus_timing(tmp_path, capsys):
    args = [
        "verify", "--spec", "DYWEAK", "--n", "1", "--L", "4",
        "--beta", "0.5", "--seed", "7", "--size", "50",
    ]
    code, _, _ = run_cli(capsys, args + ["--out", str(tmp_path / "d1")])
    assert code == 0
    code, _, _ = run_cli(
        capsys,
        ["report", "--config", str(tmp_path / "d1" / "report.json"),
         "--out", str(tmp_path / "d2")],
    )
    assert code == 0
    a = json.loads((tmp_path / "d1" / "report.json").read_text())
    b = json.loads((tmp_path / "d2" / "report.json").read_text())
    assert a["config"]["seed"] == 7
    a.pop("timing"), b.pop("timing")
    assert json.dumps(a, indent=2) == json.dumps(b, indent=2)


def test_plots_written_and_deterministic(tmp_path, capsys):
    args = [
        "verify", "--spec", "DYWEAK", "--n", "1", "--L", "4",
        "--beta", "0.5", "--seed", "7", "--size", "50", "--plots",
    ]
    run_cli(capsys, args + ["--out", str(tmp_path / "p1")])
    run_cli(capsys, args + ["--out", str(tmp_path / "p2")])
    svg1 = (tmp_path / "p1" / "ratio-hist-DYWEAK.svg").read_bytes()
    svg2 = (tmp_path / "p2" / "ratio-hist-DYWEAK.svg").read_bytes()
    assert svg1.startswith(b"<svg")
    assert svg1 == svg2


def test_strict_escalates_inconclusive(tmp_path, capsys):
    # a two-sided planar evaluation plus a constant landed inside the
    # enclosure gives a genuinely undecidable comparison
    rng = np.random.default_rng(5)
    g = StepFunction(2, 2, rng.choice([0.0, 1.0, 2.0], size=16))
    params = {"gamma": 0.5, "beta": 1.0, "evaluator": "ball"}
    c = next(
        float(c)
        for c in np.geomspace(0.05, 50, 400)
        if verify.check("LEM23", g, params, constant=float(c)).verdict
        == verify.INCONCLUSIVE
    )
    p = tmp_path / "g.fn"
    p.write_text(cli.dump_step_function(g), encoding="utf-8")
    args = [
        "verify", "--spec", "LEM23", "--gamma", "0.5", "--beta", "1.0",
        "--evaluator", "ball", "--input", str(p), "--constant", repr(c),
    ]
    code, out, _ = run_cli(capsys, args)
    assert code == 0
    assert json.loads(out)["summary"]["inconclusive"] == 1
    code, _, _ = run_cli(capsys, args + ["--strict"])
    assert code == 1


def test_report_rejects_foreign_config(tmp_path, capsys):
    p = tmp_path / "foreign.json"
    p.write_text(json.dumps({"config": {"command": "content"}}))
    code, _, err = run_cli(capsys, ["report", "--config", str(p)])
    assert code == 2
    assert "verify" in err

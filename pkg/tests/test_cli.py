import json
import subprocess
import sys

import pytest

from frontspeed import __version__
from frontspeed.cli import COMMANDS, main, run, to_csv, to_json

BAD_H = """
p = 2
f = [{ interval = [0, 1], expr = "0" }]
g = [{ interval = [0, 1], expr = "1" }]
h = [{ interval = [0, 1], expr = "x*(2 - x)" }]
d = [{ interval = [0, 1], expr = "1" }]
"""


def _json(capsys, argv):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


def _strip(doc):
    doc = dict(doc)
    doc["run"] = {k: v for k, v in doc["run"].items() if k != "timings"}
    return doc


@pytest.fixture
def path(models_dir):
    return lambda name: str(models_dir / f"{name}.toml")


def test_validate_fisher(capsys, path):
    code, doc, err = _json(capsys, ["validate", path("fisher")])
    assert code == 0 and err == ""
    assert doc["run"]["warnings"] == []
    assert [h["name"] for h in doc["hypotheses"]] == ["bounded", "diffusivity", "reaction",
                                                     "kappa_integrable"]


def test_validate_reports_failed_hypothesis(capsys, tmp_path):
    f = tmp_path / "bad.toml"
    f.write_text(BAD_H)
    code, doc, _ = _json(capsys, ["validate", str(f)])
    assert code == 2
    assert {h["name"]: h["passed"] for h in doc["hypotheses"]}["reaction"] is False


def test_hypothesis_failure_exit_2(capsys, tmp_path):
    f = tmp_path / "bad.toml"
    f.write_text(BAD_H)
    code, doc, err = _json(capsys, ["bounds", str(f)])
    assert code == 2 and doc is None and "reaction" in err


def test_syntax_error_exit_2(capsys, tmp_path):
    f = tmp_path / "bad.toml"
    f.write_text(BAD_H.replace("x*(2 - x)", "x*(1 - x"))
    code, _, err = _json(capsys, ["bounds", str(f)])
    assert code == 2 and "line" in err


@pytest.mark.parametrize("argv", [[], ["speed"], ["nope", "x.toml"], ["certify", "MODEL"],
                                  ["bounds", "MODEL", "--grid", "many"]])
def test_usage_errors(capsys, path, argv):
    argv = [path("fisher") if a == "MODEL" else a for a in argv]
    code, doc, err = _json(capsys, argv)
    assert code == 1 and "usage" in err


def test_missing_file_exit_1(capsys, tmp_path):
    assert main(["bounds", str(tmp_path / "missing.toml")]) == 1


def test_bad_eps_list(capsys, path):
    assert main(["reg-sweep", path("fisher"), "--c", "3", "--eps", "a,b"]) == 1


def test_speed_fisher(capsys, path):
    code, doc, _ = _json(capsys, ["speed", path("fisher"), "--tol", "1e-3"])
    assert code == 0
    assert abs(doc["c_star"] - 2.0) <= 1e-3
    assert {"model_hash", "verdicts", "bounds", "c_star", "bracket_history"} <= set(doc)
    assert set(doc["bounds"]) >= {"lower", "upper", "simple_lower", "simple_upper"}


def test_refused_exit_4_with_partial_output(capsys, path):
    code, doc, err = _json(capsys, ["speed", path("sign_changing_g")])
    assert code == 4 and "half-line" in err
    assert doc["c_star"] is None and "lower" in doc["bounds"]


def test_numerical_failure_exit_3(capsys, path):
    # no admissible solution below c*, so no profile
    code, _, err = _json(capsys, ["profile", path("fisher"), "--c", "1"])
    assert code == 3 and "Inadmissible" in err


def test_certify_and_solve(capsys, path):
    code, doc, _ = _json(capsys, ["certify", path("fisher"), "--c", "3"])
    assert code == 0 and doc["verdicts"][0]["verdict"] == "Exists"
    code, doc, _ = _json(capsys, ["solve", path("fisher"), "--c", "3"])
    assert code == 0 and doc["verdicts"][0]["verdict"] == "Admissible"


def test_indeterminate_is_warned(capsys, path):
    code, doc, err = _json(capsys, ["certify", path("fisher"), "--c", "2"])
    assert code == 0 and "Indeterminate" in err
    assert doc["run"]["warnings"]
    code, _, err = _json(capsys, ["certify", path("fisher"), "--c", "2", "--quiet"])
    assert code == 0 and err == ""


def test_out_json_and_csv(capsys, path, tmp_path):
    out = tmp_path / "res.json"
    code, rep = run(["solve", path("fisher"), "--c", "3", "--out", str(out)])
    assert code == 0
    csv = tmp_path / "res.csv"
    assert set(rep.outputs) == {str(out), str(csv)}
    for p in rep.outputs:
        assert (tmp_path / p).stat().st_size > 0
    header = csv.read_text().splitlines()[0]
    assert header == "xi,y,ydot_left,ydot_right,residual"
    assert json.loads(out.read_text())["verdicts"][0]["verdict"] == "Admissible"


def test_out_csv_suffix(path, tmp_path):
    code, rep = run(["profile", path("degenerate_fisher"), "--c", "0.7071067811865476",
                     "--grid", "64", "--out", str(tmp_path / "prof.csv")])
    assert code == 0
    lines = (tmp_path / "prof.csv").read_text().splitlines()
    assert lines[0] == "z,v,phi_v" and len(lines) == 65
    meta = json.loads((tmp_path / "prof.json").read_text())
    assert meta["sharp_at_zero"] is True and meta["a"] == "-inf"
    assert {"a", "b", "sharp_at_zero", "sharp_at_one", "kinks", "residual"} <= set(meta)


def test_reg_sweep_csv(path, tmp_path):
    code, rep = run(["reg-sweep", path("fisher_step_convection"), "--c", "3",
                     "--eps", "0.05,0.025,0.0125", "--out", str(tmp_path / "sw.json")])
    assert code == 0
    rows = (tmp_path / "sw.csv").read_text().splitlines()
    assert rows[0] == "quantity,eps,value,gap"
    assert len(rows) == 1 + 2 * 3


@pytest.mark.parametrize("argv", [["speed", "{m}", "--tol", "1e-2"], ["solve", "{m}", "--c", "4"],
                                  ["bounds", "{m}"]])
def test_deterministic(capsys, path, argv):
    argv = [a.format(m=path("three_jumps")) for a in argv]
    _, a, _ = _json(capsys, argv)
    _, b, _ = _json(capsys, argv)
    assert _strip(a) == _strip(b)


@pytest.mark.parametrize("name", ["fisher", "three_jumps"])
def test_schema_independent_of_jumps(capsys, path, name):
    keys = {}
    for cmd in (["bounds"], ["certify", "--c", "5"], ["solve", "--c", "5"]):
        code, doc, _ = _json(capsys, [cmd[0], path(name)] + cmd[1:])
        assert code == 0
        keys[cmd[0]] = set(doc)
    assert keys["bounds"] >= {"model_hash", "bounds"}


def test_schema_same_for_continuous_and_jumps(capsys, path):
    docs = {}
    for name in ("fisher", "three_jumps"):
        docs[name] = _json(capsys, ["solve", path(name), "--c", "5"])[1]
    assert set(docs["fisher"]) == set(docs["three_jumps"])
    assert set(docs["fisher"]["verdicts"][0]) == set(docs["three_jumps"]["verdicts"][0])


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_json_number_format():
    text = to_json({"a": 0.1, "b": float("inf"), "c": float("nan"), "d": 2.0, "e": [1, True]})
    doc = json.loads(text)
    assert doc == {"a": 0.1, "b": "inf", "c": "nan", "d": 2.0, "e": [1, True]}
    assert "0.10000000000000001" in text
    assert to_csv(("x",), [(1.0 / 3.0,)]) == "x\n0.333333333333\n"


def test_console_entry_point(models_dir):
    out = subprocess.run([sys.executable, "-m", "frontspeed", "bounds",
                          str(models_dir / "fisher.toml")], capture_output=True, text=True)
    assert out.returncode == 0
    assert json.loads(out.stdout)["bounds"]["lower"] == pytest.approx(2.0)


def test_commands():
    assert set(COMMANDS) == {"validate", "bounds", "certify", "solve", "speed", "profile",
                             "reg-sweep"}

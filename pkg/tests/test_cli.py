import csv
import io
import json

import pytest

from dvperc import cli
from dvperc.exact import t2_connection
from dvperc.prob import make_prob_vector


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.run(argv, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def doc(argv):
    code, out, err = run(argv)
    assert code == 0, err
    return json.loads(out)


def strip_time(text):
    d = json.loads(text)
    d.pop("timestamp")
    return d


def test_t2_chi_example():
    d = doc(["exact", "t2-chi", "--p", "0,1,0"])
    assert d["chi"] == 5.0 and d["chi_tilde"] == 1.5
    assert d["inputs"] == {"p": "0,1,0"} and "timestamp" in d


def test_tree_threshold_example():
    assert doc(["exact", "tree-threshold", "--d", "3"])["p_c"] == pytest.approx(0.1043560762610)
    s = doc(["exact", "tree-threshold", "--d", "6", "--k", "3", "--mode", "strong"])
    assert s["p_c_exact"] == "0" and s["regime"] == "critical_at_zero"


def test_tree_matrix_command():
    d = doc(["exact", "tree-matrix", "--d", "4", "--k", "2", "--p-value", "0.5", "--mode", "strong"])
    assert d["spectral_radius"] == pytest.approx(1.0)


def test_mc_reach_example():
    d = doc(["mc", "reach", "--graph", "line", "--radius", "16", "--shell", "4", "--p", "0,1,0",
             "--trials", "100000", "--seed", "7"])
    # the sphere at distance 4 on the line is {-4, +4}: 2 P(0~4) - P(-4~4)
    pv = make_prob_vector([0, 1, 0])
    want = 2 * t2_connection(pv, 4) - t2_connection(pv, 8)
    assert abs(d["estimate"] - want) <= 3 * d["std_error"]
    assert d["seed"] == 7 and d["inputs"]["trials"] == 100000


def test_exit_codes():
    code, out, err = run(["exact", "t2-chi", "--p", "0,0,1"])
    assert code == 3 and err.startswith("error[p2_is_one]") and out == ""
    code, _, err = run(["exact", "t2-chi", "--p", "0.5,0.6"])
    assert code == 3 and "sum_not_one" in err
    code, _, err = run(["mc", "chi", "--graph", "square", "--radius", "3", "--p", "0,1,0"])
    assert code == 2 and "degree_mismatch" in err
    code, _, _ = run(["exact", "bogus"])
    assert code == 2
    code, _, err = run(["mc", "reach", "--graph", "moon", "--radius", "3", "--shell", "1", "--p", "1,0"])
    assert code == 2 and "unknown_graph" in err
    code, _, err = run(["exact", "t2-connect", "--p", "0,1,0", "--n", "1:x:1"])
    assert code == 2 and err.startswith("error[usage]")


def test_seed_from_environment(monkeypatch):
    base = ["mc", "chi", "--graph", "line", "--radius", "10", "--p", "1/3,1/3,1/3", "--trials", "500"]
    monkeypatch.setenv(cli.SEED_ENV, "42")
    # the parser reads the default when it is built
    a = doc(base)
    b = doc(base + ["--seed", "42"])
    assert a["estimate"] == b["estimate"] and a["seed"] == 42


def test_threads_do_not_change_output():
    base = ["mc", "kappa", "--graph", "square", "--radius", "10", "--p", "1/3,1/3,1/3,0,0",
            "--trials", "30000", "--seed", "3"]
    _, one, _ = run(base)
    _, four, _ = run(base + ["--threads", "4"])
    assert strip_time(one) == strip_time(four)
    assert json.dumps(strip_time(one)) == json.dumps(strip_time(four))


def test_csv_and_json_agree():
    base = ["mc", "decay", "--graph", "line", "--radius", "10", "--p", "0,1,0", "--shells", "1..6",
            "--trials", "5000", "--seed", "1"]
    j = doc(base)
    _, text, _ = run(base + ["--csv"])
    rows = list(csv.DictReader(io.StringIO(text)))
    assert [int(r["n"]) for r in rows] == [r["n"] for r in j["rows"]]
    for r, jr in zip(rows, j["rows"]):
        assert float(r["estimate"]) == jr["estimate"]
        assert float(r["std_error"]) == jr["std_error"]
        assert float(r["fit_slope"]) == j["slope"]


def test_csv_scalar_record_agrees():
    base = ["exact", "t2-chi", "--p", "1/3,1/3,1/3"]
    j = doc(base)
    _, text, _ = run(base + ["--csv"])
    (row,) = list(csv.DictReader(io.StringIO(text)))
    assert float(row["chi"]) == j["chi"] and float(row["chi_tilde"]) == j["chi_tilde"]


def test_sweep_inclusive_grid():
    d = doc(["exact", "t2-connect", "--p", "0,1,0", "--n", "0:4:1"])
    assert d["swept"] == ["n"]
    assert [r["result"]["probability"] for r in d["records"]] == [1.0, 0.75, 0.5, 0.3125, 0.1875]
    d = doc(["exact", "tree-matrix", "--d", "3", "--p-value", "0:1:0.25"])
    assert [r["inputs"]["p_value"] for r in d["records"]] == [0.0, 0.25, 0.5, 0.75, 1.0]


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# reach study\ngraph=line\nradius=12\np=0,1,0\nshell=3\ntrials=2000\nseed=5\n")
    from_file = doc(["mc", "reach", "--config", str(cfg)])
    flags = doc(["mc", "reach", "--graph", "line", "--radius", "12", "--p", "0,1,0", "--shell", "3",
                 "--trials", "2000", "--seed", "5"])
    assert from_file["estimate"] == flags["estimate"]
    overridden = doc(["mc", "reach", "--config", str(cfg), "--seed", "6"])
    assert overridden["inputs"]["seed"] == 6


def test_config_round_trip(tmp_path):
    argv = ["mc", "sizes", "--graph", "square", "--radius", "5", "--p", "0.4,0.3,0.2,0.1,0", "--m-max", "4",
            "--trials", "1000", "--seed", "9", "--mode", "strong"]
    first = doc(argv)
    cfg = tmp_path / "echo.cfg"
    cfg.write_text(cli.config_text(first["inputs"]))
    second = doc(["mc", "sizes", "--config", str(cfg)])
    first.pop("timestamp"), second.pop("timestamp")
    assert first == second


def test_check_commands():
    sub = doc(["check", "sub", "--graph", "square", "--p", "0.9,0.1,0,0,0"])
    assert sub["conclusion"] == "theta_zero"
    sup = doc(["check", "super", "--graph", "triangular", "--p", "0.0001,0,0,0.9999,0,0,0", "--mode", "strong"])
    assert sup["conclusion"] == "theta_positive"
    cor = doc(["check", "corollary", "--graph", "triangular", "--k", "3", "--mode", "strong"])
    assert cor["holds_with_degree_bound"] is False and cor["holds_with_catalog_lambda"] is True
    row = doc(["check", "corollary", "--d", "3", "--d-star", "9", "--k", "2"])
    assert row["holds_with_degree_bound"] is True


def test_events_commands():
    fkg = doc(["events", "fkg", "--graph", "line", "--radius", "1", "--p", "0,0.7,0.3",
               "--a", "edge:-1;0", "--b", "edge:0;1"])
    assert fkg["gap"] == pytest.approx(0.35**4, abs=1e-12)
    box = doc(["events", "box", "--graph", "line", "--radius", "1", "--p", "0,1,0",
               "--a", "choose:0;1", "--b", "choose:0;1"])
    assert box["box"] == 0.0 and box["product"] == 0.25
    r = doc(["events", "russo", "--graph", "line", "--radius", "1", "--p", "0,0.7,0.3",
             "--event", "edge:0;1", "--direction", "0,-1,1", "--k", "1"])
    assert r["pair_derivative"] == pytest.approx(0.35) and r["formula_value"] == pytest.approx(0.35)
    sq = doc(["events", "fkg", "--graph", "square", "--radius", "1", "--p", "0,0,1,0,0",
              "--a", "edge:0,0;1,0:strong & !choose:0,0;0,1", "--b", "all"])
    assert sq["gap"] == pytest.approx(0.0, abs=1e-15)


def test_event_language_errors():
    code, _, err = run(["events", "box", "--graph", "line", "--radius", "1", "--p", "0,1,0",
                        "--a", "edge:0;5", "--b", "all"])
    assert code == 2
    code, _, err = run(["events", "box", "--graph", "line", "--radius", "1", "--p", "0,1,0",
                        "--a", "teleport:0;1", "--b", "all"])
    assert code == 2 and "unknown event term" in err


def test_tree_survival_and_saw():
    d = doc(["mc", "tree-survival", "--d", "4", "--k", "2", "--mode", "strong", "--p-value", "1",
             "--generations", "10", "--trials", "500", "--seed", "2"])
    assert d["estimate"] > 0.5 and len(d["curve"]) == 11
    s = doc(["saw", "count", "--graph", "hexagonal", "--n", "4"])
    assert [r["count"] for r in s["rows"]] == [3, 6, 12, 24]
    assert s["lambda_catalog"] == pytest.approx(1.8477590650225735)

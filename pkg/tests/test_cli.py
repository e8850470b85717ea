import json
import os

import mpmath as mp
import numpy as np
import pytest

from ladderexit.cli import main
from ladderexit.increments import build_law
from ladderexit.renewal import RenewalTable, build_tables


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(path):
    return np.genfromtxt(path, delimiter=",", names=True)


def test_law_srw(tmp_path, capsys):
    code, out, _ = run(capsys, "law", "--family", "srw", "--out", tmp_path)
    assert code == 0 and "mass=1.0" in out
    for f in ("functionals.csv", "law.json", "summary.json", "manifest.json"):
        assert (tmp_path / f).exists()
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["law_hash"] == build_law("srw").law_hash
    assert {"python", "numpy", "scipy", "numba", "backend"} <= set(man["versions"])


def test_law_symmetric_pareto(tmp_path, capsys):
    code, _, _ = run(capsys, "law", "--family", "pareto", "--alpha", 1.5, "--p", 0.5,
                     "--out", tmp_path)
    assert code == 0
    d = read_csv(tmp_path / "functionals.csv")
    assert np.all(np.abs(d["A"]) < 1e-15)


def test_law_one_sided_pareto(tmp_path, capsys):
    code, _, _ = run(capsys, "law", "--family", "pareto", "--alpha", 0.6, "--p", 1,
                     "--centering", "none", "--out", tmp_path)
    assert code == 0
    d = read_csv(tmp_path / "functionals.csv")
    i = int(np.flatnonzero(d["x"] == 1000)[0])
    spec = json.loads((tmp_path / "law.json").read_text())
    mp.mp.dps = 30
    H = spec["tail_mass"] * spec["p"] * mp.zeta(1.6, 1001) / mp.zeta(1.6)
    assert d["H"][i] == pytest.approx(float(H), rel=1e-12)
    assert np.all(np.isnan(d["eta_plus"]))


def test_bad_spec_names_field(tmp_path, capsys):
    code, _, err = run(capsys, "law", "--family", "pareto", "--alpha", -1, "--out", tmp_path)
    assert code == 2 and "alpha" in err


def test_exit_from_law_file(tmp_path, capsys):
    run(capsys, "law", "--family", "srw", "--out", tmp_path / "law")
    code, out, _ = run(capsys, "exit", "--law", tmp_path / "law" / "law.json", "--R", 100,
                       "--out", tmp_path / "exit")
    assert code == 0 and out.startswith("h(0)=")
    d = read_csv(tmp_path / "exit" / "exit.csv")
    np.testing.assert_allclose(d["ratio"], 101 / 102, rtol=1e-13)
    assert d["ratio"][0] == pytest.approx(0.9901, abs=1e-4)
    assert np.all(d["bound_margin"] >= -1e-12)
    summ = json.loads((tmp_path / "exit" / "exit.json").read_text())
    assert summ["bound_violations"] == 0


def test_rogozin(tmp_path, capsys):
    code, out, _ = run(capsys, "rogozin", "--alpha", 2, "--rho", 0.5, "--xi", 0.3,
                       "--out", tmp_path)
    assert code == 0 and float(out) == pytest.approx(0.3, abs=1e-14)
    code, _, _ = run(capsys, "rogozin", "--alpha", 1.5, "--rho", 0.5, "--xi", 0.5, "--eta", 1,
                     "--c", 1, "--out", tmp_path)
    res = json.loads((tmp_path / "rogozin.json").read_text())
    assert res["Q"] == 0.5 and res["kder_residual"] <= 1e-8 and res["overshoot"] > 0


def test_classify_c4(tmp_path, capsys):
    code, out, _ = run(capsys, "classify", "--law", "c4", "--n", 4000, "--steps", 500,
                       "--out", tmp_path)
    assert code == 0
    assert out.strip() == "case I; conditions: C4"
    rep = json.loads((tmp_path / "classify.json").read_text())
    assert rep["case"] == "I" and rep["flags"]["C4"]["verdict"]
    assert rep["rho"]["source"].startswith("monte_carlo")


def test_ladder_renewal_overshoot_mc(tmp_path, capsys):
    assert run(capsys, "ladder", "--law", "case2", "--horizon", 200, "--out", tmp_path)[0] == 0
    assert (tmp_path / "ladder.csv").exists()
    assert run(capsys, "renewal", "--law", "case2", "--horizon", 200, "--gnuplot",
               "--out", tmp_path)[0] == 0
    assert (tmp_path / "renewal_plot.dat").exists()
    assert run(capsys, "overshoot", "--law", "case2", "--R", 100, "--x", 50, "--m-max", 200,
               "--out", tmp_path)[0] == 0
    d = read_csv(tmp_path / "overshoot.csv")
    assert np.all(np.diff(d["exceed_conditional"]) <= 1e-15)
    code, out, _ = run(capsys, "mc", "--law", "srw", "--R", 9, "--x", 4, "--n", 20000,
                       "--seed", 3, "--out", tmp_path)
    assert code == 0 and out.startswith("exit:")


def test_manifest_rerun_is_byte_identical(tmp_path, capsys):
    first = tmp_path / "a"
    run(capsys, "exit", "--law", "c4", "--R", 200, "--gnuplot", "--out", first)
    run(capsys, "mc", "--law", "case2", "--R", 100, "--x", 50, "--n", 5000, "--seed", 9,
        "--out", tmp_path / "m")
    saved = {p: (first / p).read_bytes() for p in ("exit.csv", "exit_plot.csv", "exit_plot.dat")}
    mc_saved = (tmp_path / "m" / "mc.csv").read_bytes()
    for f in (first / "exit.csv", tmp_path / "m" / "mc.csv"):
        os.remove(f)
    assert main(["--from-manifest", str(first / "manifest.json")]) == 0
    assert main(["--from-manifest", str(tmp_path / "m" / "manifest.json")]) == 0
    for p, b in saved.items():
        assert (first / p).read_bytes() == b
    assert (tmp_path / "m" / "mc.csv").read_bytes() == mc_saved


def test_cache_matches_cold(tmp_path, capsys):
    args = ["renewal", "--law", "c4", "--horizon", 300]
    run(capsys, *args, "--out", tmp_path / "cold")
    run(capsys, *args, "--cache", tmp_path / "c", "--out", tmp_path / "warm1")
    run(capsys, *args, "--cache", tmp_path / "c", "--out", tmp_path / "warm2")
    cold = (tmp_path / "cold" / "renewal.csv").read_bytes()
    assert (tmp_path / "warm1" / "renewal.csv").read_bytes() == cold
    assert (tmp_path / "warm2" / "renewal.csv").read_bytes() == cold


def test_config_errors(tmp_path, capsys):
    assert run(capsys, "exit", "--law", "srw", "--R", 10, "--x", 20, "--out", tmp_path)[0] == 2
    assert run(capsys, "exit", "--law", "srw", "--out", tmp_path)[0] == 2
    assert run(capsys, "exit", "--law", "nope", "--R", 5, "--out", tmp_path)[0] == 2
    assert run(capsys, "rogozin", "--rho", 0.5, "--out", tmp_path)[0] == 2


def test_capability_error_code(tmp_path, capsys):
    code, _, err = run(capsys, "rogozin", "--alpha", 1, "--rho", 1, "--xi", 0.5,
                       "--out", tmp_path)
    assert code == 3 and "alpha = 1" in err


def test_verify_rogozin_suite(tmp_path, capsys):
    code, out, _ = run(capsys, "verify", "--suite", "rogozin", "--out", tmp_path)
    assert code == 0
    rep = json.loads((tmp_path / "verify.json").read_text())
    c9 = [c for c in rep["criteria"] if c["id"] == 9][0]
    assert c9["passed"] and c9["detail"]["kder_max_residual"] <= 1e-8


def test_verify_fault_injection(tmp_path, capsys):
    cache = tmp_path / "cache"
    cache.mkdir()
    law = build_law("srw")
    good = build_tables(law, 2000)
    bad = RenewalTable(good.u_a, good.v_d * 1.001, good.u_d, good.v0, good.law_hash,
                       good.defects)
    bad.save(cache / f"tables-{law.law_hash}-2000.npz")
    code, out, err = run(capsys, "verify", "--suite", "exact", "--cache", cache,
                         "--out", tmp_path / "o")
    assert code == 4
    assert "[FAIL]  3" in out and "[3]" in err


@pytest.mark.slow
def test_verify_quick_suite(tmp_path, capsys):
    code, out, _ = run(capsys, "verify", "--scale", "quick", "--out", tmp_path)
    assert code == 0, out
    assert out.count("[PASS]") == 13

import dataclasses
import json

import pytest

from ehkit import probes
from ehkit.cli import EXIT_INCONSISTENT, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main


def run_json(capsys, argv):
    code = main(argv + ["--json", "--no-timestamp"])
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_classical_dyadic(tmp_path, capsys):
    code, rep = run_json(capsys, ["classical", "--map", "dyadic", "--cells", "256", "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert rep["verdict"]["verdict"] == "exact (r = 1)"
    decay = (tmp_path / "remainder_decay.csv").read_text().splitlines()
    assert decay[0] == "n,max_remainder_l1" and len(decay) > 2
    assert (tmp_path / "report.json").exists()
    assert (tmp_path / "exact_probe.csv").read_text().startswith("n,value,target")


def test_classical_cyclic_shift(capsys):
    code, rep = run_json(capsys, ["classical", "--map", "cyclic_shift", "--r", "3", "--cells", "3"])
    assert code == EXIT_OK
    assert rep["verdict"]["verdict"] == "ergodic, not mixing (r = 3, cyclic α)"


def test_two_level_defaults(tmp_path, capsys):
    code, rep = run_json(capsys, ["two-level", "--out", str(tmp_path)])
    assert code == EXIT_OK
    v = rep["verdict"]
    assert v["verdict"] == "ergodic"
    assert v["cesaro"]["table"]
    assert any("disagrees" in n for n in v["notes"])
    assert (tmp_path / "cesaro.csv").read_text().startswith("M,mean,offdiag_sigma_abs,bound")


@pytest.mark.parametrize(
    "system,verdict",
    [("two-level", "ergodic"), ("quasi-continuous-gaussian", "mixing"), ("mixed-spectrum", "ergodic")],
)
def test_quantum_catalog_systems(capsys, system, verdict):
    code, rep = run_json(capsys, ["quantum", "--system", system])
    assert code == EXIT_OK
    assert rep["verdict"]["verdict"] == verdict


def test_quantum_weak_limit_fields(capsys):
    code, rep = run_json(capsys, ["quantum"])
    assert code == EXIT_OK
    assert rep["verdict"]["weak_limit"]["max_deviation"] <= 1e-3
    assert rep["verdict"]["decay_horizon"] > 0


def test_wigner_trace(tmp_path, capsys):
    code, rep = run_json(capsys, ["wigner", "--check", "trace", "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert rep["verdict"]["verdict"] == "pass"
    assert (tmp_path / "wigner_state.csv").read_text().startswith("q,p,value")


def test_cross_validate_consistent(tmp_path, capsys):
    code, rep = run_json(capsys, ["cross-validate", "--systems", "dyadic", "cyclic_shift", "identity", "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert rep["verdict"]["verdict"] == "consistent"
    assert (tmp_path / "cross_validation.csv").exists()


def test_cross_validate_inconsistent_exit(monkeypatch, capsys):
    real = probes.cross_validate

    def broken(*a, **kw):
        return dataclasses.replace(real(*a, **kw), consistent=False, violations=("forced disagreement",))

    monkeypatch.setattr(probes, "cross_validate", broken)
    code = main(["cross-validate", "--systems", "identity", "--no-timestamp"])
    assert code == EXIT_INCONSISTENT


def test_catalog_json(capsys):
    code = main(["catalog", "--json"])
    rows = json.loads(capsys.readouterr().out)
    assert code == EXIT_OK
    names = {r["name"] for r in rows}
    assert {"rotation", "dyadic", "tent", "baker", "cyclic_shift", "identity",
            "two-level", "quasi-continuous-gaussian", "mixed-spectrum"} <= names
    assert all(r["expected"] for r in rows)


def test_determinism(tmp_path, capsys):
    argv = ["classical", "--map", "tent", "--cells", "64", "--samples", "200", "--seed", "5", "--out", str(tmp_path), "--no-timestamp"]
    assert main(argv) == EXIT_OK
    first = (tmp_path / "report.json").read_bytes()
    assert main(argv) == EXIT_OK
    assert (tmp_path / "report.json").read_bytes() == first
    capsys.readouterr()


def test_timestamp_present_by_default(tmp_path, capsys):
    main(["two-level", "--M", "100", "--horizon", "100", "--out", str(tmp_path)])
    capsys.readouterr()
    assert "timestamp" in json.loads((tmp_path / "report.json").read_text())["provenance"]


def test_precedence(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"mode": "two-level", "M": 200, "horizon": 100}))
    code, rep = run_json(capsys, ["two-level", "--config", str(cfg), "--M", "300"])
    assert code == EXIT_OK
    assert rep["verdict"]["cesaro"]["M"] == 300
    code, rep = run_json(capsys, ["two-level", "--config", str(cfg)])
    assert rep["verdict"]["cesaro"]["M"] == 200


@pytest.mark.parametrize(
    "argv",
    [
        ["classical", "--map", "nope"],
        ["bogus"],
        ["classical", "--theta", "1/4"],
        ["wigner", "--check", "nope"],
    ],
)
def test_usage_errors(argv, capsys):
    assert main(argv) == EXIT_USAGE
    capsys.readouterr()


def test_invalid_state_is_usage_error(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"rho": [0.5, 0.5, [0.9, 0.0]]}))
    assert main(["two-level", "--config", str(cfg)]) == EXIT_USAGE
    capsys.readouterr()


def test_unknown_config_field(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"colour": "blue"}))
    assert main(["two-level", "--config", str(cfg)]) == EXIT_USAGE
    cfg.write_text("{not json")
    assert main(["two-level", "--config", str(cfg)]) == EXIT_USAGE
    capsys.readouterr()


def test_numerical_failure_exit(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"weak_tol": 1e-30}))
    assert main(["quantum", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_NUMERIC
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["status"] == "numerical-failure" and rep["error"]["class"] == "NoWeakLimitError"
    capsys.readouterr()


def test_threads_env(monkeypatch, capsys):
    monkeypatch.setenv("EHKIT_THREADS", "1")
    assert main(["two-level", "--M", "100", "--horizon", "100"]) == EXIT_OK
    monkeypatch.setenv("EHKIT_THREADS", "zero")
    assert main(["two-level", "--M", "100", "--horizon", "100"]) == EXIT_USAGE
    capsys.readouterr()


def test_module_entry_point():
    import subprocess
    import sys

    r = subprocess.run([sys.executable, "-m", "ehkit", "catalog"], capture_output=True, text=True)
    assert r.returncode == 0 and "dyadic" in r.stdout

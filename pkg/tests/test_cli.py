"""Exit codes, option precedence, and deterministic CLI outputs."""

import json
import subprocess
import sys

import pytest

from regen_bernstein.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def run_json(capsys, *argv):
    code, out, err = run_cli(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


# ---------------------------------------------------------------------------
# exit codes
# ---------------------------------------------------------------------------


def test_bounds_known_value(capsys):
    payload = run_json(capsys, "bounds", "classical_bernstein",
                       "n=100", "sigma2=1", "M=1", "t=10")
    assert payload["value"] == pytest.approx(0.616392731327227, rel=1e-12)
    assert payload["args"]["n"] == 100


def test_unknown_formula_exits_1(capsys):
    code, _, err = run_cli(capsys, "bounds", "not_a_formula", "t=1")
    assert code == 1
    assert "unknown formula" in err


def test_usage_error_exits_1(capsys):
    code, _, _ = run_cli(capsys, "simulate", "--no-such-flag")
    assert code == 1


def test_no_command_exits_1(capsys):
    code, _, err = run_cli(capsys)
    assert code == 1
    assert "usage" in err


def test_validation_error_exits_1(capsys):
    code, _, err = run_cli(capsys, "simulate", "--chain", "singular-mod1",
                           "--n", "1")
    assert code == 1
    assert "n < m" in err


def test_guard_error_exits_2(capsys):
    # a nearly regeneration-free split run trips the block guard
    code, _, err = run_cli(capsys, "oracle", "--chain", "two-state",
                           "--n", "300", "--t-grid", "1.0")
    assert code == 2
    assert "guard violation" in err


def test_help_exits_0(capsys):
    code, out, _ = run_cli(capsys, "--help")
    assert code == 0
    captured = out
    for name in ("simulate", "bounds", "variance", "verify", "oracle"):
        assert name in captured


# ---------------------------------------------------------------------------
# seed precedence and config overlay
# ---------------------------------------------------------------------------


def test_seed_default_zero(capsys, monkeypatch):
    monkeypatch.delenv("REGEN_BERNSTEIN_SEED", raising=False)
    payload = run_json(capsys, "simulate", "--chain", "two-state", "--n", "32")
    assert payload["seed"] == 0


def test_seed_from_env(capsys, monkeypatch):
    monkeypatch.setenv("REGEN_BERNSTEIN_SEED", "99")
    payload = run_json(capsys, "simulate", "--chain", "two-state", "--n", "32")
    assert payload["seed"] == 99
    assert "99" in payload["rng"]


def test_seed_config_beats_env(capsys, monkeypatch, tmp_path):
    monkeypatch.setenv("REGEN_BERNSTEIN_SEED", "99")
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 7, "chain": "two-state"}))
    payload = run_json(capsys, "simulate", "--config", str(cfg), "--n", "32")
    assert payload["seed"] == 7


def test_seed_flag_beats_config(capsys, monkeypatch, tmp_path):
    monkeypatch.setenv("REGEN_BERNSTEIN_SEED", "99")
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 7, "chain": "two-state"}))
    payload = run_json(capsys, "simulate", "--config", str(cfg),
                       "--seed", "3", "--n", "32")
    assert payload["seed"] == 3


def test_bad_env_seed_exits_1(capsys, monkeypatch):
    monkeypatch.setenv("REGEN_BERNSTEIN_SEED", "not-a-number")
    code, _, err = run_cli(capsys, "simulate", "--chain", "two-state",
                           "--n", "32")
    assert code == 1
    assert "REGEN_BERNSTEIN_SEED" in err


def test_config_overlay_flags_win(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(
        {"chain": {"name": "two-state", "a": 0.25, "b": 0.25}, "n": 16}))
    payload = run_json(capsys, "simulate", "--config", str(cfg))
    assert "a=0.25" in payload["chain"]
    payload = run_json(capsys, "simulate", "--config", str(cfg),
                       "--a", "0.5", "--b", "0.5")
    assert "a=0.5" in payload["chain"]
    assert payload["n"] == 16


def test_bounds_args_from_config(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(
        {"args": {"n": 100, "sigma2": 1, "M": 1, "t": 10}}))
    payload = run_json(capsys, "bounds", "classical_bernstein",
                       "--config", str(cfg))
    assert payload["value"] == pytest.approx(0.616392731327227, rel=1e-12)
    override = run_json(capsys, "bounds", "classical_bernstein", "t=0",
                        "--config", str(cfg))
    assert override["value"] == 1.0


def test_config_must_be_object(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("[1, 2, 3]")
    code, _, err = run_cli(capsys, "simulate", "--config", str(cfg),
                           "--chain", "two-state", "--n", "8")
    assert code == 1 and "JSON object" in err


def test_missing_chain_message(capsys):
    code, _, err = run_cli(capsys, "variance")
    assert code == 1
    assert "no chain given" in err


# ---------------------------------------------------------------------------
# bounds adapters
# ---------------------------------------------------------------------------


BUNDLE = ["a=1", "b=1", "c=1", "d=2", "alpha=1", "sigma2_mrv=0.25",
          "delta=0.5", "pi_C=0.5", "m=1"]


def test_bounds_thm_bi_bundle(capsys):
    payload = run_json(capsys, "bounds", "thm_bi", *BUNDLE, "n=64", "t=8")
    assert 0.0 < payload["value"] <= 1.0
    assert isinstance(payload["flags"], list)


def test_bounds_thm_bi2_accepts_p(capsys):
    lo = run_json(capsys, "bounds", "thm_bi2", *BUNDLE, "n=64", "t=8",
                  "p=0.5")
    hi = run_json(capsys, "bounds", "thm_bi2", *BUNDLE, "n=64", "t=8",
                  "p=1.0")
    assert lo["raw"] != hi["raw"]


def test_bounds_bundle_missing_params(capsys):
    code, _, err = run_cli(capsys, "bounds", "thm_bi", "n=64", "t=8")
    assert code == 1
    assert "missing parameters" in err


def test_bounds_bundle_rejects_stray_keys(capsys):
    code, _, err = run_cli(capsys, "bounds", "thm_bi", *BUNDLE, "n=64",
                           "t=8", "zz=1")
    assert code == 1
    assert "unknown arguments" in err


def test_bounds_bad_kv_pair(capsys):
    code, _, err = run_cli(capsys, "bounds", "classical_bernstein", "n100")
    assert code == 1
    assert "key=value" in err


def test_bounds_kp_constant_value(capsys):
    payload = run_json(capsys, "bounds", "kp_constant", "p=0.6666666666666666")
    assert payload["value"] == pytest.approx(488.0 / 11.0, rel=1e-12)


def test_bounds_csv_format(capsys):
    code, out, _ = run_cli(capsys, "bounds", "classical_bernstein",
                           "n=100", "sigma2=1", "M=1", "t=10",
                           "--format", "csv")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "formula,value"
    assert lines[1].startswith("classical_bernstein,0.6163927313")


# ---------------------------------------------------------------------------
# variance methods
# ---------------------------------------------------------------------------


def test_variance_exact(capsys):
    payload = run_json(capsys, "variance", "--chain", "two-state",
                       "--method", "exact")
    assert payload["value"] == pytest.approx(0.25, rel=1e-12)


def test_variance_cov_series(capsys):
    payload = run_json(capsys, "variance", "--chain", "two-state",
                       "--method", "cov-series")
    assert payload["value"] == pytest.approx(0.25, rel=1e-9)


def test_variance_regenerative(capsys):
    payload = run_json(capsys, "variance", "--chain", "two-state",
                       "--method", "regenerative", "--n-regen", "4000",
                       "--seed", "5")
    est = payload["estimate"]
    assert abs(est["value"] - 0.25) <= 4.0 * est["se"]
    exc = payload["excursion_variance"]
    assert abs(exc["value"] - 0.5) <= 4.0 * exc["se"]


def test_variance_batch(capsys):
    payload = run_json(capsys, "variance", "--chain", "two-state",
                       "--method", "batch", "--n", "200000", "--seed", "5")
    est = payload["estimate"]
    assert abs(est["value"] - 0.25) <= 0.1
    assert payload["batch_length"] == 224


def test_variance_unknown_method(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"chain": "two-state", "method": "magic"}))
    code, _, err = run_cli(capsys, "variance", "--config", str(cfg))
    assert code == 1
    assert "unknown variance method" in err


def test_variance_csv_format(capsys):
    code, out, _ = run_cli(capsys, "variance", "--chain", "two-state",
                           "--method", "exact", "--format", "csv")
    assert code == 0
    assert out.splitlines()[0] == "method,value"


# ---------------------------------------------------------------------------
# files and determinism
# ---------------------------------------------------------------------------


def test_simulate_writes_files(capsys, tmp_path):
    out = tmp_path / "run"
    payload = run_json(capsys, "simulate", "--chain", "two-state",
                       "--n", "64", "--seed", "4", "--out", str(out),
                       "--f", "indicator_centered")
    traj_csv = (out / "trajectory.csv").read_text()
    assert traj_csv.splitlines()[0] == "index,state,level,is_regeneration"
    assert len(traj_csv.splitlines()) == 65
    summary = json.loads((out / "summary.json").read_text())
    assert summary == payload
    assert summary["summary"]["n_regenerations"] >= 1


def test_cli_outputs_are_byte_identical_across_reruns(capsys, tmp_path):
    args = ("verify", "--chain", "two-state", "--a", "0.5", "--b", "0.5",
            "--f", "indicator_centered", "--n", "12", "--exact",
            "--seed", "11", "--t-grid", "0.5,1.5,2.5,3.5",
            "--n-excursions", "300", "--n-first-blocks", "150")
    out1 = tmp_path / "r1"
    out2 = tmp_path / "r2"
    code, stdout1, _ = run_cli(capsys, *args, "--out", str(out1))
    assert code == 0
    code, stdout2, _ = run_cli(capsys, *args, "--out", str(out2))
    assert code == 0
    assert stdout1 == stdout2
    assert (out1 / "report.json").read_bytes() == \
        (out2 / "report.json").read_bytes()
    assert (out1 / "curves.csv").read_bytes() == \
        (out2 / "curves.csv").read_bytes()
    report = json.loads((out1 / "report.json").read_text())
    assert report["passed"] is True
    assert set(report["verdicts"]) == {"thm_bi", "thm_bi2", "thm_sbi"}


def test_verify_csv_to_stdout(capsys):
    code, out, _ = run_cli(capsys, "verify", "--chain", "two-state",
                           "--f", "indicator_centered", "--n", "8",
                           "--exact", "--seed", "11",
                           "--t-grid", "1.0,2.0", "--format", "csv",
                           "--n-excursions", "300",
                           "--n-first-blocks", "150")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith("t,estimate,se,bound_")
    assert len(lines) == 3


def test_oracle_csv_and_json(capsys, tmp_path):
    out = tmp_path / "o"
    code, text, _ = run_cli(capsys, "oracle", "--chain", "two-state",
                            "--f", "identity_centered", "--n", "6",
                            "--t-grid", "0,1,2,3", "--format", "csv",
                            "--out", str(out))
    assert code == 0
    rows = text.strip().splitlines()
    assert rows[0] == "t,estimate"
    values = [float(r.split(",")[1]) for r in rows[1:]]
    assert values == pytest.approx([0.6875, 0.21875, 0.03125, 0.0])
    saved = json.loads((out / "oracle.json").read_text())
    assert saved["tail"]["estimate"] == pytest.approx(values)


def test_unknown_backend_rejected(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"backend": "fortran"}))
    code, _, err = run_cli(capsys, "variance", "--chain", "two-state",
                           "--config", str(cfg))
    assert code == 1
    assert "unknown backend" in err


def test_backend_flag_recorded(capsys):
    payload = run_json(capsys, "simulate", "--chain", "two-state",
                       "--n", "16", "--backend", "numpy")
    assert payload["backend"] == "numpy"


def test_console_script_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "regen_bernstein.cli", "bounds",
         "classical_bernstein", "n=100", "sigma2=1", "M=1", "t=10"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["value"] == pytest.approx(
        0.616392731327227, rel=1e-12)

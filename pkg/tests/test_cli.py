"""End-to-end checks of the command-line front end.

Each test drives cli.main() in-process with an isolated output directory and
inspects the exit code, the printed gate lines, and the JSON artifacts.  One
subprocess test confirms the installed console entry point.  The exit-code
contract: 0 pass, 1 gate failure, 2 domain, 3 convergence, 4 resonance.
"""

import json
import math
import shutil
import subprocess

import numpy as np
import pytest

from wavebif import cli

QUARTIC_MODULUS = -0.25544422736786515
RESONANT_QUARTIC_DELTA = 0.6995416035848818  # (15/128)**(1/6), n = 2


def run(tmp_path, *argv):
    return cli.main(list(argv) + ["--out-dir", str(tmp_path)])


def read_json(tmp_path, name):
    with open(tmp_path / name) as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# entry point and envelope


def test_console_script_installed():
    exe = shutil.which("wavebif")
    assert exe is not None
    out = subprocess.run([exe, "--version"], capture_output=True, text=True)
    assert out.returncode == 0
    assert out.stdout.strip().startswith("wavebif ")


def test_version_flag_in_process(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--version"])
    assert exc.value.code == 0


def test_artifact_envelope(tmp_path):
    assert run(tmp_path, "profile", "--case", "quartic") == 0
    data = read_json(tmp_path, "profile.json")
    assert data["tool"] == "wavebif"
    assert data["version"]
    assert data["seed"] == 0
    assert len(data["config_hash"]) == 64
    assert "out_dir" not in data["config"]
    assert data["config"]["case"] == "quartic"


def test_env_var_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("WAVEBIF_OUT_DIR", str(tmp_path))
    assert cli.main(["profile", "--case", "quartic"]) == 0
    assert (tmp_path / "profile.json").exists()


def test_flag_beats_env_var(tmp_path, monkeypatch):
    monkeypatch.setenv("WAVEBIF_OUT_DIR", str(tmp_path / "ignored"))
    assert run(tmp_path, "profile", "--case", "quartic") == 0
    assert (tmp_path / "profile.json").exists()
    assert not (tmp_path / "ignored").exists()


def test_negative_tolerance_rejected(tmp_path):
    # the = form keeps argparse from reading the value as a flag
    assert run(tmp_path, "profile", "--case", "quartic",
               "--residual-tol=-1e-8") == 2


# ---------------------------------------------------------------------------
# profile


def test_profile_quartic(tmp_path, capsys):
    assert run(tmp_path, "profile", "--case", "quartic", "--a4", "1") == 0
    out = capsys.readouterr().out
    assert ": pass" in out and "FAIL" not in out
    entries = read_json(tmp_path, "profile.json")["profiles"]
    assert len(entries) == 1
    assert entries[0]["m"] == pytest.approx(QUARTIC_MODULUS, abs=1e-12)
    assert entries[0]["residual_sup"] < 1e-8
    assert entries[0]["residual_gate"] is True


def test_profile_cubic_two_branches_below_threshold(tmp_path):
    # mean cubic coefficient below pi^2/12: both orientation signs admissible
    assert run(tmp_path, "profile", "--case", "cubic",
               "--a2", "1", "--a3-mean", "0.5") == 0
    entries = read_json(tmp_path, "profile.json")["profiles"]
    assert sorted(e["s_star"] for e in entries) == [-1, 1]
    for e in entries:
        assert e["kind"] == "elliptic"
        assert e["reduced"]["lambda"] < 1.0
        assert e["residual_sup"] < 1e-8


def test_profile_cubic_single_branch_above_threshold(tmp_path):
    # between pi^2/12 and pi^2/9 the ratio exceeds 1: only s* = -1 survives
    assert math.pi**2 / 12.0 < 0.9 < math.pi**2 / 9.0
    assert run(tmp_path, "profile", "--case", "cubic",
               "--a2", "1", "--a3-mean", "0.9") == 0
    entries = read_json(tmp_path, "profile.json")["profiles"]
    assert len(entries) == 1
    assert entries[0]["s_star"] == -1
    assert entries[0]["reduced"]["lambda"] >= 1.0


def test_profile_cubic_exterior_regime(tmp_path):
    assert run(tmp_path, "profile", "--case", "cubic",
               "--a2", "1", "--a3-mean", "1.2") == 0
    entries = read_json(tmp_path, "profile.json")["profiles"]
    assert len(entries) == 1
    assert entries[0]["reduced"]["regime"] == "exterior"
    assert entries[0]["case"] == "exterior"


def test_profile_cubic_degenerate_branch(tmp_path):
    assert run(tmp_path, "profile", "--case", "cubic",
               "--a2", "1", "--a3-mean", "0") == 0
    entries = read_json(tmp_path, "profile.json")["profiles"]
    assert len(entries) == 1
    assert entries[0]["kind"] == "degenerate"
    assert entries[0]["tag"] == "nonlocal_only"
    coeffs = entries[0]["coefficients"]
    assert coeffs[1] == pytest.approx(math.sqrt(2.0), abs=1e-12)


def test_profile_excluded_coefficients_exit_2(tmp_path):
    assert run(tmp_path, "profile", "--case", "cubic",
               "--a2", "0", "--a3-mean", "0") == 2


def test_profile_exterior_needs_lam(tmp_path):
    assert run(tmp_path, "profile", "--case", "exterior") == 2


def test_profile_lam_with_orientation_filter(tmp_path):
    assert run(tmp_path, "profile", "--case", "cubic",
               "--lam", "0.3", "--s-star", "1") == 0
    entries = read_json(tmp_path, "profile.json")["profiles"]
    assert len(entries) == 1
    assert entries[0]["s_star"] == 1


# ---------------------------------------------------------------------------
# certify


def test_certify_quartic(tmp_path, capsys):
    assert run(tmp_path, "profile", "--case", "quartic") == 0
    assert run(tmp_path, "certify",
               "--profile", str(tmp_path / "profile.json")) == 0
    out = capsys.readouterr().out
    assert "B_of_g > 0: pass" in out
    certs = read_json(tmp_path, "certificate.json")["certificates"]
    assert certs[0]["B_of_g"] == pytest.approx(2.94155355578783, abs=1e-10)
    assert certs[0]["rho"] > 0.0
    assert certs[0]["min_singular_value"] > 1e-1
    assert all(r < 1e-7 for r in certs[0]["identity_residuals"].values())


def test_certify_cubic(tmp_path, capsys):
    assert run(tmp_path, "profile", "--case", "cubic", "--lam", "1") == 0
    assert run(tmp_path, "certify",
               "--profile", str(tmp_path / "profile.json")) == 0
    out = capsys.readouterr().out
    assert "sign(A0) = -s_star: pass" in out
    certs = read_json(tmp_path, "certificate.json")["certificates"]
    assert certs[0]["A0"] > 0.0  # s* = -1 branch
    assert certs[0]["rho"] > 0.0


def test_certify_skips_degenerate_entries(tmp_path):
    assert run(tmp_path, "profile", "--case", "cubic", "--a3-mean", "0") == 0
    assert run(tmp_path, "certify",
               "--profile", str(tmp_path / "profile.json")) == 0
    certs = read_json(tmp_path, "certificate.json")["certificates"]
    assert certs[0]["skipped"]


def test_certify_missing_file_exit_2(tmp_path):
    assert run(tmp_path, "certify",
               "--profile", str(tmp_path / "nope.json")) == 2


# ---------------------------------------------------------------------------
# oracle


def test_oracle_quartic(tmp_path, capsys):
    assert run(tmp_path, "profile", "--case", "quartic") == 0
    assert run(tmp_path, "oracle",
               "--profile", str(tmp_path / "profile.json")) == 0
    out = capsys.readouterr().out
    assert "sup-norm agreement" in out and ": pass" in out
    checks = read_json(tmp_path, "oracle.json")["cross_checks"]
    assert checks[0]["equation_tag"] == "quartic_A"
    assert checks[0]["sup_distance"] < 1e-9
    assert checks[0]["galerkin_residual_sup"] < 1e-10


def test_oracle_cubic_both_branches(tmp_path):
    assert run(tmp_path, "profile", "--case", "cubic",
               "--a3-mean", "0.5") == 0
    assert run(tmp_path, "oracle",
               "--profile", str(tmp_path / "profile.json")) == 0
    checks = read_json(tmp_path, "oracle.json")["cross_checks"]
    assert len(checks) == 2
    assert all(c["equation_tag"] == "cubic_sstar" for c in checks)
    assert all(c["sup_distance"] < 1e-7 for c in checks)


def test_oracle_degenerate_branch(tmp_path):
    assert run(tmp_path, "profile", "--case", "cubic", "--a3-mean", "0") == 0
    assert run(tmp_path, "oracle",
               "--profile", str(tmp_path / "profile.json")) == 0
    checks = read_json(tmp_path, "oracle.json")["cross_checks"]
    assert checks[0]["equation_tag"] == "nonlocal_only"
    assert checks[0]["sup_distance"] < 1e-12


# ---------------------------------------------------------------------------
# develop


def test_develop_quartic(tmp_path):
    assert run(tmp_path, "develop", "--case", "quartic") == 0
    rep = read_json(tmp_path, "development.json")["development"]
    assert rep["limit_value"] == pytest.approx(47.0 * math.pi / 256.0,
                                               abs=1e-12)
    assert abs(rep["fitted_exponent"] - 2.0) <= 0.3
    assert rep["kinetic_error"] <= 1e-13


def test_develop_cubic_with_sample_file(tmp_path):
    xs = np.linspace(0.0, math.pi, 401)
    vals = 0.5 + 0.3 * np.cos(8.0 * xs)
    path = tmp_path / "a3.csv"
    np.savetxt(path, np.column_stack([xs, vals]))
    assert run(tmp_path, "develop", "--case", "cubic",
               "--a3-file", str(path),
               "--n-values", "2", "4", "8", "16") == 0
    rep = read_json(tmp_path, "development.json")["development"]
    # a coefficient mode M couples only at dilations dividing M that land
    # inside the squared-profile band, so mode 8 survives n = 2 and 4 and
    # dies out identically afterwards
    assert abs(rep["r3_values"][0]) > 1e-12
    assert abs(rep["r3_values"][1]) > 1e-12
    # the fitted coefficient array carries rounding dust in its zero modes,
    # so the decoupled tail is merely tiny rather than exactly zero
    assert all(abs(v) < 1e-12 for v in rep["r3_values"][2:])


def test_develop_bad_eta_modes_exit_2(tmp_path):
    assert run(tmp_path, "develop", "--case", "quartic",
               "--eta-modes", "0,oops") == 2


# ---------------------------------------------------------------------------
# range


def test_range_quartic_zero_amplitude(tmp_path, capsys):
    assert run(tmp_path, "range", "--case", "quartic",
               "--delta", "0", "--n", "1") == 0
    out = capsys.readouterr().out
    assert out.count(": pass") == 2
    rep = read_json(tmp_path, "range.json")["range"]
    assert rep["range_residual_sup"] < 1e-12
    assert rep["bifurcation_residual_sup"] < 1e-8
    assert rep["min_divisor_mode"] == [0, 1]
    lines = (tmp_path / "field.csv").read_text().splitlines()
    assert lines[0] == "t,x,u"
    assert len(lines) == 1 + 65 * 65


def test_range_resonant_amplitude_exit_4(tmp_path, capsys):
    rc = run(tmp_path, "range", "--case", "quartic",
             "--delta", repr(RESONANT_QUARTIC_DELTA), "--n", "2")
    assert rc == 4
    err = capsys.readouterr().err
    assert "(8, 7)" in err


def test_range_exterior_rejected(tmp_path):
    assert run(tmp_path, "range", "--case", "exterior", "--delta", "0") == 2


# ---------------------------------------------------------------------------
# sweep


def test_sweep_reproducible_bit_for_bit(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    args = ["sweep", "--case", "cubic", "--delta-max", "0.6",
            "--levels", "3", "--samples", "50", "--seed", "7"]
    assert cli.main(args + ["--out-dir", str(a)]) == 0
    assert cli.main(args + ["--out-dir", str(b)]) == 0
    assert (a / "sweep.json").read_bytes() == (b / "sweep.json").read_bytes()
    rows = read_json(a, "sweep.json")["sweep"]
    assert len(rows) == 3
    assert all(0.0 <= r["fraction"] <= 1.0 for r in rows)


def test_sweep_seed_changes_hash_not_contract(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    args = ["sweep", "--case", "quartic", "--delta-max", "0.4",
            "--levels", "3", "--samples", "40"]
    assert cli.main(args + ["--seed", "1", "--out-dir", str(a)]) == 0
    assert cli.main(args + ["--seed", "2", "--out-dir", str(b)]) == 0
    da, db = read_json(a, "sweep.json"), read_json(b, "sweep.json")
    assert da["config_hash"] != db["config_hash"]
    assert da["seed"] == 1 and db["seed"] == 2


def test_sweep_bad_levels_exit_2(tmp_path):
    assert run(tmp_path, "sweep", "--case", "quartic", "--levels", "1") == 2

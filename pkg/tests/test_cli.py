import json
import subprocess
import sys

import numpy as np
import pytest

from nohiding import io as nio
from nohiding import qstate as qs
from nohiding.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_VERIFY, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_scan_default_row_count(tmp_path):
    path = tmp_path / "scan.csv"
    assert main(["scan", "--out", str(path)]) == EXIT_OK
    rows = nio.read_scan_csv(path)
    assert len(rows) == 325 * 2 * 3


def test_scan_small_grid(capsys):
    code, out, _ = run(capsys, "scan", "--theta-steps", "2", "--phi-steps", "2")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0].startswith("#")
    assert lines[1] == "theta_deg,phi_deg,stage,spin,re_signal,im_signal"
    assert len(lines) == 2 + 24


@pytest.mark.parametrize("flags", [[], ["--pulse-level"]])
def test_scan_output_spin3_surface(tmp_path, flags):
    path = tmp_path / "scan.csv"
    assert main(["scan", "--theta-steps", "5", "--phi-steps", "9", "--out", str(path), *flags]) == EXIT_OK
    n = 0
    for td, pd, stage, spin, sig in nio.read_scan_csv(path):
        if stage == "output" and spin == 3:
            assert abs(sig.real - np.sin(np.radians(td)) * np.sin(np.radians(pd))) < 1e-9
            n += 1
    assert n == 45


def test_scan_byte_identical(tmp_path):
    paths = [tmp_path / f"s{i}.csv" for i in range(2)]
    for p in paths:
        assert main(["scan", "--theta-steps", "3", "--phi-steps", "4", "--noise-sigma", "0.03",
                     "--out", str(p)]) == EXIT_OK
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_scan_csv_round_trip(tmp_path):
    path = tmp_path / "scan.csv"
    main(["scan", "--theta-steps", "3", "--phi-steps", "3", "--pulse-level", "--out", str(path)])
    rows = nio.read_scan_csv(path)
    assert nio.scan_csv_text(rows) == path.read_text(encoding="utf-8")
    assert b"\r\n" not in path.read_bytes()


def test_scan_invalid_grid(capsys):
    code, _, err = run(capsys, "scan", "--theta-steps", "1")
    assert code == EXIT_CONFIG
    assert "grid" in err


def test_scan_unwritable_path(capsys, tmp_path):
    code, _, _ = run(capsys, "scan", "--theta-steps", "2", "--phi-steps", "2",
                     "--out", str(tmp_path / "missing" / "scan.csv"))
    assert code == EXIT_IO


def test_scan_figures(tmp_path, capsys):
    code, _, _ = run(capsys, "scan", "--theta-steps", "3", "--phi-steps", "5",
                     "--out", str(tmp_path / "s.csv"), "--figures", str(tmp_path / "fig"))
    assert code == EXIT_OK
    for name in ("signals_input.png", "signals_output.png"):
        assert (tmp_path / "fig" / name).stat().st_size > 0


def test_verify_table(capsys):
    code, out, _ = run(capsys, "verify")
    assert code == EXIT_OK
    rows = out.splitlines()[1:]
    assert len(rows) == 6
    assert all("fail" not in r for r in rows)


def test_verify_json(capsys):
    code, out, _ = run(capsys, "verify", "--json")
    assert code == EXIT_OK
    rows = json.loads(out)
    rand = [r for r in rows if r["sequence"] == "randomization"]
    assert all(r["residual"] < 1e-10 for r in rand)
    assert all("fitted_phases" in r for r in rows)


def test_verify_listing_and_tamper(tmp_path, capsys):
    good = tmp_path / "rand.txt"
    assert main(["compile", "randomization", "--expand", "--out", str(good)]) == EXIT_OK
    code, _, _ = run(capsys, "verify", "--listing", str(good))
    assert code == EXIT_OK

    lines = good.read_text().splitlines()
    i = next(k for k, ln in enumerate(lines) if "phase=-x" in ln)
    lines[i] = lines[i].replace("phase=-x", "phase=x")
    bad = tmp_path / "tampered.txt"
    bad.write_text("\n".join(lines) + "\n")
    code, out, err = run(capsys, "verify", "--listing", str(bad))
    assert code == EXIT_VERIFY
    assert "fail" in out


def test_verify_listing_missing_file(capsys, tmp_path):
    code, _, _ = run(capsys, "verify", "--listing", str(tmp_path / "nope.txt"))
    assert code == EXIT_IO


def test_compile_header_and_listing(capsys):
    code, out, _ = run(capsys, "compile", "cnot23")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "# sequence: cnot23"
    assert any(ln.startswith("# total free-evolution time:") for ln in lines)
    body = [ln for ln in lines if not ln.startswith("#")]
    assert body[0] == "RF spin=3 flip=90deg phase=x"
    assert "JBLOCK 2 3" in body


def test_tomo_noiseless(tmp_path):
    path = tmp_path / "t.json"
    assert main(["tomo", "--theta", "90", "--phi", "90", "--out", str(path)]) == EXIT_OK
    rep = nio.load_tomo_json(path)
    assert rep["deviation"]["avg_abs_dev"] < 1e-12
    assert rep["deviation"]["max_abs_dev"] < 1e-12
    assert rep["deviation"]["n"] == 8
    assert np.abs(rep["marginal_12"] - qs.projector(qs.PHI_PLUS)).max() < 1e-12
    assert rep["rho"].shape == (8, 8) and rep["marginal_3"].shape == (2, 2)
    assert "min_eigenvalue" in rep


def test_tomo_bell_marginal_independent_of_phi(tmp_path):
    marg = []
    for phi in ("90", "0"):
        path = tmp_path / f"t{phi}.json"
        main(["tomo", "--theta", "90", "--phi", phi, "--out", str(path)])
        marg.append(nio.load_tomo_json(path)["marginal_12"])
    assert np.abs(marg[0] - marg[1]).max() < 1e-12


def test_tomo_noisy_percent(tmp_path):
    path = tmp_path / "t.json"
    assert main(["tomo", "--theta", "90", "--phi", "90", "--noise-sigma", "0.03", "--out", str(path)]) == EXIT_OK
    rep = json.loads(path.read_text())
    assert rep["deviation_percent"]["avg"] == pytest.approx(100 * rep["deviation"]["avg_abs_dev"])
    assert 0.5 <= rep["deviation_percent"]["avg"] <= 10
    assert rep["noise"]["ensemble"] == 200


def test_tomo_json_round_trip(tmp_path):
    path = tmp_path / "t.json"
    main(["tomo", "--theta", "45", "--phi", "30", "--out", str(path)])
    raw = json.loads(path.read_text())
    m = nio.matrix_from_json(raw["rho"])
    assert nio.matrix_to_json(m) == raw["rho"]
    assert raw["rho"]["basis_order"][0] == "000"


def test_tomo_figures(tmp_path):
    assert main(["tomo", "--theta", "90", "--phi", "90", "--out", str(tmp_path / "t.json"),
                 "--figures", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "output_density.png").exists()
    assert (tmp_path / "bell_marginal.png").exists()


def test_tomo_unwritable(capsys, tmp_path):
    code, _, _ = run(capsys, "tomo", "--theta", "0", "--phi", "0", "--out", str(tmp_path / "no" / "t.json"))
    assert code == EXIT_IO


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[spins]\nj12 = 49.7\nbogus = 1\n")
    code, _, err = run(capsys, "--config", str(cfg), "verify")
    assert code == EXIT_CONFIG
    assert "bogus" in err


def test_config_missing_file(tmp_path, capsys):
    code, _, _ = run(capsys, "--config", str(tmp_path / "none.ini"), "verify")
    assert code == EXIT_CONFIG


def test_config_drives_scan(tmp_path):
    cfg = tmp_path / "run.ini"
    out = tmp_path / "scan.csv"
    cfg.write_text(f"[grid]\ntheta_steps = 3\nphi_steps = 5\n[receiver]\nconvention = plus_y\n"
                   f"[output]\ncsv = {out}\n")
    assert main(["--config", str(cfg), "scan"]) == EXIT_OK
    rows = nio.read_scan_csv(out)
    assert len(rows) == 90
    # the plus_y receiver puts +y magnetization on the real axis
    for td, pd, stage, spin, sig in rows:
        if stage == "input" and spin == 1:
            assert sig.real == pytest.approx(-np.sin(np.radians(td)) * np.cos(np.radians(pd)), abs=1e-12)


def test_module_entry_point_help():
    res = subprocess.run([sys.executable, "-m", "nohiding", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("scan", "verify", "compile", "tomo"):
        assert cmd in res.stdout

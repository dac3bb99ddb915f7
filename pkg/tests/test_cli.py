import csv
import json

import numpy as np
import pytest

from jcgate import cli


def _run(tmp_path, *argv):
    return cli.main([*argv, "--output-dir", str(tmp_path)])


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_optimal_state_example(tmp_path, capsys):
    assert _run(tmp_path, "optimal-state", "--gate", "Xpi", "--gT", "0.5236", "--n-cut", "64") == 0
    res = json.loads(capsys.readouterr().out)
    assert abs(res["mean_photon"] - 9) < 0.5
    assert abs(res["r"][0] - 0.226) < 0.03
    amps = _rows(tmp_path / "optimal-state_amplitudes.csv")
    assert len(amps) == 64
    norm = sum(float(a["re"]) ** 2 + float(a["im"]) ** 2 for a in amps)
    assert norm == pytest.approx(1, abs=1e-12)
    manifest = json.loads((tmp_path / "optimal-state.json").read_text())
    assert manifest["config"]["gate"] == "Xpi"
    assert "optimal-state_amplitudes.csv" in manifest["outputs"]


def test_optimal_state_wigner(tmp_path):
    assert _run(tmp_path, "optimal-state", "--gate", "Xpi", "--n-bar", "9", "--wigner-grid", "21") == 0
    rows = _rows(tmp_path / "optimal-state_wigner.csv")
    assert len(rows) == 21 * 21
    w = np.array([float(r["W"]) for r in rows])
    x = np.unique([float(r["x"]) for r in rows])
    h = x[1] - x[0]
    assert abs(w.sum() * h * h - 1) < 0.05


def test_exit_codes(tmp_path, capsys):
    assert _run(tmp_path, "optimal-state", "--gT", "0.5236") == 2
    assert "usage" in capsys.readouterr().err
    assert _run(tmp_path, "optimal-state", "--gate", "Xpi", "--gT", "0.5236", "--n-cut", "16") == 3
    assert _run(tmp_path, "optimal-state", "--gate", "Zpi", "--gT", "0.5") == 2
    assert _run(tmp_path, "protocol-ideal", "--cycles", "0") == 2
    assert _run(tmp_path, "protocol-ideal", "--n-cut", "50") == 3
    assert _run(tmp_path, "error-scan", "--gate", "Xpi", "--n-bar", "a,b") == 2


def test_error_scan_golden(tmp_path):
    assert _run(tmp_path, "error-scan", "--gate", "Xpi", "--family", "squeezed", "--n-bar", "25,100") == 0
    rows = _rows(tmp_path / "error-scan.csv")
    assert [int(r["n_cut"]) for r in rows] == [78, 193]
    golden_avg = [0.02069373619077175, 0.0052202938730864235]
    golden_max = [0.061435049714633427, 0.015620008331901691]
    assert np.allclose([float(r["avg_error"]) for r in rows], golden_avg, rtol=1e-9)
    assert np.allclose([float(r["max_error"]) for r in rows], golden_max, rtol=1e-9)
    for r in rows:
        assert float(r["min_error"]) <= float(r["avg_error"]) <= float(r["max_error"])
        assert abs(float(r["delta_avg"])) < 0.05 * float(r["analytic_avg"])


def test_error_scan_families(tmp_path):
    for family, golden in (("coherent", 0.0057552942974723464), ("cat", 0.0052202938730867565)):
        assert _run(tmp_path, "error-scan", "--gate", "Xpi", "--family", family,
                    "--n-bar", "100", "--prefix", family) == 0
        row = _rows(tmp_path / f"{family}.csv")[0]
        assert float(row["avg_error"]) == pytest.approx(golden, rel=1e-9)


def test_protocol_deterministic_bytes(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    argv = ["protocol-ideal", "--n-bar", "25", "--M", "2", "--cycles", "20", "--seed", "7"]
    assert cli.main(argv + ["--output-dir", str(a)]) == 0
    assert cli.main(argv + ["--output-dir", str(b)]) == 0
    for name in ("protocol-ideal_seed7.csv", "protocol-ideal.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    rows = _rows(a / "protocol-ideal_seed7.csv")
    assert list(rows[0]) == ["cycle", "E", "avg_error", "purity", "mean_photon"]
    assert len(rows) == 20


def test_protocol_seeds_mean(tmp_path):
    assert _run(tmp_path, "protocol-ideal", "--n-bar", "25", "--M", "1", "--cycles", "5",
                "--seeds", "3", "--seed", "4", "--workers", "1") == 0
    runs = [_rows(tmp_path / f"protocol-ideal_seed{s}.csv") for s in (4, 5, 6)]
    mean = _rows(tmp_path / "protocol-ideal_mean.csv")
    for j, row in enumerate(mean):
        assert float(row["avg_error"]) == pytest.approx(np.mean([float(r[j]["avg_error"]) for r in runs]))
    manifest = json.loads((tmp_path / "protocol-ideal.json").read_text())
    assert manifest["config"]["seed_list"] == [4, 5, 6]


def test_protocol_workers_do_not_change_output(tmp_path):
    argv = ["protocol-ideal", "--n-bar", "16", "--M", "1", "--cycles", "4", "--seeds", "2"]
    assert cli.main(argv + ["--workers", "1", "--output-dir", str(tmp_path / "s")]) == 0
    assert cli.main(argv + ["--workers", "2", "--output-dir", str(tmp_path / "p")]) == 0
    for name in ("protocol-ideal_seed0.csv", "protocol-ideal_seed1.csv", "protocol-ideal_mean.csv"):
        assert (tmp_path / "s" / name).read_bytes() == (tmp_path / "p" / name).read_bytes()


def test_protocol_full_energy_column(tmp_path):
    assert _run(tmp_path, "protocol-full", "--n-bar", "25", "--M", "1", "--cycles", "3") == 0
    rows = _rows(tmp_path / "protocol-full_seed0.csv")
    assert [float(r["E"]) for r in rows] == pytest.approx([50, 25, 50 / 3])


def test_protocol_ghz_golden_row(tmp_path):
    assert _run(tmp_path, "protocol-ghz", "--ghz-N", "4", "--M", "8", "--gate", "Xpi2") == 0
    row = _rows(tmp_path / "protocol-ghz.csv")[0]
    assert (row["N"], row["M"]) == ("4", "8")
    assert float(row["E_eff"]) == pytest.approx(0.0055074806625767803, rel=1e-9)
    assert float(row["E_eff_disposable"]) == pytest.approx(0.0029237636163136904, rel=1e-9)
    assert float(row["E_eff"]) < float(row["E_eff_disposable_total"])


def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("[protocol]\nn_bar = 16\nM = 1\ncycles = 3  # short\nseed = 2\n")
    out = tmp_path / "out"
    assert cli.main(["protocol-ideal", "--config", str(cfg), "--cycles", "4",
                     "--output-dir", str(out)]) == 0
    manifest = json.loads((out / "protocol-ideal.json").read_text())
    c = manifest["config"]
    assert (c["n_bar"], c["M"], c["cycles"], c["seed"]) == (16.0, 1, 4, 2)
    assert c["time_convention"] == "sqrt"  # default
    assert len(_rows(out / "protocol-ideal_seed2.csv")) == 4
    bad = tmp_path / "bad.cfg"
    bad.write_text("n_bar 16\n")
    assert cli.main(["protocol-ideal", "--config", str(bad), "--output-dir", str(out)]) == 2


def test_resolve_precedence():
    cfg = cli.resolve({"a": 1, "b": 2, "c": 3}, {"b": 20, "c": 30}, {"c": 300})
    assert (cfg["a"], cfg["b"], cfg["c"]) == (1, 20, 300)


def test_output_dir_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "env"))
    assert cli.main(["budget"]) == 0
    assert (tmp_path / "env" / "budget.csv").exists()


def test_budget_outputs(tmp_path, capsys):
    assert _run(tmp_path, "budget", "--json") == 0
    table = {r["quantity"]: r for r in json.loads(capsys.readouterr().out)}
    assert table["total_power"]["rounded"] == pytest.approx(2e-3)
    assert table["min_photons"]["exact"] == pytest.approx(577.9, abs=0.05)
    assert abs(table["min_total_power"]["rounded"] / 20e-6 - 1) < 0.1
    assert _run(tmp_path, "budget", "--P-pi", "0") == 0
    text = capsys.readouterr().out
    assert "quantity" in text and "total_power" in text
    rows = {r["quantity"]: r for r in _rows(tmp_path / "budget.csv")}
    assert float(rows["total_power"]["exact"]) == 0
    assert _run(tmp_path, "budget", "--omega", str(4 * np.pi * 6e9), "--json") == 0
    scaled = {r["quantity"]: r for r in json.loads(capsys.readouterr().out)}
    assert scaled["min_drive_power"]["exact"] == pytest.approx(2 * table["min_drive_power"]["exact"])
    assert _run(tmp_path, "budget", "--N-q", "-1") == 2

import csv
import json
import subprocess
import sys

import pytest

from otfs_squint.cli import build_parser, main


def test_parser_lists_all_subcommands(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args(["--help"])
    out = capsys.readouterr().out
    for name in ("analyze", "sig-nmse", "sig-ber", "est-nmse-snr", "est-nmse-m", "est-ber", "validate"):
        assert name in out
    assert "Eb/N0" in out


def test_analyze_csv(tmp_path):
    out = tmp_path / "a.csv"
    assert main(["analyze", "--model", "ideal-exact", "--seed", "3", "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["row_index", "col_index", "real", "imag", "modulus"]
    assert len(rows) == 1 + 32 * 64
    r = rows[5]
    assert abs(float(r[4]) - abs(complex(float(r[2]), float(r[3])))) < 1e-12


def test_scenario_csv_and_sidecar(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("num_subcarriers: 32\nnum_slots: 16\nl_max: 8\nm_sweep: [32]\nspeeds_kmh: [500]\n")
    out = tmp_path / "r.csv"
    assert main(["sig-nmse", "--config", str(cfg), "--trials", "2", "--seed", "5", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert {r["metric"] for r in rows} == {"nmse_ignore_dse", "nmse_closed_form"}
    assert all(r["trial_count"] == "2" and r["seed_range"] == "5^[0,2)" for r in rows)
    meta = json.loads((tmp_path / "r.csv.meta.json").read_text())
    assert meta["config"]["base_seed"] == 5 and meta["config"]["trials"] == 2


def test_workers_do_not_change_output(tmp_path):
    args = ["est-nmse-snr", "--trials", "4", "--seed", "11"]
    cfg = tmp_path / "c.yaml"
    cfg.write_text("num_subcarriers: 32\nnum_slots: 16\nl_max: 8\nsnr_p_db: [40]\n")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--config", str(cfg), "--out", str(a), "--workers", "1"]) == 0
    assert main(args + ["--config", str(cfg), "--out", str(b), "--workers", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_config_errors_exit_2(tmp_path, capsys):
    assert main(["sig-nmse", "--trials", "0"]) == 2
    bad = tmp_path / "bad.yaml"
    bad.write_text("unknown_field: 3\n")
    assert main(["sig-nmse", "--config", str(bad)]) == 2
    assert main(["sig-nmse", "--seed", "-1"]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_validate_exit_code_reflects_suites(tmp_path):
    from otfs_squint import experiments
    from otfs_squint.config import make_config
    t = experiments.run_validate(make_config("validate"))
    expected = 0 if experiments.validate_passed(t) else 1
    proc = subprocess.run([sys.executable, "-m", "otfs_squint.cli", "validate", "--out", str(tmp_path / "v.csv")],
                          capture_output=True, text=True)
    assert proc.returncode == expected
    assert "rect_vs_waveform" in proc.stderr and "negative_control" in (tmp_path / "v.csv").read_text()

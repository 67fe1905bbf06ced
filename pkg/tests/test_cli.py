import csv
import io
import subprocess
import sys

import pytest

from mobile_gossip.cli import RESULT_SCHEMA, THEORY_SCHEMA, main

SUBCOMMANDS = ["spread", "sweep", "conductance", "density", "increment", "connectivity",
               "theory"]


def rows_of(text):
    return list(csv.reader(io.StringIO(text)))


def test_spread_smoke(capsys):
    code = main(["spread", "--n", "1000", "--model", "fully-random", "--rounds", "10",
                 "--epsilon", "0.05", "--seed", "7", "--workers", "1"])
    out = capsys.readouterr().out
    assert code == 0
    rows = rows_of(out)
    assert ",".join(rows[0]) == RESULT_SCHEMA
    assert any(r[5] == "spreading_time" and float(r[6]) > 0 for r in rows[1:])


def test_theory_velocity_value(capsys):
    assert main(["theory", "--model", "velocity", "--r", "0.1", "--vmax", "0.05"]) == 0
    rows = rows_of(capsys.readouterr().out)
    assert ",".join(rows[0]) == THEORY_SCHEMA
    assert float(rows[1][4]) == pytest.approx(7 * 0.1 / 12, rel=1e-12)
    assert rows[1][5] == "approximation"


def test_theory_table(capsys):
    assert main(["theory", "--n", "1000"]) == 0
    rows = rows_of(capsys.readouterr().out)
    assert [r[0] for r in rows[1:]] == ["static", "fully-random", "partially-random",
                                        "velocity", "area-1d", "area-2d"]


def test_connectivity_frequency(capsys):
    assert main(["connectivity", "--n", "500", "--trials", "100", "--workers", "1"]) == 0
    rows = rows_of(capsys.readouterr().out)
    assert rows[1][5] == "connected_fraction" and float(rows[1][6]) >= 0.95


def test_unknown_flag_is_usage_error(capsys):
    assert main(["spread", "--bogus"]) == 1
    err = capsys.readouterr().err
    assert "usage:" in err and "--bogus" in err


def test_missing_subcommand_and_bad_values(capsys):
    assert main([]) == 1
    assert main(["spread", "--n", "100", "--model", "velocity"]) == 1
    assert main(["spread", "--n", "100", "--model", "warp"]) == 1
    assert main(["spread", "--n", "100", "--model", "fully-random", "--epsilon", "2"]) == 1
    assert main(["spread", "--n", "10", "--model", "partially-random", "--k", "20"]) == 1
    assert "configuration error" in capsys.readouterr().err


def test_missing_config_file_is_config_error(tmp_path, capsys):
    assert main(["spread", "--config", str(tmp_path / "nope.ini")]) == 1


def test_runtime_failure_exit_code(tmp_path, capsys):
    out = tmp_path / "no" / "dir.csv"
    code = main(["spread", "--n", "50", "--model", "fully-random", "--rounds", "2",
                 "--workers", "1", "--out", str(out)])
    assert code == 2
    assert "runtime error" in capsys.readouterr().err


@pytest.mark.parametrize("sub", SUBCOMMANDS)
def test_help_documents_schema(sub, capsys):
    assert main([sub, "--help"]) == 0
    text = capsys.readouterr().out
    assert (THEORY_SCHEMA if sub == "theory" else RESULT_SCHEMA) in text
    assert "--n" in text


def test_emit_config_roundtrip_and_override(tmp_path, capsys):
    args = ["sweep", "--n", "40,80", "--model", "static,velocity", "--vmax", "0.1,0.01",
            "--rounds", "3", "--seed", "5", "--workers", "1"]
    assert main(args + ["--emit-config"]) == 0
    ini = capsys.readouterr().out
    path = tmp_path / "exp.ini"
    path.write_text(ini)
    assert main(args) == 0
    direct = capsys.readouterr().out
    assert main(["sweep", "--config", str(path)]) == 0
    assert capsys.readouterr().out == direct
    assert main(["sweep", "--config", str(path), "--seed", "6"]) == 0
    assert capsys.readouterr().out != direct


def test_out_file_and_manifest(tmp_path, capsys):
    out = tmp_path / "r.csv"
    args = ["conductance", "--n", "200", "--model", "fully-random", "--rounds", "5",
            "--seed", "1", "--workers", "1", "--out", str(out)]
    assert main(args) == 0
    assert capsys.readouterr().out == ""
    first = out.read_bytes()
    assert (tmp_path / "r.csv.manifest").exists()
    assert main(args) == 0
    assert out.read_bytes() == first


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "mobile_gossip.cli", "theory", "--n", "100",
                           "--model", "static"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("model,n,r,param,phi,kind")

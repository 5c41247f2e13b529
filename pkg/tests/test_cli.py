import json
import subprocess
import sys

import pytest

from qet import cli
from qet.errors import NumericalError, ValidationError


def _rows(text):
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    head = lines[0].split(",")
    return [dict(zip(head, l.split(","))) for l in lines[1:]]


def _echo(text):
    line = next(l for l in text.splitlines() if l.startswith("# config: "))
    return line[len("# config: "):]


def test_minimal_config_valid():
    cfg = cli.parse_config(["minimal", "--h", "1", "--k", "1"])
    assert cfg.subcommand == "minimal"
    assert cfg.parameters == {"h": 1.0, "k": 1.0, "theta": None}


def test_minimal_table_row(capsys):
    assert cli.main(["minimal", "--h", "1", "--k", "0.2", "--deterministic"]) == 0
    row = _rows(capsys.readouterr().out)[0]
    assert float(row["E_UB"]) == pytest.approx(-0.0180, abs=1e-4)


def test_negative_coupling_names_flag(capsys):
    assert cli.main(["minimal", "--h", "1", "--k", "-1"]) == 2
    assert "--k" in capsys.readouterr().err


def test_missing_required_parameter(capsys):
    assert cli.main(["minimal", "--h", "1"]) == 2
    assert "--k" in capsys.readouterr().err


def test_type_mismatch_rejected():
    with pytest.raises(ValidationError, match="--shots"):
        cli.parse_config(["hardware", "--shots", "many"])


def test_flag_overrides_file(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[minimal]\nh = 2\nk = 0.5\nseed = 11\n")
    cfg = cli.parse_config(["minimal", "--config", str(path), "--k", "0.7"])
    assert cfg.parameters["h"] == 2.0
    assert cfg.parameters["k"] == 0.7
    assert cfg.seed == 11


def test_unknown_key_reports_line(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[minimal]\nh = 1\nkk = 2\n")
    with pytest.raises(ValidationError, match=r"run.ini:3: unknown key"):
        cli.parse_config(["minimal", "--config", str(path), "--k", "1"])


def test_unknown_section_rejected(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[minimall]\nh = 1\n")
    with pytest.raises(ValidationError, match="unknown section"):
        cli.parse_config(["minimal", "--config", str(path), "--h", "1", "--k", "1"])


def test_seed_fallbacks(monkeypatch):
    monkeypatch.setenv("QET_SEED", "123")
    assert cli.parse_config(["slp"]).seed == 123
    assert cli.parse_config(["slp", "--seed", "5"]).seed == 5
    monkeypatch.delenv("QET_SEED")
    assert cli.parse_config(["slp"]).seed == 0
    with pytest.raises(ValidationError):
        cli.parse_config(["slp", "--seed", "-1"])


@pytest.mark.parametrize("argv", [
    ["minimal", "--h", "1.5", "--k", "1", "--theta", "0.1"],
    ["hardware", "--h", "1,1", "--k", "0.2,1", "--shots", "1000", "--noise", "0.02", "--mitigate", "true"],
    ["cooling", "--method", "ppa3", "--beta-grid", "0.1,1"],
    ["qft", "--family", "gauss", "--upsilon-list", "1,2"],
])
def test_config_echo_round_trip(argv):
    cfg = cli.parse_config(argv + ["--seed", "42"])
    back = cli.parse_echo(cli.config_echo(cfg))
    assert back.subcommand == cfg.subcommand
    assert back.parameters == cfg.parameters
    assert back.seed == cfg.seed


def test_hardware_runs_are_byte_identical(tmp_path):
    outs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        argv = ["hardware", "--shots", "100000", "--seed", "7", "--deterministic", "--out", str(out)]
        assert cli.main(argv) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    assert b"timestamp" not in outs[0]


def test_timestamp_present_without_deterministic(capsys):
    cli.main(["minimal", "--h", "1", "--k", "1"])
    assert "# timestamp: " in capsys.readouterr().out


def test_hardware_rows_and_echo(capsys):
    assert cli.main(["hardware", "--deterministic"]) == 0
    out = capsys.readouterr().out
    assert len(_rows(out)) == 16
    cfg = cli.parse_echo(_echo(out))
    assert cfg.subcommand == "hardware" and cfg.parameters["shots"] == 0


def test_mismatched_hardware_lists():
    with pytest.raises(ValidationError):
        cli.parse_config(["hardware", "--h", "1,2", "--k", "1"])


def test_unitary_budget_row(capsys):
    assert cli.main(["unitary", "--deterministic"]) == 0
    rows = {r["quantity"]: r["value"] for r in _rows(capsys.readouterr().out)}
    assert float(rows["t_total_ms"]) == pytest.approx(37.6, abs=0.1)
    assert float(rows["t_ab_ms"]) == pytest.approx(862, abs=0.1)
    assert rows["budget_valid"] == "true"


def test_cooling_ancilla_rows(capsys):
    assert cli.main(["cooling", "--method", "ancilla", "--beta-grid", "0,0.5", "--deterministic"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert [r["beta"] for r in rows] == ["0", "0.5"]
    assert float(rows[0]["p_final"]) == pytest.approx(0.5, abs=1e-12)


def test_slp_runs(capsys):
    assert cli.main(["slp", "--instances", "3", "--trials", "20", "--deterministic"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert len(rows) == 4


def test_qft_optimize_sidecar(tmp_path):
    out = tmp_path / "well.csv"
    argv = ["qft", "--family", "lorentz", "--optimize", "true", "--restarts", "2", "--grid", "512",
            "--deterministic", "--out", str(out)]
    assert cli.main(argv) == 0
    side = json.loads((tmp_path / "well.metrics.json").read_text())
    assert side["delta_e"] < 0
    for key in ("depth", "width", "delta_x", "norm_alpha"):
        assert key in side
    assert _rows(out.read_text())[0].keys() >= {"x", "t", "density"}


def test_numerical_failure_exit_code(monkeypatch, capsys):
    def boom(cfg):
        raise NumericalError("did not converge")

    monkeypatch.setitem(cli.RUNNERS, "minimal", boom)
    assert cli.main(["minimal", "--h", "1", "--k", "1"]) == 3
    assert "minimal: did not converge" in capsys.readouterr().err


def test_io_failure_exit_code(tmp_path):
    assert cli.main(["minimal", "--h", "1", "--k", "1", "--out", str(tmp_path / "no" / "x.csv")]) == 4


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "qet", "minimal", "--h", "1", "--k", "1", "--deterministic"],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert "E_UB" in r.stdout

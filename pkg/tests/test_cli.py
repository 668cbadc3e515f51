import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from spherefield import __version__
from spherefield.cli import (
    EXIT_RESOURCE, EXIT_USAGE, EXIT_VALIDATION, OUTPUT_DIR_ENV, read_config_file, read_table, run,
)

GOLDEN = Path(__file__).parent / "golden"
LAYOUT = json.loads((GOLDEN / "cli_layout.json").read_text())


def invoke(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("name", sorted(LAYOUT))
def test_golden_layout(name, capsys):
    case = LAYOUT[name]
    code, out, _ = invoke(capsys, *case["argv"])
    assert code == 0
    header, columns, rows = read_table(out)
    assert columns == case["columns"]
    assert sorted(header) == case["header_keys"]
    assert len(rows) == case["rows"]
    assert all(len(r) == len(columns) for r in rows)
    assert header["artifact"] == f"spherefield {__version__}"


def test_golden_bytes_for_exact_table(capsys):
    _, out, _ = invoke(capsys, "spectrum", "--alpha", "3", "--l-max", "4")
    assert out == (GOLDEN / "spectrum_alpha3_l4.csv").read_text()


def test_variogram_example(capsys):
    code, out, _ = invoke(capsys, "variogram", "--alpha", "3", "--theta-min", "1e-4", "--theta-max", "0.05",
                          "--points", "64")
    header, columns, rows = read_table(out)
    assert code == 0 and len(rows) == 64
    assert columns == ["theta", "variogram", "rho_sq", "ratio", "tail_bound"]
    assert header["config.alpha"] == "3.0"


def test_sumpoly_example(capsys):
    _, out, _ = invoke(capsys, "special", "--check", "sumpoly", "--s", "2", "--theta", "1e-3")
    _, columns, rows = read_table(out)
    ratio = float(rows[0][columns.index("ratio")])
    assert ratio == pytest.approx(2.0, rel=0.01)


def test_slnd_rerun_is_byte_identical(capsys):
    argv = ["slnd", "--alpha", "3", "--n", "4", "--geometry", "ring", "--eps", "0.1,0.05,0.025",
            "--replicates", "100", "--seed", "7"]
    first = invoke(capsys, *argv)[1]
    second = invoke(capsys, *argv, "--threads", "4")[1]
    assert first == second
    assert "config.threads" not in read_table(first)[0]


def test_json_format(capsys):
    code, out, _ = invoke(capsys, "bump", "--epsilon", "0.2", "--l-max", "8", "--format", "json")
    doc = json.loads(out)
    assert code == 0
    assert doc["columns"] == ["ell", "b_ell"] and len(doc["rows"]) == 9
    assert doc["config"]["epsilon"] == 0.2 and doc["version"] == __version__


def test_json_encodes_nonfinite_values(capsys):
    _, out, _ = invoke(capsys, "special", "--check", "sumpoly", "--s", "2", "--theta", "1e-3", "--format", "json")
    doc = json.loads(out)
    assert doc["rows"][0][doc["columns"].index("fitted_slope")] == "nan"


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("# spectrum run\nalpha = 4\nl-max = 8\n")
    assert read_config_file(cfg) == {"alpha": "4", "l_max": "8"}
    _, out, _ = invoke(capsys, "spectrum", "--config", str(cfg), "--l-max", "3")
    header, _, rows = read_table(out)
    assert header["config.alpha"] == "4.0"
    assert header["config.l_max"] == "3"
    assert len(rows) == 3


def test_config_file_flags_and_seed(tmp_path, capsys):
    cfg = tmp_path / "slnd.cfg"
    cfg.write_text("seed = 3\nalpha = 4.5\nexploratory = true\neps = 0.1\nreplicates = 2\n")
    code, out, _ = invoke(capsys, "slnd", "--config", str(cfg))
    header, _, _ = read_table(out)
    assert code == 0
    assert header["config.seed"] == "3" and header["config.exploratory"] == "true"
    assert header["summary.certifying"] == "false"


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("bogus = 1\n")
    code, _, err = invoke(capsys, "spectrum", "--config", str(cfg))
    assert code == EXIT_USAGE
    assert json.loads(err)["error"] == "usage"


def test_output_file_and_env_directory(tmp_path, monkeypatch, capsys):
    target = tmp_path / "nested" / "v.csv"
    assert invoke(capsys, "spectrum", "--alpha", "3", "--l-max", "2", "--output", str(target))[0] == 0
    assert read_table(target.read_text())[1][0] == "ell"
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "runs"))
    code, out, _ = invoke(capsys, "spectrum", "--alpha", "3", "--l-max", "2", "--format", "json")
    assert code == 0 and out == ""
    assert json.loads((tmp_path / "runs" / "spectrum.json").read_text())["command"] == "spectrum"


@pytest.mark.parametrize("argv,code,kind", [
    (["slnd", "--alpha", "3"], EXIT_USAGE, "usage"),
    (["nonsense"], EXIT_USAGE, "usage"),
    ([], EXIT_USAGE, "usage"),
    (["variogram", "--alpha", "3", "--points", "many"], EXIT_USAGE, "usage"),
    (["variogram", "--alpha", "1.5"], EXIT_VALIDATION, "validation"),
    (["slnd", "--alpha", "4", "--seed", "1", "--eps", "0.1"], EXIT_VALIDATION, "validation"),
    (["modulus", "--alpha", "3", "--seed", "1", "--scales", "5,4"], EXIT_VALIDATION, "validation"),
    (["bump", "--epsilon", "4"], EXIT_VALIDATION, "validation"),
])
def test_error_records(argv, code, kind, capsys):
    rc, out, err = invoke(capsys, *argv)
    assert rc == code and out == ""
    record = json.loads(err)
    assert record["error"] == kind and record["exit_code"] == code


def test_unwritable_output_is_resource_error(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    rc, _, err = invoke(capsys, "spectrum", "--alpha", "3", "--output", str(blocker / "x.csv"))
    assert rc == EXIT_RESOURCE
    assert json.loads(err)["error"] == "resource"


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "spherefield", "special", "--check", "zeta", "--s", "2"],
                         capture_output=True, text=True, check=True).stdout
    _, _, rows = read_table(out)
    assert float(rows[0][1]) == pytest.approx(math.pi ** 2 / 6)

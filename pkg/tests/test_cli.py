import csv
import io
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from coherent_qfi import cli

GOLDEN = Path(__file__).parent / "golden"


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_qfi_sweep_default(capsys):
    code, out, _ = run(["qfi-sweep"], capsys)
    assert code == 0 and out.endswith("\n")
    table = rows(out)
    assert len(table) == 605
    assert out.splitlines()[0] == "s,phi,qfi,method"
    by_key = {(r["s"], r["phi"]): r for r in table}
    assert float(by_key[("0", "1.57079633")]["qfi"]) == 0.25
    dark = by_key[("0", "3.14159265")]
    assert dark["method"] == "diverging" and dark["qfi"] == ""
    assert by_key[("0.05", "3.14159265")]["method"] == "closed-form"


def test_total_sweep_rows(capsys):
    code, out, _ = run(["total-sweep"], capsys)
    table = rows(out)
    assert code == 0 and len(table) == 121 * 3
    by_key = {(r["s"], r["phi"]): r for r in table}
    assert float(by_key[("0", "0.785398163")]["f_total"]) == 0.25
    assert float(by_key[("0", "0")]["f_total"]) == 0.0
    assert max(float(r["f_total"]) for r in table) <= 0.25 + 1e-9


@pytest.mark.parametrize("command, golden", [("qfi-sweep", "qfi_sweep_default.csv"), ("total-sweep", "total_sweep_default.csv")])
def test_golden_files(tmp_path, command, golden):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main([command, "--out", str(a)]) == 0
    assert cli.main([command, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes() == (GOLDEN / golden).read_bytes()
    assert b"\r" not in a.read_bytes()


def test_usage_errors(capsys):
    code, _, err = run(["qfi-sweep", "--s-range", "0:6:1"], capsys)
    assert code == 1 and "count >= 2" in err
    assert run(["qfi-sweep", "--s-range", "6:0:5"], capsys)[0] == 1
    assert run(["qfi-sweep", "--phi", "banana"], capsys)[0] == 1
    assert run(["qfi-sweep", "--sigma", "-1"], capsys)[0] == 1
    assert run(["qfi-sweep", "--psf", "file"], capsys)[0] == 1
    assert run(["no-such-command"], capsys)[0] == 1
    assert run(["--help"], capsys)[0] == 0
    assert run(["mc", "--bounds", "1"], capsys)[0] == 1


def test_io_errors(tmp_path, capsys):
    assert run(["qfi-sweep", "--out", str(tmp_path / "missing" / "x.csv")], capsys)[0] == 2
    assert run(["qfi-sweep", "--psf", "file", "--psf-file", str(tmp_path / "nope.txt")], capsys)[0] == 2
    assert run(["moments", "--config", str(tmp_path / "nope.cfg")], capsys)[0] == 2


def test_numerical_failure_exit_code(capsys):
    # a search range 200 widths from the data: zero likelihood everywhere
    code, _, err = run(["mc", "--s", "1", "--n", "10", "--trials", "2", "--bounds", "400:401"], capsys)
    assert code == 3 and "trial 0" in err
    # the degenerate s = 0 point of the dark fringe is an empty field, not a failure
    code, out, _ = run(["classical-sweep", "--phi", "pi", "--s-range", "0:1:2"], capsys)
    assert code == 0 and out.splitlines()[1] == "0,3.14159265,"


def test_sparrow(capsys):
    assert run(["sparrow", "--psf", "gaussian", "--sigma", "1", "--incoherent"], capsys)[1] == "2\n"
    code, out, _ = run(["sparrow", "--phi", "0"], capsys)
    assert float(out) == pytest.approx(2 * math.sqrt(2), abs=1e-6)
    code, out, _ = run(["sparrow", "--phi", "3.14159265"], capsys)
    assert code == 0 and out.startswith("degenerate-criterion:")
    assert float(run(["sparrow", "--sigma", "2"], capsys)[1]) == pytest.approx(4.0, abs=1e-6)


def test_moments(capsys):
    code, out, _ = run(["moments", "--psf", "gaussian", "--sigma", "1"], capsys)
    kv = dict(line.split("=") for line in out.splitlines())
    assert code == 0
    assert (kv["p2"], kv["p4"], kv["p6"]) == ("0.25", "0.1875", "0.234375")
    assert float(kv["c_pi"]) == pytest.approx(1 / 96, rel=1e-8)
    assert float(kv["c_0"]) == 0.03125
    assert float(kv["delta(1)"]) == pytest.approx(math.exp(-1 / 8), rel=1e-8)


def test_grid_psf_from_file(tmp_path, capsys, gauss):
    x = np.arange(-1200, 1201) * 0.01
    path = tmp_path / "psf.txt"
    np.savetxt(path, np.column_stack([x, gauss.amplitude(x)]), header="x amplitude")
    code, out, _ = run(["moments", "--psf", "file", "--psf-file", str(path)], capsys)
    kv = dict(line.split("=") for line in out.splitlines())
    assert code == 0 and float(kv["p4"]) == pytest.approx(0.1875, rel=1e-8)


def test_classical_sweep(capsys):
    code, out, _ = run(["classical-sweep", "--s-range", "0:4:3", "--phi", "0,pi/2", "--incoherent"], capsys)
    table = rows(out)
    assert code == 0 and len(table) == 9
    assert out.splitlines()[0] == "s,phi_or_inc,f_classical"
    assert [r["phi_or_inc"] for r in table[:3]] == ["0", "1.57079633", "incoherent"]
    assert float(table[-1]["f_classical"]) == pytest.approx(0.2445861294, rel=1e-8)
    # default is the incoherent mixture alone
    assert len(rows(run(["classical-sweep", "--s-range", "0:4:3"], capsys)[1])) == 3


def test_mc_csv_and_kv(capsys):
    argv = ["mc", "--s", "1,2", "--n", "300", "--trials", "3", "--seed", "5", "--incoherent", "--phi", "pi/2"]
    code, out, _ = run(argv, capsys)
    table = rows(out)
    assert code == 0 and len(table) == 4
    assert out.splitlines()[0] == ",".join(cli.estimation.CSV_FIELDS)
    assert table[0]["coherence"] == "1.57079633" and table[1]["coherence"] == "incoherent"
    assert run(argv, capsys)[1] == out
    code, out, _ = run(argv + ["--format", "kv"], capsys)
    assert "mse=" in out and "seed=5" in out


def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sweep settings\ns-range = 0:1:3\nphi = pi/2\nsigma = 2\n")
    table = rows(run(["qfi-sweep", "--config", str(cfg)], capsys)[1])
    assert len(table) == 3 and float(table[0]["qfi"]) == 0.0625
    table = rows(run(["qfi-sweep", "--config", str(cfg), "--sigma", "1"], capsys)[1])
    assert float(table[0]["qfi"]) == 0.25
    cfg.write_text("incoherent = true\n")
    assert run(["sparrow", "--config", str(cfg), "--phi", "0"], capsys)[1] == "2\n"
    cfg.write_text("bogus = 1\n")
    assert run(["qfi-sweep", "--config", str(cfg)], capsys)[0] == 1


def test_output_directory_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(cli.OUTDIR_ENV, str(tmp_path))
    code, out, _ = run(["total-sweep", "--s-range", "0:1:2"], capsys)
    assert code == 0 and out == ""
    assert (tmp_path / "total-sweep.csv").read_text().startswith("s,phi,f_total")
    explicit = tmp_path / "elsewhere.csv"
    run(["total-sweep", "--s-range", "0:1:2", "--out", str(explicit)], capsys)
    assert explicit.exists()


def test_figures_render(tmp_path, capsys):
    for command in ("qfi-sweep", "total-sweep", "classical-sweep"):
        fig = tmp_path / f"{command}.png"
        code, out, _ = run([command, "--s-range", "0:6:13", "--figure", str(fig)], capsys)
        assert code == 0 and out.startswith("s,")
        assert fig.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_phase_parsing():
    assert cli.parse_phase("3pi/4") == pytest.approx(3 * math.pi / 4)
    assert cli.parse_phase("-pi/2") == pytest.approx(-math.pi / 2)
    assert cli.parse_phase("pi") == math.pi
    assert cli.parse_phase("0.5") == 0.5
    with pytest.raises(cli.UsageError):
        cli.parse_phase("inf")


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "coherent_qfi", "moments", "--s-range", "0:1:2"], capture_output=True, text=True
    )
    assert proc.returncode == 0 and proc.stdout.startswith("p2=0.25\n")

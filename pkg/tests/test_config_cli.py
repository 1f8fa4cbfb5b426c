import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from ekg_axis.cli import EXIT_CONFIG, EXIT_OK, main
from ekg_axis.config import RunConfig, parse_config
from ekg_axis.errors import ConfigurationError
from ekg_axis.io import read_csv

SMALL = """[grid]
n_cells = 64

[evolution]
t_end = 2.0

[diagnostics]
cone_apexes = 1.0
diamond = -1.5, 1.5, 1.0

[output]
snapshot_every = 8
"""


def _write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_minimal_file_gets_defaults(tmp_path):
    cfg = parse_config(_write(tmp_path, "[grid]\nn_cells = 512\n"))
    ref = RunConfig(n_cells=512)
    for key in ("r_max", "courant", "t_end", "output_every", "cone_apexes", "flux_slabs", "monitor_apex",
                "monitor_scales", "diamond", "out_dir", "snapshot_every", "chart_stride", "data"):
        assert getattr(cfg, key) == getattr(ref, key)
    assert cfg.mass_param == 1.0 and cfg.deterministic


def test_shipped_configs_parse():
    root = Path(__file__).resolve().parent.parent / "configs"
    assert parse_config(root / "canonical.ini").n_cells == 512
    assert parse_config(root / "vacuum.ini").data.a_gamma == 0.0


@pytest.mark.parametrize("text, message", [
    ("[grid]\nn_cells = 64\n[evolution]\ncourant = 1.5\n", r"courant must lie in \(0, 1\]"),
    ("[grid]\nn_cells = 64\n[evolution]\nlapse = 2\n", r"unknown key 'lapse' in \[evolution\] at line 4"),
    ("[grid]\nr_max = 20\n", r"missing required key 'n_cells'"),
    ("[grid]\nn_cells = lots\n", r"malformed value for 'n_cells' at line 2"),
    ("[grid]\nn_cells = 500\n", r"16 times a power of two"),
    ("[grid]\nn_cells = 64\n[solver]\nx = 1\n", r"unknown section \[solver\]"),
    ("[grid]\nn_cells = 64\n[evolution]\ndeterministic = false\n", r"deterministic must be true"),
    ("[grid]\nn_cells = 64\n[data]\ngamma1_amp = -0.1\n", r"gamma1_amp must be >= 0"),
    ("[grid]\nn_cells = 64\n[diagnostics]\nflux_slabs = 3:1\n", r"flux slab"),
])
def test_configuration_errors(tmp_path, text, message):
    with pytest.raises(ConfigurationError, match=message):
        parse_config(_write(tmp_path, text))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigurationError, match="not found"):
        parse_config(tmp_path / "absent.ini")


@pytest.mark.parametrize("text", [
    "[grid]\nn_cells = 64\n[evolution]\ncourant = 1.5\n",
    "[grid]\nn_cells = 64\n[evolution]\nlapse = 2\n",
    "[grid]\nn_cells = 64\n[data]\na_phi = 5.0\n",
])
def test_cli_configuration_exit_code(tmp_path, text, capsys):
    assert main(["evolve", "--config", str(_write(tmp_path, text)), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert err.startswith("configuration error")


def test_cd1_violation_message(tmp_path, capsys):
    code = main(["evolve", "--config", str(_write(tmp_path, "[grid]\nn_cells = 64\n[data]\na_phi = 5.0\n")),
                 "--out", str(tmp_path / "o")])
    assert code == EXIT_CONFIG
    assert "(cd1) violated at r = " in capsys.readouterr().err


def test_init_evolve_chart_export(tmp_path):
    cfg = str(_write(tmp_path, SMALL))
    out = tmp_path / "out"
    for cmd in ("init", "evolve", "chart", "export"):
        assert main([cmd, "--config", cfg, "--out", str(out)]) == EXIT_OK, cmd
    init = read_csv(out / "initial_data.csv")
    assert list(init) == ["r", "gamma0", "gamma1", "phi0", "phi1", "beta0", "alpha0"]
    snaps = sorted(out.glob("snap_t*.csv"))
    assert (out / "snap_t0.000000.csv").exists() and (out / "snap_t2.000000.csv").exists()
    for name in ("energy.csv", "bounds.txt", "chart.csv", "cone_chart_t1.csv", "lattice.csv", "chart_bounds.txt"):
        assert (out / name).exists(), name
    lines = (out / "export_long.csv").read_text().splitlines()
    assert lines[0] == "t,r,field,value"
    assert len(lines) - 1 == len(snaps) * 65 * 6
    t, r, field, value = lines[1].split(",")
    first = read_csv(snaps[0])
    assert field == "gamma" and float(value) == first["gamma"][0]


def test_export_without_snapshots(tmp_path):
    cfg = str(_write(tmp_path, SMALL))
    assert main(["export", "--config", cfg, "--out", str(tmp_path / "empty")]) == EXIT_CONFIG


def test_outputs_are_byte_identical(tmp_path):
    cfg = str(_write(tmp_path, SMALL))
    for d in ("a", "b"):
        assert main(["evolve", "--config", cfg, "--out", str(tmp_path / d)]) == EXIT_OK
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert files
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name


def test_verify_vacuum_is_exact(tmp_path, capsys):
    text = "[grid]\nn_cells = 64\n[data]\na_gamma = 0\na_phi = 0\n"
    assert main(["verify", "--config", str(_write(tmp_path, text)), "--out", str(tmp_path / "v")]) == EXIT_OK
    table = (tmp_path / "v" / "verify.txt").read_text()
    assert "FAIL" not in table and "exact" in table


def test_console_script_runs(tmp_path):
    cfg = str(_write(tmp_path, SMALL))
    proc = subprocess.run([sys.executable, "-m", "ekg_axis.cli", "init", "--config", cfg, "--out",
                           str(tmp_path / "s")], capture_output=True, text=True)
    assert proc.returncode == EXIT_OK, proc.stderr
    assert np.isfinite(read_csv(tmp_path / "s" / "initial_data.csv")["beta0"]).all()

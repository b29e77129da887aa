import subprocess
import sys

import numpy as np
import pytest

from crystalcat import io as cio
from crystalcat.cli import main, shipped_config
from crystalcat.gaussian import OverlapSeries

SHIPPED = ["equilibrium_linear", "equilibrium_zigzag", "equilibrium_tria", "fig2", "fig3", "figA",
           "fig4a", "fig4b", "fig4c", "fig5", "fig6", "fig7", "fig8", "ramsey"]


def write(tmp_path, text, name="run.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


@pytest.mark.parametrize("name", SHIPPED)
def test_shipped_configs_exist(name):
    assert shipped_config(name).is_file()


def test_equilibrium_linear(tmp_path):
    assert main(["equilibrium", "--config", "equilibrium_linear", "--out", str(tmp_path)]) == 0
    meta, cols, rows = cio.read_table(tmp_path / "equilibrium.csv")
    assert cols == ["index", "x", "y", "spin"]
    xs = sorted(float(r[1]) for r in rows)
    assert np.allclose(xs, [-(5 / 4) ** (1 / 3), 0.0, (5 / 4) ** (1 / 3)], atol=1e-12)
    assert meta["structure"] == "LIN X"
    assert meta["tool"].startswith("crystalcat") and len(meta["config_sha256"]) == 64
    assert (tmp_path / "equilibrium.json").is_file()


def test_equilibrium_zigzag(tmp_path, capsys):
    assert main(["equilibrium", "--config", "equilibrium_zigzag", "--out", str(tmp_path)]) == 0
    assert "ZZ X" in capsys.readouterr().out


def test_malformed_config_exit_code(tmp_path, capsys):
    path = write(tmp_path, "alpha: [1, 2\n")
    assert main(["equilibrium", "--config", path, "--out", str(tmp_path)]) == 2
    path = write(tmp_path, "alpha: 1.5\nbogus: 1\n")
    assert main(["equilibrium", "--config", path, "--out", str(tmp_path)]) == 2
    path = write(tmp_path, "command: echo\ncases: [{nu_y_khz: -5}]\n")
    assert main(["echo", "--config", path, "--out", str(tmp_path)]) == 2
    assert "config error" in capsys.readouterr().err


def test_wrong_command_for_config(tmp_path):
    assert main(["modes", "--config", "fig3", "--out", str(tmp_path)]) == 2


def test_numerical_failure_exit_code(tmp_path, capsys):
    # at the critical ratio the linear chain has a vanishing mode, which the harmonic model refuses
    path = write(tmp_path, "command: echo\nnu_x_khz: 500\ncases: [{nu_y_khz: 774.5966692414834, delta_nu_y_khz: 0.0}]\n")
    assert main(["echo", "--config", path, "--out", str(tmp_path)]) == 3
    assert "numerical failure" in capsys.readouterr().err


def test_echo_and_spectrum_from_file(tmp_path):
    path = write(tmp_path, "command: echo\nsvg: false\ntime: {duration: 50, samples: 512}\n"
                           "cases: [{nu_y_khz: 775.0, delta_nu_y_khz: 10.0}]\n")
    assert main(["echo", "--config", path, "--out", str(tmp_path)]) == 0
    series = cio.read_series(tmp_path / "echo_0.csv")
    assert isinstance(series, OverlapSeries) and len(series) == 512
    assert abs(series.values[0] - 1) < 1e-9
    _, cols, rows = cio.read_table(tmp_path / "echo_0.csv")
    assert cols == ["t_dimensionless", "t_us", "re_I", "im_I", "abs_I"]
    assert float(rows[1][1]) == pytest.approx(float(rows[1][0]) / (2 * np.pi * 500e3) * 1e6)
    spec_cfg = write(tmp_path, f"command: spectrum\nsvg: false\ninputs: ['{tmp_path / 'echo_0.csv'}']\n", "spec.yaml")
    assert main(["spectrum", "--config", spec_cfg, "--out", str(tmp_path)]) == 0
    meta, cols, rows = cio.read_table(tmp_path / "spectrum_0.csv")
    assert cols == ["omega", "f_khz", "magnitude"] and meta["window"] == "none"


def test_ramsey_command(tmp_path):
    path = write(tmp_path, "command: ramsey\ntime: {duration: 20, samples: 64}\n"
                           "cases: [{nu_y_khz: 773.5, delta_nu_y_khz: 10.0}]\n")
    assert main(["ramsey", "--config", path, "--out", str(tmp_path)]) == 0
    _, cols, rows = cio.read_table(tmp_path / "ramsey_0.csv")
    p = np.array([[float(r[2]), float(r[3])] for r in rows])
    assert cols[2:] == ["P1", "P2"] and np.all((p >= 0) & (p <= 1))
    assert p[0] == pytest.approx([1.0, 0.5])


def test_modes_and_small_stability(tmp_path):
    path = write(tmp_path, "command: modes\nalpha_range: [1.2, 2.0]\npoints: 9\n")
    assert main(["modes", "--config", path, "--out", str(tmp_path)]) == 0
    assert (tmp_path / "modes.svg").is_file()
    path = write(tmp_path, "command: stability\nspins: outer\nresolution: 6\n", "s.yaml")
    assert main(["stability", "--config", path, "--out", str(tmp_path), "--seed", "3"]) == 0
    meta, cols, rows = cio.read_table(tmp_path / "diagram.csv")
    assert cols == ["alpha", "dalpha", "bitmask"] and len(rows) == 36
    assert meta["spins"] == "egg"
    assert (tmp_path / "boundaries.csv").is_file() and (tmp_path / "diagram.svg").is_file()


def test_deterministic_output(tmp_path):
    for sub in ("a", "b"):
        assert main(["equilibrium", "--config", "equilibrium_tria", "--out", str(tmp_path / sub)]) == 0
    assert (tmp_path / "a" / "equilibrium.csv").read_text() == (tmp_path / "b" / "equilibrium.csv").read_text()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "crystalcat", "equilibrium", "--config", "equilibrium_linear",
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr


def test_config_hash_is_order_independent():
    assert cio.config_hash({"a": 1, "b": [1, 2]}) == cio.config_hash({"b": [1, 2], "a": 1})

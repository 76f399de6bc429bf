"""Command-line interface: config parsing, outputs, exit codes, determinism."""

import csv

import numpy as np
import pytest

from poromix.cli import (
    EXIT_BAND,
    EXIT_CONFIG,
    EXIT_OK,
    ConfigError,
    law_from_config,
    load_config,
    main,
    material_from_config,
)


def write_config(path, text):
    path.write_text(text)
    return str(path)


MANDEL_SHORT = """
[mandel]
t_end = 0.03
midline_times = 0.03
[mesh]
nx = 4
ny = 4
"""


def test_config_loading(tmp_path):
    cfg = load_config(write_config(tmp_path / "a.ini", "[mesh]\nnx = 4\n"))
    assert cfg.getint("mesh", "nx") == 4
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.ini"))
    with pytest.raises(ConfigError):
        load_config(write_config(tmp_path / "b.ini", "nx = 4\n"))  # no section


def test_material_from_config(tmp_path):
    cfg = load_config(
        write_config(tmp_path / "m.ini", "[material]\ne = 1000\nnu = 0.3333333333333333\n")
    )
    params = material_from_config(cfg)
    assert params.lam == pytest.approx(750.0)
    assert params.mu == pytest.approx(375.0)
    cfg2 = load_config(write_config(tmp_path / "m2.ini", "[material]\nlam = 2\nmu = 3\n"))
    assert material_from_config(cfg2).lam == 2.0
    bad = load_config(write_config(tmp_path / "m3.ini", "[material]\nlam = x\n"))
    with pytest.raises(ConfigError):
        material_from_config(bad)


def test_law_from_config(tmp_path):
    cfg = load_config(
        write_config(tmp_path / "l.ini", "[permeability]\nlaw = exp\nk0 = 0.2\nk2 = 0.5\n")
    )
    law = law_from_config(cfg)
    assert law.variant == "exponential"
    assert (law.k0, law.k2) == (0.2, 0.5)
    assert law_from_config(cfg, override="kozeny").variant == "kozeny"
    with pytest.raises(ConfigError):
        law_from_config(cfg, override="cubic")


def test_convergence_band_pass(tmp_path):
    config = write_config(
        tmp_path / "c.ini",
        "[run]\nlevels = 3\nrate_band_lo = 0.3\nrate_band_hi = 1.7\n",
    )
    out = tmp_path / "out"
    code = main(["convergence", "--config", config, "--degree", "0", "--out", str(out)])
    assert code == EXIT_OK
    with open(out / "convergence.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][0] == "level"
    assert len(rows) == 4


def test_convergence_band_failure(tmp_path):
    config = write_config(
        tmp_path / "c.ini",
        "[run]\nlevels = 2\nrate_band_lo = 0.99\nrate_band_hi = 1.01\n",
    )
    code = main(["convergence", "--config", config, "--degree", "0",
                 "--out", str(tmp_path / "out")])
    assert code == EXIT_BAND


def test_convergence_levels_usage_error(tmp_path):
    config = write_config(tmp_path / "c.ini", "[run]\nlevels = 1\n")
    code = main(["convergence", "--config", config, "--out", str(tmp_path / "out")])
    assert code == EXIT_CONFIG
    assert not (tmp_path / "out").exists()      # no partial outputs


def test_convergence_deterministic_output(tmp_path):
    config = write_config(tmp_path / "c.ini", "[run]\nlevels = 2\n")
    outs = []
    for name in ("out1", "out2"):
        main(["convergence", "--config", config, "--degree", "0",
              "--out", str(tmp_path / name)])
        outs.append((tmp_path / name / "convergence.csv").read_bytes())
    assert outs[0] == outs[1]


def test_mandel_writes_both_variants(tmp_path, capsys):
    config = write_config(tmp_path / "m.ini", MANDEL_SHORT)
    out = tmp_path / "out"
    code = main(["mandel", "--config", config, "--out", str(out)])
    assert code == EXIT_OK
    names = sorted(p.name for p in out.iterdir())
    assert names == [
        "mandel_midline_constant_0.03.csv",
        "mandel_midline_scaled-exp_0.03.csv",
        "mandel_transients_constant.csv",
        "mandel_transients_scaled-exp.csv",
    ]
    assert "summary:" in capsys.readouterr().out
    with open(out / "mandel_transients_constant.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][0] == "t"
    assert len(rows) == 4                       # 3 steps + header


def test_mandel_single_variant_unsuffixed(tmp_path):
    config = write_config(tmp_path / "m.ini", MANDEL_SHORT)
    out = tmp_path / "out"
    code = main(["mandel", "--config", config, "--law", "constant", "--out", str(out)])
    assert code == EXIT_OK
    assert (out / "mandel_transients.csv").is_file()


def test_mandel_zero_load(tmp_path):
    config = write_config(
        tmp_path / "m.ini", MANDEL_SHORT.replace("[mandel]", "[mandel]\nf = 0")
    )
    out = tmp_path / "out"
    code = main(["mandel", "--config", config, "--law", "constant", "--out", str(out)])
    assert code == EXIT_OK
    data = np.genfromtxt(out / "mandel_transients.csv", delimiter=",", names=True)
    for name in data.dtype.names[1:]:
        assert np.abs(data[name]).max() == 0.0


def test_mandel_rejects_unsupported_law(tmp_path):
    config = write_config(tmp_path / "m.ini", MANDEL_SHORT)
    code = main(["mandel", "--config", config, "--law", "kozeny",
                 "--out", str(tmp_path / "out")])
    assert code == EXIT_CONFIG


def test_solve_zero_problem(tmp_path):
    config = write_config(
        tmp_path / "s.ini",
        "[run]\nproblem = zero\n[mesh]\nnx = 2\nny = 2\n"
        "[material]\nlam = 1\nmu = 1\nc0 = 0.25\nalpha = 0.25\n"
        "[permeability]\nlaw = constant\nkappa0 = 0.2\n",
    )
    out = tmp_path / "out"
    code = main(["solve", "--config", config, "--out", str(out)])
    assert code == EXIT_OK
    with open(out / "coefficients.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["field", "index", "value"]
    assert all(float(r[2]) == 0.0 for r in rows[1:])
    vtk = (out / "solution.vtk").read_text().splitlines()
    assert vtk[0].startswith("# vtk DataFile")
    assert "DATASET UNSTRUCTURED_GRID" in vtk
    assert any(line.startswith("POINTS 9 ") for line in vtk)
    assert any(line.startswith("CELLS 8 ") for line in vtk)


def test_solve_manufactured_matches_convergence_level(tmp_path, capsys):
    """Cross-check: the one-shot solve reproduces the refinement-study error."""
    out = tmp_path / "out"
    code = main(["solve", "--degree", "0", "--out", str(out)])
    assert code == EXIT_OK
    text = capsys.readouterr().out
    line = next(l for l in text.splitlines() if l.startswith("errors:"))
    e1_p = float(line.split("e1_p=")[1].split()[0])
    assert e1_p == pytest.approx(0.41382, rel=1e-3)     # 8x8 level regression


def test_solve_malformed_config_no_partial_outputs(tmp_path):
    config = write_config(tmp_path / "s.ini", "[run]\nproblem = banana\n")
    out = tmp_path / "out"
    code = main(["solve", "--config", config, "--out", str(out)])
    assert code == EXIT_CONFIG
    assert not out.exists()


def test_unknown_command_rejected():
    with pytest.raises(SystemExit):
        main(["frobnicate"])

import math

import pytest
import yaml

from dualhelm import __version__
from dualhelm.cli import main
from dualhelm.config import build_config, load_yaml, parse_config
from dualhelm.errors import ParseError, ValidationError
from dualhelm.fieldio import read_field

SMALL = {
    "model": {"N": 3, "alpha": -1.0, "beta": 0.0, "p": 5.0},
    "grid": {"n": 32, "wavelengths": 4},
}
BUMP = {
    "kind": "gaussian_bumps",
    "centers": [[0.3, 0.2, 0.1]],
    "heights": [1.0],
    "widths": [0.5],
    "floor": 0.3,
}


def _write(tmp_path, doc, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(doc))
    return p


def _run(tmp_path, mode, doc, *extra):
    cfg = _write(tmp_path, doc)
    out = tmp_path / "out"
    return main([mode, "--config", str(cfg), "--out", str(out), *extra]), out


def test_minimal_solve_config_gets_defaults():
    cfg = build_config({**SMALL, "weight": BUMP}, mode="solve")
    assert cfg.eps_list == [1.0]
    assert cfg.solver.tol == 1e-7 and cfg.solver.max_iter == 5000
    assert cfg.eta == pytest.approx(0.02)
    assert cfg.output["label"] == "solve"
    assert cfg.resolved["model"]["regime"] == "A"


def test_default_grid_is_eight_wavelengths():
    cfg = build_config({"model": SMALL["model"]}, mode="limit")
    assert cfg.grid.n == 64
    assert cfg.grid.L == pytest.approx(2 * math.pi * math.sqrt(64.5))


def test_window_violation_message():
    with pytest.raises(ValidationError, match=r"model\.p: .*\(4, ∞\) for N=3"):
        build_config({"model": {"N": 3, "alpha": -1, "beta": 0, "p": 3}}, mode="solve")


def test_double_root_rejected():
    with pytest.raises(ValidationError, match="DoubleRoot"):
        build_config({"model": {"N": 3, "alpha": 1, "beta": -2, "p": 5}}, mode="solve")


def test_parse_error_has_line():
    with pytest.raises(ParseError) as info:
        load_yaml("model:\n  N: 3\n  alpha: [1, 2\nweight: {}\n")
    assert info.value.line is not None and str(info.value).startswith(f"line {info.value.line}:")


def test_sweep_exclusivity_and_k_list():
    with pytest.raises(ValidationError, match="sweep"):
        build_config({**SMALL, "weight": BUMP, "sweep": {"eps_list": [0.5], "k_list": [2]}}, mode="concentration")
    cfg = build_config({**SMALL, "weight": BUMP, "sweep": {"k_list": [4, 8]}}, mode="concentration")
    assert cfg.eps_list == [0.25, 0.125]


def test_constant_weight_rejected_for_concentration():
    with pytest.raises(ValidationError, match="constant"):
        build_config({**SMALL, "sweep": {"eps_list": [0.5]}}, mode="concentration")


@pytest.mark.parametrize(
    "doc",
    [
        {"model": {"N": 3, "alpha": -1, "beta": 0}},
        {**SMALL, "grid": {"n": "many"}},
        {**SMALL, "solver": {"tol": -1}},
        {**SMALL, "bogus": {}},
        {**SMALL, "output": {"formats": ["xml"]}},
    ],
)
def test_invalid_configs(doc):
    with pytest.raises(ValidationError):
        build_config(doc, mode="limit")


def test_limit_run_outputs(tmp_path, capsys):
    doc = dict(SMALL)
    cfg_path = _write(tmp_path, doc)
    before = cfg_path.read_bytes()
    status = main(["limit", "--config", str(cfg_path), "--out", str(tmp_path / "out"), "--label", "ref"])
    assert status == 0
    out = tmp_path / "out"
    names = {p.name for p in out.iterdir()}
    assert {"ref_summary.yaml", "ref_report.yaml", "ref_field_v.bin", "ref_field_u.bin", "ref_trace.csv"} <= names
    summary = yaml.safe_load((out / "ref_summary.yaml").read_text())
    assert summary["version"] == __version__ and summary["status"] == 0
    assert summary["config"]["solver"]["memory"] == 8
    assert summary["config"]["grid"]["n"] == 32
    assert summary["results"]["c0"] > 0
    assert read_field(out / "ref_field_v.bin").grid.n == 32
    assert cfg_path.read_bytes() == before


def test_concentration_constant_weight_exit_1(tmp_path, capsys):
    status, _ = _run(tmp_path, "concentration", {**SMALL, "sweep": {"eps_list": [0.5]}})
    assert status == 1
    assert "constant" in capsys.readouterr().err


def test_invalid_model_exit_1(tmp_path, capsys):
    status, _ = _run(tmp_path, "solve", {"model": {"N": 3, "alpha": -1, "beta": 0, "p": 3}})
    assert status == 1
    assert "(4, ∞)" in capsys.readouterr().err


def test_parse_error_exit_1(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text("model: {N: 3\n")
    assert main(["limit", "--config", str(p)]) == 1
    assert "line" in capsys.readouterr().err


def test_missing_file_exit_1(tmp_path):
    assert main(["limit", "--config", str(tmp_path / "nope.yaml")]) == 1


def test_non_convergence_exit_2(tmp_path):
    status, out = _run(tmp_path, "limit", {**SMALL, "solver": {"max_iter": 2}})
    assert status == 2
    assert (out / "limit_summary.yaml").exists() and (out / "limit_field_v.bin").exists()


def test_csv_outputs_deterministic(tmp_path):
    doc = {**SMALL, "weight": BUMP, "sweep": {"eps_list": [0.5, 0.25]}}
    _, out1 = _run(tmp_path, "concentration", doc, "--label", "a")
    _, out2 = _run(tmp_path, "concentration", doc, "--label", "b")
    assert (out1 / "a_concentration.csv").read_bytes() == (out2 / "b_concentration.csv").read_bytes()


def test_energy_comparison_run(tmp_path):
    status, out = _run(tmp_path, "energy-comparison", {**SMALL, "weight": BUMP, "sweep": {"eps_list": [0.5, 0.25]}})
    assert status == 0
    rows = (out / "energy-comparison_energy.csv").read_text().splitlines()
    assert rows[0].startswith("eps,c_eps,c0,gap") and len(rows) == 3


def test_kernel_bounds_run(tmp_path):
    status, out = _run(tmp_path, "kernel-bounds", {**SMALL, "experiment": {"dimensions": [2, 3]}})
    assert status == 0
    assert (out / "kernel-bounds_kernel_bounds_N2.csv").exists()
    summary = yaml.safe_load((out / "kernel-bounds_summary.yaml").read_text())
    assert summary["verdicts"]["N3"]["outer_pass"] is True


def test_offdiag_run(tmp_path):
    doc = {**SMALL, "experiment": {"r_list": [2.0, 3.0, 4.0, 6.0], "radius": 0.5}}
    status, out = _run(tmp_path, "offdiag", doc)
    assert status == 0
    assert (out / "offdiag_offdiag.csv").read_text().startswith("r,interaction,bound_rate")


def test_shipped_configs_parse():
    from pathlib import Path

    root = Path(__file__).resolve().parents[1] / "configs"
    modes = {
        "limit": "limit",
        "solve": "solve",
        "energy": "energy-comparison",
        "concentration": "concentration",
        "multiplicity": "multiplicity",
        "offdiag": "offdiag",
        "kernel_bounds": "kernel-bounds",
    }
    for stem, mode in modes.items():
        cfg = parse_config(root / f"{stem}.yaml", mode=mode)
        assert cfg.mode == mode

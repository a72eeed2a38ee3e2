"""
Tests for configuration, output writing and the experiment steps.
"""

import json
from pathlib import Path

import pandas as pd
import pytest

import bernoulli_lab
from bernoulli_lab.main import (
    run_annulus,
    run_check,
    run_family_sweep,
    run_oracle1d,
    run_solve,
    run_sweep1d,
)
from bernoulli_lab.exceptions import ConfigurationError, ConvergenceError
from bernoulli_lab.utils.config import DEFAULT_CONFIG, deep_merge, load_config, parse_document
from bernoulli_lab.utils.io import MANIFEST, OutputWriter, sha256_file

SQUARE = {"kind": "rectangle", "params": {"xmin": 0.0, "xmax": 1.0, "ymin": 0.0, "ymax": 1.0}}
INTERVAL = {"kind": "interval", "params": {"a": 0.0, "b": 1.0}}
CONSTANT = {"kind": "constant", "params": {"value": 1.0}}


def _config(tmp_path, **overrides):
    return load_config(overrides={"output_dir": str(tmp_path), **overrides})


def test_default_config():
    """Test that the defaults load and share lambda with the solver."""
    config = load_config()
    assert config.h == pytest.approx(1.0 / 32.0)
    assert config.lam == 1.0
    assert config.solver.lam == 1.0
    assert config.threads is None
    assert config.domain is None


def test_default_config_ships_inside_package():
    """Test that the defaults are package data, not a file beside the checkout."""
    assert DEFAULT_CONFIG.is_file()
    package_dir = Path(bernoulli_lab.__file__).resolve().parent
    assert Path(str(DEFAULT_CONFIG)).resolve().parent.parent == package_dir
    assert "acceptance:" in DEFAULT_CONFIG.read_text(encoding="utf-8")


def test_lambda_override_reaches_solver():
    """Test that a command-line lambda also sets the solver's."""
    config = load_config(overrides={"lambda": 2.0})
    assert config.lam == 2.0
    assert config.solver.lam == 2.0


def test_config_file_merges(tmp_path):
    """Test that a user file overrides nested defaults only where set."""
    config_file = tmp_path / "config.yaml"
    config_file.write_text("solver:\n  max_sweeps: 7\nsweep:\n  tstep: 0.1\n")
    config = load_config(config_file)
    assert config.solver.max_sweeps == 7
    assert config.solver.tolerance == pytest.approx(1e-10)
    assert config.sweep.tstep == pytest.approx(0.1)
    assert config.sweep.tmin == pytest.approx(0.1)


def test_invalid_config_names_field():
    """Test that validation failures become configuration errors naming the field."""
    with pytest.raises(ConfigurationError, match="h"):
        load_config(overrides={"h": -1.0})
    with pytest.raises(ConfigurationError, match="domain"):
        load_config(overrides={"domain": {}})
    with pytest.raises(ConfigurationError):
        load_config("missing.yaml")


def test_parse_document(tmp_path):
    """Test inline JSON, files and non-mapping input."""
    assert parse_document('{"kind": "interval"}') == {"kind": "interval"}
    path = tmp_path / "domain.json"
    path.write_text(json.dumps(SQUARE))
    assert parse_document(str(path)) == SQUARE
    assert parse_document(None) is None
    with pytest.raises(ConfigurationError):
        parse_document("[1, 2]")


def test_deep_merge():
    """Test recursive merging with None values skipped."""
    merged = deep_merge({"a": {"b": 1, "c": 2}, "d": 3}, {"a": {"b": 5}, "d": None})
    assert merged == {"a": {"b": 5, "c": 2}, "d": 3}


def test_output_writer_manifest(tmp_path):
    """Test that the manifest lists every file with its hash."""
    writer = OutputWriter(tmp_path / "out", seed=3)
    report = writer.write_json("report.json", {"value": 1.5, "missing": float("nan")})
    frame = writer.write_frame("table.csv", pd.DataFrame({"x": [0.1, 0.2]}))
    manifest = json.loads(writer.finalize().read_text())
    assert manifest["seed"] == 3
    assert manifest["files"] == {"report.json": sha256_file(report), "table.csv": sha256_file(frame)}
    assert json.loads(report.read_text())["missing"] is None


def test_run_solve_single(tmp_path):
    """Test the single solve outputs."""
    config = _config(tmp_path, domain=SQUARE, datum=CONSTANT, h=0.25)
    report = run_solve(config)
    assert report["converged"]
    for name in ("config.json", "field.csv", "report.json", "diagnostics.json", MANIFEST):
        assert (tmp_path / name).exists()
    field = pd.read_csv(tmp_path / "field.csv")
    assert list(field.columns) == ["ix", "iy", "x", "y", "value"]
    assert len(field) == 25
    diagnostics = json.loads((tmp_path / "diagnostics.json").read_text())
    assert diagnostics["interior_area"] == pytest.approx(9 * 0.0625)
    assert diagnostics["interior_gradient_max"] == pytest.approx(0.0, abs=1e-9)
    assert diagnostics["free_boundary"]["count"] == 0


def test_run_solve_extremes(tmp_path):
    """Test that extremes mode writes both fields."""
    config = _config(tmp_path, domain=SQUARE, datum=CONSTANT, h=0.25, mode="extremes")
    report = run_solve(config)
    assert report["ordered"]
    assert report["gap"] == pytest.approx(0.0, abs=1e-6)
    assert (tmp_path / "field_lower.csv").exists()
    assert (tmp_path / "field_upper.csv").exists()


def test_run_solve_non_convergence(tmp_path):
    """Test that a failed solve still writes its report before raising."""
    config = _config(tmp_path, domain=SQUARE, datum=CONSTANT, h=0.25,
                     solver={"max_sweeps": 1, "harmonic_replacement": False})
    with pytest.raises(ConvergenceError):
        run_solve(config)
    assert json.loads((tmp_path / "report.json").read_text())["converged"] is False


def test_run_solve_needs_domain(tmp_path):
    """Test that a missing domain is a configuration error."""
    with pytest.raises(ConfigurationError):
        run_solve(_config(tmp_path, datum=CONSTANT))


def test_run_oracle1d():
    """Test the exact 1D descriptors."""
    minimizers = run_oracle1d(1.0, 0.25, 0.25, 1.0)
    assert len(minimizers) == 2
    assert all(m["energy"] == pytest.approx(1.0) for m in minimizers)
    with pytest.raises(ConfigurationError):
        run_oracle1d(1.0, -0.25, 0.25, 1.0)


def test_run_annulus():
    """Test the critical radius step."""
    result = run_annulus(2, 1.0, r=1.0)
    assert result["R"] == pytest.approx(1.763222834, abs=1e-9)
    assert result["value"] == pytest.approx(1.0)
    assert result["slope_at_R"] == pytest.approx(1.0)
    with pytest.raises(ConfigurationError):
        run_annulus(1, 1.0)


def test_run_sweep1d(tmp_path):
    """Test the exact sweep outputs and the jump at t = 1/4."""
    jumps = run_sweep1d(_config(tmp_path), 1.0)
    frame = pd.read_csv(tmp_path / "sweep1d.csv")
    assert list(frame.columns) == ["t", "count", "gap_mid", "energy"]
    assert len(jumps["intervals"]) == 1
    lo, hi = jumps["intervals"][0]
    assert lo < 0.25 < hi


def test_run_check_comparison(tmp_path):
    """Test the comparison check on a coarse square."""
    config = _config(tmp_path, domain=SQUARE, datum={"kind": "constant", "params": {"value": 0.5}}, h=0.25)
    report = run_check(config, "comparison")
    assert report["pass"]
    assert json.loads((tmp_path / "report.json").read_text())["name"] == "comparison"


def test_run_check_errors(tmp_path):
    """Test unknown kinds and a restriction check without a subdomain."""
    config = _config(tmp_path, domain=SQUARE, datum=CONSTANT, h=0.25)
    with pytest.raises(ConfigurationError):
        run_check(config, "unknown")
    with pytest.raises(ConfigurationError):
        run_check(config, "restriction")


def test_run_family_sweep(tmp_path):
    """Test the family sweep outputs on a coarse interval."""
    family = {"base": {"kind": "constant", "params": {"value": 0.0}}}
    config = _config(tmp_path, domain=INTERVAL, family=family, h=0.25, threads=1,
                     sweep={"tmin": 0.2, "tmax": 0.6, "tstep": 0.2})
    run_family_sweep(config, progress=False)
    frame = pd.read_csv(tmp_path / "sweep.csv")
    assert frame["t"].tolist() == pytest.approx([0.2, 0.4, 0.6])
    diagnostics = json.loads((tmp_path / "diagnostics.json").read_text())
    assert "monotonicity_failures" in diagnostics
    assert (tmp_path / "jumps.json").exists()
    bound = diagnostics["datum_bound"]
    assert bound["sup"] == pytest.approx(0.6)
    assert bound["top_member_sup"] == pytest.approx(0.6)
    assert bound["top_member_dirichlet"] == pytest.approx(0.0, abs=1e-12)
    assert bound["declared"] is None


def test_run_check_equicontinuity_records_datum_bound(tmp_path):
    """Test that the equicontinuity report carries the datum sup and Dirichlet proxy."""
    datum = {"kind": "linear", "params": {"value": 0.2, "gradient": [0.4, 0.0]}}
    config = _config(tmp_path, domain=SQUARE, datum=datum, h=0.25,
                     check={"scales": [0.5, 1.0], "deltas": [0.25, 0.5]})
    report = run_check(config, "equicontinuity")
    assert report["params"]["datum_sup"] == pytest.approx(0.6)
    assert report["params"]["datum_dirichlet"] > 0
    assert (tmp_path / "curves.csv").exists()

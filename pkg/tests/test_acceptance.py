"""
Tests for the acceptance suite runner and its fast criteria.
"""

import json

import pytest

from bernoulli_lab.acceptance import (
    CRITERIA,
    criterion_annulus,
    criterion_barrier,
    criterion_comparison,
    criterion_critical_radius,
    criterion_cut_paste,
    criterion_equicontinuity,
    criterion_free_boundary_gradient,
    criterion_holder,
    criterion_nonuniqueness_1d,
    required_holder_growth,
    run_acceptance,
    run_criterion,
)
from bernoulli_lab.utils.config import load_config


@pytest.fixture
def config(tmp_path):
    return load_config(overrides={"output_dir": str(tmp_path)})


@pytest.fixture
def small_config(tmp_path):
    return load_config(overrides={
        "output_dir": str(tmp_path),
        "acceptance": {
            "comparison_pairs": 2,
            "comparison_n": 16,
            "cutpaste_pairs": 5,
            "equicontinuity_n": 32,
            "barrier_n": 16,
        },
    })


def test_critical_radius_criterion(config):
    """Test that both critical radii match their references."""
    measured = criterion_critical_radius(config)
    assert measured["pass"]
    assert measured["R3"] == pytest.approx((1 + 5 ** 0.5) / 2, abs=1e-10)


def test_nonuniqueness_criterion(config):
    """Test the tie at t = 1/4 and the halving of its jump interval."""
    measured = criterion_nonuniqueness_1d(config)
    assert measured["pass"]
    assert measured["count"] == 2
    assert measured["widths"][1] == pytest.approx(measured["widths"][0] / 2)


def test_run_criterion_records_errors(config):
    """Test that a raising criterion is errored rather than failed."""

    def criterion_broken(_):
        raise ValueError("bad input")

    result = run_criterion(5, criterion_broken, config)
    assert result.errored
    assert not result.passed
    assert result.name == "broken"
    assert result.message == "ValueError: bad input"


def test_run_acceptance_subset(config, tmp_path):
    """Test that only the selected criteria run and are written."""
    summary = run_acceptance(config, only=[1, 3], progress=False)
    assert summary["count"] == 2
    assert summary["passed"] == 2
    written = json.loads((tmp_path / "acceptance.json").read_text())
    assert [c["number"] for c in written["criteria"]] == [1, 3]
    assert [c["name"] for c in written["criteria"]] == ["critical_radius", "nonuniqueness_1d"]


def test_criteria_order():
    """Test that criteria keep their published numbering."""
    assert len(CRITERIA) == 9
    assert CRITERIA[0] is criterion_critical_radius
    assert CRITERIA[2] is criterion_nonuniqueness_1d


def test_annulus_criterion(config):
    """Test that the annulus error is small at n = 64 and shrinks by 1.5 per halving."""
    measured = criterion_annulus(config)
    assert measured["pass"]
    assert measured["errors"]["64"] <= 0.05
    assert len(measured["ratios"]) == 2
    assert all(ratio >= 1.5 for ratio in measured["ratios"])


def test_comparison_criterion(small_config):
    """Test that shifted data give ordered extremes on both domains."""
    measured = criterion_comparison(small_config)
    assert measured["pass"]
    assert measured["pairs"] == 2
    assert measured["worst_violation"] <= 1e-8


def test_cut_paste_criterion(small_config):
    """Test that min and max never cost more than the pair, and the two constant-datum solves tie."""
    measured = criterion_cut_paste(small_config)
    assert measured["pass"]
    assert measured["worst_slack"] >= -1e-12
    assert measured["energy_max_minus_lower"] <= 10 * small_config.solver.tolerance


def test_free_boundary_gradient_criterion(config):
    """Test that the slopes are exactly sqrt(lambda) in 1D and near one on the annulus."""
    measured = criterion_free_boundary_gradient(config)
    assert measured["pass"]
    assert all(s == pytest.approx(1.0, abs=1e-15) for s in measured["oracle_slopes_over_sqrt_lambda"])
    assert 0.8 <= measured["annulus"]["median"] <= 1.2


def test_equicontinuity_criterion(small_config):
    """Test that the family envelope is monotone and halves from the largest to the smallest delta."""
    measured = criterion_equicontinuity(small_config)
    assert measured["pass"]
    envelope = measured["envelope"]
    assert envelope[0] <= 0.5 * envelope[-1]


def test_holder_growth_threshold():
    """Test that the gamma = 0.95 threshold is the C^0.75 growth rate less 10 percent."""
    assert required_holder_growth([32, 64, 128]) == pytest.approx(0.9 * 4 ** 0.2)
    assert required_holder_growth([128, 32, 64]) == pytest.approx(0.9 * 4 ** 0.2)
    assert required_holder_growth([16, 32]) == pytest.approx(0.9 * 2 ** 0.2)
    assert required_holder_growth([32, 64, 128]) < 1.5


def test_holder_criterion(config):
    """Test that the 0.75 quotient stays flat and the 0.95 quotient grows at the forced rate."""
    measured = criterion_holder(config)
    assert measured["pass"]
    assert measured["required_growth"] == pytest.approx(0.9 * 4 ** 0.2)
    assert measured["spread_075"] <= 1.25
    assert measured["growth_095"] >= measured["required_growth"]
    assert measured["log_log_slopes"]["0.95"] < 0


def test_barrier_criterion(small_config):
    """Test that the passing radius is positive and stable under refinement."""
    measured = criterion_barrier(small_config)
    assert measured["pass"]
    small, fine = measured["largest_passing_rho"]
    assert small > 0 and fine > 0

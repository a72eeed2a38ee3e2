"""
Tests for boundary data, families and the empirical regularity estimators.
"""

import numpy as np
import pytest
from pydantic import ValidationError

from bernoulli_lab.components.boundary_data import (
    BoundaryDatum,
    DatumFamily,
    ModulusCurve,
    datum_h1_proxy,
    empirical_modulus,
    eval_datum,
    family_member,
    family_sup_bound,
    holder_seminorm,
    sample_datum,
)
from bernoulli_lab.components.energy import ScalarField
from bernoulli_lab.components.geometry import build_grid
from bernoulli_lab.exceptions import ConfigurationError


def test_datum_kinds():
    """Test evaluation of each closed-form rule."""
    power = BoundaryDatum(kind="power", params={"anchor": [0.0, 0.0], "exponent": 2.0, "coefficient": 0.5, "offset": 0.1})
    assert eval_datum(power, [1.0, 0.0]) == pytest.approx(0.6)

    step = BoundaryDatum(kind="radial-step", params={"center": [0.0, 0.0], "radius": 1.0, "inside": 2.0, "outside": 0.5})
    assert eval_datum(step, np.array([[0.5, 0.0], [2.0, 0.0]])).tolist() == [2.0, 0.5]

    table = BoundaryDatum(kind="table", params={"knots": [0.0, 1.0], "values": [0.0, 1.0]}, scale=2.0, shift=0.5)
    assert eval_datum(table, [0.25, 0.0]) == pytest.approx(1.0)


def test_negative_data_rejected():
    """Test that negative data fail at construction or at evaluation."""
    with pytest.raises(ValidationError):
        BoundaryDatum(kind="constant", params={"value": -1.0})
    sloped = BoundaryDatum(kind="linear", params={"value": 0.0, "gradient": [-1.0, 0.0]})
    with pytest.raises(ConfigurationError):
        eval_datum(sloped, [1.0, 0.0])
    signed = BoundaryDatum(kind="linear", params={"value": 0.0, "gradient": [-1.0, 0.0]}, nonnegative=False)
    assert eval_datum(signed, [1.0, 0.0]) == pytest.approx(-1.0)


def test_family_members():
    """Test the three family kinds and the parameter range."""
    base = BoundaryDatum(kind="constant", params={"value": 1.0}, shift=0.2)
    assert family_member(DatumFamily(base=base, kind="scaling"), 0.5).scale == pytest.approx(0.5)
    assert family_member(DatumFamily(base=base, kind="scaling"), 0.5).shift == pytest.approx(0.1)
    assert family_member(DatumFamily(base=base, rate=2.0), 0.25).shift == pytest.approx(0.7)
    for t in (0.0, 1.0):
        with pytest.raises(ValueError):
            family_member(DatumFamily(base=base), t)
    with pytest.raises(ValidationError):
        DatumFamily(base=base, kind="vertical-translation", rate=0.5)


def test_family_sup_bound(coarse_square):
    """Test the declared uniform bound of a family."""
    base = BoundaryDatum(kind="constant", params={"value": 0.0})
    fam = DatumFamily(base=base, bound=0.5)
    assert family_sup_bound(fam, coarse_square, [0.1, 0.4]) == pytest.approx(0.4)
    with pytest.raises(ConfigurationError):
        family_sup_bound(fam, coarse_square, [0.1, 0.9])


def test_sample_datum_only_on_boundary(coarse_square):
    """Test that sampling fills boundary cells and leaves the rest at zero."""
    g = BoundaryDatum(kind="constant", params={"value": 0.3})
    values = sample_datum(g, coarse_square)
    assert np.all(values[coarse_square.boundary] == 0.3)
    assert np.all(values[~coarse_square.boundary] == 0.0)
    sup, dirichlet = datum_h1_proxy(g, coarse_square)
    assert sup == pytest.approx(0.3)
    assert dirichlet == pytest.approx(0.0)


def test_empirical_modulus_of_linear_field(x_field):
    """Test omega(delta) = delta for u = x at lattice-aligned deltas."""
    curve = empirical_modulus(x_field, None, [0.25, 0.5, 1.0])
    assert np.allclose(curve.omegas, [0.25, 0.5, 1.0])
    assert curve.at(0.3) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        curve.at(0.1)
    with pytest.raises(ValueError):
        empirical_modulus(x_field, None, [0.5, 0.25])


def test_holder_seminorm_of_linear_field(x_field):
    """Test that u = x has Lipschitz seminorm 1 and bigger Hölder quotients below."""
    assert holder_seminorm(x_field, 1.0) == pytest.approx(1.0)
    assert holder_seminorm(x_field, 0.5) >= 1.0
    with pytest.raises(ValueError):
        holder_seminorm(x_field, 1.0, min_sep=0.1)
    with pytest.raises(ValueError):
        holder_seminorm(x_field, 1.5)


def test_modulus_curve_must_be_monotone():
    """Test ModulusCurve validation."""
    with pytest.raises(ValueError):
        ModulusCurve([0.1, 0.2], [0.5, 0.4])
    with pytest.raises(ValueError):
        ModulusCurve([0.2, 0.1], [0.1, 0.2])


def test_empirical_modulus_of_datum_uses_closure_values(unit_interval):
    """Test omega(0.25) = 0.5 for g(x) = sqrt(x) sampled on the closed interval."""
    grid = build_grid(unit_interval, 1.0 / 64.0)
    root = BoundaryDatum(kind="power", params={"anchor": [0.0], "exponent": 0.5})
    curve = empirical_modulus(root, grid.closure, [0.25], grid=grid)
    assert curve.omegas[0] == pytest.approx(0.5)
    # the default region is the boundary cells {0, 1}
    assert empirical_modulus(root, None, [1.0], grid=grid).omegas[0] == pytest.approx(1.0)


def test_modulus_monotone_under_region_inclusion(x_field):
    """Test that a larger region never has a smaller modulus."""
    grid = x_field.grid
    left = grid.closure & (grid.centers[..., 0] <= 0.5)
    deltas = [0.25, 0.5]
    inner = empirical_modulus(x_field, left, deltas).omegas
    outer = empirical_modulus(x_field, grid.closure, deltas).omegas
    assert np.all(inner <= outer + 1e-15)


def test_holder_seminorm_monotone_in_min_sep(coarse_square):
    """Test that raising the minimum separation never raises the seminorm."""
    values = np.where(coarse_square.closure, np.sqrt(np.abs(coarse_square.centers[..., 0])), 0.0)
    field = ScalarField(coarse_square, values)
    quotients = [holder_seminorm(field, 0.9, min_sep=sep) for sep in (0.25, 0.5, 0.75)]
    assert quotients[0] >= quotients[1] >= quotients[2]


def test_radial_harmonic_datum_extends_annulus_profile():
    """Test that the radial-harmonic datum matches 1 - log r / log R and clips at zero."""
    R = 1.7632228343518968
    g = BoundaryDatum(kind="radial-harmonic", params={"center": [0.0, 0.0], "inner": 1.0, "outer": R, "inside": 1.0, "outside": 0.0})
    points = np.array([[1.0, 0.0], [0.0, 1.3], [R, 0.0], [0.0, 2.0], [0.9, 0.0]])
    values = eval_datum(g, points)
    assert values[0] == pytest.approx(1.0)
    assert values[1] == pytest.approx(1.0 - np.log(1.3) / np.log(R))
    assert values[2] == pytest.approx(0.0, abs=1e-15)
    assert values[3] == 0.0
    assert values[4] > 1.0
    with pytest.raises(ValidationError):
        BoundaryDatum(kind="radial-harmonic", params={"center": [0.0, 0.0], "inner": 2.0, "outer": 1.0})

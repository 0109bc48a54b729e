import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ehkit.errors import DimensionMismatchError, InvalidArgumentError, InvariantViolationError
from ehkit.measure import (
    ClassicalObservable,
    Density,
    PartitionedMeasureSpace,
    inner_product,
    l1_distance,
    make_uniform_partition,
)


def test_uniform_partition_measures():
    assert np.array_equal(make_uniform_partition(4).cell_measure, [0.25] * 4)
    one = make_uniform_partition(1)
    assert one.n_cells == 1 and one.cell_measure[0] == 1.0
    big = make_uniform_partition(256)
    assert abs(big.cell_measure.sum() - 1) < 1e-12
    assert np.allclose(big.cell_measure, 1 / 256)


def test_zero_cells_rejected():
    with pytest.raises(InvalidArgumentError):
        make_uniform_partition(0)


def test_square_partition_needs_square_count():
    assert make_uniform_partition(16, "unit square").grid_shape == (4, 4)
    with pytest.raises(InvalidArgumentError):
        make_uniform_partition(10, "unit square")


def test_measure_space_invariants():
    with pytest.raises(InvariantViolationError):
        PartitionedMeasureSpace(np.array([0.5, 0.6]))
    with pytest.raises(InvariantViolationError):
        PartitionedMeasureSpace(np.array([1.5, -0.5]))
    sp = PartitionedMeasureSpace(np.array([0.2, 0.3, 0.5]))
    assert not sp.is_uniform()


def test_inner_product_hand_values():
    sp = make_uniform_partition(4)
    g = ClassicalObservable(np.array([1.0, 2.0, 3.0, 4.0]), sp)
    assert inner_product(Density.uniform(sp), g) == pytest.approx(2.5, abs=1e-15)
    assert inner_product(Density(np.array([4.0, 0, 0, 0]), sp), g) == pytest.approx(1.0, abs=1e-15)


def test_inner_product_with_one_is_mass():
    sp = make_uniform_partition(7)
    f = Density.from_values(np.arange(1, 8), sp)
    assert inner_product(f, ClassicalObservable.constant(1.0, sp)) == pytest.approx(1.0, abs=1e-12)


def test_inner_product_partition_mismatch():
    with pytest.raises(DimensionMismatchError):
        inner_product(Density.uniform(make_uniform_partition(4)), ClassicalObservable.constant(1, make_uniform_partition(5)))


def test_l1_distance_hand_values():
    sp = make_uniform_partition(4)
    f = Density(np.array([4.0, 0, 0, 0]), sp)
    assert l1_distance(f, f) == 0
    assert l1_distance(f, Density(np.array([0, 4.0, 0, 0]), sp)) == pytest.approx(2.0)
    assert l1_distance(Density(np.array([2.0, 2, 0, 0]), sp), Density(np.array([0, 0, 2.0, 2]), sp)) == pytest.approx(2.0)


def test_l1_distance_mismatch():
    with pytest.raises(DimensionMismatchError):
        l1_distance(Density.uniform(make_uniform_partition(2)), Density.uniform(make_uniform_partition(3)))


def test_density_invariants():
    sp = make_uniform_partition(4)
    with pytest.raises(InvariantViolationError):
        Density(np.array([2.0, 2.0, 2.0, 2.0]), sp)
    with pytest.raises(InvariantViolationError):
        Density(np.array([5.0, -1.0, 0, 0]), sp)
    with pytest.raises(InvalidArgumentError):
        Density.from_values(np.zeros(4), sp)
    with pytest.raises(InvariantViolationError):
        ClassicalObservable(np.array([1.0, np.inf, 0, 0]), sp)


def test_indicator_and_masses():
    sp = make_uniform_partition(8)
    f = Density.indicator([0, 1], sp)
    assert np.allclose(f.values, [4, 4, 0, 0, 0, 0, 0, 0])
    assert f.masses.sum() == pytest.approx(1.0)


def test_serialization_round_trip():
    sp = make_uniform_partition(5)
    f = Density.from_values(np.arange(1, 6), sp)
    g = Density.from_json(f.to_json())
    assert np.array_equal(f.values, g.values) and g.space.same_as(sp)
    h = Density.from_csv(f.to_csv(), sp)
    assert np.array_equal(f.values, h.values)
    assert f.to_csv().splitlines()[0] == "cell,value"
    assert json.loads(f.to_json())["partition"]["domain"] == "unit interval"


def test_sup_norm():
    sp = make_uniform_partition(3)
    assert ClassicalObservable(np.array([1.0, -3.0, 2.0]), sp).sup_norm == 3.0


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 64), st.integers(0, 2**31 - 1))
def test_random_density_has_unit_mass(n, seed):
    sp = make_uniform_partition(n)
    v = np.random.default_rng(seed).exponential(size=n) + 1e-9
    f = Density.from_values(v, sp)
    assert abs(inner_product(f, np.ones(n), sp) - 1) < 1e-10
    assert l1_distance(f, f) == 0

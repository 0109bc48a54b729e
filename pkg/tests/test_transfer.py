from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ehkit import maps
from ehkit.errors import ConvergenceFailureError, DimensionMismatchError, MapRangeError
from ehkit.measure import Density, inner_product, make_uniform_partition
from ehkit.transfer import (
    TransferOperator,
    iterate,
    koopman_of,
    orbit,
    permutation_operator,
    stationary_density,
    ulam_operator,
    verify_markov,
)


def exact_dyadic(n):
    # cell j = [j/n, (j+1)/n) doubles onto cells 2j mod n and 2j+1 mod n, half the mass each
    M = np.zeros((n, n))
    for j in range(n):
        M[(2 * j) % n, j] += 0.5
        M[(2 * j + 1) % n, j] += 0.5
    return M


def exact_tent(n):
    M = np.zeros((n, n))
    for j in range(n):
        lo, hi = sorted((1 - abs(2 * j / n - 1), 1 - abs(2 * (j + 1) / n - 1)))
        a, b = round(lo * n), round(hi * n)
        for i in range(a, b):
            M[i, j] += 0.5
    return M


def random_stochastic(n, rng):
    S = rng.exponential(size=(n, n))
    return TransferOperator(S / S.sum(axis=0), make_uniform_partition(n)).check()


def test_identity_map_gives_identity():
    P = ulam_operator(maps.identity(), make_uniform_partition(10), 7)
    assert np.array_equal(P.matrix, np.eye(10))


def test_cyclic_shift_is_permutation():
    P = ulam_operator(maps.cyclic_shift(3), make_uniform_partition(3))
    assert np.array_equal(P.matrix, np.roll(np.eye(3), 1, axis=0))


def test_dyadic_matches_interval_oracle():
    P = ulam_operator(maps.dyadic(), make_uniform_partition(256), 1000, seed=3)
    assert np.max(np.abs(P.matrix - exact_dyadic(256))) < 1e-12
    nnz = (P.matrix > 0).sum(axis=0)
    assert set(nnz) <= {1, 2}
    one = np.ones(256)
    assert np.max(np.abs(P.apply(one) - one)) < 1e-3


def test_tent_matches_interval_oracle():
    P = ulam_operator(maps.tent(), make_uniform_partition(64), 1000)
    assert np.max(np.abs(P.matrix - exact_tent(64))) < 1e-12


def test_ulam_deterministic_given_seed():
    f = maps.custom(lambda x: np.mod(3.1 * x * (1 - x) + 0.1, 1.0))
    sp = make_uniform_partition(32)
    a = ulam_operator(f, sp, 200, seed=5).matrix
    b = ulam_operator(f, sp, 200, seed=5).matrix
    assert np.array_equal(a, b)


def test_map_range_error_names_cell():
    bad = maps.custom(lambda x: np.where(x > 0.75, 1.5, x))
    with pytest.raises(MapRangeError) as exc:
        ulam_operator(bad, make_uniform_partition(4), 10)
    assert exc.value.cell == 3


def test_baker_is_markov():
    P = ulam_operator(maps.baker(), make_uniform_partition(64, "unit square"), 200)
    assert verify_markov(P).all_ok


def test_rational_rotation_uses_exact_permutation():
    P = ulam_operator(maps.rotation(Fraction(1, 4)), make_uniform_partition(8))
    assert P.provenance["kind"] == "exact-permutation"
    assert np.array_equal(P.matrix, np.roll(np.eye(8), 2, axis=0))


def test_koopman_identity_and_permutation():
    sp = make_uniform_partition(5)
    assert np.array_equal(koopman_of(TransferOperator(np.eye(5), sp)).matrix, np.eye(5))
    P = permutation_operator(np.array([1, 2, 3, 4, 0]), sp)
    U = koopman_of(P).matrix
    assert np.allclose(U, np.linalg.inv(P.matrix))


def test_duality_random_n7():
    rng = np.random.default_rng(11)
    P = random_stochastic(9, rng)
    U = koopman_of(P)
    f, g = rng.exponential(size=9), rng.normal(size=9)
    lhs = inner_product(orbit(P, f, 7)[-1], g, P.space)
    rhs = inner_product(f, U.power_apply(g, 7), P.space)
    assert abs(lhs - rhs) < 1e-10


def test_koopman_is_sup_contraction():
    rng = np.random.default_rng(2)
    U = koopman_of(random_stochastic(12, rng))
    g = rng.normal(size=12)
    assert np.max(np.abs(U.apply(g))) <= np.max(np.abs(g)) + 1e-10


def test_verify_markov_flags_negative_entry():
    sp = make_uniform_partition(3)
    M = np.eye(3)
    M[0, 1], M[1, 1] = -0.1, 1.1
    rep = verify_markov(TransferOperator(M, sp))
    assert not rep.nonneg_ok
    assert verify_markov(TransferOperator(np.eye(3), sp)).all_ok


def test_iterate_examples():
    sp = make_uniform_partition(3)
    P = ulam_operator(maps.cyclic_shift(3), sp)
    f = Density.indicator([0], sp)
    assert iterate(P, f, 0) is f
    assert np.allclose(iterate(P, f, 3).values, f.values)
    sp256 = make_uniform_partition(256)
    D = ulam_operator(maps.dyadic(), sp256)
    g = Density.indicator(range(64), sp256)
    assert np.abs(iterate(D, g, 20).values - 1) @ sp256.cell_measure < 0.05


def test_iterate_partition_mismatch():
    P = ulam_operator(maps.identity(), make_uniform_partition(3))
    with pytest.raises(DimensionMismatchError):
        iterate(P, Density.uniform(make_uniform_partition(4)), 1)


def test_stationary_density_examples():
    sp = make_uniform_partition(4)
    f0 = Density.from_values([1, 2, 3, 4], sp)
    got = stationary_density(TransferOperator(np.eye(4), sp), initial=f0)
    assert np.allclose(got.values, f0.values)
    D = ulam_operator(maps.dyadic(), make_uniform_partition(256))
    assert np.max(np.abs(stationary_density(D, tol=1e-6).values - 1)) < 1e-6
    C = ulam_operator(maps.cyclic_shift(3), make_uniform_partition(3))
    st_c, info = stationary_density(C, tol=1e-10, initial=Density.indicator([0], C.space), return_info=True)
    assert np.allclose(st_c.values, 1, atol=1e-9) and info["method"] == "cesaro"


def test_stationary_density_matches_eigenvector():
    rng = np.random.default_rng(4)
    P = random_stochastic(8, rng)
    w, V = np.linalg.eig(P.matrix)
    v = np.real(V[:, np.argmin(np.abs(w - 1))])
    v = v / (v @ P.space.cell_measure)
    assert np.max(np.abs(stationary_density(P, tol=1e-12).values - v)) < 1e-9


def test_stationary_density_failure_carries_residual():
    sp = make_uniform_partition(2)
    P = permutation_operator(np.array([1, 0]), sp)
    with pytest.raises(ConvergenceFailureError) as exc:
        stationary_density(P, tol=1e-12, max_iter=1, initial=Density.indicator([0], sp))
    assert exc.value.residual > 0


def test_transfer_operator_json_round_trip():
    P = ulam_operator(maps.dyadic(), make_uniform_partition(8))
    Q = TransferOperator.from_json(P.to_json())
    assert np.array_equal(P.matrix, Q.matrix)
    assert P.to_dict()["format"] == "dense"


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 12), st.integers(0, 50), st.integers(0, 2**31 - 1))
def test_duality_property(n, k, seed):
    rng = np.random.default_rng(seed)
    P = random_stochastic(n, rng)
    U = koopman_of(P)
    f, g = rng.exponential(size=n), rng.uniform(-1, 1, n)
    lhs = inner_product(orbit(P, f, k)[-1], g, P.space)
    rhs = inner_product(f, U.power_apply(g, k), P.space)
    assert abs(lhs - rhs) < 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 20), st.integers(0, 2**31 - 1))
def test_markov_mass_conservation(n, seed):
    rng = np.random.default_rng(seed)
    P = random_stochastic(n, rng)
    f = Density.from_values(rng.exponential(size=n), P.space)
    assert abs(P.apply(f.values) @ P.space.cell_measure - 1) < 1e-10

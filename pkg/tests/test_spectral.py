from fractions import Fraction

import numpy as np
import pytest

from ehkit import maps
from ehkit.errors import DecompositionAmbiguityError
from ehkit.measure import Density, make_uniform_partition
from ehkit.spectral import (
    classify,
    extract_decomposition,
    peripheral_spectrum,
    reconstruct_pnf,
    remainder_series,
)
from ehkit.transfer import TransferOperator, orbit, ulam_operator


@pytest.fixture(scope="module")
def dyadic_P():
    return ulam_operator(maps.dyadic(), make_uniform_partition(256), 1000)


@pytest.fixture(scope="module")
def shift3():
    return ulam_operator(maps.cyclic_shift(3), make_uniform_partition(3))


@pytest.fixture(scope="module")
def ident4():
    return ulam_operator(maps.identity(), make_uniform_partition(4))


def _eigs(P, tol=0.05):
    return np.array([lam for lam, _ in peripheral_spectrum(P, tol)])


def test_peripheral_identity(ident4):
    lam = _eigs(ident4)
    assert lam.size == 4 and np.allclose(lam, 1)


def test_peripheral_three_cycle(shift3):
    lam = np.sort_complex(_eigs(shift3))
    roots = np.sort_complex(np.exp(2j * np.pi * np.arange(3) / 3))
    assert np.allclose(lam, roots, atol=1e-12)


def test_peripheral_dyadic_gap(dyadic_P):
    lam = _eigs(dyadic_P)
    assert lam.size == 1 and abs(lam[0] - 1) < 1e-10


def test_identity_decomposition(ident4):
    d = extract_decomposition(ident4)
    assert d.r == 4
    assert list(d.permutation) == [0, 1, 2, 3]
    assert sorted(tuple(s) for s in d.cell_sets) == [(0,), (1,), (2,), (3,)]


def test_shift_decomposition(shift3):
    d = extract_decomposition(shift3)
    assert d.r == 3 and len(d.cycles()) == 1
    assert np.max(d.remainder_decay) < 1e-12
    # invariants: disjoint sets, bijection, normalized indicators, equal measures along cycles
    seen = set()
    for s in d.cell_sets:
        assert not seen & set(s)
        seen |= set(s)
    assert sorted(d.permutation) == list(range(d.r))
    mu = d.space.cell_measure
    for s, b in zip(d.cell_sets, d.basis_densities):
        ind = np.zeros(d.space.n_cells)
        ind[list(s)] = 1
        assert np.allclose(b.values, ind / mu[list(s)].sum())
    for i, j in enumerate(d.permutation):
        assert abs(d.alpha_weights[i] - d.alpha_weights[j]) < 1e-8
    assert np.allclose(d.identity_reconstruction(), 1)


def test_dyadic_decomposition(dyadic_P):
    d = extract_decomposition(dyadic_P)
    assert d.r == 1
    assert len(d.cell_sets[0]) == 256
    assert np.allclose(d.basis_densities[0].values, 1)
    assert np.max(np.atleast_2d(d.remainder_decay)[:, 20:]) < 0.05


def test_classify_examples(dyadic_P, shift3, ident4):
    c1 = classify(extract_decomposition(dyadic_P))
    assert (c1.ergodic, c1.exact, c1.mixing) == (True, "yes-by-r1", "unknown")
    assert c1.verdict == "exact (r = 1)"
    c3 = classify(extract_decomposition(shift3))
    assert (c3.ergodic, c3.exact, c3.mixing) == (True, "unknown", "ruled-out")
    assert c3.verdict == "ergodic, not mixing (r = 3, cyclic α)"
    c4 = classify(extract_decomposition(ident4))
    assert (c4.ergodic, c4.mixing) == (False, "ruled-out")
    assert c4.verdict == "not ergodic (r = 4, 4 cycles)"


def test_reconstruct_shift_one_step(shift3):
    d = extract_decomposition(shift3)
    f = Density.indicator([0], shift3.space)
    got = reconstruct_pnf(d, f, 1)
    assert np.allclose(got.values, shift3.apply(f.values), atol=1e-12)
    assert np.max(remainder_series(shift3, d, f, 10)) < 1e-12


def test_reconstruct_dyadic_large_n(dyadic_P):
    d = extract_decomposition(dyadic_P)
    f = Density.indicator(range(10), dyadic_P.space)
    assert np.allclose(reconstruct_pnf(d, f, 100).values, 1)


def test_reconstruct_identity_is_cell_average(ident4):
    d = extract_decomposition(ident4)
    f = Density.from_values([1, 2, 3, 4], ident4.space)
    assert np.allclose(reconstruct_pnf(d, f, 5).values, f.values)


def test_cycle_notation_and_json(shift3):
    d = extract_decomposition(shift3)
    out = d.to_dict(classify(d))
    assert out["r"] == 3 and out["cycle_notation"].count(" ") == 2
    assert out["classification"]["ergodic"] is True


def test_alpha_power_inverse(shift3):
    d = extract_decomposition(shift3)
    fwd, back = d.alpha_power(2), d.alpha_power(-2)
    assert list(fwd[back]) == [0, 1, 2]


def test_rotation_two_cycles():
    P = ulam_operator(maps.rotation(Fraction(1, 4)), make_uniform_partition(8))
    c = classify(extract_decomposition(P))
    assert c.r == 8 and not c.ergodic and c.cycle_lengths == (4, 4)


def test_remainder_vanishes_with_transient_cells():
    # cell 2 drains into the 2-cycle {0, 1}
    sp = make_uniform_partition(3)
    M = np.array([[0.0, 1.0, 0.5], [1.0, 0.0, 0.5], [0.0, 0.0, 0.0]])
    P = TransferOperator(M, sp).check()
    d = extract_decomposition(P)
    assert d.r == 2 and 2 in d.uncovered_cells
    f = Density.indicator([2], sp)
    traj = orbit(P, f.values, 6)
    for n in range(1, 7):
        assert np.allclose(reconstruct_pnf(d, f, n).values, traj[n], atol=1e-10)


def test_ambiguity_error_carries_distances():
    # near-degenerate operator: a slow leak between two blocks
    sp = make_uniform_partition(4)
    eps = 0.02
    M = np.array([
        [1 - eps, 0, eps, 0],
        [0, 1 - eps, 0, eps],
        [eps, 0, 1 - eps, 0],
        [0, eps, 0, 1 - eps],
    ])
    P = TransferOperator(M, sp).check()
    with pytest.raises(DecompositionAmbiguityError) as exc:
        extract_decomposition(P, tol=1e-6, radius_tol=0.05)
    assert exc.value.distances is not None

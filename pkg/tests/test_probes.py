import numpy as np
import pytest

from ehkit import maps
from ehkit.errors import DimensionMismatchError
from ehkit.measure import ClassicalObservable, Density, make_uniform_partition
from ehkit.probes import ProbeSuite, cross_validate, ergodic_probe, exact_probe, mixing_probe, tail_gap
from ehkit.spectral import extract_decomposition
from ehkit.transfer import ulam_operator


@pytest.fixture(scope="module")
def shift3():
    return ulam_operator(maps.cyclic_shift(3), make_uniform_partition(3))


@pytest.fixture(scope="module")
def dyadic_P():
    return ulam_operator(maps.dyadic(), make_uniform_partition(256), 1000)


def test_uniform_density_sits_at_target(dyadic_P):
    sp = dyadic_P.space
    g = ClassicalObservable(np.linspace(-1, 1, 256), sp)
    f = Density.uniform(sp)
    for probe in (ergodic_probe, mixing_probe):
        rep = probe(dyadic_P, f, g, 50)
        assert np.allclose(rep.series, rep.target, atol=1e-12)
        assert rep.converged
    assert np.max(exact_probe(dyadic_P, f, 30).series) < 1e-12


def test_shift_cesaro_converges_to_two(shift3):
    f = Density.indicator([0], shift3.space)
    g = ClassicalObservable(np.array([1.0, 2.0, 3.0]), shift3.space)
    rep = ergodic_probe(shift3, f, g, 1000, 0.05)
    assert rep.target == pytest.approx(2.0)
    assert rep.converged


def test_shift_mixing_cycles_forever(shift3):
    f = Density.indicator([0], shift3.space)
    g = ClassicalObservable(np.array([1.0, 2.0, 3.0]), shift3.space)
    rep = mixing_probe(shift3, f, g, 30, 0.05)
    assert np.allclose(rep.series[:6], [1, 2, 3, 1, 2, 3])
    assert not rep.converged


def test_shift_exact_probe_constant(shift3):
    rep = exact_probe(shift3, Density.indicator([0], shift3.space), 30)
    assert np.allclose(rep.series, 4 / 3)
    assert not rep.converged


def test_dyadic_probes_converge(dyadic_P):
    sp = dyadic_P.space
    f = Density.indicator(range(64), sp)
    g = ClassicalObservable(np.sin(np.linspace(0, 3, 256)), sp)
    assert ergodic_probe(dyadic_P, f, g, 1000).converged
    mix = mixing_probe(dyadic_P, f, g, 40)
    assert np.all(np.abs(mix.series[20:] - mix.target) < 0.05)
    ex = exact_probe(dyadic_P, f, 20)
    assert ex.series[20] < 0.05


def test_report_fields(shift3):
    rep = mixing_probe(shift3, Density.indicator([0], shift3.space), np.array([1.0, 2.0, 3.0]), 30, 0.05)
    assert rep.final_gap == pytest.approx(tail_gap(rep.series, rep.target))
    assert rep.last_gap == pytest.approx(abs(rep.series[-1] - rep.target))
    assert rep.converged == (rep.final_gap <= rep.tol)
    lines = rep.to_csv().splitlines()
    assert lines[0] == "n,value,target" and len(lines) == 32


def test_tail_gap_rejects_lucky_landing():
    series = np.array([0.0, 1.0] * 50 + [0.0])
    assert tail_gap(series, 0.0) > 0.4


def test_probe_partition_mismatch(shift3):
    with pytest.raises(DimensionMismatchError):
        ergodic_probe(shift3, Density.uniform(make_uniform_partition(4)), np.ones(3), 5)


@pytest.mark.parametrize(
    "system,cells",
    [(maps.dyadic(), 256), (maps.cyclic_shift(3), 3), (maps.identity(), 4)],
)
def test_cross_validate_examples(system, cells):
    P = ulam_operator(system, make_uniform_partition(cells, system.domain))
    rep = cross_validate(P, extract_decomposition(P), ProbeSuite())
    assert rep.consistent, rep.violations


def test_identity_ergodic_probe_fails_for_asymmetric_pair():
    P = ulam_operator(maps.identity(), make_uniform_partition(4))
    f = Density.indicator([0], P.space)
    g = ClassicalObservable(np.array([1.0, 0, 0, 0]), P.space)
    rep = ergodic_probe(P, f, g, 1000)
    assert rep.series[-1] == pytest.approx(1.0) and rep.target == pytest.approx(0.25)
    assert not rep.converged

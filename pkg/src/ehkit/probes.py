"""Direct numerical tests of the ergodic, mixing and exactness definitions.

Convergence is judged on the tail of a series (its last 10%), never on the
final point alone, so an oscillating series cannot pass by landing near
the target once.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, InvalidArgumentError
from .measure import ClassicalObservable, Density, PartitionedMeasureSpace, inner_product
from .spectral import SpectralDecomposition, classify, probe_densities
from .transfer import TransferOperator, orbit

TAIL_FRACTION = 0.1


@dataclass(frozen=True, eq=False)
class ProbeReport:
    """Outcome of one probe.

    ``final_gap`` is the mean of ``|series - target|`` over the tail (last
    10% of the points, at least one); ``last_gap`` is the gap of the final
    point alone.  ``converged`` is ``final_gap <= tol``.
    """

    test_kind: str
    series: np.ndarray
    target: float
    tol: float
    final_gap: float
    last_gap: float
    converged: bool
    horizon: int

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "value", "target"])
        for n, v in enumerate(self.series):
            w.writerow([n, repr(float(v)), repr(self.target)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "test_kind": self.test_kind,
            "target": self.target,
            "tol": self.tol,
            "final_gap": self.final_gap,
            "last_gap": self.last_gap,
            "converged": self.converged,
            "horizon": self.horizon,
        }


def tail_gap(series: np.ndarray, target: float) -> float:
    k = max(1, math.ceil(TAIL_FRACTION * len(series)))
    return float(np.mean(np.abs(series[-k:] - target)))


def _report(kind, series, target, tol, horizon) -> ProbeReport:
    series = np.asarray(series, dtype=float)
    gap = tail_gap(series, target)
    return ProbeReport(
        test_kind=kind,
        series=series,
        target=float(target),
        tol=float(tol),
        final_gap=gap,
        last_gap=float(abs(series[-1] - target)),
        converged=gap <= tol,
        horizon=int(horizon),
    )


def _validate(P: TransferOperator, f, g, horizon: int):
    if horizon < 1:
        raise InvalidArgumentError("horizon must be >= 1")
    for x in (f, g):
        if isinstance(x, (Density, ClassicalObservable)) and not P.space.same_as(x.space):
            raise DimensionMismatchError("probe inputs live on a different partition than P")


def _correlations(P, f, g, horizon):
    traj = orbit(P, f, horizon)
    return traj @ (np.asarray(g, dtype=float) * P.space.cell_measure)


def _target(P, f, g):
    one = np.ones(P.n)
    return inner_product(f, one, P.space) * inner_product(one, g, P.space)


def ergodic_probe(P: TransferOperator, f, g, horizon: int = 1000, tol: float = 0.05) -> ProbeReport:
    """Cesaro means ``1/(n+1) sum_{k<=n} <P^k f, g>`` against ``<f,1><1,g>``."""
    _validate(P, f, g, horizon)
    corr = _correlations(P, f, g, horizon)
    series = np.cumsum(corr) / np.arange(1, horizon + 2)
    return _report("ergodic-cesaro", series, _target(P, f, g), tol, horizon)


def mixing_probe(P: TransferOperator, f, g, horizon: int = 100, tol: float = 0.05) -> ProbeReport:
    """Raw correlations ``<P^n f, g>`` against ``<f,1><1,g>``."""
    _validate(P, f, g, horizon)
    return _report("mixing-correlation", _correlations(P, f, g, horizon), _target(P, f, g), tol, horizon)


def exact_probe(P: TransferOperator, f, horizon: int = 100, tol: float = 0.05) -> ProbeReport:
    """``||P^n f - <f,1>||_1`` against 0."""
    _validate(P, f, None, horizon)
    traj = orbit(P, f, horizon)
    mass = inner_product(f, np.ones(P.n), P.space)
    series = np.abs(traj - mass) @ P.space.cell_measure
    return _report("exact-norm", series, 0.0, tol, horizon)


def observable_basket(space: PartitionedMeasureSpace, seed: int = 0) -> list:
    """Ramp over cell values, a single-cell indicator, and a random bounded function."""
    rng = np.random.default_rng(seed + 1)
    n = space.n_cells
    ramp = np.arange(n, dtype=float) / max(n - 1, 1)
    single = np.zeros(n)
    single[0] = 1.0
    return [
        ClassicalObservable(ramp, space),
        ClassicalObservable(single, space),
        ClassicalObservable(rng.uniform(-1, 1, n), space),
    ]


@dataclass(frozen=True)
class ProbeSuite:
    probe_count: int = 5
    ergodic_horizon: int = 1000
    mixing_horizon: int = 200
    exact_horizon: int = 200
    tol: float = 0.05
    seed: int = 0


@dataclass(frozen=True)
class ConsistencyReport:
    consistent: bool
    classification: dict
    ergodic_all_converge: bool
    mixing_any_fails: bool
    exact_all_converge: bool
    violations: tuple = ()
    evidence: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "consistent": self.consistent,
            "classification": self.classification,
            "ergodic_all_converge": self.ergodic_all_converge,
            "mixing_any_fails": self.mixing_any_fails,
            "exact_all_converge": self.exact_all_converge,
            "violations": list(self.violations),
            "evidence": self.evidence,
        }


def cross_validate(P: TransferOperator, d: SpectralDecomposition, suite: ProbeSuite = ProbeSuite()) -> ConsistencyReport:
    """Check the spectral classification against the direct probes on a fixed basket."""
    cls = classify(d)
    fs = probe_densities(P.space, suite.probe_count, suite.seed)
    gs = observable_basket(P.space, suite.seed)
    ergodic_gaps, mixing_gaps = [], []
    for f in fs:
        for g in gs:
            ergodic_gaps.append(ergodic_probe(P, f, g, suite.ergodic_horizon, suite.tol).final_gap)
            mixing_gaps.append(mixing_probe(P, f, g, suite.mixing_horizon, suite.tol).final_gap)
    exact_gaps = [exact_probe(P, f, suite.exact_horizon, suite.tol).final_gap for f in fs]
    erg_ok = max(ergodic_gaps) <= suite.tol
    mix_fails = max(mixing_gaps) > suite.tol
    exact_ok = max(exact_gaps) <= suite.tol

    violations = []
    if cls.ergodic and not erg_ok:
        violations.append(f"alpha cyclic but ergodic probe gap {max(ergodic_gaps):.3g} > {suite.tol}")
    if not cls.ergodic and erg_ok:
        violations.append("alpha not cyclic but every ergodic probe converged")
    if d.r > 1 and not mix_fails:
        violations.append(f"r = {d.r} > 1 but every mixing probe converged")
    if d.r == 1 and not exact_ok:
        violations.append(f"r = 1 but exact probe gap {max(exact_gaps):.3g} > {suite.tol}")
    return ConsistencyReport(
        consistent=not violations,
        classification=cls.to_dict(),
        ergodic_all_converge=bool(erg_ok),
        mixing_any_fails=bool(mix_fails),
        exact_all_converge=bool(exact_ok),
        violations=tuple(violations),
        evidence={
            "max_ergodic_gap": max(ergodic_gaps),
            "max_mixing_gap": max(mixing_gaps),
            "max_exact_gap": max(exact_gaps),
        },
    )

"""Splitting mean-value series into oscillatory and decaying parts, and the level verdicts."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..errors import (
    DecompositionMismatchError,
    HomogenizationViolationError,
    InvalidArgumentError,
    NoWeakLimitError,
)
from .models import (
    DiscreteSpectrumModel,
    HamiltonianModel,
    MixedSpectrumModel,
    QuantumState,
    QuasiContinuousModel,
    VanHoveObservable,
    gaussian_observable_basket,
)

APERIODIC = "aperiodic (almost-periodic)"
MAX_PERIOD = 10**4
RATIONAL_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class CesaroResult:
    M: int
    running: np.ndarray
    limit_estimate: complex
    z: complex | None = None
    tail_variation: float = 0.0

    def __post_init__(self):
        if self.z is not None and abs(abs(self.z) - 1) > 1e-12:
            raise InvalidArgumentError("z must lie on the unit circle")

    def to_dict(self) -> dict:
        lim = self.limit_estimate
        out = {
            "M": self.M,
            "limit_estimate": lim.real if np.isreal(lim) else [lim.real, lim.imag],
            "tail_variation": self.tail_variation,
        }
        if self.z is not None:
            out["z"] = [self.z.real, self.z.imag]
        return out


def cesaro_limit(series, M: int, z: complex | None = None) -> CesaroResult:
    """Running means ``sigma_m = (1/m) sum_{n<m} series[n]`` for ``m = 1..M``."""
    s = np.asarray(series)
    if M < 1:
        raise InvalidArgumentError("M must be >= 1")
    if M > s.size:
        raise InvalidArgumentError(f"M = {M} exceeds the series length {s.size}")
    running = np.cumsum(s[:M]) / np.arange(1, M + 1)
    if np.isrealobj(s):
        running = running.real
    k = max(1, M // 10)
    tail = running[-k:]
    lim = running[-1]
    return CesaroResult(
        M=M,
        running=running,
        limit_estimate=complex(lim) if np.iscomplexobj(running) else float(lim),
        z=None if z is None else complex(z),
        tail_variation=float(np.max(np.abs(tail - lim))),
    )


def reduced_gaps(h: HamiltonianModel) -> np.ndarray:
    """Distinct gap frequencies folded into ``(-pi, pi]``; integer time cannot resolve more."""
    g = np.angle(np.exp(-1j * h.gaps().ravel())) * -1.0
    g = np.where(np.isclose(g, -np.pi, atol=1e-14), np.pi, g)
    g = np.sort(g)
    keep = np.concatenate([[True], np.diff(g) > 1e-12])
    return g[keep]


def period_of(frequencies) -> int | None:
    """Fundamental period of ``sum_k c_k exp(-i w_k n)``, or ``None`` when incommensurate."""
    N = 1
    for w in np.atleast_1d(frequencies):
        x = float(w) / (2 * np.pi)
        if abs(x) < RATIONAL_TOL:
            continue
        f = Fraction(x).limit_denominator(MAX_PERIOD)
        if abs(float(f) - x) > RATIONAL_TOL * max(1.0, abs(x)):
            return None
        N = math.lcm(N, f.denominator)
    return N


def decade_decay(series, noise_floor: float = 1e-12) -> tuple[bool, float, float]:
    """Max over the last decade ``[N/10, N]`` against the previous one ``[N/100, N/10)``."""
    x = np.abs(np.asarray(series))
    N = x.size - 1
    if N < 20:
        raise InvalidArgumentError("decade test needs at least 20 steps")
    last = float(np.max(x[N // 10:]))
    prev = float(np.max(x[N // 100:N // 10]))
    return (last < prev or last <= noise_floor), last, prev


@dataclass(frozen=True, eq=False)
class QSDTSplit:
    """``series = oscillatory + remainder`` with the oscillatory part's extremes ``A``, ``B``.

    The three displayed lines are ``oscillatory - (A+B)/2`` (discrete sum),
    the constant ``(A+B)/2`` and the remainder (decaying continuum part).
    """

    series: np.ndarray
    oscillatory: np.ndarray
    A: float
    B: float
    constant_term: float
    remainder: np.ndarray
    period_estimate: int | None
    frequencies: np.ndarray
    amplitudes: np.ndarray
    remainder_zero: bool
    remainder_decays: bool

    @property
    def period_label(self):
        return APERIODIC if self.period_estimate is None else self.period_estimate

    def lines(self) -> dict:
        return {
            "discrete_sum": self.oscillatory - self.constant_term,
            "continuum_diagonal": self.constant_term,
            "continuum_offdiagonal": self.remainder,
        }

    def reconstruction_error(self) -> float:
        return float(np.max(np.abs(self.oscillatory + self.remainder - self.series)))


def qsdt_split(
    series,
    h: HamiltonianModel | None = None,
    tol: float = 1e-8,
    expect_decay: bool = False,
) -> QSDTSplit:
    """Fit the almost-periodic part on the late half of ``series`` and subtract it.

    The fit basis is ``exp(-i w n)`` over every gap frequency of ``h``
    (only ``w = 0`` without a Hamiltonian).  ``expect_decay`` marks a model
    with continuum content: then the remainder must vanish or shrink from
    one decade to the next, else :class:`DecompositionMismatchError`.
    """
    s = np.asarray(series, dtype=float)
    if s.ndim != 1 or s.size < 21:
        raise InvalidArgumentError("need a 1-D series with at least 21 points")
    N = s.size - 1
    n = np.arange(N + 1)
    freqs = np.array([0.0]) if h is None else reduced_gaps(h)
    start = N // 2 if (N + 1 - N // 2) >= 2 * freqs.size else 0
    basis = np.exp(-1j * np.outer(n, freqs))
    coef, *_ = np.linalg.lstsq(basis[start:], s[start:].astype(complex), rcond=None)
    osc = (basis @ coef).real
    rem = s - osc

    scale = max(1.0, float(np.max(np.abs(s))))
    active = np.abs(coef) > tol * scale
    period = period_of(freqs[active])
    window = osc[1:period + 1] if period is not None and period <= N else osc
    A, B = float(np.max(window)), float(np.min(window))

    rem_zero = float(np.max(np.abs(rem))) <= tol * scale
    decays = rem_zero or decade_decay(rem, noise_floor=tol * scale)[0]
    if expect_decay and not decays:
        raise DecompositionMismatchError(
            "remainder does not decay although the model has continuum content"
        )
    return QSDTSplit(
        series=s,
        oscillatory=osc,
        A=A,
        B=B,
        constant_term=(A + B) / 2,
        remainder=rem,
        period_estimate=period,
        frequencies=freqs,
        amplitudes=coef,
        remainder_zero=bool(rem_zero),
        remainder_decays=bool(decays),
    )


def match_lines(split: QSDTSplit, components: dict, tol: float = 1e-8) -> dict:
    """Match each displayed line to one model component.

    ``components`` holds the model's exact ``discrete`` series,
    ``continuum_diagonal`` constant and ``continuum_offdiagonal`` series.
    Lines one and two can only be identified jointly up to a constant
    shift: the split sees their sum.  The shift is reported as
    ``midpoint_offset``.
    """
    disc = np.asarray(components["discrete"])
    cdiag = float(components["continuum_diagonal"])
    coff = np.asarray(components["continuum_offdiagonal"])
    scale = max(1.0, float(np.max(np.abs(split.series))))
    line1 = split.oscillatory - split.constant_term
    offset = split.constant_term - cdiag
    r1 = float(np.max(np.abs(line1 + offset - disc)))
    r3 = float(np.max(np.abs(split.remainder - coff)))
    r12 = float(np.max(np.abs(split.oscillatory - disc - cdiag)))
    ok1 = r1 <= tol * scale
    ok3 = r3 <= tol * scale
    return {
        "discrete_sum": {"component": "discrete", "residual": r1, "matched": ok1},
        "continuum_diagonal": {"component": "continuum_diagonal", "residual": r12, "matched": r12 <= tol * scale},
        "continuum_offdiagonal": {"component": "continuum_offdiagonal", "residual": r3, "matched": ok3},
        "midpoint_offset": offset,
        "all_matched": bool(ok1 and ok3 and r12 <= tol * scale),
    }


@dataclass(frozen=True, eq=False)
class QuantumLevelReport:
    verdict: str
    evidence: dict
    split: QSDTSplit
    notes: tuple = ()

    @property
    def period(self):
        return self.split.period_label

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "evidence": self.evidence,
            "period": self.period,
            "constant_term": self.split.constant_term,
            "A": self.split.A,
            "B": self.split.B,
            "notes": list(self.notes),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "mean_value", "oscillatory", "remainder"])
        sp = self.split
        for k in range(sp.series.size):
            w.writerow([k, repr(float(sp.series[k])), repr(float(sp.oscillatory[k])), repr(float(sp.remainder[k]))])
        return buf.getvalue()


def _as_model(model, rho, obs):
    if isinstance(model, HamiltonianModel):
        if rho is None:
            raise InvalidArgumentError("a bare Hamiltonian needs a state")
        return DiscreteSpectrumModel(model, rho, obs), None
    return model, obs


def classify_quantum(model, rho: QuantumState | None = None, obs=None, horizon: int = 1000, tol: float = 1e-8) -> QuantumLevelReport:
    """Ergodic-hierarchy verdict from the structure of one mean-value series.

    Discrete spectra give ``"ergodic"`` (remainder identically zero,
    oscillation periodic or almost periodic).  Continuum content whose
    off-diagonal part decays gives ``"mixing"``.  A mixed model is
    ``"ergodic"`` while a persistent oscillation survives, else
    ``"mixing"``.  Anything else is ``"unknown"``.
    """
    model, obs = _as_model(model, rho, obs)
    has_disc = isinstance(model, (DiscreteSpectrumModel, MixedSpectrumModel))
    has_cont = isinstance(model, (QuasiContinuousModel, MixedSpectrumModel))
    if not (has_disc or has_cont):
        raise InvalidArgumentError(f"unsupported model type {type(model).__name__}")
    comps = model.components(obs, horizon)
    series = comps["discrete"] + comps["continuum_diagonal"] + comps["continuum_offdiagonal"]
    h = model.h if has_disc else None
    notes = []
    try:
        split = qsdt_split(series, h, tol, expect_decay=has_cont)
    except DecompositionMismatchError as exc:
        split = qsdt_split(series, h, tol)
        notes.append(str(exc))
    scale = max(1.0, float(np.max(np.abs(series))))
    amp = (split.A - split.B) / 2
    evidence = {
        "remainder_max": float(np.max(np.abs(split.remainder))),
        "remainder_identically_zero": split.remainder_zero,
        "remainder_decays": split.remainder_decays,
        "oscillation_amplitude": amp,
        "period": split.period_label,
        "reconstruction_error": split.reconstruction_error(),
    }
    if split.period_estimate is not None and split.period_estimate + 1 <= horizon:
        N = split.period_estimate
        evidence["F(N+1)-F(1)"] = float(abs(split.oscillatory[N + 1] - split.oscillatory[1]))
    if has_cont:
        I = np.abs(comps["continuum_offdiagonal"])
        ratio = float(I[-1] / I[0]) if I[0] > 0 else 0.0
        evidence["offdiagonal_ratio_at_horizon"] = ratio
        evidence["weak_limit_exists"] = bool(split.remainder_decays and ratio < 0.01)
    if has_disc and has_cont:
        evidence["line_match"] = {
            k: v for k, v in match_lines(split, comps, tol).items() if k != "all_matched"
        }

    verdict = "unknown"
    if has_disc and not has_cont:
        if split.remainder_zero:
            verdict = "ergodic"
    elif has_cont and not has_disc:
        if evidence["weak_limit_exists"]:
            verdict = "mixing"
            notes.append("exact (sufficient condition): oscillatory part reduces to one constant term")
    else:
        if not evidence["weak_limit_exists"]:
            verdict = "unknown"
        elif amp > tol * scale:
            verdict = "ergodic"
            notes.append("persistent discrete oscillation rules out mixing")
        else:
            verdict = "mixing"
    return QuantumLevelReport(verdict, evidence, split, tuple(notes))


@dataclass(frozen=True, eq=False)
class WeakLimitResult:
    """Diagonal profile certified as the weak limit on an observable basket."""

    profile: np.ndarray
    limits: np.ndarray
    horizon: int
    decay_curve: np.ndarray
    max_deviation: float
    offdiagonal_ratios: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "limits": self.limits.tolist(),
            "max_deviation": self.max_deviation,
            "offdiagonal_ratios": self.offdiagonal_ratios.tolist(),
        }


def _certify(offdiag: np.ndarray, tol: float, horizon: int | None, ratio: float | None = None):
    curve = np.max(np.abs(offdiag), axis=0)
    # suffix max: worst deviation from n onward within the scan
    suffix = np.maximum.accumulate(curve[::-1])[::-1]
    if ratio is not None:
        i0 = np.abs(offdiag[:, :1])
        rel = np.where(i0 > 0, np.abs(offdiag) / np.where(i0 > 0, i0, 1.0), 0.0).max(axis=0)
        rel_suffix = np.maximum.accumulate(rel[::-1])[::-1]
        suffix = np.where(rel_suffix < ratio, suffix, np.inf)
    if horizon is None:
        ok = np.nonzero(suffix <= tol)[0]
        if ok.size == 0:
            return None, curve
        return int(ok[0]), curve
    if horizon >= curve.size or suffix[horizon] > tol:
        return None, curve
    return int(horizon), curve


def weak_limit(
    model,
    basket=None,
    horizon: int | None = None,
    tol: float = 1e-3,
    scan: int | None = None,
    ratio: float | None = 0.01,
) -> WeakLimitResult:
    """Certify ``|(rho(n)|O) - (rho_*|O)| <= tol`` for ``n >= horizon`` on every basket observable.

    ``rho_*`` is the diagonal part of the state.  With ``horizon=None`` the
    smallest certified horizon within the scan window is reported.  When
    ``ratio`` is set the horizon must also satisfy ``|I(n)| < ratio |I(0)|``
    for every observable from there on.
    """
    if isinstance(model, DiscreteSpectrumModel):
        basket = [model.obs] if basket is None else basket
        scan = scan or 1000
        series = np.array([model.mean_value_series(o, scan) for o in basket])
        limits = np.array([model.diagonal_value(o) for o in basket])
        off = series - limits[:, None]
        profile = np.real(np.diag(model.rho.matrix))
    elif isinstance(model, QuasiContinuousModel):
        basket = gaussian_observable_basket(model, 5) if basket is None else basket
        if scan is None:
            scan = int(model.recurrence_time // 2)
            if horizon is not None:
                scan = min(scan, max(2 * horizon, horizon + 100))
        off = np.array([model.offdiagonal_series(o, scan) for o in basket])
        limits = np.array([model.diagonal_value(o) for o in basket])
        profile = model.rho_diag
    else:
        raise InvalidArgumentError("weak limits need a discrete or quasi-continuous model")
    h, curve = _certify(off, tol, horizon, ratio)
    if h is None:
        raise NoWeakLimitError(
            f"off-diagonal contribution stays above {tol:g} within {off.shape[1] - 1} steps", curve
        )
    i0 = np.abs(off[:, 0])
    ratios = np.where(i0 > 0, np.abs(off[:, h]) / np.where(i0 > 0, i0, 1.0), 0.0)
    return WeakLimitResult(
        profile=np.array(profile, copy=True),
        limits=limits,
        horizon=h,
        decay_curve=curve,
        max_deviation=float(np.max(curve[h:])),
        offdiagonal_ratios=ratios,
    )


def decay_horizon(model: QuasiContinuousModel, obs=None, ratio: float = 0.01, scan: int | None = None) -> int:
    """First ``n`` after which ``|I(n)| < ratio |I(0)|`` for the rest of the scan."""
    scan = scan or int(model.recurrence_time // 2)
    I = np.abs(model.offdiagonal_series(obs, scan))
    if I[0] == 0:
        return 0
    above = np.nonzero(I >= ratio * I[0])[0]
    h = int(above[-1]) + 1
    if h > scan:
        raise NoWeakLimitError(f"|I(n)| never drops below {ratio} |I(0)|", I)
    return h


@dataclass(frozen=True)
class HomogenizationReport:
    passed: bool
    limits: list
    identity_coefficients: list
    horizons: list
    max_spread: float
    base_verdict: str

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "limits": self.limits,
            "identity_coefficients": self.identity_coefficients,
            "horizons": self.horizons,
            "max_spread": self.max_spread,
            "base_verdict": self.base_verdict,
        }


def homogenization_check(model: QuasiContinuousModel, variants, basket=None, tol: float = 1e-3) -> HomogenizationReport:
    """All initial states in ``variants`` must reach the same weak limit.

    ``variants`` is a list of ``(rho_diag, rho_offdiag)`` pairs on the
    model grid.  The identity observable must see coefficient 1 for each
    variant within 1e-10.
    """
    if not variants:
        raise InvalidArgumentError("need at least one state variant")
    base = classify_quantum(model, horizon=min(1000, int(model.recurrence_time // 2)))
    if base.verdict != "mixing":
        raise InvalidArgumentError(f"homogenization needs a mixing model, got {base.verdict!r}")
    basket = gaussian_observable_basket(model, 5) if basket is None else basket
    ident = VanHoveObservable.identity(model.K)
    limits, coeffs, horizons = [], [], []
    for rd, ro in variants:
        m = model.with_state(rd, ro)
        wl = weak_limit(m, basket, tol=tol)
        limits.append(wl.limits)
        horizons.append(wl.horizon)
        coeffs.append(m.diagonal_value(ident))
    spread = 0.0
    for i in range(1, len(limits)):
        d = float(np.max(np.abs(limits[i] - limits[0])))
        spread = max(spread, d)
        if d > tol:
            raise HomogenizationViolationError(
                f"variants 0 and {i} reach different weak limits (gap {d:.3g})",
                (limits[0].tolist(), limits[i].tolist()),
            )
    bad = [c for c in coeffs if abs(c - model.norm) > 1e-10]
    if bad:
        raise HomogenizationViolationError(f"identity coefficient {bad[0]!r} differs from 1", (coeffs[0], bad[0]))
    return HomogenizationReport(
        passed=True,
        limits=[l.tolist() for l in limits],
        identity_coefficients=coeffs,
        horizons=horizons,
        max_spread=spread,
        base_verdict=base.verdict,
    )

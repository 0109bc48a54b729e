"""The two-level system worked end to end.

Observable entries follow the index order used in the classic derivation,
``O_ij = <j|O|i>``: the input ``O12`` is the standard matrix element
``<2|O|1>``.  With that reading the closed form below is exactly
``tr(rho(n) O)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidArgumentError, InvariantViolationError
from .models import DiscreteSpectrumModel, HamiltonianModel, QuantumObservable, QuantumState
from .qsdt import QuantumLevelReport, cesaro_limit, classify_quantum


def observable_from_entries(O11: float, O22: float, O12: complex) -> QuantumObservable:
    """Build the matrix from entries in the ``O_ij = <j|O|i>`` order."""
    O12 = complex(O12)
    return QuantumObservable(np.array([[O11, np.conj(O12)], [O12, O22]], dtype=complex))


def state_from_entries(rho11: float, rho22: float, rho12: complex) -> QuantumState:
    if abs(rho11 + rho22 - 1) > 1e-12:
        raise InvariantViolationError("rho11 + rho22 must equal 1")
    if rho11 < 0 or rho22 < 0 or abs(rho12) ** 2 > rho11 * rho22 + 1e-12:
        raise InvariantViolationError("entries do not define a positive state")
    return QuantumState.two_level(rho11, rho22, rho12)


def _log_points(M: int) -> list:
    pts = sorted({int(round(x)) for x in np.logspace(0, np.log10(M), 4 * int(np.ceil(np.log10(M) + 1)))})
    return [k for k in pts if 1 <= k <= M]


def closed_form_series(E1, E2, hbar, rho, obs, n) -> np.ndarray:
    """``rho11 O11 + rho22 O22 + rho12 e^{-i(E1-E2)n/hbar} O12 + rho21 e^{-i(E2-E1)n/hbar} O21``."""
    r11, r22, r12 = rho
    O11, O22, O12 = obs
    n = np.asarray(n, dtype=float)
    ph = np.exp(-1j * (E1 - E2) * n / hbar)
    val = r11 * O11 + r22 * O22 + r12 * ph * O12 + np.conj(r12) * np.conj(ph) * np.conj(O12)
    return val.real


@dataclass(frozen=True, eq=False)
class TwoLevelReport:
    series: np.ndarray
    closed_form: np.ndarray
    closed_form_error: float
    level: QuantumLevelReport
    z: complex
    cesaro: dict
    rho_c_closed_form: np.ndarray
    rho_c_numerical: np.ndarray
    notes: tuple

    @property
    def verdict(self) -> str:
        return self.level.verdict

    def to_dict(self) -> dict:
        def mat(m):
            return [[[v.real, v.imag] for v in row] for row in m]

        return {
            "verdict": self.verdict,
            "evidence": self.level.evidence,
            "period": self.level.period,
            "constant_term": self.level.split.constant_term,
            "A": self.level.split.A,
            "B": self.level.split.B,
            "closed_form_error": self.closed_form_error,
            "remainder_max": float(np.max(np.abs(self.level.split.remainder))),
            "z": [self.z.real, self.z.imag],
            "cesaro": self.cesaro,
            "rho_c_closed_form": mat(self.rho_c_closed_form),
            "rho_c_numerical": mat(self.rho_c_numerical),
            "notes": list(self.notes),
        }

    def to_csv(self) -> str:
        return self.level.to_csv()


def two_level_demo(
    E1: float = 0.0,
    E2: float = 1.0,
    hbar: float = 1.0,
    rho=(0.6, 0.4, 0.3 + 0.2j),
    obs=(1.0, -0.5, 0.7 - 0.4j),
    M: int = 10**5,
    horizon: int = 10**4,
) -> TwoLevelReport:
    """Series, verdict and Cesaro behaviour of ``H = E1|1><1| + E2|2><2|``.

    ``rho = (rho11, rho22, rho12)`` and ``obs = (O11, O22, O12)``.
    The numerical Cesaro mean is compared with the closed form that uses
    ``lim sigma_M = 1/(1 - z)``; that closed form does not hold (the
    geometric mean of a unit-circle phase tends to 0) and the gap is
    reported rather than adopted.
    """
    if M < 1 or horizon < 20:
        raise InvalidArgumentError("need M >= 1 and horizon >= 20")
    rho_t = tuple(complex(x) if i == 2 else float(x) for i, x in enumerate(rho))
    obs_t = tuple(complex(x) if i == 2 else float(x) for i, x in enumerate(obs))
    state = state_from_entries(*rho_t)
    O = observable_from_entries(*obs_t)
    h = HamiltonianModel([E1, E2], hbar)
    model = DiscreteSpectrumModel(h, state, O)

    length = max(M, horizon + 1)
    full = model.mean_value_series(horizon=length - 1)
    series = full[: horizon + 1]
    closed = closed_form_series(E1, E2, hbar, rho_t, obs_t, np.arange(horizon + 1))
    err = float(np.max(np.abs(series - closed)))

    level = classify_quantum(model, horizon=horizon)
    z = complex(np.exp(-1j * (E1 - E2) / hbar))
    diag = rho_t[0] * obs_t[0] + rho_t[1] * obs_t[1]
    c = cesaro_limit(full, M)
    notes = []
    cesaro = {
        "M": M,
        "limit_estimate": float(c.limit_estimate),
        "diagonal_part": diag,
        "limit_minus_diagonal": float(abs(c.limit_estimate - diag)),
        "within_10_over_M": bool(abs(c.limit_estimate - diag) <= 10 / M),
    }
    rho_c_num = np.diag([rho_t[0], rho_t[1]]).astype(complex)
    rho_c_closed_form = rho_c_num.copy()
    if abs(1 - z) < 1e-12:
        notes.append("degenerate spectrum: z = 1, the series is constant")
        cesaro["geometric_closed_form"] = None
        rho_c_num[0, 1], rho_c_num[1, 0] = rho_t[2], np.conj(rho_t[2])
        rho_c_closed_form = rho_c_num.copy()
    else:
        m = np.arange(1, M + 1)
        sigma = np.cumsum(z ** np.arange(M)) / m
        bound = 2 / (m * abs(1 - z))
        cesaro["offdiag_sigma_M"] = [float(sigma[-1].real), float(sigma[-1].imag)]
        cesaro["offdiag_bound_holds"] = bool(np.all(np.abs(sigma) <= bound * (1 + 1e-12)))
        geo = diag + 2 * (rho_t[2] * obs_t[2] / (1 - z)).real
        cesaro["geometric_closed_form"] = float(geo)
        cesaro["closed_form_discrepancy"] = float(abs(geo - c.limit_estimate))
        cesaro["table"] = [
            {
                "M": int(k),
                "mean": float(c.running[k - 1]),
                "offdiag_sigma_abs": float(abs(sigma[k - 1])),
                "bound": float(bound[k - 1]),
            }
            for k in _log_points(M)
        ]
        rho_c_closed_form[0, 1] = rho_t[2] / (1 - z)
        rho_c_closed_form[1, 0] = np.conj(rho_c_closed_form[0, 1])
        if abs(rho_t[2] * obs_t[2]) > 0:
            notes.append(
                "closed form with lim sigma_M = 1/(1-z) disagrees with the numerical Cesaro mean "
                f"by {cesaro['closed_form_discrepancy']:.6g}; the off-diagonal means obey "
                "|sigma_M| <= 2/(M|1-z|) and vanish"
            )
    return TwoLevelReport(
        series=series,
        closed_form=closed,
        closed_form_error=err,
        level=level,
        z=z,
        cesaro=cesaro,
        rho_c_closed_form=rho_c_closed_form,
        rho_c_numerical=rho_c_num,
        notes=tuple(notes),
    )

"""Weyl symbols and Wigner functions for operators on a uniform position grid.

Operators are stored as matrices in the orthonormal grid basis, so the
position kernel is ``K(q_a, q_b) = M[a, b] / dq`` and ``tr(M)`` is the
``dq``-weighted diagonal sum of the kernel.  The symbol is

    S(q, p) = int dy K(q + y/2, q - y/2) exp(-i p y / hbar),

evaluated with ``y = m dq``.  Even separations read matrix entries
directly.  Odd separations need the kernel at half-integer positions and
take them from a six-point midpoint interpolation along the diagonal
(zero beyond the grid).  The p-grid has ``2 d`` points spanning the band
``[-pi hbar / dq, pi hbar / dq)`` and the sum over ``m`` is one FFT per
row.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    InconclusiveScalingError,
    InvalidArgumentError,
    InvariantViolationError,
)

_MIDPOINT_WEIGHTS = np.array([3.0, -25.0, 150.0, 150.0, -25.0, 3.0]) / 256.0
HERMITIAN_TOL = 1e-10
NOISE_FLOOR = 1e-10
# three halvings; the standard list 0.2 .. 0.025 spans a factor 8
MIN_SPAN = 8.0


def position_grid(d: int = 128, q_min: float = -8.0, q_max: float = 8.0) -> np.ndarray:
    if d < 8:
        raise InvalidArgumentError("grid needs at least 8 points")
    if not q_max > q_min:
        raise InvalidArgumentError("q_max must exceed q_min")
    return np.linspace(q_min, q_max, d)


@dataclass(frozen=True, eq=False)
class PositionGridOperator:
    matrix: np.ndarray
    q: np.ndarray
    hbar: float = 1.0

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        q = np.asarray(self.q, dtype=float)
        if m.ndim != 2 or m.shape != (q.size, q.size):
            raise DimensionMismatchError(f"matrix shape {m.shape} does not match a {q.size}-point grid")
        dq = np.diff(q)
        if np.any(dq <= 0) or not np.allclose(dq, dq[0], rtol=1e-9, atol=0):
            raise InvalidArgumentError("position grid must be uniform and increasing")
        if not self.hbar > 0:
            raise InvalidArgumentError("hbar must be positive")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "q", q)

    @property
    def d(self) -> int:
        return self.q.size

    @property
    def dq(self) -> float:
        return float(self.q[1] - self.q[0])

    @property
    def kernel(self) -> np.ndarray:
        return self.matrix / self.dq

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.matrix))))
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T))) <= tol * scale

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def compatible(self, other: "PositionGridOperator") -> bool:
        return self.d == other.d and np.allclose(self.q, other.q, rtol=0, atol=1e-12) and self.hbar == other.hbar

    def _check(self, other):
        if not self.compatible(other):
            raise DimensionMismatchError("operators live on different grids or use different hbar")

    def __matmul__(self, other: "PositionGridOperator") -> "PositionGridOperator":
        self._check(other)
        return PositionGridOperator(self.matrix @ other.matrix, self.q, self.hbar)

    def __add__(self, other):
        self._check(other)
        return PositionGridOperator(self.matrix + other.matrix, self.q, self.hbar)

    def __sub__(self, other):
        self._check(other)
        return PositionGridOperator(self.matrix - other.matrix, self.q, self.hbar)

    def scaled(self, c) -> "PositionGridOperator":
        return PositionGridOperator(c * self.matrix, self.q, self.hbar)

    def commutator(self, other) -> "PositionGridOperator":
        return self @ other - other @ self


@dataclass(frozen=True, eq=False)
class PhaseSpaceFunction:
    values: np.ndarray
    qgrid: np.ndarray
    pgrid: np.ndarray
    hbar: float = 1.0

    @property
    def dq(self) -> float:
        return float(self.qgrid[1] - self.qgrid[0])

    @property
    def dp(self) -> float:
        return float(self.pgrid[1] - self.pgrid[0])

    def integral(self) -> float:
        return float(np.sum(self.values) * self.dq * self.dp)

    def marginal_q(self) -> np.ndarray:
        return np.sum(self.values, axis=1) * self.dp

    def window(self, q_max: float = 3.0, p_max: float = 3.0) -> np.ndarray:
        Q, P = np.meshgrid(self.qgrid, self.pgrid, indexing="ij")
        return (np.abs(Q) < q_max) & (np.abs(P) < p_max)

    def to_dict(self) -> dict:
        return {"qgrid": self.qgrid.tolist(), "pgrid": self.pgrid.tolist(), "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, d: dict, hbar: float = 1.0) -> "PhaseSpaceFunction":
        return cls(np.asarray(d["values"], dtype=float), np.asarray(d["qgrid"]), np.asarray(d["pgrid"]), hbar)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["q", "p", "value"])
        for i, q in enumerate(self.qgrid):
            for j, p in enumerate(self.pgrid):
                w.writerow([repr(float(q)), repr(float(p)), repr(float(self.values[i, j]))])
        return buf.getvalue()


def _centered_elements(M: np.ndarray) -> np.ndarray:
    """``R[a, m]`` = kernel element at ``(q_a + m dq/2, q_a - m dq/2)`` times ``dq``."""
    d = M.shape[0]
    pad = 3
    Mp = np.zeros((d + 2 * pad, d + 2 * pad), dtype=complex)
    Mp[pad:-pad, pad:-pad] = M
    a = np.arange(d)[:, None]
    m = np.arange(-(d - 1), d)[None, :]
    even = m % 2 == 0

    r, c = a + m // 2, a - m // 2
    ok = even & (r >= 0) & (r < d) & (c >= 0) & (c < d)
    R = np.where(ok, M[np.where(ok, r, 0), np.where(ok, c, 0)], 0)

    # odd m: interpolate along the diagonal col - row = -m around the half-integer centre
    c0 = a - (m + 1) // 2
    ok_odd = ~even & (2 * a + m >= 0) & (2 * a + m <= 2 * (d - 1)) & (2 * a - m >= 0) & (2 * a - m <= 2 * (d - 1))
    acc = np.zeros((d, 2 * d - 1), dtype=complex)
    hi = d + 2 * pad - 1
    for j, w in zip(range(-2, 4), _MIDPOINT_WEIGHTS):
        cj = c0 + j
        acc += w * Mp[np.clip(cj + m + pad, 0, hi), np.clip(cj + pad, 0, hi)]
    return np.where(ok_odd, acc, R)


def _symbol_values(M: np.ndarray, dq: float, hbar: float):
    d = M.shape[0]
    L = 2 * d
    R = _centered_elements(M)
    m = np.arange(-(d - 1), d)
    wrapped = np.zeros((d, L), dtype=complex)
    # (-1)^m shifts the FFT frequencies onto the centred band
    wrapped[:, m % L] = R * np.where(m % 2 == 0, 1.0, -1.0)
    S = np.fft.fft(wrapped, axis=1)
    band = np.pi * hbar / dq
    p = -band + np.arange(L) * (2 * band / L)
    return S, p


def weyl_symbol(op: PositionGridOperator, require_hermitian: bool = True) -> PhaseSpaceFunction:
    """Symbol of an observable (no ``1/(2 pi hbar)`` prefactor)."""
    if require_hermitian and not op.is_hermitian():
        raise InvariantViolationError("weyl_symbol needs a Hermitian operator")
    S, p = _symbol_values(op.matrix, op.dq, op.hbar)
    return PhaseSpaceFunction(S.real, op.q.copy(), p, op.hbar)


def complex_symbol(op: PositionGridOperator) -> np.ndarray:
    """Full complex symbol; needed for products of non-commuting operators."""
    return _symbol_values(op.matrix, op.dq, op.hbar)[0]


def wigner_of_state(rho: PositionGridOperator, trace_tol: float = 1e-8) -> PhaseSpaceFunction:
    """``W(q, p) = symb(rho) / (2 pi hbar)``."""
    if not rho.is_hermitian():
        raise InvariantViolationError("state matrix is not Hermitian")
    tr = rho.trace()
    if abs(tr - 1) > trace_tol:
        raise InvariantViolationError(f"state trace is {tr.real:.12g}, not 1")
    sym = weyl_symbol(rho)
    return PhaseSpaceFunction(sym.values / (2 * np.pi * rho.hbar), sym.qgrid, sym.pgrid, rho.hbar)


def trace_product_check(rho: PositionGridOperator, obs: PositionGridOperator) -> dict:
    """``tr(rho O)`` against ``int int W_rho O_W dq dp``."""
    if not rho.compatible(obs):
        raise DimensionMismatchError("state and observable live on different grids")
    lhs = float(np.trace(rho.matrix @ obs.matrix).real)
    W = wigner_of_state(rho)
    O = weyl_symbol(obs)
    rhs = float(np.sum(W.values * O.values) * W.dq * W.dp)
    gap = abs(lhs - rhs)
    return {"lhs": lhs, "rhs": rhs, "gap": gap, "relative_gap": gap / max(abs(lhs), 1e-300)}


# builders


def identity_operator(q, hbar: float = 1.0) -> PositionGridOperator:
    return PositionGridOperator(np.eye(len(q)), q, hbar)


def position_operator(q, hbar: float = 1.0) -> PositionGridOperator:
    return PositionGridOperator(np.diag(np.asarray(q, dtype=float)), q, hbar)


def potential_operator(q, V: Callable, hbar: float = 1.0) -> PositionGridOperator:
    return PositionGridOperator(np.diag(V(np.asarray(q, dtype=float))), q, hbar)


def momentum_operator(q, hbar: float = 1.0) -> PositionGridOperator:
    """Central difference ``-i hbar d/dq``; its symbol is ``hbar sin(p dq / hbar) / dq``."""
    d = len(q)
    dq = q[1] - q[0]
    M = np.zeros((d, d), dtype=complex)
    i = np.arange(d - 1)
    M[i, i + 1] = -1j * hbar / (2 * dq)
    M[i + 1, i] = 1j * hbar / (2 * dq)
    return PositionGridOperator(M, q, hbar)


def weyl_quantize_polynomial(coeffs: dict, q, hbar: float = 1.0) -> PositionGridOperator:
    """Weyl ordering of ``sum c_ij q^i p^j`` for ``i + j <= 2``.

    ``coeffs`` maps ``(i, j)`` to real coefficients.  ``p^2`` uses the
    three-point Laplacian and ``qp`` the symmetric product ``(qp + pq)/2``.
    """
    q = np.asarray(q, dtype=float)
    d = q.size
    dq = q[1] - q[0]
    Q = np.diag(q).astype(complex)
    P = momentum_operator(q, hbar).matrix
    lap = (np.diag(np.full(d - 1, 1.0), 1) + np.diag(np.full(d - 1, 1.0), -1) - 2 * np.eye(d)) / dq**2
    table = {
        (0, 0): np.eye(d, dtype=complex),
        (1, 0): Q,
        (0, 1): P,
        (2, 0): Q @ Q,
        (0, 2): -(hbar**2) * lap.astype(complex),
        (1, 1): (Q @ P + P @ Q) / 2,
    }
    M = np.zeros((d, d), dtype=complex)
    for key, c in coeffs.items():
        key = tuple(key)
        if key not in table:
            raise InvalidArgumentError(f"monomial q^{key[0]} p^{key[1]} has degree above 2")
        M += float(c) * table[key]
    return PositionGridOperator(M, q, hbar)


def gaussian_state(q, hbar: float = 1.0, q0: float = 0.0, p0: float = 0.0, sigma: float | None = None) -> PositionGridOperator:
    """Pure Gaussian wavepacket; ``sigma`` is the position spread (default ``sqrt(hbar/2)``)."""
    q = np.asarray(q, dtype=float)
    sigma = np.sqrt(hbar / 2) if sigma is None else sigma
    dq = q[1] - q[0]
    psi = (2 * np.pi * sigma**2) ** -0.25 * np.exp(-((q - q0) ** 2) / (4 * sigma**2) + 1j * p0 * q / hbar) * np.sqrt(dq)
    psi /= np.linalg.norm(psi)
    return PositionGridOperator(np.outer(psi, psi.conj()), q, hbar)


def gaussian_wigner(q, p, hbar, q0, p0, sigma) -> np.ndarray:
    """Analytic Wigner function of :func:`gaussian_state`."""
    Q, P = np.meshgrid(q, p, indexing="ij")
    return np.exp(-((Q - q0) ** 2) / (2 * sigma**2) - 2 * sigma**2 * (P - p0) ** 2 / hbar**2) / (np.pi * hbar)


def weyl_gaussian(q, hbar: float, q1: float, p1: float, s: float = 1.0, t: float = 1.0, amp: float = 1.0) -> PositionGridOperator:
    """Weyl quantization of ``amp exp(-(q-q1)^2/2s^2 - (p-p1)^2/2t^2)``, exact kernel."""
    q = np.asarray(q, dtype=float)
    dq = q[1] - q[0]
    x, xp = q[:, None], q[None, :]
    c = (x + xp) / 2
    y = x - xp
    K = (
        amp / (2 * np.pi * hbar)
        * np.exp(-((c - q1) ** 2) / (2 * s**2))
        * t * np.sqrt(2 * np.pi)
        * np.exp(1j * p1 * y / hbar)
        * np.exp(-(t**2) * y**2 / (2 * hbar**2))
    )
    return PositionGridOperator(K * dq, q, hbar)


def gaussian_symbol(Q, P, q1, p1, s=1.0, t=1.0, amp=1.0):
    return amp * np.exp(-((Q - q1) ** 2) / (2 * s**2) - (P - p1) ** 2 / (2 * t**2))


def random_gaussian_pairs(q, hbar: float, count: int, seed: int = 0) -> list:
    """Gaussian states paired with Gaussian-built observables (projector, potential, Weyl-Gaussian)."""
    rng = np.random.default_rng(seed)
    pairs = []
    for i in range(count):
        rho = gaussian_state(q, hbar, rng.uniform(-1.5, 1.5), rng.uniform(-1, 1), rng.uniform(0.6, 1.2))
        kind = i % 3
        if kind == 0:
            obs = gaussian_state(q, hbar, rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.6, 1.2))
        elif kind == 1:
            c = rng.uniform(-1, 1)
            obs = potential_operator(q, lambda x, c=c: np.exp(-((x - c) ** 2) / 2), hbar)
        else:
            obs = weyl_gaussian(q, hbar, rng.uniform(-1, 1), rng.uniform(-1, 1))
        pairs.append((rho, obs))
    return pairs


# scaling studies


@dataclass(frozen=True)
class ScalingReport:
    kind: str
    hbar: list
    deviation: list
    slope: float
    band: tuple
    swapped_deviation: list = ()
    conjugate_gap: list = ()

    @property
    def within_band(self) -> bool:
        lo, hi = self.band
        return lo <= self.slope <= hi

    def to_dict(self) -> dict:
        out = {"hbar": list(self.hbar), "deviation": list(self.deviation), "slope": self.slope, "band": list(self.band)}
        if self.swapped_deviation:
            out["swapped_deviation"] = list(self.swapped_deviation)
            out["conjugate_gap"] = list(self.conjugate_gap)
        return out


def default_scaling_grid(d: int = 512, half_width: float = 5.0) -> np.ndarray:
    return position_grid(d, -half_width, half_width)


def gaussian_pair(q, hbar):
    """Gaussian ``f`` and a momentum-displaced Gaussian ``g`` with hbar-independent widths."""
    return weyl_gaussian(q, hbar, -0.3, 0.0), weyl_gaussian(q, hbar, 0.3, 0.5)


def _check_hbars(hbar_list: Sequence[float]):
    h = np.asarray(hbar_list, dtype=float)
    if h.size < 3:
        raise InvalidArgumentError("need at least 3 hbar values")
    if np.any(h <= 0) or np.any(np.diff(h) >= 0):
        raise InvalidArgumentError("hbar values must be positive and decreasing")
    if h[0] / h[-1] < MIN_SPAN * (1 - 1e-12):
        raise InvalidArgumentError(f"hbar values must span at least a factor {MIN_SPAN}")
    return h


def _slope(h, dev) -> float:
    return float(np.polyfit(np.log(h), np.log(dev), 1)[0])


def _sup(diff, win) -> float:
    return float(np.max(np.abs(diff[win])))


def _resolve(builder, q, hbar):
    f, g = builder(q, hbar)
    if not f.is_hermitian() or not g.is_hermitian():
        raise InvariantViolationError("scaling studies need Hermitian test operators")
    return f, g


def star_product_deviation(f: PositionGridOperator, g: PositionGridOperator, q_max=3.0, p_max=3.0):
    """Sup over the window of ``symb(fg) - symb(f) symb(g)``, for both orders."""
    f._check(g)
    Sf, Sg = weyl_symbol(f), weyl_symbol(g)
    win = Sf.window(q_max, p_max)
    prod = Sf.values * Sg.values
    dfg = complex_symbol(f @ g) - prod
    dgf = complex_symbol(g @ f) - prod
    return _sup(dfg, win), _sup(dgf, win), _sup(dgf - np.conj(dfg), win)


def _fd(S, h, axis):
    D = np.zeros_like(S)
    sl = [slice(None)] * 2

    def at(a, b):
        s = list(sl)
        s[axis] = slice(a, S.shape[axis] + b if b else None)
        return S[tuple(s)]

    s = list(sl)
    s[axis] = slice(2, -2)
    D[tuple(s)] = (-at(4, 0) + 8 * at(3, -1) - 8 * at(1, -3) + at(0, -4)) / (12 * h)
    return D


def poisson_bracket(Sf: PhaseSpaceFunction, Sg: PhaseSpaceFunction) -> np.ndarray:
    """``{f, g} = f_q g_p - f_p g_q`` by fourth-order central differences."""
    f, g = Sf.values, Sg.values
    dq, dp = Sf.dq, Sf.dp
    return _fd(f, dq, 0) * _fd(g, dp, 1) - _fd(f, dp, 1) * _fd(g, dq, 0)


def moyal_bracket_deviation(f: PositionGridOperator, g: PositionGridOperator, q_max=3.0, p_max=3.0) -> float:
    f._check(g)
    Sf, Sg = weyl_symbol(f), weyl_symbol(g)
    mb = weyl_symbol(f.commutator(g).scaled(1 / (1j * f.hbar)), require_hermitian=False)
    return _sup(mb.values - poisson_bracket(Sf, Sg), Sf.window(q_max, p_max))


def _floor(dev, kind):
    dev = np.asarray(dev)
    if np.any(dev <= NOISE_FLOOR):
        raise InconclusiveScalingError(f"{kind} deviation at the grid noise floor", dev.tolist())


def star_product_scaling(builder=gaussian_pair, hbar_list=(0.2, 0.1, 0.05, 0.025), q=None, band=(0.8, 1.2)) -> ScalingReport:
    """Fit ``log dev`` against ``log hbar`` for ``symb(fg) - symb(f) symb(g)``.

    ``builder(q, hbar)`` returns the pair ``(f, g)`` re-instantiated at each
    hbar with fixed symbol widths.
    """
    h = _check_hbars(hbar_list)
    q = default_scaling_grid() if q is None else q
    dev, swapped, conj = [], [], []
    for hb in h:
        f, g = _resolve(builder, q, hb)
        a, b, c = star_product_deviation(f, g)
        dev.append(a)
        swapped.append(b)
        conj.append(c)
    _floor(dev, "star-product")
    return ScalingReport("star-product", h.tolist(), dev, _slope(h, dev), tuple(band), swapped, conj)


def moyal_bracket_scaling(builder=gaussian_pair, hbar_list=(0.2, 0.1, 0.05, 0.025), q=None, band=(1.7, 2.3)) -> ScalingReport:
    h = _check_hbars(hbar_list)
    q = default_scaling_grid() if q is None else q
    dev = []
    for hb in h:
        f, g = _resolve(builder, q, hb)
        dev.append(moyal_bracket_deviation(f, g))
    _floor(dev, "Moyal-bracket")
    return ScalingReport("moyal-bracket", h.tolist(), dev, _slope(h, dev), tuple(band))

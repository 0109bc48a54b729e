"""States, observables and spectral models for mean-value dynamics.

Matrices use the standard convention ``M[j, k] = <j|M|k>`` in the energy
eigenbasis.  Time is integer-stepped, ``rho(n) = U^n rho U^-n`` with
``U = exp(-i H / hbar)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionMismatchError, InvalidArgumentError, InvariantViolationError

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10


def _hermitian(matrix, name: str) -> np.ndarray:
    m = np.array(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvariantViolationError(f"{name} must be a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvariantViolationError(f"{name} has non-finite entries")
    if np.max(np.abs(m - m.conj().T), initial=0.0) > HERMITIAN_TOL:
        raise InvariantViolationError(f"{name} is not Hermitian")
    m.setflags(write=False)
    return m


@dataclass(frozen=True, eq=False)
class QuantumObservable:
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", _hermitian(self.matrix, "observable"))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Density matrix: Hermitian, unit trace, positive semidefinite."""

    matrix: np.ndarray

    def __post_init__(self):
        m = _hermitian(self.matrix, "state")
        tr = np.trace(m)
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvariantViolationError(f"state trace is {tr.real:.15g}, not 1")
        if np.linalg.eigvalsh(m).min() < -PSD_TOL:
            raise InvariantViolationError("state is not positive semidefinite")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def two_level(cls, rho11: float, rho22: float, rho12: complex) -> "QuantumState":
        return cls(np.array([[rho11, rho12], [np.conj(rho12), rho22]], dtype=complex))

    @classmethod
    def pure(cls, psi) -> "QuantumState":
        v = np.asarray(psi, dtype=complex)
        v = v / np.linalg.norm(v)
        m = np.outer(v, v.conj())
        return cls((m + m.conj().T) / 2)


@dataclass(frozen=True, eq=False)
class HamiltonianModel:
    """Discrete energy levels ``E_j`` with ``omega_j = E_j / hbar``."""

    energies: np.ndarray
    hbar: float = 1.0

    def __post_init__(self):
        e = np.array(self.energies, dtype=float).ravel()
        if e.size < 1:
            raise InvalidArgumentError("need at least one energy level")
        if not np.all(np.isfinite(e)):
            raise InvariantViolationError("energies must be finite")
        if not self.hbar > 0:
            raise InvalidArgumentError("hbar must be positive")
        e.setflags(write=False)
        object.__setattr__(self, "energies", e)

    @property
    def dim(self) -> int:
        return self.energies.size

    @property
    def frequencies(self) -> np.ndarray:
        return self.energies / self.hbar

    def gaps(self) -> np.ndarray:
        """``omega_j - omega_k`` as a matrix."""
        w = self.frequencies
        return w[:, None] - w[None, :]

    def unitary(self, t: float = 1.0) -> np.ndarray:
        return np.diag(np.exp(-1j * self.frequencies * t))


@dataclass(frozen=True, eq=False)
class VanHoveObservable:
    """Observable with a singular diagonal part ``O(w)`` and a regular kernel ``O(w, w')``."""

    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.diag, dtype=float)
        off = np.asarray(self.offdiag, dtype=complex)
        if off.shape != (d.size, d.size):
            raise DimensionMismatchError("kernel shape does not match the diagonal")
        if np.max(np.abs(off - off.conj().T), initial=0.0) > HERMITIAN_TOL:
            raise InvariantViolationError("observable kernel is not Hermitian")
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "offdiag", off)

    @classmethod
    def identity(cls, K: int) -> "VanHoveObservable":
        return cls(np.ones(K), np.zeros((K, K)))


def trapezoid_weights(grid: np.ndarray) -> np.ndarray:
    w = np.zeros_like(grid)
    dx = np.diff(grid)
    w[:-1] += dx / 2
    w[1:] += dx / 2
    return w


@dataclass(frozen=True, eq=False)
class QuasiContinuousModel:
    """Truncated continuum on a uniform frequency grid ``[0, Omega]``.

    The state has diagonal profile ``rho(w)`` (integrating to ``norm``,
    1 for a stand-alone state) and off-diagonal kernel ``rho(w, w')``.
    All integrals use trapezoidal weights on the stored grid; the discrete
    double sum recurs at ``n = 2 pi / dw``, so horizons must stay well
    below :attr:`recurrence_time`.
    """

    omega: np.ndarray
    rho_diag: np.ndarray
    rho_offdiag: np.ndarray
    obs: VanHoveObservable | None = None
    norm: float = 1.0
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float)
        if w.ndim != 1 or w.size < 2 or np.any(np.diff(w) <= 0):
            raise InvalidArgumentError("omega must be an increasing grid of at least 2 points")
        if not np.allclose(np.diff(w), w[1] - w[0], rtol=1e-9, atol=0):
            raise InvalidArgumentError("omega grid must be uniform")
        wts = trapezoid_weights(w) if self.weights is None else np.asarray(self.weights, dtype=float)
        rd = np.asarray(self.rho_diag, dtype=float)
        ro = np.asarray(self.rho_offdiag, dtype=complex)
        if rd.shape != w.shape or ro.shape != (w.size, w.size):
            raise DimensionMismatchError("state arrays do not match the frequency grid")
        if np.any(rd < 0):
            raise InvariantViolationError("diagonal profile must be nonnegative")
        if abs(rd @ wts - self.norm) > 1e-10:
            raise InvariantViolationError(f"diagonal profile integrates to {rd @ wts:.12g}, not {self.norm}")
        if np.max(np.abs(ro - ro.conj().T), initial=0.0) > HERMITIAN_TOL:
            raise InvariantViolationError("rho(w, w') is not Hermitian on the grid")
        if not np.isfinite(np.sum(np.abs(ro) * np.outer(wts, wts))):
            raise InvariantViolationError("off-diagonal kernel is not integrable on the grid")
        for name, val in (("omega", w), ("weights", wts), ("rho_diag", rd), ("rho_offdiag", ro)):
            object.__setattr__(self, name, val)

    @property
    def K(self) -> int:
        return self.omega.size

    @property
    def recurrence_time(self) -> float:
        return 2 * np.pi / (self.omega[1] - self.omega[0])

    def with_state(self, rho_diag, rho_offdiag) -> "QuasiContinuousModel":
        return QuasiContinuousModel(self.omega, rho_diag, rho_offdiag, self.obs, self.norm, self.weights)

    def _obs(self, obs):
        obs = self.obs if obs is None else obs
        if obs is None:
            raise InvalidArgumentError("no observable given and the model carries none")
        if obs.diag.shape != self.omega.shape:
            raise DimensionMismatchError("observable does not live on the model grid")
        return obs

    def diagonal_value(self, obs: VanHoveObservable | None = None) -> float:
        """``int rho(w)^* O(w) dw``: the weak-limit value of the mean."""
        obs = self._obs(obs)
        return float(np.sum(self.rho_diag * obs.diag * self.weights))

    def offdiagonal_series(self, obs: VanHoveObservable | None, horizon: int) -> np.ndarray:
        """``I(n) = int int rho(w,w')^* O(w,w') exp(-i (w - w') n) dw dw'`` for ``n = 0..horizon``."""
        obs = self._obs(obs)
        if horizon > self.recurrence_time / 2:
            raise InvalidArgumentError(
                f"horizon {horizon} exceeds half the grid recurrence time {self.recurrence_time:.0f}"
            )
        C = np.conj(self.rho_offdiag) * obs.offdiag * np.outer(self.weights, self.weights)
        out = np.empty(horizon + 1)
        chunk = 256
        for start in range(0, horizon + 1, chunk):
            n = np.arange(start, min(start + chunk, horizon + 1))
            e = np.exp(-1j * np.outer(n, self.omega))
            out[n] = np.sum((e @ C) * np.conj(e), axis=1).real
        return out

    def mean_value_series(self, obs: VanHoveObservable | None = None, horizon: int = 200) -> np.ndarray:
        return self.diagonal_value(obs) + self.offdiagonal_series(obs, horizon)

    def components(self, obs=None, horizon: int = 200) -> dict:
        return {
            "discrete": np.zeros(horizon + 1),
            "continuum_diagonal": self.diagonal_value(obs),
            "continuum_offdiagonal": self.offdiagonal_series(obs, horizon),
        }


def gaussian_profile(omega, center, width, weights=None, mass=1.0) -> np.ndarray:
    g = np.exp(-((omega - center) ** 2) / (2 * width**2))
    weights = trapezoid_weights(omega) if weights is None else weights
    return mass * g / (g @ weights)


def gaussian_kernel(omega, center, width, amplitude, phase=0.0) -> np.ndarray:
    """Hermitian ``a g(w) g(w') exp(i phase (w - w'))`` with ``g`` a Gaussian bump."""
    g = np.exp(-((omega - center) ** 2) / (2 * width**2))
    return amplitude * np.outer(g, g) * np.exp(1j * phase * (omega[:, None] - omega[None, :]))


def gaussian_continuum(
    K: int = 512,
    omega_max: float = 1.0,
    center: float = 0.5,
    width: float = 0.08,
    coherence: float = 0.3,
    obs_center: float = 0.5,
    obs_width: float = 0.1,
    mass: float = 1.0,
) -> QuasiContinuousModel:
    """Gaussian state and Gaussian Van Hove observable on ``[0, omega_max]``."""
    omega = np.linspace(0.0, omega_max, K)
    rho_diag = gaussian_profile(omega, center, width, mass=mass)
    rho_off = gaussian_kernel(omega, center, width, coherence * mass)
    obs = VanHoveObservable(
        np.exp(-((omega - obs_center) ** 2) / (2 * (2 * obs_width) ** 2)),
        gaussian_kernel(omega, obs_center, obs_width, 1.0),
    )
    return QuasiContinuousModel(omega, rho_diag, rho_off, obs, norm=mass)


def gaussian_observable_basket(model: QuasiContinuousModel, size: int = 5, seed: int = 0) -> list:
    """Van Hove observables with Gaussian diagonal and kernel parts at random centers."""
    rng = np.random.default_rng(seed)
    w = model.omega
    lo, hi = w[0], w[-1]
    out = []
    for _ in range(size):
        c = rng.uniform(lo + 0.3 * (hi - lo), lo + 0.7 * (hi - lo))
        s = rng.uniform(0.05, 0.15) * (hi - lo)
        out.append(
            VanHoveObservable(
                rng.uniform(0.5, 2.0) * np.exp(-((w - c) ** 2) / (2 * (2 * s) ** 2)),
                gaussian_kernel(w, c, s, rng.uniform(0.5, 2.0), phase=rng.uniform(-5, 5)),
            )
        )
    return out


def mean_value_series(rho: QuantumState, obs: QuantumObservable, h: HamiltonianModel, horizon: int) -> np.ndarray:
    """``(rho(n)|O) = sum_jk rho_jk O_kj exp(-i (E_j - E_k) n / hbar)`` for ``n = 0..horizon``."""
    if horizon < 1:
        raise InvalidArgumentError("horizon must be >= 1")
    d = h.dim
    if rho.dim != d or obs.dim != d:
        raise DimensionMismatchError(f"state {rho.dim}, observable {obs.dim}, Hamiltonian {d} levels")
    coef = (rho.matrix * obs.matrix.T).ravel()
    gaps = h.gaps().ravel()
    keep = coef != 0
    coef, gaps = coef[keep], gaps[keep]
    n = np.arange(horizon + 1)
    out = np.empty(horizon + 1, dtype=complex)
    chunk = max(1, 2_000_000 // max(coef.size, 1))
    for start in range(0, horizon + 1, chunk):
        nn = n[start:start + chunk]
        out[start:start + chunk] = np.exp(-1j * np.outer(nn, gaps)) @ coef
    scale = max(1.0, float(np.abs(coef).sum()))
    if np.max(np.abs(out.imag)) > 1e-10 * scale:
        raise InvariantViolationError("mean value acquired an imaginary part")
    return out.real


@dataclass(frozen=True, eq=False)
class DiscreteSpectrumModel:
    h: HamiltonianModel
    rho: QuantumState
    obs: QuantumObservable | None = None

    def __post_init__(self):
        if self.rho.dim != self.h.dim:
            raise DimensionMismatchError("state and Hamiltonian dimensions differ")

    def _obs(self, obs):
        obs = self.obs if obs is None else obs
        if obs is None:
            raise InvalidArgumentError("no observable given and the model carries none")
        return obs

    def diagonal_value(self, obs=None) -> float:
        o = self._obs(obs)
        return float(np.real(np.sum(np.diag(self.rho.matrix) * np.diag(o.matrix))))

    def mean_value_series(self, obs=None, horizon: int = 200) -> np.ndarray:
        return mean_value_series(self.rho, self._obs(obs), self.h, horizon)

    def components(self, obs=None, horizon: int = 200) -> dict:
        return {
            "discrete": self.mean_value_series(obs, horizon),
            "continuum_diagonal": 0.0,
            "continuum_offdiagonal": np.zeros(horizon + 1),
        }


@dataclass(frozen=True)
class MixedObservable:
    discrete: QuantumObservable
    continuum: VanHoveObservable


@dataclass(frozen=True, eq=False)
class MixedSpectrumModel:
    """Block-diagonal state: weight ``p`` on discrete levels, ``1 - p`` on a continuum.

    ``continuum`` must carry ``norm = 1 - p``; ``discrete.rho`` is the
    normalized discrete block.
    """

    discrete: DiscreteSpectrumModel
    continuum: QuasiContinuousModel
    weight: float

    def __post_init__(self):
        if not 0 <= self.weight <= 1:
            raise InvalidArgumentError("discrete weight must lie in [0, 1]")
        if abs(self.continuum.norm - (1 - self.weight)) > 1e-12:
            raise InvariantViolationError("continuum mass and discrete weight do not sum to 1")

    @property
    def h(self) -> HamiltonianModel:
        return self.discrete.h

    def _split_obs(self, obs):
        if obs is None:
            return None, None
        return obs.discrete, obs.continuum

    def components(self, obs: MixedObservable | None = None, horizon: int = 200) -> dict:
        od, oc = self._split_obs(obs)
        return {
            "discrete": self.weight * self.discrete.mean_value_series(od, horizon),
            "continuum_diagonal": self.continuum.diagonal_value(oc),
            "continuum_offdiagonal": self.continuum.offdiagonal_series(oc, horizon),
        }

    def mean_value_series(self, obs: MixedObservable | None = None, horizon: int = 200) -> np.ndarray:
        c = self.components(obs, horizon)
        return c["discrete"] + c["continuum_diagonal"] + c["continuum_offdiagonal"]


def mixed_example(
    E1: float = 0.0,
    E2: float = 1.0,
    hbar: float = 1.0,
    weight: float = 0.4,
    rho12: complex = 0.3 + 0.1j,
    K: int = 512,
) -> MixedSpectrumModel:
    """Two discrete levels plus a Gaussian continuum, with default observables."""
    h = HamiltonianModel([E1, E2], hbar)
    rho = QuantumState.two_level(0.6, 0.4, rho12)
    obs = QuantumObservable(np.array([[1.0, 0.5 - 0.2j], [0.5 + 0.2j, -0.3]]))
    continuum = gaussian_continuum(K=K, mass=1 - weight)
    return MixedSpectrumModel(DiscreteSpectrumModel(h, rho, obs), continuum, weight)

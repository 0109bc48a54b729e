"""Spectral decomposition of constrictive transfer operators.

For a finite stochastic operator the decomposition

    P^n f = sum_i lambda_{alpha^-n(i)}(f) 1bar_{A_i} + Q_n f

is recovered in three steps: the peripheral eigenvalues give ``r`` and the
common period ``L`` of the cyclic part; the limit ``E = lim_k P^{kL}``
(the Cesaro/Fourier recombination of the peripheral eigenprojections) has
nonnegative columns whose minimal supports are the sets ``A_i``; and the
permutation ``alpha`` is read off by matching ``P 1bar_{A_i}`` against the
basis densities in L1.  ``r`` from the eigenvalue count and ``r`` from the
support structure are cross-checked.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DecompositionAmbiguityError, InvalidArgumentError, NumericalFailureError
from .measure import ClassicalObservable, Density, PartitionedMeasureSpace
from .transfer import TransferOperator, orbit

EXACT_TOL = 1e-6
ULAM_TOL = 1e-2
MAX_PERIOD = 10_000


def peripheral_spectrum(P: TransferOperator, radius_tol: float = 0.05):
    """Eigenpairs with ``|lambda| >= 1 - radius_tol``, sorted by argument."""
    if not 0 < radius_tol < 1:
        raise InvalidArgumentError("radius_tol must lie in (0, 1)")
    try:
        w, v = np.linalg.eig(P.matrix)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(f"eigensolver failed: {exc}") from exc
    keep = np.abs(w) >= 1.0 - radius_tol
    if not np.any(np.abs(w[keep] - 1.0) < 1e-6):
        raise NumericalFailureError("eigenvalue 1 missing from the spectrum of a stochastic operator")
    w, v = w[keep], v[:, keep]
    order = np.lexsort((np.abs(w) * -1, np.round(np.angle(w), 12)))
    return [(complex(w[i]), v[:, i]) for i in order]


def _root_order(lam: complex, n: int, tol: float) -> int:
    frac = Fraction(float(np.angle(lam) / (2 * np.pi)) % 1.0).limit_denominator(max(n, 1))
    if abs(np.exp(2j * np.pi * float(frac)) - lam / abs(lam)) > tol:
        raise DecompositionAmbiguityError(
            f"peripheral eigenvalue {lam:.6g} is not a root of unity of order <= {n}"
        )
    return frac.denominator


def _limit_operator(M: np.ndarray, period: int, max_squarings: int = 64) -> np.ndarray:
    E = np.linalg.matrix_power(M, period)
    for _ in range(max_squarings):
        E2 = E @ E
        if np.max(np.abs(E2 - E)) < 1e-13:
            return E2
        E = E2
    return E


def _cycles(perm) -> list:
    perm = list(perm)
    seen, cycles = set(), []
    for start in range(len(perm)):
        if start in seen:
            continue
        cyc, i = [], start
        while i not in seen:
            seen.add(i)
            cyc.append(i)
            i = perm[i]
        cycles.append(cyc)
    return cycles


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    r: int
    cell_sets: tuple
    basis_densities: tuple
    permutation: np.ndarray
    functionals: tuple
    alpha_weights: np.ndarray
    remainder_decay: np.ndarray
    probes: np.ndarray
    peripheral_eigenvalues: np.ndarray
    space: PartitionedMeasureSpace
    period: int = 1
    tol: float = EXACT_TOL
    uncovered_cells: tuple = ()
    basis_defect: np.ndarray = field(default=None)

    def cycles(self) -> list:
        return _cycles(self.permutation)

    def cycle_notation(self) -> str:
        return "".join("(" + " ".join(str(i + 1) for i in c) + ")" for c in self.cycles())

    def alpha_power(self, n: int) -> np.ndarray:
        """``alpha^n`` as an index array (negative ``n`` gives the inverse)."""
        perm = np.asarray(self.permutation)
        if n < 0:
            perm = np.argsort(perm)
            n = -n
        out = np.arange(self.r)
        for _ in range(int(n) % math.lcm(*[len(c) for c in self.cycles()])):
            out = perm[out]
        return out

    def lambdas(self, f) -> np.ndarray:
        v = np.asarray(f, dtype=float)
        mu = self.space.cell_measure
        return np.array([np.sum(v * k.values * mu) for k in self.functionals])

    def identity_reconstruction(self) -> np.ndarray:
        """``sum_i mu(A_i) 1bar_{A_i}``; equals 1 on every covered cell."""
        return sum(a * b.values for a, b in zip(self.alpha_weights, self.basis_densities))

    def to_dict(self, classification: "EHClassification | None" = None) -> dict:
        d = {
            "r": self.r,
            "cycle_notation": self.cycle_notation(),
            "cell_sets": [list(map(int, s)) for s in self.cell_sets],
            "mu": self.alpha_weights.tolist(),
            "permutation": [int(i) for i in self.permutation],
            "period": self.period,
            "peripheral_eigenvalues": [[float(z.real), float(z.imag)] for z in self.peripheral_eigenvalues],
            "remainder_decay": self.remainder_decay.tolist(),
            "uncovered_cells": list(self.uncovered_cells),
        }
        if classification is not None:
            d["classification"] = classification.to_dict()
        return d


def _default_tol(P: TransferOperator) -> float:
    return EXACT_TOL if P.provenance.get("kind") == "exact-permutation" else ULAM_TOL


def _extract_supports(E: np.ndarray, space: PartitionedMeasureSpace, tol: float):
    mu = space.cell_measure
    supports = {}
    for j in range(E.shape[1]):
        col = E[:, j]
        if col @ mu <= 1e-12:
            continue
        s = frozenset(np.flatnonzero(col > tol * col.max()).tolist())
        supports.setdefault(s, j)
    minimal = [s for s in supports if not any(t < s for t in supports)]
    minimal.sort(key=min)
    for a in range(len(minimal)):
        for b in range(a + 1, len(minimal)):
            if minimal[a] & minimal[b]:
                raise DecompositionAmbiguityError(
                    f"invariant supports overlap on cells {sorted(minimal[a] & minimal[b])[:8]}"
                )
    return [tuple(sorted(s)) for s in minimal], [supports[s] for s in minimal]


def _match_permutation(P: TransferOperator, basis: list, match_tol: float) -> np.ndarray:
    r = len(basis)
    mu = P.space.cell_measure
    images = [P.apply(b.values) for b in basis]
    table = np.array([[float(np.abs(img - c.values) @ mu) for c in basis] for img in images])
    perm = np.empty(r, dtype=int)
    for i in range(r):
        within = np.flatnonzero(table[i] <= match_tol)
        if within.size == 0:
            raise DecompositionAmbiguityError(
                f"P 1bar_A{i + 1} matches no basis density within {match_tol}", distances=table
            )
        perm[i] = within[np.argmin(table[i, within])]
    if len(set(perm.tolist())) != r:
        raise DecompositionAmbiguityError("matched map on the sets A_i is not a bijection", distances=table)
    return perm


def _expected_roots(perm) -> np.ndarray:
    roots = []
    for c in _cycles(perm):
        k = len(c)
        roots.extend(np.exp(2j * np.pi * np.arange(k) / k))
    return np.array(roots)


def _roots_agree(expected: np.ndarray, found: np.ndarray, tol: float) -> bool:
    if expected.size != found.size:
        return False
    unused = list(found)
    for z in expected:
        dist = [abs(z - w) for w in unused]
        k = int(np.argmin(dist))
        if dist[k] > tol:
            return False
        unused.pop(k)
    return True


def extract_decomposition(
    P: TransferOperator,
    tol: float | None = None,
    probe_count: int = 5,
    horizon: int = 50,
    radius_tol: float = 0.05,
    match_tol: float = 0.1,
    seed: int = 0,
) -> SpectralDecomposition:
    """Recover ``(r, A_i, 1bar_{A_i}, alpha, k_i)`` and remainder diagnostics from ``P``.

    ``tol`` is the support threshold relative to a column maximum; the
    default is 1e-6 for exact permutation operators and 1e-2 otherwise.
    """
    tol = _default_tol(P) if tol is None else float(tol)
    space = P.space
    n = P.n
    peripheral = peripheral_spectrum(P, radius_tol)
    eigvals = np.array([lam for lam, _ in peripheral])
    r_eig = len(eigvals)
    root_tol = max(1e-6, radius_tol)
    period = math.lcm(*[_root_order(lam, n, root_tol) for lam in eigvals])
    if period > MAX_PERIOD:
        raise DecompositionAmbiguityError(f"cyclic period {period} exceeds {MAX_PERIOD}")

    E = _limit_operator(P.matrix, period)
    cell_sets, representatives = _extract_supports(E, space, tol)
    if len(cell_sets) != r_eig:
        mu = space.cell_measure
        dens = [Density.indicator(c, space).values for c in cell_sets]
        table = np.array([[float(np.abs(a - b) @ mu) for b in dens] for a in dens])
        raise DecompositionAmbiguityError(
            f"{r_eig} peripheral eigenvalues but {len(cell_sets)} invariant supports", distances=table
        )
    basis = [Density.indicator(s, space) for s in cell_sets]
    perm = _match_permutation(P, basis, match_tol)
    if not _roots_agree(_expected_roots(perm), eigvals, root_tol):
        raise DecompositionAmbiguityError(
            "peripheral eigenvalues do not match the cycle structure of the recovered permutation"
        )
    mu = space.cell_measure
    weights = np.array([mu[list(s)].sum() for s in cell_sets])
    if np.any(np.abs(weights - weights[perm]) > 1e-8):
        raise DecompositionAmbiguityError("mu(A_i) differs from mu(A_alpha(i)) along a cycle")

    covered = np.zeros(n, dtype=bool)
    for s in cell_sets:
        covered[list(s)] = True
    uncovered = tuple(int(j) for j in np.flatnonzero(~covered))
    functionals = []
    for s in cell_sets:
        k = np.zeros(n)
        k[list(s)] = 1.0
        if uncovered:
            # transient cells: asymptotic fraction of their mass absorbed by A_i
            absorbed = (mu[list(s)] @ E[list(s), :]) / mu
            k[~covered] = absorbed[~covered]
        functionals.append(ClassicalObservable(k, space))

    raw = []
    for j in representatives:
        col = np.maximum(E[:, j], 0.0)
        raw.append(col / (col @ mu))
    defect = np.array([np.abs(g - b.values) @ mu for g, b in zip(raw, basis)])

    decomposition = SpectralDecomposition(
        r=r_eig,
        cell_sets=tuple(cell_sets),
        basis_densities=tuple(basis),
        permutation=perm,
        functionals=tuple(functionals),
        alpha_weights=weights,
        remainder_decay=np.zeros((0, horizon + 1)),
        probes=np.zeros((0, n)),
        peripheral_eigenvalues=eigvals,
        space=space,
        period=period,
        tol=tol,
        uncovered_cells=uncovered,
        basis_defect=defect,
    )
    probes = probe_densities(space, probe_count, seed)
    decay = np.array([remainder_series(P, decomposition, f, horizon) for f in probes]).reshape(
        len(probes), horizon + 1
    )
    object.__setattr__(decomposition, "remainder_decay", decay)
    object.__setattr__(decomposition, "probes", np.array([f.values for f in probes]).reshape(len(probes), n))
    return decomposition


def probe_densities(space: PartitionedMeasureSpace, count: int, seed: int = 0) -> list:
    """Indicators of random cells first, then random densities."""
    rng = np.random.default_rng(seed)
    n = space.n_cells
    n_ind = max(1, count - (2 * count) // 5)
    out = []
    for _ in range(n_ind):
        width = max(1, n // 16)
        start = int(rng.integers(0, n))
        out.append(Density.indicator([(start + k) % n for k in range(width)], space))
    while len(out) < count:
        out.append(Density.from_values(rng.random(n), space))
    return out[:count]


def reconstruct_values(d: SpectralDecomposition, f, n: int) -> np.ndarray:
    if n < 0:
        raise InvalidArgumentError("n must be nonnegative")
    lam = d.lambdas(f)
    target = d.alpha_power(n)
    out = np.zeros(d.space.n_cells)
    for i in range(d.r):
        out += lam[i] * d.basis_densities[target[i]].values
    return out


def reconstruct_pnf(d: SpectralDecomposition, f: Density, n: int) -> Density:
    """The non-remainder part ``sum_i lambda_{alpha^-n(i)}(f) 1bar_{A_i}`` of ``P^n f``."""
    return Density(reconstruct_values(d, f, n), d.space)


def remainder_series(P: TransferOperator, d: SpectralDecomposition, f, horizon: int) -> np.ndarray:
    """``||P^n f - reconstruct_pnf(d, f, n)||_1`` for ``n = 0..horizon``."""
    traj = orbit(P, f, horizon)
    mu = d.space.cell_measure
    return np.array([np.abs(traj[k] - reconstruct_values(d, f, k)) @ mu for k in range(horizon + 1)])


@dataclass(frozen=True)
class EHClassification:
    ergodic: bool
    exact: str
    mixing: str
    r: int
    cycle_lengths: tuple
    notes: tuple = ()

    @property
    def verdict(self) -> str:
        if self.r == 1:
            return "exact (r = 1)"
        if self.ergodic:
            return f"ergodic, not mixing (r = {self.r}, cyclic α)"
        return f"not ergodic (r = {self.r}, {len(self.cycle_lengths)} cycles)"

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "ergodic": self.ergodic,
            "exact": self.exact,
            "mixing": self.mixing,
            "r": self.r,
            "cycle_lengths": list(self.cycle_lengths),
            "notes": list(self.notes),
        }


def classify(d: SpectralDecomposition) -> EHClassification:
    """Ergodic-hierarchy level from the permutation structure.

    Only the stated implications are used: ergodic iff alpha is one cycle,
    r = 1 is sufficient for exactness, and r = 1 is necessary for mixing.
    """
    cycles = d.cycles()
    lengths = tuple(len(c) for c in cycles)
    ergodic = len(cycles) == 1
    notes = [f"alpha = {d.cycle_notation()}"]
    if ergodic:
        notes.append(f"alpha is a single {d.r}-cycle: no invariant proper subfamily of the A_i")
    else:
        notes.append(f"alpha has {len(cycles)} cycles: each cycle's union of A_i is invariant")
    if d.r == 1:
        exact, mixing = "yes-by-r1", "unknown"
        notes.append("r = 1: exact; the necessary condition for mixing holds, a direct test decides")
    else:
        exact, mixing = "unknown", "ruled-out"
        notes.append(f"r = {d.r} > 1: mixing is ruled out")
    return EHClassification(ergodic, exact, mixing, d.r, lengths, tuple(notes))

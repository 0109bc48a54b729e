"""Finite Frobenius-Perron (transfer) operators and their Koopman adjoints.

A :class:`TransferOperator` acts on density *values*:
``(Pf)_i = sum_j M_ij f_j``.  Mass conservation reads
``sum_i mu_i M_ij = mu_j``, which is column-stochasticity when the
partition is uniform.

Every finite column-stochastic matrix is constrictive, so the existence
of a stationary density and of the spectral decomposition is taken as
given for operators built here; nothing is checked at runtime.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConvergenceFailureError,
    DimensionMismatchError,
    InvalidArgumentError,
    InvariantViolationError,
    MapRangeError,
)
from .maps import MapSystem
from .measure import ClassicalObservable, Density, PartitionedMeasureSpace, make_uniform_partition

MARKOV_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class TransferOperator:
    matrix: np.ndarray
    space: PartitionedMeasureSpace
    provenance: dict = field(default_factory=lambda: {"kind": "custom"})

    def __post_init__(self):
        M = np.array(self.matrix, dtype=float)
        n = self.space.n_cells
        if M.shape != (n, n):
            raise DimensionMismatchError(f"matrix shape {M.shape} does not match {n} cells")
        if not np.all(np.isfinite(M)):
            raise InvariantViolationError("transfer matrix has non-finite entries")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    @property
    def n(self) -> int:
        return self.space.n_cells

    def check(self, tol: float = MARKOV_TOL) -> "TransferOperator":
        """Raise unless the matrix is nonnegative and conserves mass."""
        if np.any(self.matrix < -tol):
            raise InvariantViolationError("transfer matrix has negative entries")
        mu = self.space.cell_measure
        err = np.max(np.abs(mu @ self.matrix - mu) / np.where(mu > 0, mu, 1.0))
        if err > tol:
            raise InvariantViolationError(f"transfer matrix does not conserve mass (error {err:.3g})")
        return self

    def apply(self, values) -> np.ndarray:
        v = np.asarray(values, dtype=float)
        if v.shape[-1] != self.n:
            raise DimensionMismatchError(f"vector of length {v.shape[-1]} vs {self.n} cells")
        return v @ self.matrix.T

    def power(self, n: int) -> np.ndarray:
        return np.linalg.matrix_power(self.matrix, int(n))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "format": "dense",
            "rows": self.matrix.tolist(),
            "provenance": self.provenance,
            "partition": self.space.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "TransferOperator":
        if d.get("format", "dense") != "dense":
            raise InvalidArgumentError(f"unsupported matrix format {d.get('format')!r}")
        space = (
            PartitionedMeasureSpace.from_dict(d["partition"])
            if "partition" in d
            else make_uniform_partition(int(d["n"]))
        )
        return cls(np.asarray(d["rows"], dtype=float), space, dict(d.get("provenance", {})))

    @classmethod
    def from_json(cls, text: str) -> "TransferOperator":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class KoopmanOperator:
    """Measure-weighted adjoint ``U = D^-1 M^T D`` of a transfer matrix."""

    matrix: np.ndarray
    space: PartitionedMeasureSpace

    def apply(self, values) -> np.ndarray:
        v = np.asarray(values, dtype=float)
        if v.shape[-1] != self.space.n_cells:
            raise DimensionMismatchError(f"vector of length {v.shape[-1]} vs {self.space.n_cells} cells")
        return v @ self.matrix.T

    def power_apply(self, g, n: int) -> np.ndarray:
        v = np.asarray(g, dtype=float)
        for _ in range(int(n)):
            v = self.apply(v)
        return v


def permutation_operator(perm, space: PartitionedMeasureSpace, provenance=None) -> TransferOperator:
    """Operator moving all mass of cell ``j`` to cell ``perm[j]``."""
    perm = np.asarray(perm, dtype=int)
    n = space.n_cells
    if sorted(perm.tolist()) != list(range(n)):
        raise InvalidArgumentError("perm must be a permutation of the cells")
    S = np.zeros((n, n))
    S[perm, np.arange(n)] = 1.0
    mu = space.cell_measure
    M = S * mu[None, :] / mu[:, None]
    return TransferOperator(M, space, provenance or {"kind": "exact-permutation"})


def _sample_points(space: PartitionedMeasureSpace, samples: int, rng: np.random.Generator):
    """Stratified points: one uniform draw in each of ``samples`` x-strata per cell."""
    shape = space.grid_shape
    offsets = (np.arange(samples)[None, :] + rng.random((space.n_cells, samples))) / samples
    if len(shape) == 1:
        n = shape[0]
        return (np.arange(n)[:, None] + offsets) / n
    k = shape[0]
    ix = np.arange(space.n_cells) % k
    iy = np.arange(space.n_cells) // k
    x = (ix[:, None] + offsets) / k
    y = (iy[:, None] + rng.random((space.n_cells, samples))) / k
    return np.stack([x, y], axis=-1)


def _cell_index(images: np.ndarray, space: PartitionedMeasureSpace) -> np.ndarray:
    shape = space.grid_shape
    if len(shape) == 1:
        return np.minimum((images * shape[0]).astype(int), shape[0] - 1)
    k = shape[0]
    ix = np.minimum((images[..., 0] * k).astype(int), k - 1)
    iy = np.minimum((images[..., 1] * k).astype(int), k - 1)
    return iy * k + ix


def ulam_operator(
    system: MapSystem,
    space: PartitionedMeasureSpace,
    samples_per_cell: int = 1000,
    seed: int = 0,
) -> TransferOperator:
    """Ulam discretization of the Frobenius-Perron operator of ``system``.

    Rotations and cyclic shifts that permute the cells exactly are built as
    permutation matrices without sampling.  Otherwise ``M_ij`` is the
    fraction of stratified sample points of cell ``j`` landing in cell
    ``i``, rescaled by ``mu_j / mu_i`` for the density-value convention.
    """
    if int(samples_per_cell) != samples_per_cell or samples_per_cell < 1:
        raise InvalidArgumentError("samples_per_cell must be a positive integer")
    if system.domain != space.domain:
        raise DimensionMismatchError(f"map lives on {system.domain}, partition on {space.domain}")
    if not space.is_uniform():
        raise InvalidArgumentError("Ulam sampling is implemented for uniform partitions only")
    n = space.n_cells
    shift = system.exact_shift(n)
    if shift is not None:
        perm = (np.arange(n) + shift) % n
        return permutation_operator(perm, space, {"kind": "exact-permutation", "map": system.to_dict()})

    samples = int(samples_per_cell)
    rng = np.random.default_rng(seed)
    pts = _sample_points(space, samples, rng)
    flat = pts.reshape(n * samples, -1) if system.dim == 2 else pts.reshape(-1)
    images = np.asarray(system(flat), dtype=float)
    images = images.reshape(pts.shape)
    bad = ~np.isfinite(images) | (images < -1e-12) | (images > 1.0 + 1e-12)
    if bad.any():
        cell_bad = np.argwhere(bad.reshape(n, -1).any(axis=1)).ravel()
        raise MapRangeError(
            f"map sends samples of cell {int(cell_bad[0])} outside {space.domain}",
            cell=int(cell_bad[0]),
        )
    images = np.clip(images, 0.0, 1.0)
    targets = _cell_index(images, space)
    S = np.zeros((n, n))
    cols = np.repeat(np.arange(n), samples)
    np.add.at(S, (targets.reshape(-1), cols), 1.0)
    S /= samples
    mu = space.cell_measure
    M = S * mu[None, :] / mu[:, None]
    return TransferOperator(
        M, space, {"kind": "ulam", "samples": samples, "seed": seed, "map": system.to_dict()}
    ).check()


def koopman_of(P: TransferOperator) -> KoopmanOperator:
    mu = P.space.cell_measure
    U = (P.matrix.T * mu[None, :]) / mu[:, None]
    return KoopmanOperator(U, P.space)


@dataclass(frozen=True)
class MarkovReport:
    nonneg_ok: bool
    norm_preserved: bool
    contractive: bool
    monotonic: bool
    max_norm_error: float
    min_entry: float

    @property
    def all_ok(self) -> bool:
        return self.nonneg_ok and self.norm_preserved and self.contractive and self.monotonic


def verify_markov(P: TransferOperator, trials: int = 100, seed: int = 0, tol: float = MARKOV_TOL) -> MarkovReport:
    """Check the Markov-operator axioms on random inputs; failures are reported."""
    if trials < 1:
        raise InvalidArgumentError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    mu = P.space.cell_measure
    n = P.n

    def l1(v):
        return np.abs(v) @ mu

    # basis columns make the positivity check exhaustive
    f_pos = np.vstack([np.eye(n), rng.exponential(size=(trials, n))])
    Pf = P.apply(f_pos)
    nonneg_ok = bool(np.all(Pf >= -tol))
    norm_err = np.abs(l1(Pf) - l1(f_pos)) / l1(f_pos)
    norm_ok = bool(np.all(norm_err <= tol))

    f_signed = rng.normal(size=(trials, n))
    contractive = bool(np.all(l1(P.apply(f_signed)) <= l1(f_signed) * (1 + tol) + tol))

    g = rng.normal(size=(trials, n))
    f = g + rng.exponential(size=(trials, n))
    monotonic = bool(np.all(P.apply(f) - P.apply(g) >= -tol))
    return MarkovReport(
        nonneg_ok=nonneg_ok,
        norm_preserved=norm_ok,
        contractive=contractive,
        monotonic=monotonic,
        max_norm_error=float(norm_err.max()),
        min_entry=float(P.matrix.min()),
    )


def _check_operand(P: TransferOperator, f):
    if isinstance(f, (Density, ClassicalObservable)) and not P.space.same_as(f.space):
        raise DimensionMismatchError("operator and density live on different partitions")


def orbit(P: TransferOperator, f, n: int) -> np.ndarray:
    """Array of ``P^k f`` for ``k = 0..n`` (shape ``(n + 1, cells)``)."""
    _check_operand(P, f)
    x = np.asarray(f, dtype=float)
    out = np.empty((int(n) + 1, P.n))
    out[0] = x
    for k in range(1, int(n) + 1):
        x = P.apply(x)
        out[k] = x
    return out


def iterate(P: TransferOperator, f: Density, n: int) -> Density:
    """``P^n f``; ``n = 0`` returns ``f`` itself."""
    if n < 0:
        raise InvalidArgumentError("n must be nonnegative")
    _check_operand(P, f)
    if n == 0:
        return f
    x = f.values
    for _ in range(int(n)):
        x = P.apply(x)
    return Density(np.maximum(x, 0.0), P.space)


def stationary_residual(P: TransferOperator, f) -> float:
    v = np.asarray(f, dtype=float)
    return float(np.abs(P.apply(v) - v) @ P.space.cell_measure)


def stationary_density(
    P: TransferOperator,
    tol: float = 1e-10,
    max_iter: int = 100_000,
    initial: Density | None = None,
    return_info: bool = False,
):
    """Fixed point of ``P`` by power iteration with a running Cesaro mean.

    Each step tests both the current iterate and the running mean of all
    iterates so far; the mean is what converges when ``P`` has peripheral
    eigenvalues other than 1.
    """
    if not tol > 0:
        raise InvalidArgumentError("tol must be positive")
    x = (initial if initial is not None else Density.uniform(P.space)).values.copy()
    total = np.zeros_like(x)
    best = np.inf
    for k in range(int(max_iter)):
        total += x
        for candidate, method in ((x, "power"), (total / (k + 1), "cesaro")):
            res = stationary_residual(P, candidate)
            best = min(best, res)
            if res <= tol:
                density = Density.from_values(np.maximum(candidate, 0.0), P.space)
                if return_info:
                    return density, {"residual": res, "iterations": k, "method": method}
                return density
        x = P.apply(x)
    raise ConvergenceFailureError(
        f"no stationary density within {max_iter} iterations (best residual {best:.3g})", residual=best
    )

"""Finite partitioned measure spaces, piecewise-constant densities and observables.

Densities store *values* (mass per unit measure), not masses; every
conversion to mass multiplies by the cell measure.  The normalized
indicator of a set ``A`` is therefore ``1_A / mu(A)`` and has unit mass.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, InvalidArgumentError, InvariantViolationError

DOMAINS = ("unit interval", "unit square")

MEASURE_TOL = 1e-12
DENSITY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class PartitionedMeasureSpace:
    """Disjoint cells covering a domain, with a normalized measure."""

    cell_measure: np.ndarray
    domain: str = "unit interval"
    cells: tuple = field(default=None)

    def __post_init__(self):
        mu = np.array(self.cell_measure, dtype=float)
        if mu.ndim != 1 or mu.size == 0:
            raise InvalidArgumentError("cell_measure must be a non-empty 1-D array")
        if np.any(mu < 0) or not np.all(np.isfinite(mu)):
            raise InvariantViolationError("cell measures must be finite and nonnegative")
        if abs(mu.sum() - 1.0) > MEASURE_TOL:
            raise InvariantViolationError(f"cell measures sum to {mu.sum()!r}, not 1")
        if self.domain not in DOMAINS:
            raise InvalidArgumentError(f"unknown domain {self.domain!r}; expected one of {DOMAINS}")
        if self.domain == "unit square" and math.isqrt(mu.size) ** 2 != mu.size:
            raise InvalidArgumentError("unit-square partitions need a square number of cells")
        mu.setflags(write=False)
        object.__setattr__(self, "cell_measure", mu)
        cells = tuple(range(mu.size)) if self.cells is None else tuple(self.cells)
        if len(cells) != mu.size:
            raise InvalidArgumentError("cells and cell_measure differ in length")
        object.__setattr__(self, "cells", cells)

    @property
    def n_cells(self) -> int:
        return self.cell_measure.size

    @property
    def grid_shape(self) -> tuple:
        """(rows, cols) for square domains, (n_cells,) for the interval."""
        if self.domain == "unit square":
            k = math.isqrt(self.n_cells)
            return (k, k)
        return (self.n_cells,)

    def is_uniform(self) -> bool:
        return bool(np.allclose(self.cell_measure, 1.0 / self.n_cells, rtol=0, atol=1e-15))

    def same_as(self, other: "PartitionedMeasureSpace") -> bool:
        return (
            self is other
            or (
                self.domain == other.domain
                and self.n_cells == other.n_cells
                and np.array_equal(self.cell_measure, other.cell_measure)
            )
        )

    def to_dict(self) -> dict:
        d = {"n_cells": self.n_cells, "domain": self.domain}
        if not self.is_uniform():
            d["cell_measure"] = self.cell_measure.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PartitionedMeasureSpace":
        if "cell_measure" in d:
            return cls(np.asarray(d["cell_measure"], dtype=float), d.get("domain", "unit interval"))
        return make_uniform_partition(int(d["n_cells"]), d.get("domain", "unit interval"))


def make_uniform_partition(n_cells: int, domain: str = "unit interval") -> PartitionedMeasureSpace:
    """Partition ``domain`` into ``n_cells`` cells of equal measure."""
    if int(n_cells) != n_cells or n_cells < 1:
        raise InvalidArgumentError(f"n_cells must be a positive integer, got {n_cells!r}")
    n = int(n_cells)
    return PartitionedMeasureSpace(np.full(n, 1.0 / n), domain)


def _check_same_space(a: PartitionedMeasureSpace, b: PartitionedMeasureSpace):
    if not a.same_as(b):
        raise DimensionMismatchError(
            f"partitions differ: {a.n_cells} cells ({a.domain}) vs {b.n_cells} cells ({b.domain})"
        )


@dataclass(frozen=True, eq=False)
class _CellFunction:
    values: np.ndarray
    space: PartitionedMeasureSpace

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.space.n_cells,):
            raise DimensionMismatchError(
                f"expected {self.space.n_cells} values, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise InvariantViolationError("values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def to_dict(self) -> dict:
        return {"partition": self.space.to_dict(), "values": self.values.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["cell", "value"])
        for cell, value in zip(self.space.cells, self.values):
            w.writerow([cell, repr(float(value))])
        return buf.getvalue()

    @classmethod
    def from_dict(cls, d: dict):
        return cls(np.asarray(d["values"], dtype=float), PartitionedMeasureSpace.from_dict(d["partition"]))

    @classmethod
    def from_json(cls, text: str):
        return cls.from_dict(json.loads(text))

    @classmethod
    def from_csv(cls, text: str, space: PartitionedMeasureSpace):
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows or set(rows[0]) != {"cell", "value"}:
            raise InvalidArgumentError("CSV must have header 'cell,value'")
        return cls(np.array([float(r["value"]) for r in rows]), space)


class Density(_CellFunction):
    """A nonnegative piecewise-constant function of unit L1 norm."""

    def __post_init__(self):
        super().__post_init__()
        if np.any(self.values < 0):
            raise InvariantViolationError("density values must be nonnegative")
        mass = float(self.values @ self.space.cell_measure)
        if abs(mass - 1.0) > DENSITY_TOL:
            raise InvariantViolationError(f"density has L1 norm {mass!r}, not 1")

    @classmethod
    def from_values(cls, values, space: PartitionedMeasureSpace) -> "Density":
        """Normalize a nonnegative, nonzero vector of values into a density."""
        v = np.asarray(values, dtype=float)
        if v.shape != (space.n_cells,):
            raise DimensionMismatchError(f"expected {space.n_cells} values, got shape {v.shape}")
        if np.any(v < 0):
            raise InvariantViolationError("density values must be nonnegative")
        mass = float(v @ space.cell_measure)
        if not mass > 0:
            raise InvalidArgumentError("cannot build a density from a zero vector")
        return cls(v / mass, space)

    @classmethod
    def from_masses(cls, masses, space: PartitionedMeasureSpace) -> "Density":
        m = np.asarray(masses, dtype=float)
        mu = space.cell_measure
        values = np.divide(m, mu, out=np.zeros_like(m), where=mu > 0)
        return cls.from_values(values, space)

    @classmethod
    def uniform(cls, space: PartitionedMeasureSpace) -> "Density":
        return cls(np.ones(space.n_cells), space)

    @classmethod
    def indicator(cls, cells, space: PartitionedMeasureSpace) -> "Density":
        """The normalized indicator ``1_A / mu(A)`` of a set of cells."""
        v = np.zeros(space.n_cells)
        v[np.asarray(list(cells), dtype=int)] = 1.0
        return cls.from_values(v, space)

    @property
    def masses(self) -> np.ndarray:
        return self.values * self.space.cell_measure


class ClassicalObservable(_CellFunction):
    """A bounded (L-infinity) piecewise-constant function."""

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    @classmethod
    def constant(cls, c: float, space: PartitionedMeasureSpace) -> "ClassicalObservable":
        return cls(np.full(space.n_cells, float(c)), space)


def inner_product(f, g, space: PartitionedMeasureSpace | None = None) -> float:
    """Pairing ``<f, g> = sum_i f_i g_i mu(A_i)`` of an L1 function and an observable.

    ``f`` may be a :class:`Density` or a raw vector of values; ``g`` may be a
    :class:`ClassicalObservable` or a raw vector.  When neither argument
    carries a partition, ``space`` must be supplied.
    """
    spaces = [x.space for x in (f, g) if isinstance(x, _CellFunction)]
    if space is not None:
        spaces.append(space)
    if not spaces:
        raise InvalidArgumentError("no partition available for inner_product")
    for s in spaces[1:]:
        _check_same_space(spaces[0], s)
    mu = spaces[0].cell_measure
    fv = np.asarray(f, dtype=float)
    gv = np.asarray(g, dtype=float)
    if fv.shape != mu.shape or gv.shape != mu.shape:
        raise DimensionMismatchError(
            f"inner_product shapes {fv.shape} and {gv.shape} do not match {mu.shape}"
        )
    return float(np.sum(fv * gv * mu))


def l1_distance(f: Density, h: Density) -> float:
    """``sum_i |f_i - h_i| mu(A_i)``."""
    _check_same_space(f.space, h.space)
    return float(np.abs(f.values - h.values) @ f.space.cell_measure)

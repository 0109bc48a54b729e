"""Point maps T: X -> X on the unit interval and the unit square."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import InvalidArgumentError

KINDS = ("rotation", "dyadic", "tent", "baker", "cyclic_shift", "identity", "custom")

_DEFAULT_DOMAIN = {"baker": "unit square"}


def _rotation(theta):
    return lambda x: np.mod(x + theta, 1.0)


def _dyadic(x):
    return np.mod(2.0 * x, 1.0)


def _tent(x):
    return 1.0 - np.abs(2.0 * x - 1.0)


def _baker(xy):
    x, y = xy[:, 0], xy[:, 1]
    fold = np.floor(2.0 * x)
    return np.column_stack([2.0 * x - fold, (y + fold) / 2.0])


def _identity(x):
    return np.array(x, copy=True)


@dataclass(frozen=True)
class MapSystem:
    """A measure-preserving map family member with its parameters.

    ``params`` holds ``theta`` for ``rotation`` (fraction of a full turn),
    ``r`` for ``cyclic_shift`` and ``func`` for ``custom``.
    """

    kind: str
    params: dict = field(default_factory=dict)
    domain: str = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"unknown map kind {self.kind!r}; expected one of {KINDS}")
        if self.domain is None:
            object.__setattr__(self, "domain", _DEFAULT_DOMAIN.get(self.kind, "unit interval"))
        if self.kind == "baker" and self.domain != "unit square":
            raise InvalidArgumentError("the baker map lives on the unit square")
        if self.kind == "rotation" and "theta" not in self.params:
            raise InvalidArgumentError("rotation needs params['theta']")
        if self.kind == "cyclic_shift":
            r = self.params.get("r")
            if r is None or int(r) != r or r < 1:
                raise InvalidArgumentError("cyclic_shift needs a positive integer params['r']")
        if self.kind == "custom" and not callable(self.params.get("func")):
            raise InvalidArgumentError("custom maps need a callable params['func']")

    @property
    def dim(self) -> int:
        return 2 if self.domain == "unit square" else 1

    @property
    def point_map(self) -> Callable[[np.ndarray], np.ndarray]:
        k = self.kind
        if k == "rotation":
            return _rotation(float(self.params["theta"]))
        if k == "cyclic_shift":
            return _rotation(1.0 / int(self.params["r"]))
        if k == "dyadic":
            return _dyadic
        if k == "tent":
            return _tent
        if k == "baker":
            return _baker
        if k == "identity":
            return _identity
        return self.params["func"]

    def __call__(self, points):
        return self.point_map(np.asarray(points, dtype=float))

    def exact_shift(self, n_cells: int):
        """Cell shift ``s`` when T permutes the cells of a uniform interval partition exactly.

        Returns ``None`` when no exact cell permutation exists.
        """
        if self.domain != "unit interval":
            return None
        if self.kind == "identity":
            return 0
        if self.kind == "cyclic_shift":
            step = Fraction(1, int(self.params["r"]))
        elif self.kind == "rotation":
            theta = self.params["theta"]
            step = Fraction(theta).limit_denominator(10**6) % 1
            if abs(float(step) - float(theta) % 1.0) > 1e-12:
                return None
        else:
            return None
        shift = step * n_cells
        if shift.denominator != 1:
            return None
        return int(shift) % n_cells

    def to_dict(self) -> dict:
        params = {k: v for k, v in self.params.items() if k != "func"}
        if "theta" in params and isinstance(params["theta"], Fraction):
            params["theta"] = str(params["theta"])
        return {"kind": self.kind, "params": params, "domain": self.domain}

    @classmethod
    def from_dict(cls, d: dict) -> "MapSystem":
        params = dict(d.get("params", {}))
        if isinstance(params.get("theta"), str):
            params["theta"] = Fraction(params["theta"])
        return cls(d["kind"], params, d.get("domain"))


def rotation(theta) -> MapSystem:
    return MapSystem("rotation", {"theta": theta})


def cyclic_shift(r: int) -> MapSystem:
    return MapSystem("cyclic_shift", {"r": int(r)})


def dyadic() -> MapSystem:
    return MapSystem("dyadic")


def tent() -> MapSystem:
    return MapSystem("tent")


def baker() -> MapSystem:
    return MapSystem("baker")


def identity() -> MapSystem:
    return MapSystem("identity")


def custom(func, domain: str = "unit interval") -> MapSystem:
    return MapSystem("custom", {"func": func}, domain)

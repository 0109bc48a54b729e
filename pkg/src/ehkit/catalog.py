"""Built-in systems with the verdict each one is expected to produce."""
from __future__ import annotations

import copy

from .errors import InvalidArgumentError
from .maps import MapSystem

CLASSICAL = {
    "rotation": {
        "map": {"kind": "rotation", "params": {"theta": "1/4"}},
        "cells": 4,
        "samples": 1000,
        "expected": "ergodic, not mixing (r = 4, cyclic α)",
        "note": "rational rotation permuting the cells exactly",
    },
    "dyadic": {
        "map": {"kind": "dyadic", "params": {}},
        "cells": 256,
        "samples": 1000,
        "expected": "exact (r = 1)",
        "note": "x -> 2x mod 1",
    },
    "tent": {
        "map": {"kind": "tent", "params": {}},
        "cells": 256,
        "samples": 1000,
        "expected": "exact (r = 1)",
        "note": "x -> 1 - |2x - 1|",
    },
    "baker": {
        "map": {"kind": "baker", "params": {}},
        "cells": 256,
        "samples": 1000,
        "expected": "exact (r = 1)",
        "note": "16 x 16 grid; the Ulam matrix is diffusive, so r = 1 even though the exact map is invertible",
    },
    "cyclic_shift": {
        "map": {"kind": "cyclic_shift", "params": {"r": 3}},
        "cells": 3,
        "samples": 1000,
        "expected": "ergodic, not mixing (r = 3, cyclic α)",
        "note": "x -> x + 1/3 mod 1 on three cells",
    },
    "identity": {
        "map": {"kind": "identity", "params": {}},
        "cells": 4,
        "samples": 1000,
        "expected": "not ergodic (r = 4, 4 cycles)",
        "note": "every cell is invariant",
    },
}

QUANTUM = {
    "two-level": {
        "type": "two-level",
        "params": {"E1": 0.0, "E2": 1.0, "hbar": 1.0, "rho": [0.6, 0.4, [0.3, 0.2]], "obs": [1.0, -0.5, [0.7, -0.4]]},
        "expected": "ergodic",
        "note": "H = E1|1><1| + E2|2><2|; off-diagonal terms oscillate forever",
    },
    "quasi-continuous-gaussian": {
        "type": "quasicontinuous",
        "params": {"K": 512, "omega_max": 1.0, "center": 0.5, "width": 0.08, "coherence": 0.3},
        "expected": "mixing",
        "note": "Gaussian state and Van Hove observable kernels; off-diagonal term decays",
    },
    "mixed-spectrum": {
        "type": "mixed",
        "params": {"E1": 0.0, "E2": 1.0, "hbar": 1.0, "weight": 0.4, "K": 512},
        "expected": "ergodic",
        "note": "two levels plus a Gaussian continuum; the discrete oscillation persists",
    },
}


def list_builtin_systems() -> list:
    """Catalog rows: name, family, parameters, expected verdict."""
    rows = []
    for name, e in CLASSICAL.items():
        rows.append({
            "name": name,
            "family": "classical",
            "params": {"map": e["map"], "cells": e["cells"], "samples": e["samples"]},
            "expected": e["expected"],
            "note": e["note"],
        })
    for name, e in QUANTUM.items():
        rows.append({
            "name": name,
            "family": "quantum",
            "params": {"type": e["type"], **e["params"]},
            "expected": e["expected"],
            "note": e["note"],
        })
    return rows


def classical_entry(name: str) -> dict:
    if name not in CLASSICAL:
        raise InvalidArgumentError(f"unknown classical system {name!r}; choose from {sorted(CLASSICAL)}")
    return copy.deepcopy(CLASSICAL[name])


def quantum_entry(name: str) -> dict:
    if name not in QUANTUM:
        raise InvalidArgumentError(f"unknown quantum system {name!r}; choose from {sorted(QUANTUM)}")
    return copy.deepcopy(QUANTUM[name])


def build_map(spec: dict) -> MapSystem:
    try:
        return MapSystem.from_dict(spec)
    except KeyError as exc:
        raise InvalidArgumentError(f"map spec is missing field {exc}") from None

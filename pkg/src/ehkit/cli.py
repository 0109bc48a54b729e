"""Command-line front end.

    ehkit classical --map dyadic --cells 256 --out run/
    ehkit quantum --system quasi-continuous-gaussian --json
    ehkit two-level --M 100000
    ehkit wigner --check trace
    ehkit cross-validate
    ehkit catalog --json

Every subcommand accepts ``--config FILE`` (JSON).  Values resolve as
flags > config > defaults.  Exit codes: 0 success, 2 usage, 3 numerical
failure, 4 classification inconsistency.  ``EHKIT_THREADS`` caps BLAS
threads.
"""
from __future__ import annotations

import argparse
import contextlib
import datetime as _dt
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .catalog import CLASSICAL, QUANTUM, build_map, classical_entry, list_builtin_systems, quantum_entry
from .errors import DimensionMismatchError, EHKitError, InvalidArgumentError, InvariantViolationError

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_INCONSISTENT = 0, 2, 3, 4
MODES = ("classical", "quantum", "two-level", "wigner", "cross-validate")

DEFAULTS = {
    "classical": {
        "system": "dyadic",
        "map": None,
        "cells": None,
        "samples": None,
        "seed": 0,
        "horizon": 50,
        "probe_horizon": 200,
        "probe_count": 5,
        "tol": None,
        "probe_tol": 0.05,
    },
    "cross-validate": {
        "systems": None,
        "seed": 0,
        "probe_count": 5,
        "ergodic_horizon": 1000,
        "mixing_horizon": 200,
        "exact_horizon": 200,
        "probe_tol": 0.05,
    },
    "quantum": {
        "system": "quasi-continuous-gaussian",
        "type": None,
        "energies": None,
        "hbar": 1.0,
        "rho": None,
        "obs": None,
        "grid": None,
        "weight": None,
        "horizon": 1000,
        "tol": 1e-8,
        "weak_tol": 1e-3,
        "seed": 0,
    },
    "two-level": {
        "E1": 0.0,
        "E2": 1.0,
        "hbar": 1.0,
        "rho": [0.6, 0.4, [0.3, 0.2]],
        "obs": [1.0, -0.5, [0.7, -0.4]],
        "M": 100000,
        "horizon": 10000,
    },
    "wigner": {
        "check": "all",
        "d": 128,
        "q_range": [-8.0, 8.0],
        "hbar": 1.0,
        "pairs": 10,
        "hbar_list": [0.2, 0.1, 0.05, 0.025],
        "scaling_d": 512,
        "scaling_half_width": 5.0,
        "seed": 0,
    },
}


class UsageError(Exception):
    pass


class InconsistentClassification(Exception):
    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


@dataclass
class RunConfig:
    mode: str
    knobs: dict = field(default_factory=dict)
    out: str | None = None

    def to_dict(self) -> dict:
        return {"mode": self.mode, "out": self.out, **self.knobs}

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        mode = d.pop("mode", None)
        if mode not in MODES:
            raise UsageError(f"config field 'mode' must be one of {MODES}, got {mode!r}")
        out = d.pop("out", None)
        return cls(mode, resolve(mode, d, {}), out)

    def digest(self) -> str:
        blob = json.dumps(self.knobs, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def resolve(mode: str, config: dict, flags: dict) -> dict:
    """Merge defaults, config fields and explicit flags (in rising priority)."""
    base = dict(DEFAULTS[mode])
    unknown = sorted(set(config) - set(base) - {"mode", "out"})
    if unknown:
        raise UsageError(f"unknown config field(s) for mode {mode!r}: {', '.join(unknown)}")
    base.update({k: v for k, v in config.items() if k not in ("mode", "out")})
    base.update({k: v for k, v in flags.items() if v is not None and k in base})
    return base


@dataclass
class RunReport:
    mode: str
    verdict: dict
    artifacts: list
    provenance: dict
    status: str = "ok"
    error: dict | None = None

    def to_dict(self) -> dict:
        out = {
            "mode": self.mode,
            "status": self.status,
            "verdict": self.verdict,
            "artifacts": self.artifacts,
            "provenance": self.provenance,
        }
        if self.error:
            out["error"] = self.error
        return out


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default, ensure_ascii=False)


def _complex(x) -> complex:
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise UsageError(f"complex entries are [re, im] pairs, got {x!r}")
        return complex(float(x[0]), float(x[1]))
    return complex(x)


def _matrix(rows) -> np.ndarray:
    return np.array([[_complex(v) for v in row] for row in rows], dtype=complex)


class _Writer:
    def __init__(self, out):
        self.dir = Path(out) if out else None
        self.written = []

    def write(self, name: str, text: str):
        if self.dir is None:
            return
        self.dir.mkdir(parents=True, exist_ok=True)
        path = self.dir / name
        path.write_text(text, encoding="utf-8")
        self.written.append(str(path))


# pipelines


def run_classical(k: dict, w: _Writer) -> dict:
    from .measure import make_uniform_partition
    from .probes import exact_probe
    from .spectral import classify, extract_decomposition, probe_densities
    from .transfer import ulam_operator

    if k["map"] is not None:
        spec = {"map": k["map"], "cells": 256, "samples": 1000}
    else:
        spec = classical_entry(k["system"])
    system = build_map(spec["map"])
    cells = int(k["cells"] or spec["cells"])
    samples = int(k["samples"] or spec["samples"])
    space = make_uniform_partition(cells, system.domain)
    P = ulam_operator(system, space, samples, k["seed"])
    d = extract_decomposition(P, tol=k["tol"], probe_count=k["probe_count"], horizon=k["horizon"], seed=k["seed"])
    cls = classify(d)
    probes = [exact_probe(P, f, k["probe_horizon"], k["probe_tol"]) for f in probe_densities(space, k["probe_count"], k["seed"])]
    w.write("decomposition.json", dumps(d.to_dict(cls)))
    w.write("exact_probe.csv", probes[0].to_csv())
    decay = np.atleast_2d(d.remainder_decay)
    lines = ["n,max_remainder_l1"] + [f"{n},{float(v)!r}" for n, v in enumerate(decay.max(axis=0))]
    w.write("remainder_decay.csv", "\n".join(lines) + "\n")
    return {
        "verdict": cls.verdict,
        "classification": cls.to_dict(),
        "system": system.to_dict(),
        "cells": cells,
        "samples": samples,
        "exact_probe_gaps": [p.final_gap for p in probes],
    }


def run_cross_validate(k: dict, w: _Writer) -> dict:
    from .measure import make_uniform_partition
    from .probes import ProbeSuite, cross_validate
    from .spectral import extract_decomposition
    from .transfer import ulam_operator

    names = k["systems"] or list(CLASSICAL)
    suite = ProbeSuite(k["probe_count"], k["ergodic_horizon"], k["mixing_horizon"], k["exact_horizon"], k["probe_tol"], k["seed"])
    rows, bad = [], []
    for name in names:
        e = classical_entry(name)
        system = build_map(e["map"])
        P = ulam_operator(system, make_uniform_partition(e["cells"], system.domain), e["samples"], k["seed"])
        rep = cross_validate(P, extract_decomposition(P, seed=k["seed"]), suite)
        row = {"system": name, "expected": e["expected"], **rep.to_dict()}
        row["matches_expected"] = rep.classification["verdict"] == e["expected"]
        rows.append(row)
        if not rep.consistent:
            bad.append(name)
    lines = ["system,verdict,consistent,max_ergodic_gap,max_mixing_gap,max_exact_gap"]
    for r in rows:
        ev = r["evidence"]
        lines.append(
            f"{r['system']},\"{r['classification']['verdict']}\",{r['consistent']},"
            f"{ev['max_ergodic_gap']!r},{ev['max_mixing_gap']!r},{ev['max_exact_gap']!r}"
        )
    w.write("cross_validation.csv", "\n".join(lines) + "\n")
    result = {"verdict": "consistent" if not bad else "inconsistent", "systems": rows, "inconsistent": bad}
    if bad:
        raise InconsistentClassification(f"spectral and probe verdicts disagree for {', '.join(bad)}", result)
    return result


def _quantum_model(k: dict):
    from .quantum import (
        DiscreteSpectrumModel,
        HamiltonianModel,
        QuantumObservable,
        QuantumState,
        gaussian_continuum,
        mixed_example,
    )

    typ = k["type"]
    params = {}
    if typ is None:
        e = quantum_entry(k["system"])
        typ, params = e["type"], e["params"]
    if typ == "two-level":
        r, o = params.get("rho", k["rho"]), params.get("obs", k["obs"])
        from .quantum.two_level import observable_from_entries, state_from_entries

        h = HamiltonianModel([params.get("E1", 0.0), params.get("E2", 1.0)], params.get("hbar", k["hbar"]))
        return DiscreteSpectrumModel(
            h,
            state_from_entries(float(r[0]), float(r[1]), _complex(r[2])),
            observable_from_entries(float(o[0]), float(o[1]), _complex(o[2])),
        )
    if typ == "discrete":
        if k["energies"] is None or k["rho"] is None or k["obs"] is None:
            raise UsageError("discrete models need 'energies', 'rho' and 'obs'")
        h = HamiltonianModel(k["energies"], k["hbar"])
        return DiscreteSpectrumModel(h, QuantumState(_matrix(k["rho"])), QuantumObservable(_matrix(k["obs"])))
    if typ == "quasicontinuous":
        grid = {**params, **(k["grid"] or {})}
        return gaussian_continuum(**grid)
    if typ == "mixed":
        p = {**params}
        if k["weight"] is not None:
            p["weight"] = k["weight"]
        return mixed_example(**p)
    raise UsageError(f"unknown quantum model type {typ!r}; use discrete, quasicontinuous or mixed")


def run_quantum(k: dict, w: _Writer) -> dict:
    from .quantum import QuasiContinuousModel, classify_quantum, decay_horizon, weak_limit

    model = _quantum_model(k)
    rep = classify_quantum(model, horizon=int(k["horizon"]), tol=float(k["tol"]))
    w.write("series.csv", rep.to_csv())
    out = rep.to_dict()
    if isinstance(model, QuasiContinuousModel):
        wl = weak_limit(model, tol=float(k["weak_tol"]))
        out["weak_limit"] = wl.to_dict()
        out["decay_horizon"] = decay_horizon(model)
    return out


def run_two_level(k: dict, w: _Writer) -> dict:
    from .quantum import two_level_demo

    r, o = k["rho"], k["obs"]
    rep = two_level_demo(
        float(k["E1"]),
        float(k["E2"]),
        float(k["hbar"]),
        (float(r[0]), float(r[1]), _complex(r[2])),
        (float(o[0]), float(o[1]), _complex(o[2])),
        int(k["M"]),
        int(k["horizon"]),
    )
    w.write("series.csv", rep.to_csv())
    table = rep.cesaro.get("table", [])
    if table:
        lines = ["M,mean,offdiag_sigma_abs,bound"] + [f"{t['M']},{t['mean']!r},{t['offdiag_sigma_abs']!r},{t['bound']!r}" for t in table]
        w.write("cesaro.csv", "\n".join(lines) + "\n")
    return rep.to_dict()


def run_wigner(k: dict, w: _Writer) -> dict:
    from . import wigner as wg

    check = k["check"]
    if check not in ("all", "trace", "star", "moyal"):
        raise UsageError("wigner check must be one of all, trace, star, moyal")
    out = {}
    if check in ("all", "trace"):
        q = wg.position_grid(int(k["d"]), *k["q_range"])
        pairs = wg.random_gaussian_pairs(q, float(k["hbar"]), int(k["pairs"]), int(k["seed"]))
        checks = [wg.trace_product_check(a, b) for a, b in pairs]
        out["trace_product"] = {"checks": checks, "max_relative_gap": max(c["relative_gap"] for c in checks)}
        W = wg.wigner_of_state(pairs[0][0])
        w.write("wigner_state.csv", W.to_csv())
    if check in ("all", "star", "moyal"):
        qs = wg.default_scaling_grid(int(k["scaling_d"]), float(k["scaling_half_width"]))
        if check in ("all", "star"):
            out["star_product"] = wg.star_product_scaling(hbar_list=k["hbar_list"], q=qs).to_dict()
        if check in ("all", "moyal"):
            out["moyal_bracket"] = wg.moyal_bracket_scaling(hbar_list=k["hbar_list"], q=qs).to_dict()
    ok = True
    if "trace_product" in out:
        ok &= out["trace_product"]["max_relative_gap"] < 1e-5
    for key in ("star_product", "moyal_bracket"):
        if key in out:
            lo, hi = out[key]["band"]
            ok &= lo <= out[key]["slope"] <= hi
    out["verdict"] = "pass" if ok else "fail"
    return out


PIPELINES = {
    "classical": run_classical,
    "cross-validate": run_cross_validate,
    "quantum": run_quantum,
    "two-level": run_two_level,
    "wigner": run_wigner,
}


@contextlib.contextmanager
def thread_limit():
    raw = os.environ.get("EHKIT_THREADS")
    if not raw:
        yield
        return
    try:
        n = int(raw)
        if n < 1:
            raise ValueError
    except ValueError:
        raise UsageError(f"EHKIT_THREADS must be a positive integer, got {raw!r}") from None
    from threadpoolctl import threadpool_limits

    with threadpool_limits(limits=n):
        yield


def run(config: RunConfig, timestamp: bool = True) -> tuple[RunReport, int]:
    w = _Writer(config.out)
    prov = {"config_hash": config.digest(), "seed": config.knobs.get("seed"), "version": __version__}
    if timestamp:
        prov["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    code, status, err = EXIT_OK, "ok", None
    try:
        with thread_limit():
            verdict = PIPELINES[config.mode](config.knobs, w)
    except InconsistentClassification as exc:
        verdict, code, status = exc.report, EXIT_INCONSISTENT, "inconsistent"
        err = {"class": "ClassificationInconsistency", "message": str(exc)}
    except (UsageError, InvalidArgumentError, InvariantViolationError, DimensionMismatchError) as exc:
        verdict, code, status = {}, EXIT_USAGE, "usage-error"
        err = {"class": type(exc).__name__, "message": str(exc)}
    except (EHKitError, np.linalg.LinAlgError, FloatingPointError) as exc:
        verdict, code, status = {}, EXIT_NUMERIC, "numerical-failure"
        err = {"class": type(exc).__name__, "message": str(exc)}
    report = RunReport(config.mode, verdict, list(w.written), prov, status, err)
    if w.dir is not None:
        path = w.dir / "report.json"
        report.artifacts.append(str(path))
        path.write_text(dumps(report.to_dict()) + "\n", encoding="utf-8")
    return report, code


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", metavar="PATH", help="JSON config file")
    p.add_argument("--out", metavar="DIR", help="directory for report.json and CSV series")
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--json", action="store_true", help="print the full report as JSON")
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp for byte-identical reports")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ehkit", description="Ergodic-hierarchy classification of classical and quantum models.")
    parser.add_argument("--version", action="version", version=f"ehkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classical", help="Ulam operator, spectral decomposition and verdict for a map")
    _common(p)
    p.add_argument("--system", choices=sorted(CLASSICAL), help="built-in map")
    p.add_argument("--map", dest="map_kind", help="map kind (rotation, dyadic, tent, baker, cyclic_shift, identity)")
    p.add_argument("--theta", help="rotation angle as a fraction of a turn, e.g. 1/4")
    p.add_argument("--r", type=int, help="cyclic_shift order")
    p.add_argument("--cells", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--tol", type=float)

    p = sub.add_parser("cross-validate", help="spectral verdicts against direct probes")
    _common(p)
    p.add_argument("--systems", nargs="+", choices=sorted(CLASSICAL))

    p = sub.add_parser("quantum", help="level verdict for a spectral model")
    _common(p)
    p.add_argument("--system", choices=sorted(QUANTUM))
    p.add_argument("--horizon", type=int)
    p.add_argument("--tol", type=float)

    p = sub.add_parser("two-level", help="the two-level worked example")
    _common(p)
    p.add_argument("--E1", type=float)
    p.add_argument("--E2", type=float)
    p.add_argument("--hbar", type=float)
    p.add_argument("--M", type=int)
    p.add_argument("--horizon", type=int)

    p = sub.add_parser("wigner", help="trace-product and hbar-scaling checks")
    _common(p)
    p.add_argument("--check", choices=["all", "trace", "star", "moyal"])
    p.add_argument("--d", type=int)
    p.add_argument("--pairs", type=int)

    p = sub.add_parser("catalog", help="list built-in systems with expected verdicts")
    p.add_argument("--json", action="store_true")
    return parser


def _flags(args) -> dict:
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "out", "json", "no_timestamp")}
    kind = flags.pop("map_kind", None)
    theta, r = flags.pop("theta", None), flags.pop("r", None)
    if kind is not None:
        params = {}
        if theta is not None:
            params["theta"] = theta
        if r is not None:
            params["r"] = r
        flags["map"] = {"kind": kind, "params": params}
    elif theta is not None or r is not None:
        raise UsageError("--theta and --r need --map")
    return flags


def _load_config(path) -> dict:
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object")
    return data


def _summary(report: RunReport) -> str:
    v = report.verdict
    if report.error:
        return f"{report.mode}: {report.status}: {report.error['class']}: {report.error['message']}"
    if report.mode == "cross-validate":
        lines = [f"{r['system']:>14}  {r['classification']['verdict']}  consistent={r['consistent']}" for r in v["systems"]]
        return "\n".join(lines + [f"cross-validate: {v['verdict']}"])
    return f"{report.mode}: {v.get('verdict')}"


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "catalog":
        rows = list_builtin_systems()
        if args.json:
            print(dumps(rows))
        else:
            for r in rows:
                print(f"{r['family']:>9}  {r['name']:<26} expected: {r['expected']}")
        return EXIT_OK
    try:
        config = _load_config(args.config)
        if "mode" in config and config["mode"] != args.command:
            raise UsageError(f"config mode {config['mode']!r} does not match subcommand {args.command!r}")
        knobs = resolve(args.command, config, _flags(args))
        cfg = RunConfig(args.command, knobs, args.out or config.get("out"))
    except (UsageError, InvalidArgumentError) as exc:
        print(f"ehkit: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report, code = run(cfg, timestamp=not args.no_timestamp)
    if args.json:
        print(dumps(report.to_dict()))
    else:
        print(_summary(report))
    if report.error:
        print(f"ehkit: {report.error['class']}: {report.error['message']}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())

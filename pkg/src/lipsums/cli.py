"""Batch scenario runner.

A scenario is a JSON object ``{"command", "seed", "output_path", "parameters"}``.
Parameters may also be given at the top level. ``run`` resolves every default
into the scenario echo, dispatches to the library and returns a report whose
``results`` field depends only on the scenario (never on the worker count).
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import platform
import re
import sys
import time
from pathlib import Path

import jsonschema
import numpy as np
import scipy

from . import __version__
from .constants import (
    ESTIMATORS,
    WitnessSearchConfig,
    cotype2_lower,
    growth_curve,
    rbound_lower,
    transfer_counterexample_search,
    transfer_ratio,
    type2_lower,
    type2_normalized_sup,
)
from .errors import CapacityError, ConstructionError, InputError
from .lipfun import from_json as function_from_json
from .radonify import SimpleFunction, ell_norm, lift_lipschitz_ratio
from .randomsum import MAX_EXACT_N, NoiseSpec, first_absolute_moment
from .spaces import INF, LinearMap, NormedSpace, VectorTuple
from .verify import verify_constructions

SCHEMA_VERSION = "1"
EXIT_OK, EXIT_USAGE, EXIT_CAPACITY, EXIT_INTERNAL = 0, 2, 3, 4

REQUIRED = object()

SEARCH_DEFAULTS = {k: v for k, v in WitnessSearchConfig().to_json().items() if k != "seed"}

# command -> parameter defaults (REQUIRED marks mandatory fields)
COMMANDS: dict[str, dict] = {
    "estimate-type": {"space": REQUIRED, "n": REQUIRED, "noise": "gaussian", "exact": None,
                      "normalized": False, "search": {}},
    "estimate-cotype": {"space": REQUIRED, "n": REQUIRED, "noise": "gaussian", "exact": None,
                        "search": {}},
    "transfer-ratio": {"function": REQUIRED, "vectors": REQUIRED, "scales": None,
                       "noise": "gaussian", "samples": 100_000, "exact": False},
    "counterexample-search": {"X": REQUIRED, "Y": REQUIRED, "n": REQUIRED, "eps": 0.05,
                              "noise": "gaussian", "candidates": 1, "exact": False,
                              "construction": "sector", "search": {}},
    "gamma-norm": {"simple_function": REQUIRED, "samples": 100_000, "function": None},
    "rbound": {"domain": REQUIRED, "codomain": None, "maps": REQUIRED, "n": None, "search": {}},
    "growth-curve": {"constant": "cotype2", "space_family": REQUIRED, "n": REQUIRED,
                     "noise": "gaussian", "search": {}},
    "verify-constructions": {"eps": 0.05, "N": 64, "samples": 100_000, "lip_samples": 20_000},
}

_P = {"oneOf": [{"type": "number"}, {"type": "string"}]}
_SPACE = {"oneOf": [
    {"type": "string"},
    {"type": "object", "required": ["p", "dim"],
     "properties": {"p": _P, "dim": {"type": "integer", "minimum": 1},
                    "kind": {"type": "string"}, "weights": {"type": "array"}}},
]}
_NOISE = {"oneOf": [
    {"type": "string"},
    {"type": "object", "required": ["family"],
     "properties": {"family": {"type": "string"}, "atoms": {"type": "array"}}},
]}
_POS_INT = {"type": "integer", "minimum": 1}
_POS = {"type": "number", "exclusiveMinimum": 0}
_MATRIX = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}
_SEARCH = {"type": "object", "additionalProperties": False, "properties": {
    "restarts": _POS_INT, "iters": _POS_INT, "step": _POS,
    "samples_per_eval": _POS_INT, "eval_samples": _POS_INT}}
_EXACT = {"type": ["boolean", "null"]}

PARAM_SCHEMAS = {
    "estimate-type": {"space": _SPACE, "n": _POS_INT, "noise": _NOISE, "exact": _EXACT,
                      "normalized": {"type": "boolean"}, "search": _SEARCH},
    "estimate-cotype": {"space": _SPACE, "n": _POS_INT, "noise": _NOISE, "exact": _EXACT,
                        "search": _SEARCH},
    "transfer-ratio": {"function": {"type": "object"}, "vectors": _MATRIX,
                       "scales": {"type": ["array", "null"], "items": _POS},
                       "noise": _NOISE, "samples": _POS_INT, "exact": {"type": "boolean"}},
    "counterexample-search": {"X": _SPACE, "Y": _SPACE, "n": _POS_INT, "eps": _POS,
                              "noise": _NOISE, "candidates": _POS_INT,
                              "exact": {"type": "boolean"},
                              "construction": {"enum": ["sector", "ray"]}, "search": _SEARCH},
    "gamma-norm": {"simple_function": {"type": "object", "required": ["masses", "values", "space"],
                                       "properties": {"masses": {"type": "array"},
                                                      "values": _MATRIX, "space": _SPACE}},
                   "samples": _POS_INT, "function": {"type": ["object", "null"]}},
    "rbound": {"domain": _SPACE, "codomain": {"oneOf": [_SPACE, {"type": "null"}]},
               "maps": {"type": "array", "minItems": 1, "items": _MATRIX},
               "n": {"oneOf": [_POS_INT, {"type": "null"}]}, "search": _SEARCH},
    "growth-curve": {"constant": {"enum": sorted(ESTIMATORS)}, "space_family": _P,
                     "n": {"type": "array", "minItems": 1, "items": _POS_INT},
                     "noise": _NOISE, "search": _SEARCH},
    "verify-constructions": {"eps": _POS, "N": {"type": "integer", "minimum": 2},
                             "samples": _POS_INT, "lip_samples": _POS_INT},
}

SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["command"],
    "properties": {
        "command": {"enum": sorted(COMMANDS)},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "output_path": {"type": ["string", "null"]},
        "parameters": {"type": "object"},
    },
}

_SPACE_RE = re.compile(r"^\s*(?:l|ℓ)_?(inf|∞|\d+(?:\.\d+)?)\s*\^\s*(\d+)\s*$", re.IGNORECASE)
_P_RE = re.compile(r"^\s*(?:l|ℓ)?_?(inf|∞|\d+(?:\.\d+)?)\s*$", re.IGNORECASE)


class ScenarioError(InputError):
    """Invalid scenario; ``errors`` holds ``(path, message)`` pairs."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"{p}: {m}" for p, m in self.errors))


def parse_p(value):
    """Exponent from a number or a string such as ``"inf"``, ``"l_inf"`` or ``"1.5"``."""
    if isinstance(value, str):
        m = _P_RE.match(value)
        if not m:
            raise InputError(f"cannot read an exponent from {value!r}")
        tok = m.group(1).lower()
        return INF if tok in ("inf", "∞") else float(tok)
    return value


def parse_space(value) -> NormedSpace:
    """``NormedSpace`` from its JSON object or shorthand like ``"l2^4"`` / ``"linf^8"``."""
    if isinstance(value, str):
        m = _SPACE_RE.match(value)
        if not m:
            raise InputError(f"cannot read a space from {value!r}; use e.g. 'l2^4' or 'linf^8'")
        return NormedSpace(parse_p(m.group(1)), int(m.group(2)))
    if isinstance(value, dict) and isinstance(value.get("p"), str):
        value = {**value, "p": parse_p(value["p"])}
    return NormedSpace.from_json(value)


# --- validation ----------------------------------------------------------------


def _normalize(scenario: dict) -> dict:
    """Move top-level parameter keys under ``parameters``."""
    out = {k: scenario[k] for k in ("command", "seed", "output_path") if k in scenario}
    params = dict(scenario.get("parameters") or {})
    for k, v in scenario.items():
        if k not in ("command", "seed", "output_path", "parameters"):
            params.setdefault(k, v)
    if params.get("noise") == "rademacher-exact":
        # shorthand for Rademacher noise with exact sign enumeration
        params["noise"] = "rademacher"
        params["exact"] = True
    out["parameters"] = params
    return out


def _semantic(command: str, params: dict, errors: list):
    """Build the library objects once so their invariants report with a field path."""

    def attempt(path, fn):
        try:
            return fn()
        except CapacityError as e:
            errors.append((path, f"capacity: {e}"))
        except (InputError, ValueError, TypeError, KeyError) as e:
            errors.append((path, str(e)))
        return None

    def exact_capacity(path, exact, noise, n):
        if exact and n is not None and n > MAX_EXACT_N:
            errors.append((path, f"capacity: exact Rademacher enumeration needs 2^{n} terms; "
                                 f"n must be <= {MAX_EXACT_N}"))
        elif exact and noise is not None and noise.family != "rademacher":
            errors.append((path, "exact evaluation requires rademacher noise"))

    def space(key):
        sp = attempt(f"parameters.{key}", lambda: parse_space(params[key]))
        if sp is not None:
            params[key] = sp.to_json()  # echo the canonical form
        return sp

    noise = attempt("parameters.noise", lambda: NoiseSpec.from_json(params["noise"])) \
        if "noise" in params else None
    if noise is not None:
        params["noise"] = noise.to_json()
    if command in ("estimate-type", "estimate-cotype"):
        space("space")
        exact_capacity("parameters.exact", params["exact"], noise, params["n"])
        if params.get("normalized") and noise is not None \
                and noise.family not in ("gaussian", "rademacher"):
            errors.append(("parameters.noise",
                           "the normalized type 2 search supports gaussian or rademacher noise"))
    elif command == "transfer-ratio":
        f = attempt("parameters.function", lambda: function_from_json(params["function"]))
        if f is not None:
            tup = attempt("parameters.vectors", lambda: VectorTuple(f.X, np.asarray(
                params["vectors"], dtype=float)))
            if tup is not None:
                exact_capacity("parameters.exact", params["exact"], noise, len(tup))
                if params["scales"] is not None and len(params["scales"]) != len(tup):
                    errors.append(("parameters.scales", f"expected {len(tup)} scales"))
    elif command == "counterexample-search":
        space("X")
        space("Y")
        exact_capacity("parameters.exact", params["exact"], noise, params["n"])
        if params["construction"] == "sector" and noise is not None \
                and noise.family not in ("gaussian", "rademacher"):
            errors.append(("parameters.construction",
                           "the sector construction supports gaussian or rademacher noise; "
                           "use 'ray' for other noise"))
    elif command == "gamma-norm":
        sf = params["simple_function"]
        attempt("parameters.simple_function", lambda: SimpleFunction(
            np.asarray(sf["masses"], dtype=float),
            VectorTuple(parse_space(sf["space"]), np.asarray(sf["values"], dtype=float))))
        if params["function"] is not None:
            attempt("parameters.function", lambda: function_from_json(params["function"]))
    elif command == "rbound":
        X = space("domain")
        Y = X if params["codomain"] is None else space("codomain")
        if X is not None and Y is not None:
            for i, m in enumerate(params["maps"]):
                attempt(f"parameters.maps.{i}", lambda m=m: LinearMap(np.asarray(m, float), X, Y))
    elif command == "growth-curve":
        p = attempt("parameters.space_family", lambda: parse_p(params["space_family"]))
        if p is not None and attempt("parameters.space_family",
                                     lambda: NormedSpace(p, 1)) is not None:
            params["space_family"] = "inf" if p is INF else float(p)
        if params["constant"] == "type2_normalized" and noise is not None \
                and noise.family not in ("gaussian", "rademacher"):
            errors.append(("parameters.noise", "type2_normalized supports gaussian or "
                                               "rademacher noise only"))


def resolve(scenario: dict) -> tuple[dict, list[str]]:
    """Validate and fill defaults; returns ``(resolved, warnings)`` or raises ``ScenarioError``."""
    if not isinstance(scenario, dict):
        raise ScenarioError([("", "scenario must be a JSON object")])
    sc = _normalize(scenario)
    errors = []
    for e in jsonschema.Draft202012Validator(SCENARIO_SCHEMA).iter_errors(sc):
        path = ".".join(map(str, e.absolute_path))
        errors.append((path or ("command" if e.validator == "required" else ""), e.message))
    if errors:
        raise ScenarioError(errors)
    warnings = []
    if "seed" not in sc:
        sc["seed"] = 0
        warnings.append("seed: missing, defaulted to 0")
    sc.setdefault("output_path", None)
    command = sc["command"]
    defaults = COMMANDS[command]
    params = sc["parameters"]
    for key in params:
        if key not in defaults:
            errors.append((f"parameters.{key}", f"unknown parameter for {command}"))
    for key, default in defaults.items():
        if key not in params:
            if default is REQUIRED:
                errors.append((f"parameters.{key}", "required parameter is missing"))
            else:
                params[key] = copy.deepcopy(default)
    if errors:
        raise ScenarioError(errors)
    schema = {"type": "object", "properties": PARAM_SCHEMAS[command]}
    for e in jsonschema.Draft202012Validator(schema).iter_errors(params):
        errors.append((".".join(["parameters", *map(str, e.absolute_path)]), e.message))
    if errors:
        raise ScenarioError(errors)
    if "search" in params:
        params["search"] = {**SEARCH_DEFAULTS, **params["search"]}
    _semantic(command, params, errors)
    if errors:
        raise ScenarioError(errors)
    return sc, warnings


def validate(scenario: dict) -> dict:
    """Pure schema check: ``{"ok", "errors": [{"path", "message"}], "warnings"}``."""
    try:
        _, warnings = resolve(copy.deepcopy(scenario))
    except ScenarioError as e:
        return {"ok": False, "errors": [{"path": p, "message": m} for p, m in e.errors],
                "warnings": []}
    return {"ok": True, "errors": [], "warnings": warnings}


# --- execution -------------------------------------------------------------------


def _config(params: dict, seed: int, workers: int) -> WitnessSearchConfig:
    return WitnessSearchConfig(seed=seed, workers=workers, **params["search"])


def _estimate(command, params, seed, workers):
    space = parse_space(params["space"])
    noise = NoiseSpec.from_json(params["noise"])
    config = _config(params, seed, workers)
    if command == "estimate-cotype":
        fn = cotype2_lower
    else:
        fn = type2_normalized_sup if params["normalized"] else type2_lower
    est = fn(space, noise, params["n"], config, params["exact"])
    out = est.to_json()
    out["first_absolute_moment"] = first_absolute_moment(noise)
    return out


def _run_transfer(params, seed, workers):
    f = function_from_json(params["function"])
    tup = VectorTuple(f.X, np.asarray(params["vectors"], dtype=float))
    tr = transfer_ratio(f, tup, params["scales"], NoiseSpec.from_json(params["noise"]),
                        params["samples"], seed, params["exact"], workers)
    return tr.to_json()


def _run_counterexample(params, seed, workers):
    est = transfer_counterexample_search(
        parse_space(params["X"]), parse_space(params["Y"]), params["n"], params["eps"],
        _config(params, seed, workers), NoiseSpec.from_json(params["noise"]),
        params["candidates"], params["exact"], params["construction"])
    return est.to_json()


def _run_gamma(params, seed, workers):
    sf = params["simple_function"]
    phi = SimpleFunction(np.asarray(sf["masses"], dtype=float),
                         VectorTuple(parse_space(sf["space"]), np.asarray(sf["values"], float)))
    out = {"ell_norm": ell_norm(phi, params["samples"], seed, workers).to_json()}
    if params["function"] is not None:
        f = function_from_json(params["function"])
        out["lift_ratio"] = lift_lipschitz_ratio(f, phi, None, params["samples"], seed,
                                                 workers=workers).to_json()
    return out


def _run_rbound(params, seed, workers):
    X = parse_space(params["domain"])
    Y = X if params["codomain"] is None else parse_space(params["codomain"])
    family = [LinearMap(np.asarray(m, dtype=float), X, Y) for m in params["maps"]]
    return rbound_lower(family, _config(params, seed, workers), params["n"]).to_json()


def _run_growth(params, seed, workers):
    rows = growth_curve(params["constant"], parse_p(params["space_family"]), params["n"],
                        NoiseSpec.from_json(params["noise"]), _config(params, seed, workers))
    values = [r[1] for r in rows]
    return {"rows": [{"n": n, "lower_bound": lb, "std_error": se} for n, lb, se in rows],
            "strictly_increasing": all(b > a for a, b in zip(values, values[1:]))}


def _run_verify(params, seed, workers):
    return verify_constructions(params["eps"], params["N"], params["samples"],
                                params["lip_samples"], seed)


def _dispatch(command: str, params: dict, seed: int, workers: int) -> dict:
    if command in ("estimate-type", "estimate-cotype"):
        return _estimate(command, params, seed, workers)
    runners = {
        "transfer-ratio": _run_transfer,
        "counterexample-search": _run_counterexample,
        "gamma-norm": _run_gamma,
        "rbound": _run_rbound,
        "growth-curve": _run_growth,
        "verify-constructions": _run_verify,
    }
    return runners[command](params, seed, workers)


def _plain(obj):
    """JSON-ready copy: numpy scalars/arrays to Python, tuples to lists."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if obj is INF:
        return "inf"
    return obj


def run(scenario: dict, workers: int = 1) -> dict:
    """Execute a scenario and return its report (nothing is written to disk)."""
    if int(workers) < 1:
        raise InputError("workers must be >= 1")
    resolved, warnings = resolve(copy.deepcopy(scenario))
    seed = int(resolved["seed"])
    t0 = time.perf_counter()
    results = _dispatch(resolved["command"], resolved["parameters"], seed, int(workers))
    elapsed = time.perf_counter() - t0
    return {
        "schema": SCHEMA_VERSION,
        "scenario": _plain(resolved),
        "results": _plain(results),
        "environment": {"version": __version__, "seed": seed, "workers": int(workers),
                        "python": platform.python_version(), "numpy": np.__version__,
                        "scipy": scipy.__version__},
        "warnings": warnings,
        "timing": {"seconds": elapsed},
    }


def results_bytes(report: dict) -> bytes:
    """Canonical serialization of the result fields (used for determinism checks)."""
    return json.dumps(report["results"], sort_keys=True, allow_nan=True).encode()


def write_outputs(report: dict, out_dir: str | Path) -> list[Path]:
    """``report.json`` plus ``growth_curve.csv`` for growth curves."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [out / "report.json"]
    written[0].write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    if report["scenario"]["command"] == "growth-curve":
        path = out / "growth_curve.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "lower_bound", "std_error"])
            for r in report["results"]["rows"]:
                w.writerow([r["n"], repr(r["lower_bound"]), repr(r["std_error"])])
        written.append(path)
    return written


# --- command line -------------------------------------------------------------------


def _set_path(scenario: dict, key: str, raw: str):
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    parts = key.split(".")
    if parts[0] in ("command", "seed", "output_path", "parameters"):
        node = scenario
    else:
        node = scenario.setdefault("parameters", {})
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise InputError(f"--set {key}: {part!r} is not an object")
    node[parts[-1]] = value


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lipsums", description="Run a lipsums scenario file.")
    ap.add_argument("--scenario", required=True, help="scenario JSON file ('-' for stdin)")
    ap.add_argument("--seed", type=int, help="override the scenario seed")
    ap.add_argument("--workers", type=int, default=1, help="worker threads (results unchanged)")
    ap.add_argument("--out", help="output directory for report.json and CSV series")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override a field; dotted keys address parameters, values are JSON")
    ap.add_argument("--validate", action="store_true", help="check the scenario and exit")
    return ap


def _load(path: str) -> dict:
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    return json.loads(text)


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    try:
        scenario = _load(args.scenario)
        if not isinstance(scenario, dict):
            raise InputError("scenario must be a JSON object")
        for item in args.set:
            key, sep, raw = item.partition("=")
            if not sep or not key:
                raise InputError(f"--set expects KEY=VALUE, got {item!r}")
            _set_path(scenario, key, raw)
        if args.seed is not None:
            scenario["seed"] = args.seed
        if args.workers < 1:
            raise InputError("--workers must be >= 1")
    except (OSError, json.JSONDecodeError, InputError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    if args.validate:
        res = validate(scenario)
        for w in res["warnings"]:
            print(f"warning: {w}", file=sys.stderr)
        for e in res["errors"]:
            print(f"error: {e['path']}: {e['message']}", file=sys.stderr)
        if res["ok"]:
            return EXIT_OK
        capacity = any(e["message"].startswith("capacity:") for e in res["errors"])
        return EXIT_CAPACITY if capacity else EXIT_USAGE

    try:
        report = run(scenario, args.workers)
    except ScenarioError as e:
        for path, msg in e.errors:
            print(f"error: {path}: {msg}", file=sys.stderr)
        capacity = any(m.startswith("capacity:") for _, m in e.errors)
        return EXIT_CAPACITY if capacity else EXIT_USAGE
    except (CapacityError, ConstructionError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CAPACITY
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:  # noqa: BLE001 - anything else is a bug
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL

    for w in report["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    out_dir = args.out or report["scenario"].get("output_path")
    if out_dir:
        for path in write_outputs(report, out_dir):
            print(path)
    else:
        json.dump(report, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Scenario documents: JSON schema, validation and construction of objects.

A scenario names up to two systems ``X`` (base X with fiber Z) and ``Y``
(base Y with fiber W), the a priori and target measures, a cost and solver
settings. Validation collects every schema and consistency error before any
computation starts.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .errors import ValidationError
from .spaces import BaseSpace, ContractiveIFS, ProbMeasure, finite_fiber, singleton_fiber
from .systems import (
    affine_system,
    cantor_system,
    doubling_system,
    half_map_system,
    random_lipschitz_cost,
    singleton_system,
    word_shift_system,
)

_NUM = {"type": "number"}
_VEC = {"type": "array", "items": _NUM, "minItems": 1}
_MAT = {"type": "array", "items": _VEC, "minItems": 1}
_MEASURE = {"oneOf": [{"const": "uniform"}, _VEC]}

SYSTEM_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["doubling", "half-map", "cantor", "affine", "singleton",
                          "word-shift", "table"]},
        "grid": {"type": "integer", "minimum": 2},
        "branches": {"type": "array", "items": {"type": "array", "items": _NUM,
                                                "minItems": 2, "maxItems": 2}, "minItems": 1},
        "gamma": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "size": {"type": "integer", "minimum": 1},
        "length": {"type": "integer", "minimum": 1, "maximum": 10},
        "table": {"type": "array", "items": {"type": "array",
                                             "items": {"type": "integer", "minimum": 0}}},
        "metric": _MAT,
        "base_metric": _MAT,
    },
    "additionalProperties": False,
}

COST_SCHEMA = {
    "type": "object",
    "required": ["builtin"],
    "properties": {
        "builtin": {"enum": ["zero", "constant", "xcost", "doubling-xcost", "table",
                             "separable", "random"]},
        "value": _NUM,
        "values": {"type": "array"},
        "b": {"type": "array"},
        "d": {"type": "array"},
        "seed": {"type": "integer", "minimum": 0},
        "amplitude": {"type": "number", "minimum": 0},
    },
    "additionalProperties": False,
}

SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["X"],
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "command": {"type": "string"},
        "X": SYSTEM_SCHEMA,
        "Y": SYSTEM_SCHEMA,
        "alpha": _MEASURE,
        "beta": _MEASURE,
        "mu": _MEASURE,
        "nu": _MEASURE,
        "plan": {"type": "array"},
        "cost": COST_SCHEMA,
        "direction": COST_SCHEMA,
        "solver": {
            "type": "object",
            "properties": {
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "max_iter": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "eta0": {"type": "number", "exclusiveMinimum": 0},
                "schedule": {"enum": ["sqrt", "constant"]},
                "smoothing": {"type": "number", "exclusiveMinimum": 0},
                "restarts": {"type": "integer", "minimum": 0},
                "entropic": {"type": "boolean"},
                "samples": {"type": "integer", "minimum": 2},
                "burn_in": {"type": "integer", "minimum": 1},
                "epsilon": {"type": "number", "exclusiveMinimum": 0},
                "candidates": {"type": "integer", "minimum": 0},
                "s_values": _VEC,
                "steps": {"type": "integer", "minimum": 1},
                "depth": {"type": "integer", "minimum": 0},
            },
            "additionalProperties": False,
        },
        "outputs": {
            "type": "object",
            "properties": {"path": {"type": "string"}, "format": {"enum": ["json", "csv"]}},
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


def canonical_hash(doc: dict) -> str:
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def demo_names() -> list[str]:
    root = resources.files("holotherm") / "demos"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def demo_catalog() -> list[tuple[str, str]]:
    return [(name, load_document(name).get("description", "")) for name in demo_names()]


def load_document(source: str | Path) -> dict:
    """Read a scenario from a path, or from the bundled demos by name."""
    path = Path(source)
    if path.is_file():
        text = path.read_text()
    elif str(source) in demo_names():
        text = (resources.files("holotherm") / "demos" / f"{source}.json").read_text()
    else:
        raise ValidationError([f"scenario {str(source)!r} is neither a file nor a demo name"])
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError([f"invalid JSON: {exc}"]) from None


def build_system(entry: dict) -> ContractiveIFS:
    kind = entry["kind"]
    grid = entry.get("grid")
    if kind == "doubling":
        return doubling_system(grid or 1025)
    if kind == "half-map":
        return half_map_system(grid or 257)
    if kind == "cantor":
        return cantor_system(grid or 730)
    if kind == "affine":
        return affine_system(entry["branches"], n=grid or 257, gamma=entry.get("gamma"))
    if kind == "singleton":
        return singleton_system(entry["size"])
    if kind == "word-shift":
        return word_shift_system(entry.get("length", 3))
    table = np.asarray(entry["table"], dtype=int)
    nx = table.shape[0]
    base = (BaseSpace(tuple(range(nx)), np.asarray(entry["base_metric"], dtype=float))
            if "base_metric" in entry else BaseSpace.discrete(range(nx)))
    if "metric" in entry:
        fiber = finite_fiber(np.asarray(entry["metric"], dtype=float))
    elif table.shape[1] == 1:
        fiber = singleton_fiber()
    else:
        fiber = finite_fiber(1.0 - np.eye(table.shape[1]))
    return ContractiveIFS(base, fiber, entry.get("gamma", 0.5), table=table)


def _measure(value, size: int) -> np.ndarray:
    if value is None or value == "uniform":
        return ProbMeasure.uniform(size).weights
    return ProbMeasure(np.asarray(value, dtype=float)).weights


def _system_cost(entry: dict, ifs: ContractiveIFS, seed: int) -> np.ndarray:
    kind = entry["builtin"]
    shape = ifs.shape
    if kind == "zero":
        return np.zeros(shape)
    if kind == "constant":
        return np.full(shape, float(entry.get("value", 0.0)))
    if kind in ("xcost", "doubling-xcost"):
        v = np.asarray(entry.get("values", [0.0] * shape[0]), dtype=float)
        return np.repeat(v[:, None], shape[1], axis=1)
    if kind == "random":
        rng = np.random.default_rng(entry.get("seed", seed))
        return random_lipschitz_cost(ifs, rng, amplitude=entry.get("amplitude", 0.5))
    v = np.asarray(entry["values"], dtype=float)
    return v.reshape(shape)


def _joint_cost(entry: dict, ix: ContractiveIFS, iy: ContractiveIFS, seed: int) -> np.ndarray:
    shape = (ix.base.size, iy.base.size, ix.fiber.size, iy.fiber.size)
    kind = entry["builtin"]
    if kind == "zero":
        return np.zeros(shape)
    if kind == "constant":
        return np.full(shape, float(entry.get("value", 0.0)))
    if kind == "separable":
        b = np.asarray(entry["b"], dtype=float).reshape(ix.shape)
        d = np.asarray(entry["d"], dtype=float).reshape(iy.shape)
        return b[:, None, :, None] + d[None, :, None, :]
    if kind == "random":
        rng = np.random.default_rng(entry.get("seed", seed))
        return rng.uniform(-entry.get("amplitude", 0.5), entry.get("amplitude", 0.5), size=shape)
    if kind == "table":
        v = np.asarray(entry["values"], dtype=float)
        if v.ndim == 2:
            return np.broadcast_to(v[:, :, None, None], shape).copy()
        return v.reshape(shape)
    raise ValueError(f"builtin {kind!r} is not defined on four spaces")


@dataclass
class Scenario:
    doc: dict
    X: ContractiveIFS
    Y: ContractiveIFS | None
    alpha: np.ndarray
    beta: np.ndarray | None
    mu: np.ndarray | None
    nu: np.ndarray | None
    cost: np.ndarray
    joint: bool
    direction: np.ndarray | None = None
    plan: np.ndarray | None = None
    solver: dict = field(default_factory=dict)

    @property
    def hash(self) -> str:
        return canonical_hash(self.doc)

    @property
    def seed(self) -> int:
        return int(self.solver.get("seed", 0))


def validate(doc) -> list[str]:
    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    return [f"{'/'.join(map(str, e.absolute_path)) or '<root>'}: {e.message}"
            for e in sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))]


def build(doc: dict, overrides: dict | None = None) -> Scenario:
    """Validate ``doc`` and construct every object it references."""
    errors = validate(doc)
    if errors:
        raise ValidationError(errors)
    doc = copy.deepcopy(doc)
    solver = dict(doc.get("solver", {}))
    for k, v in (overrides or {}).items():
        if v is not None:
            solver[k] = v
    seed = int(solver.get("seed", 0))
    systems = {}
    for key in ("X", "Y"):
        if key in doc:
            try:
                systems[key] = build_system(doc[key])
            except (ValueError, KeyError, IndexError) as exc:
                errors.append(f"{key}: {exc}")
    measures = {}
    for key, sys_key in (("alpha", "X"), ("mu", "X"), ("beta", "Y"), ("nu", "Y")):
        if key in doc and sys_key not in systems:
            if sys_key not in doc:
                errors.append(f"{key}: no {sys_key} system defined")
            continue
        if sys_key in systems and (key in doc or key in ("alpha", "beta")):
            try:
                m = _measure(doc.get(key), systems[sys_key].base.size)
                if m.size != systems[sys_key].base.size:
                    raise ValueError(f"{m.size} weights for {systems[sys_key].base.size} points")
                measures[key] = m
            except ValueError as exc:
                errors.append(f"{key}: {exc}")
    joint = "Y" in doc
    cost = direction = plan = None
    if "X" in systems and (not joint or "Y" in systems):
        cost_entry = doc.get("cost", {"builtin": "zero"})
        try:
            if joint:
                cost = _joint_cost(cost_entry, systems["X"], systems["Y"], seed)
            else:
                cost = _system_cost(cost_entry, systems["X"], seed)
        except (ValueError, KeyError) as exc:
            errors.append(f"cost: {exc}")
        if "direction" in doc:
            try:
                direction = _system_cost(doc["direction"], systems["X"], seed + 1)
            except (ValueError, KeyError) as exc:
                errors.append(f"direction: {exc}")
        if "plan" in doc:
            try:
                plan = np.asarray(doc["plan"], dtype=float).reshape(systems["X"].shape)
                if np.any(plan < 0) or abs(plan.sum() - 1.0) > 1e-12:
                    raise ValueError("plan weights must be a probability")
            except ValueError as exc:
                errors.append(f"plan: {exc}")
    if errors:
        raise ValidationError(errors)
    return Scenario(doc, systems["X"], systems.get("Y"), measures["alpha"],
                    measures.get("beta"), measures.get("mu"), measures.get("nu"),
                    cost, joint, direction, plan, solver)

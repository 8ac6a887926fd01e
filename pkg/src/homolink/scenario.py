"""Scenario documents (JSON) and result bundles.

Scenarios are validated against the schema shipped in ``schema/`` and
defaults from that schema are filled in before anything is built, so a
parsed scenario serialises back to a complete, self-describing document.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .mesh import (
    Chain,
    SkeletonSet,
    point_chain,
    read_mesh,
    sample_circle,
    sample_polyline_loop,
    sample_sphere,
    sample_torus,
)
from .planner import Ball, Box, GridGraph, PlanningError, Tube, build_grid_graph, region_union
from .quadrature import QuadConfig


class ScenarioError(ValueError):
    """Raised for unreadable or inconsistent scenario documents."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


def load_schema() -> dict:
    text = resources.files("homolink").joinpath("schema/scenario.schema.json").read_text("utf-8")
    return json.loads(text)


_SCHEMA = load_schema()
_VALIDATOR = jsonschema.Draft202012Validator(_SCHEMA)


def _resolve(schema: dict, node: dict) -> dict:
    while "$ref" in node:
        ref = node["$ref"]
        assert ref.startswith("#/")
        target = schema
        for part in ref[2:].split("/"):
            target = target[part]
        node = target
    return node


_MISSING = object()


def _fill_defaults(schema: dict, node: dict, value):
    node = _resolve(schema, node)
    if "oneOf" in node and isinstance(value, dict):
        for branch in node["oneOf"]:
            b = _resolve(schema, branch)
            const = b.get("properties", {}).get("type", {}).get("const")
            if const is not None and value.get("type") == const:
                return _fill_defaults(schema, b, value)
        return value
    if node.get("type") == "object" and isinstance(value, dict):
        for key, sub in node.get("properties", {}).items():
            default = sub.get("default", _resolve(schema, sub).get("default", _MISSING))
            if key not in value and default is not _MISSING:
                value[key] = copy.deepcopy(default)
            if key in value:
                value[key] = _fill_defaults(schema, sub, value[key])
        return value
    if node.get("type") == "array" and isinstance(value, list) and "items" in node:
        return [_fill_defaults(schema, node["items"], v) for v in value]
    return value


def _branch_error(err: jsonschema.ValidationError) -> jsonschema.ValidationError:
    """For a failed tagged union, the error inside the branch named by ``type``."""
    while err.validator == "oneOf" and isinstance(err.instance, dict) and err.context:
        tag = err.instance.get("type")
        inner = [e for e in err.context if _branch_tag(err, e) == tag]
        if not inner:
            break
        err = jsonschema.exceptions.best_match(inner)
    return err


def _branch_tag(parent: jsonschema.ValidationError, e: jsonschema.ValidationError):
    branch = parent.validator_value[e.schema_path[0]]
    branch = _resolve(_SCHEMA, branch)
    return branch.get("properties", {}).get("type", {}).get("const")


def _error_path(err: jsonschema.ValidationError) -> str:
    out = ""
    for p in err.absolute_path:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out or "<root>"


@dataclass
class Tolerances:
    eps_int: float = 0.05
    eps_key: float | None = None
    eps_sing: float = 1e-6
    eps_q: float = 0.05
    eps_w_factor: float = 1e-6

    @property
    def key(self) -> float:
        return self.eps_key if self.eps_key is not None else 10 * self.eps_int


@dataclass
class Scenario:
    """A validated scenario; ``doc`` is the defaults-filled JSON document."""

    doc: dict
    base_dir: Path = field(default_factory=Path.cwd)

    @property
    def name(self) -> str:
        return self.doc["name"]

    @property
    def D(self) -> int:
        return self.doc["D"]

    @property
    def N(self) -> int:
        return self.doc["N"]

    @property
    def tolerances(self) -> Tolerances:
        return Tolerances(**self.doc["tolerances"])

    @property
    def quad(self) -> QuadConfig:
        q = self.doc["quadrature"]
        return QuadConfig(q["order"], q["max_depth"], q["split_ratio"], self.tolerances.eps_sing)

    @property
    def threads(self) -> int | None:
        return self.doc["threads"]

    def __eq__(self, other) -> bool:
        return isinstance(other, Scenario) and self.doc == other.doc

    def skeleton_set(self) -> SkeletonSet:
        chains, labels = [], []
        for i, spec in enumerate(self.doc["skeletons"]):
            c = build_chain(spec, self.D, self.base_dir, f"skeletons[{i}]")
            if c.dim != self.D - self.N:
                raise ScenarioError(
                    f"dimension mismatch: skeleton has dimension {c.dim}, expected D-N={self.D - self.N}",
                    f"skeletons[{i}]",
                )
            chains.append(c)
            labels.append(spec.get("label", f"S{i + 1}"))
        return SkeletonSet(chains, labels)

    def candidates(self) -> list[tuple[str, Chain]]:
        out = []
        for i, spec in enumerate(self.doc["candidates"]):
            c = build_chain(spec, self.D, self.base_dir, f"candidates[{i}]")
            if c.dim != self.N - 1:
                raise ScenarioError(
                    f"dimension mismatch: candidate has dimension {c.dim}, expected N-1={self.N - 1}",
                    f"candidates[{i}]",
                )
            out.append((spec.get("label", f"C{i + 1}"), c))
        return out

    def regions(self) -> list:
        return [build_region(r) for r in self.doc["grid"].get("blocked", [])]

    def grid_graph(self) -> GridGraph:
        if "grid" not in self.doc:
            raise ScenarioError("a grid is required for planning", "grid")
        gd = self.doc["grid"]
        for key in ("start", "goal"):
            if key not in self.doc:
                raise ScenarioError("required for planning", key)
        try:
            return build_grid_graph(gd["lower"], gd["upper"], gd["resolution"], region_union(self.regions()),
                                    self.doc["start"], self.doc["goal"])
        except PlanningError as exc:
            raise ScenarioError(str(exc), "grid") from exc

    def subspace_mask(self, g: GridGraph) -> np.ndarray:
        sub = self.doc.get("subspace")
        if not sub:
            return np.zeros(g.n_vertices, bool)
        if "mask" in sub:
            grid = np.asarray(sub["mask"], bool)
            if grid.shape != tuple(g.resolution):
                raise ScenarioError(f"mask shape {grid.shape} != grid resolution {g.resolution}", "subspace.mask")
            return grid[tuple(g.cell_index.T)]
        regs = [build_region(r) for r in sub["boxes"]]
        inside = region_union(regs)(g.coords)
        return inside if sub["inside"] else ~inside


def build_region(spec: dict):
    if spec["type"] == "ball":
        return Ball(tuple(spec["center"]), spec["radius"])
    if spec["type"] == "box":
        return Box(tuple(spec["lower"]), tuple(spec["upper"]))
    return Tube(tuple(map(tuple, spec["points"])), spec["radius"], spec.get("closed", True))


def build_chain(spec: dict, D: int, base_dir: Path, where: str) -> Chain:
    kind = spec["type"]

    def vec(key, default=None):
        v = spec.get(key, default)
        if v is not None and len(v) != D:
            raise ScenarioError(f"expected {D} coordinates, got {len(v)}", f"{where}.{key}")
        return v

    try:
        if kind == "point":
            return point_chain(vec("position"), spec["coefficient"])
        if kind == "polyline":
            for j, p in enumerate(spec["points"]):
                if len(p) != D:
                    raise ScenarioError(f"expected {D} coordinates", f"{where}.points[{j}]")
            return sample_polyline_loop(spec["points"], spec["closed"])
        if kind == "circle":
            return sample_circle(spec["radius"], spec["segments"], D, spec["axes"], vec("center"), spec["reverse"])
        if kind == "sphere":
            return sample_sphere(spec["radius"], tuple(spec["resolution"]), D, spec["axes"], vec("center"),
                                 spec["reverse"])
        if kind == "torus":
            return sample_torus(spec["r"], spec["R_T"], tuple(spec["resolution"]), D, spec["axes"],
                                vec("center"), spec["reverse"])
        if kind == "mesh":
            c = read_mesh(base_dir / spec["path"])
            if c.D != D:
                raise ScenarioError(f"mesh lives in R^{c.D}, scenario is R^{D}", where)
            return c
    except ScenarioError:
        raise
    except (ValueError, OSError) as exc:
        raise ScenarioError(str(exc), where) from exc
    raise ScenarioError(f"unknown chain type {kind!r}", where)


def parse_scenario(text: str, base_dir: Path | str | None = None) -> Scenario:
    """Parse and validate a scenario; defaults come from the schema."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    errors = sorted(_VALIDATOR.iter_errors(doc), key=lambda e: (len(list(e.absolute_path)), e.message))
    if errors:
        err = jsonschema.exceptions.best_match(_branch_error(e) for e in errors)
        if err.validator == "required":
            missing = err.message.split("'")[1]
            path = _error_path(err)
            path = missing if path == "<root>" else f"{path}.{missing}"
            raise ScenarioError("required field is missing", path)
        if err.validator == "oneOf" and isinstance(err.instance, dict):
            tags = [_resolve(_SCHEMA, b).get("properties", {}).get("type", {}).get("const")
                    for b in err.validator_value]
            if "type" in err.instance and err.instance["type"] not in tags:
                raise ScenarioError(f"unknown type {err.instance['type']!r}; expected one of {tags}",
                                    _error_path(err) + ".type")
            if "type" not in err.instance:
                raise ScenarioError(f"'type' is required; one of {tags}", _error_path(err))
        raise ScenarioError(err.message, _error_path(err))
    doc = _fill_defaults(_SCHEMA, _SCHEMA, doc)
    if doc["N"] > doc["D"]:
        raise ScenarioError(f"N={doc['N']} exceeds D={doc['D']}", "N")
    sc = Scenario(doc, Path(base_dir) if base_dir is not None else Path.cwd())
    _check_dimensions(sc)
    return sc


def _check_dimensions(sc: Scenario) -> None:
    D = sc.D
    if "grid" in sc.doc:
        gd = sc.doc["grid"]
        for key in ("lower", "upper", "resolution"):
            if len(gd[key]) != D:
                raise ScenarioError(f"expected {D} entries", f"grid.{key}")
    for key in ("start", "goal"):
        if key in sc.doc and len(sc.doc[key]) != D:
            raise ScenarioError(f"expected {D} coordinates", key)
    for i, spec in enumerate(sc.doc["skeletons"]):
        _check_spec_dim(spec, D, sc.D - sc.N, f"skeletons[{i}]")
    for i, spec in enumerate(sc.doc["candidates"]):
        _check_spec_dim(spec, D, sc.N - 1, f"candidates[{i}]")
    mode = sc.doc.get("mode")
    if mode and mode["type"] == "target" and len(mode["signature"]) != len(sc.doc["skeletons"]):
        raise ScenarioError("target signature needs one entry per skeleton", "mode.signature")


_INTRINSIC = {"point": 0, "polyline": 1, "circle": 1, "sphere": 2, "torus": 2}


def _check_spec_dim(spec: dict, D: int, want: int, where: str) -> None:
    dim = _INTRINSIC.get(spec["type"])
    if dim is not None and dim != want:
        raise ScenarioError(f"dimension mismatch: {spec['type']} has dimension {dim}, expected {want}", where)
    axes = spec.get("axes")
    if axes is not None and (max(axes) >= D or len(set(axes)) != len(axes)):
        raise ScenarioError(f"axes {axes} invalid in R^{D}", f"{where}.axes")


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text("utf-8"), path.parent)


def serialize_scenario(sc: Scenario) -> str:
    return json.dumps(sc.doc, indent=2, sort_keys=True) + "\n"


def bundled_scenario_path(name: str) -> Path:
    return Path(str(resources.files("homolink").joinpath(f"scenarios/{name}")))


# --- results ----------------------------------------------------------------------


@dataclass
class ResultBundle:
    kind: str
    scenario: str
    signatures: list[dict[str, Any]] = field(default_factory=list)
    classes: list[dict[str, Any]] = field(default_factory=list)
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> str:
        doc = {
            "kind": self.kind,
            "scenario": self.scenario,
            "signatures": self.signatures,
            "classes": self.classes,
            "diagnostics": self.diagnostics,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> ResultBundle:
        doc = json.loads(text)
        return cls(doc["kind"], doc["scenario"], doc["signatures"], doc["classes"], doc["diagnostics"])

    def paths_csv(self) -> str:
        lines = []
        for c in self.classes:
            for step, x in enumerate(c["path"]):
                if not lines:
                    lines.append(",".join(["class", "step"] + [f"x{i + 1}" for i in range(len(x))]))
                lines.append(",".join([str(c["rank"]), str(step)] + [repr(float(v)) for v in x]))
        return "\n".join(lines) + ("\n" if lines else "")

"""Domain types, causal graph construction and queries, and run-table ingestion.

A *study* is declared by a list of :class:`VariableSpec` (interventional
method ratios and observational metrics), measured over N pipeline runs into
an :class:`ObservationMatrix`, and related by a :class:`CausalGraph`.
All types are immutable after construction.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    CycleError,
    ExogeneityError,
    ParseError,
    RangeError,
    SchemaError,
    UnknownNodeError,
)


class VariableKind(str, Enum):
    INTERVENTIONAL = "interventional"
    OBSERVATIONAL = "observational"


class Tier(str, Enum):
    DATA = "data"
    TRAIN = "train"
    TEST = "test"
    HYPER = "hyper"


class Direction(str, Enum):
    """What counts as an improvement for a metric."""

    MAXIMIZE = "maximize"
    MINIMIZE = "minimize"
    TARGET = "target"


@dataclass(frozen=True)
class SignSpec:
    """Improvement semantics of one metric.

    ``TARGET`` means closer to ``target`` is better; the ``neutral_band``
    absorbs changes too small to call either way.
    """

    direction: Direction = Direction.MAXIMIZE
    target: float | None = None
    neutral_band: float = 1e-9

    def __post_init__(self) -> None:
        if self.neutral_band < 0:
            raise SchemaError("neutral_band must be >= 0")
        if self.direction is Direction.TARGET:
            if self.target is None or not math.isfinite(self.target):
                raise SchemaError("target objective requires a finite target value")
        elif self.target is not None:
            raise SchemaError("target value only applies to the target objective")


@dataclass(frozen=True)
class VariableSpec:
    name: str
    kind: VariableKind
    sign: SignSpec = field(default_factory=SignSpec)
    tier: Tier | None = None

    def __post_init__(self) -> None:
        if not self.name:
            raise SchemaError("variable name must be nonempty")


def _check_unique_names(specs: Sequence[VariableSpec]) -> None:
    seen: set[str] = set()
    for s in specs:
        if s.name in seen:
            raise SchemaError(f"duplicate variable name: {s.name!r}")
        seen.add(s.name)


@dataclass(frozen=True)
class AteQuery:
    """Effect of moving ``treatment`` from x2 to x1, read off ``outcome``."""

    treatment: str
    outcome: str
    x1: float
    x2: float

    def __post_init__(self) -> None:
        if self.treatment == self.outcome:
            raise SchemaError("treatment and outcome must differ")
        if not (math.isfinite(self.x1) and math.isfinite(self.x2)):
            raise SchemaError("x1 and x2 must be finite")


@dataclass(frozen=True, eq=False)
class ObservationMatrix:
    """N pipeline runs by M declared variables, fully numeric and complete."""

    variables: tuple[VariableSpec, ...]
    data: np.ndarray

    def __init__(self, variables: Sequence[VariableSpec], data: np.ndarray) -> None:
        variables = tuple(variables)
        _check_unique_names(variables)
        arr = np.array(data, dtype=np.float64, copy=True)
        if arr.ndim != 2:
            raise SchemaError("data must be a 2-D matrix")
        if arr.shape[1] != len(variables):
            raise SchemaError(
                f"data has {arr.shape[1]} columns but {len(variables)} variables declared"
            )
        if arr.shape[0] < 2:
            raise SchemaError("at least 2 runs are required")
        if not np.isfinite(arr).all():
            raise ParseError("data contains NaN or infinite entries")
        for j, spec in enumerate(variables):
            if spec.kind is VariableKind.INTERVENTIONAL:
                col = arr[:, j]
                if col.min() < 0.0 or col.max() > 1.0:
                    raise RangeError(
                        f"interventional column {spec.name!r} outside [0, 1]"
                    )
        arr.setflags(write=False)
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "data", arr)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.variables)

    @property
    def n_runs(self) -> int:
        return self.data.shape[0]

    @property
    def n_vars(self) -> int:
        return self.data.shape[1]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownNodeError(f"unknown variable: {name!r}") from None

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.index(name)]

    def spec(self, name: str) -> VariableSpec:
        return self.variables[self.index(name)]


@dataclass(frozen=True)
class CausalGraph:
    """A DAG over named variables; edges are directed causal relations."""

    nodes: tuple[str, ...]
    edges: frozenset[tuple[str, str]]

    def __init__(self, nodes: Sequence[str], edges: Iterable[tuple[str, str]]) -> None:
        nodes = tuple(nodes)
        if len(set(nodes)) != len(nodes):
            raise SchemaError("node names must be unique")
        edge_set = frozenset((str(a), str(b)) for a, b in edges)
        node_set = set(nodes)
        for a, b in edge_set:
            if a not in node_set or b not in node_set:
                raise UnknownNodeError(f"edge ({a!r}, {b!r}) references an undeclared node")
            if a == b:
                raise CycleError(f"self edge on {a!r}")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edge_set)
        self.topological_order()  # raises CycleError on any cycle

    @cached_property
    def _parents(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, list[str]] = {n: [] for n in self.nodes}
        for a, b in sorted(self.edges):
            out[b].append(a)
        return {n: tuple(v) for n, v in out.items()}

    @cached_property
    def _children(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, list[str]] = {n: [] for n in self.nodes}
        for a, b in sorted(self.edges):
            out[a].append(b)
        return {n: tuple(v) for n, v in out.items()}

    def _require(self, name: str) -> None:
        if name not in self._parents:
            raise UnknownNodeError(f"unknown node: {name!r}")

    def parents(self, name: str) -> tuple[str, ...]:
        self._require(name)
        return self._parents[name]

    def children(self, name: str) -> tuple[str, ...]:
        self._require(name)
        return self._children[name]

    def topological_order(self) -> tuple[str, ...]:
        """Node order respecting every edge; stable w.r.t. declaration order."""
        indeg = {n: 0 for n in self.nodes}
        for _, b in self.edges:
            indeg[b] += 1
        remaining = list(self.nodes)
        order: list[str] = []
        while remaining:
            head = next((n for n in remaining if indeg[n] == 0), None)
            if head is None:
                raise CycleError("edges form a directed cycle")
            remaining.remove(head)
            order.append(head)
            for c in self._children[head]:
                indeg[c] -= 1
        return tuple(order)

    def ancestors(self, name: str) -> frozenset[str]:
        """All nodes with a directed path into ``name`` (excluding itself)."""
        self._require(name)
        seen: set[str] = set()
        stack = list(self._parents[name])
        while stack:
            cur = stack.pop()
            if cur in seen:
                continue
            seen.add(cur)
            stack.extend(self._parents[cur])
        return frozenset(seen)

    def descendants(self, name: str) -> frozenset[str]:
        self._require(name)
        seen: set[str] = set()
        stack = list(self._children[name])
        while stack:
            cur = stack.pop()
            if cur in seen:
                continue
            seen.add(cur)
            stack.extend(self._children[cur])
        return frozenset(seen)


def build_graph(
    nodes: Sequence[VariableSpec] | Sequence[str],
    edges: Iterable[tuple[str, str]],
) -> CausalGraph:
    """Validate and construct a :class:`CausalGraph`.

    When ``nodes`` are :class:`VariableSpec`, edges into interventional
    variables are rejected (they are exogenous by definition).
    """
    edge_list = list(edges)
    if nodes and isinstance(nodes[0], VariableSpec):
        specs = list(nodes)  # type: ignore[arg-type]
        _check_unique_names(specs)
        interventional = {s.name for s in specs if s.kind is VariableKind.INTERVENTIONAL}
        for a, b in edge_list:
            if b in interventional:
                raise ExogeneityError(
                    f"edge ({a!r}, {b!r}) targets interventional variable {b!r}"
                )
        names: Sequence[str] = [s.name for s in specs]
    else:
        names = [str(n) for n in nodes]
    return CausalGraph(names, edge_list)


def is_cause(g: CausalGraph, x: str, y: str) -> bool:
    """True iff a directed path of length >= 1 runs from x to y."""
    g._require(x)
    g._require(y)
    return y in g.descendants(x)


def common_ancestors(g: CausalGraph, x: str, y: str) -> tuple[str, ...]:
    """Shared ancestors of x and y, excluding both, sorted by name."""
    if x == y:
        raise ValueError("common_ancestors requires two distinct nodes")
    shared = (g.ancestors(x) & g.ancestors(y)) - {x, y}
    return tuple(sorted(shared))


# ---------------------------------------------------------------------------
# study config and run-table I/O
# ---------------------------------------------------------------------------

def _sign_from_json(obj: Mapping, where: str) -> SignSpec:
    if not isinstance(obj, Mapping):
        raise SchemaError(f"{where}: sign must be an object")
    direction = obj.get("objective")
    if direction not in ("maximize", "minimize", "target"):
        raise SchemaError(f"{where}: unknown sign objective {direction!r}")
    target = obj.get("value")
    band = obj.get("neutral_band", 1e-9)
    if direction == "target" and target is None:
        raise SchemaError(f"{where}: target objective requires a numeric value")
    return SignSpec(
        direction=Direction(direction),
        target=float(target) if direction == "target" else None,
        neutral_band=float(band),
    )


def _sign_to_json(sign: SignSpec) -> dict:
    out: dict = {"objective": sign.direction.value}
    if sign.direction is Direction.TARGET:
        out["value"] = sign.target
    if sign.neutral_band != 1e-9:
        out["neutral_band"] = sign.neutral_band
    return out


def study_config_from_dict(doc: Mapping) -> tuple[VariableSpec, ...]:
    if not isinstance(doc, Mapping) or "variables" not in doc:
        raise SchemaError("study config must contain a 'variables' array")
    specs: list[VariableSpec] = []
    for i, entry in enumerate(doc["variables"]):
        where = f"variables[{i}]"
        if not isinstance(entry, Mapping) or "name" not in entry:
            raise SchemaError(f"{where}: each variable needs a name")
        kind = entry.get("kind")
        if kind not in ("interventional", "observational"):
            raise SchemaError(f"{where}: unknown kind {kind!r}")
        sign = _sign_from_json(entry.get("sign", {"objective": "maximize"}), where)
        tier = entry.get("tier")
        if tier is not None and tier not in ("data", "train", "test", "hyper"):
            raise SchemaError(f"{where}: unknown tier {tier!r}")
        specs.append(
            VariableSpec(
                name=str(entry["name"]),
                kind=VariableKind(kind),
                sign=sign,
                tier=Tier(tier) if tier is not None else None,
            )
        )
    _check_unique_names(specs)
    return tuple(specs)


def study_config_to_dict(specs: Sequence[VariableSpec]) -> dict:
    return {
        "variables": [
            {
                "name": s.name,
                "kind": s.kind.value,
                "sign": _sign_to_json(s.sign),
                **({"tier": s.tier.value} if s.tier is not None else {}),
            }
            for s in specs
        ]
    }


def load_study_config(path: str | Path) -> tuple[VariableSpec, ...]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    return study_config_from_dict(doc)


def load_run_table(csv_path: str | Path, config_path: str | Path) -> ObservationMatrix:
    """Read a run-table CSV against a study config.

    Columns are reordered to the config order; every header column must be
    declared and every declared variable must be present.
    """
    specs = load_study_config(config_path)
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{csv_path}: empty file") from None
        declared = {s.name for s in specs}
        for col in header:
            if col not in declared:
                raise SchemaError(f"{csv_path}: undeclared column {col!r}")
        missing = declared - set(header)
        if missing:
            raise SchemaError(f"{csv_path}: missing columns {sorted(missing)}")
        if len(set(header)) != len(header):
            raise SchemaError(f"{csv_path}: duplicated column in header")
        rows: list[list[float]] = []
        for lineno, raw in enumerate(reader, start=2):
            if len(raw) != len(header):
                raise SchemaError(f"{csv_path}:{lineno}: wrong number of cells")
            try:
                rows.append([float(cell) for cell in raw])
            except ValueError:
                raise ParseError(f"{csv_path}:{lineno}: non-numeric cell") from None
    if len(rows) < 2:
        raise SchemaError(f"{csv_path}: at least 2 runs are required")
    arr = np.asarray(rows, dtype=np.float64)
    perm = [header.index(s.name) for s in specs]
    return ObservationMatrix(specs, arr[:, perm])


def run_table_to_csv(matrix: ObservationMatrix) -> str:
    """Run-table CSV text that reloads bit-for-bit (repr round-trip)."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(matrix.names)
    for row in matrix.data:
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def save_run_table(matrix: ObservationMatrix, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(run_table_to_csv(matrix))


# ---------------------------------------------------------------------------
# graph serialization
# ---------------------------------------------------------------------------

def graph_to_dict(g: CausalGraph) -> dict:
    return {"nodes": list(g.nodes), "edges": sorted([a, b] for a, b in g.edges)}


def graph_from_dict(doc: Mapping) -> CausalGraph:
    if not isinstance(doc, Mapping) or "nodes" not in doc or "edges" not in doc:
        raise SchemaError("graph document must contain 'nodes' and 'edges'")
    edges = [(str(e[0]), str(e[1])) for e in doc["edges"]]
    return CausalGraph([str(n) for n in doc["nodes"]], edges)


def save_graph(g: CausalGraph, path: str | Path) -> None:
    Path(path).write_text(dumps_json(graph_to_dict(g)), encoding="utf-8")


def load_graph(path: str | Path) -> CausalGraph:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    return graph_from_dict(doc)


def graph_to_dot(
    g: CausalGraph,
    specs: Sequence[VariableSpec] | None = None,
    node_attrs: Mapping[str, str] | None = None,
) -> str:
    """DOT rendering: interventional nodes as boxes, observational as ellipses.

    ``node_attrs`` may add extra attribute text per node (annotations).
    """
    kinds = {s.name: s.kind for s in specs} if specs else {}
    lines = ["digraph causal {"]
    for n in g.nodes:
        shape = "box" if kinds.get(n) is VariableKind.INTERVENTIONAL else "ellipse"
        extra = node_attrs.get(n, "") if node_attrs else ""
        lines.append(f'  "{n}" [shape={shape}{extra}];')
    for a, b in sorted(g.edges):
        lines.append(f'  "{a}" -> "{b}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


def dumps_json(doc) -> str:
    """Canonical JSON used for every artifact: sorted keys, stable floats."""
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"

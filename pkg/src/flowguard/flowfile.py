"""Flow-definition files.

A flow definition is a JSON document with four sections: constants,
graph, alphabet, and a provenance label. Parsing is strict (unknown keys
rejected at every level) and serialization is canonical (sorted keys,
normalized graph ordering), so parse(serialize(x)) == x and equal
definitions produce byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .actions import Action, format_action, parse_action
from .fixtures import Fixture
from .impl_model import FlowGraph, ImplConstants, NodeKind
from .spec_model import SpecConstants

SCHEMA_VERSION = 1


class FlowFileError(ValueError):
    """Malformed flow-definition document."""


@dataclass(frozen=True)
class FlowDefinition:
    provenance: str
    constants: SpecConstants
    graph: FlowGraph
    alphabet: tuple[Action, ...]

    @property
    def impl_constants(self) -> ImplConstants:
        return ImplConstants(self.constants, self.graph)


def _require_keys(obj: dict, allowed: set[str], required: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise FlowFileError(f"unknown keys in {where}: {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise FlowFileError(f"missing keys in {where}: {sorted(missing)}")


def parse_flow(text: str) -> FlowDefinition:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise FlowFileError(f"not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise FlowFileError("top-level document must be an object")
    _require_keys(
        doc,
        {"schema_version", "provenance", "constants", "graph", "alphabet"},
        {"schema_version", "provenance", "constants", "graph", "alphabet"},
        "document",
    )
    if doc["schema_version"] != SCHEMA_VERSION:
        raise FlowFileError(f"unsupported schema_version: {doc['schema_version']!r}")

    cobj = doc["constants"]
    if not isinstance(cobj, dict):
        raise FlowFileError("constants must be an object")
    _require_keys(
        cobj,
        {"workspace_root", "allowed_tools", "max_steps", "prefix_mode", "count_all_actions"},
        {"workspace_root", "allowed_tools", "max_steps"},
        "constants",
    )
    try:
        constants = SpecConstants(
            workspace_root=cobj["workspace_root"],
            allowed_tools=frozenset(cobj["allowed_tools"]),
            max_steps=cobj["max_steps"],
            prefix_mode=cobj.get("prefix_mode", "guarded"),
            count_all_actions=cobj.get("count_all_actions", True),
        )
    except (ValueError, TypeError) as e:
        raise FlowFileError(f"bad constants: {e}") from e

    gobj = doc["graph"]
    if not isinstance(gobj, dict):
        raise FlowFileError("graph must be an object")
    _require_keys(gobj, {"entry", "nodes", "edges"}, {"entry", "nodes", "edges"}, "graph")
    node_kinds = []
    for n in gobj["nodes"]:
        if not isinstance(n, dict):
            raise FlowFileError("graph.nodes entries must be objects")
        _require_keys(n, {"name", "kind"}, {"name", "kind"}, "graph node")
        try:
            kind = NodeKind(n["kind"])
        except ValueError as e:
            raise FlowFileError(f"unknown node kind: {n['kind']!r}") from e
        node_kinds.append((n["name"], kind))
    edges = []
    for e in gobj["edges"]:
        if not isinstance(e, dict):
            raise FlowFileError("graph.edges entries must be objects")
        _require_keys(e, {"from", "label", "to"}, {"from", "label", "to"}, "graph edge")
        edges.append((e["from"], e["label"], e["to"]))
    graph = FlowGraph(entry=gobj["entry"], node_kinds=tuple(node_kinds), edges=tuple(edges))

    try:
        alphabet = tuple(parse_action(lit) for lit in doc["alphabet"])
    except ValueError as e:
        raise FlowFileError(f"bad alphabet: {e}") from e
    if not alphabet:
        raise FlowFileError("alphabet must be nonempty")

    return FlowDefinition(
        provenance=doc["provenance"],
        constants=constants,
        graph=graph,
        alphabet=alphabet,
    )


def flow_to_document(defn: FlowDefinition) -> dict:
    c = defn.constants
    return {
        "schema_version": SCHEMA_VERSION,
        "provenance": defn.provenance,
        "constants": {
            "workspace_root": c.workspace_root,
            "allowed_tools": sorted(c.allowed_tools),
            "max_steps": c.max_steps,
            "prefix_mode": c.prefix_mode,
            "count_all_actions": c.count_all_actions,
        },
        "graph": {
            "entry": defn.graph.entry,
            "nodes": [{"name": n, "kind": k.value} for n, k in defn.graph.node_kinds],
            "edges": [{"from": f, "label": l, "to": t} for f, l, t in defn.graph.edges],
        },
        "alphabet": [format_action(a) for a in defn.alphabet],
    }


def serialize_flow(defn: FlowDefinition) -> str:
    return json.dumps(flow_to_document(defn), indent=2, sort_keys=True) + "\n"


def flow_digest(defn: FlowDefinition) -> str:
    """Stable content hash of the whole definition (constants, graph,
    alphabet, provenance)."""
    return hashlib.sha256(serialize_flow(defn).encode()).hexdigest()[:16]


def load_flow(path: str | Path) -> FlowDefinition:
    return parse_flow(Path(path).read_text())


def write_flow(path: str | Path, defn: FlowDefinition) -> None:
    Path(path).write_text(serialize_flow(defn))


def from_fixture(fixture: Fixture) -> FlowDefinition:
    return FlowDefinition(
        provenance=fixture.provenance,
        constants=fixture.constants.spec,
        graph=fixture.constants.graph,
        alphabet=fixture.alphabet,
    )

"""Concrete contained machine: a policy-gated dispatch loop over a flow
graph.

A step takes the driver's action and either dispatches along a matching
labeled edge (emitting the corresponding boundary event and recording it)
or rejects, emitting a stutter with the state unchanged. Rejection is a
value, never an error: the machine is total.

An action is effected only when all of these hold:
  * the machine has not halted,
  * the policy admits it (rooted path / allowlisted tool / step capacity),
  * the current node's kind matches the action variant, and
  * an outgoing edge labeled with the action's canonical label exists.

Events are modeled effects only; nothing here touches a real filesystem
or tool.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

from .actions import (
    Action,
    BoundaryEvent,
    Dispatch,
    ImplEvent,
    NoAction,
    NoEffect,
    ReadEvent,
    ReadPathAction,
    StepAction,
    StepEvent,
    ToolCallAction,
    ToolEvent,
    action_label,
)
from .lts import TransitionSystem
from .spec_model import SpecConstants, path_under_root

NO_NODE = None  # sentinel for "no node visited yet"


class NodeKind(str, Enum):
    READ = "Read"
    TOOL = "Tool"
    STEP = "Step"
    TERMINAL = "Terminal"


class FlowGraphError(ValueError):
    """The graph violates a structural invariant."""


@dataclass(frozen=True)
class FlowGraph:
    """Directed graph of kinded nodes with labeled dispatch edges.

    node_kinds and edges are normalized to sorted tuples so equal graphs
    compare and serialize identically.
    """

    entry: str
    node_kinds: tuple[tuple[str, NodeKind], ...]
    edges: tuple[tuple[str, str, str], ...]  # (from_node, label, to_node)
    _kind_map: dict = field(init=False, repr=False, compare=False)
    _edge_map: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        kinds = tuple(sorted((n, NodeKind(k)) for n, k in self.node_kinds))
        edges = tuple(sorted(self.edges))
        object.__setattr__(self, "node_kinds", kinds)
        object.__setattr__(self, "edges", edges)

        kind_map = dict(kinds)
        if len(kind_map) != len(kinds):
            raise FlowGraphError("duplicate node names")
        if self.entry not in kind_map:
            raise FlowGraphError(f"entry node {self.entry!r} not in graph")
        edge_map: dict[tuple[str, str], str] = {}
        for frm, label, to in edges:
            if frm not in kind_map:
                raise FlowGraphError(f"edge source {frm!r} not in graph")
            if to not in kind_map:
                raise FlowGraphError(f"edge target {to!r} not in graph")
            if (frm, label) in edge_map:
                raise FlowGraphError(f"duplicate edge {frm!r} -{label!r}->")
            edge_map[(frm, label)] = to
        for node, kind in kinds:
            if kind is not NodeKind.TERMINAL and not any(f == node for f, _, _ in edges):
                raise FlowGraphError(f"non-terminal node {node!r} has no outgoing edge")
        object.__setattr__(self, "_kind_map", kind_map)
        object.__setattr__(self, "_edge_map", edge_map)

    @property
    def nodes(self) -> frozenset[str]:
        return frozenset(self._kind_map)

    def kind_of(self, node: str) -> NodeKind:
        return self._kind_map[node]

    def edge_target(self, node: str, label: str) -> str | None:
        return self._edge_map.get((node, label))


@dataclass(frozen=True)
class ImplConstants:
    spec: SpecConstants
    graph: FlowGraph


@dataclass(frozen=True)
class ImplState:
    current_node: str
    read_paths: tuple[str, ...] = ()
    tool_calls: tuple[str, ...] = ()
    step_count: int = 0
    halted: bool = False
    history: tuple[tuple[str, Action], ...] = ()
    last_node: str | None = NO_NODE
    last_action: Action = NoAction()


def impl_wf(c: ImplConstants, s: ImplState) -> bool:
    """Structural well-formedness only; the inductive invariant is separate."""
    return s.current_node in c.graph.nodes


def impl_init(c: ImplConstants) -> ImplState:
    return ImplState(current_node=c.graph.entry)


_KIND_FOR_ACTION = {
    ReadPathAction: NodeKind.READ,
    ToolCallAction: NodeKind.TOOL,
    StepAction: NodeKind.STEP,
}


def _policy_admits(c: SpecConstants, s: ImplState, a: Action) -> bool:
    match a:
        case ReadPathAction(path):
            guard = path_under_root(c.workspace_root, path, c.prefix_mode)
        case ToolCallAction(tool):
            guard = tool in c.allowed_tools
        case StepAction():
            guard = True
        case _:
            return False
    if c.count_all_actions or isinstance(a, StepAction):
        guard = guard and s.step_count < c.max_steps
    return guard


def impl_next(c: ImplConstants, s: ImplState, a: Action) -> tuple[tuple[ImplEvent, ImplState], ...]:
    """Deterministic, total: exactly one successor per (state, action)."""
    stutter = ((ImplEvent(NoEffect()), s),)
    if s.halted:
        return stutter
    if not _policy_admits(c.spec, s, a):
        return stutter
    wanted = _KIND_FOR_ACTION.get(type(a))
    if wanted is None or c.graph.kind_of(s.current_node) is not wanted:
        return stutter
    label = action_label(a)
    assert label is not None
    target = c.graph.edge_target(s.current_node, label)
    if target is None:
        return stutter

    match a:
        case ReadPathAction(path):
            effect: BoundaryEvent = ReadEvent(path)
            nxt = replace(s, read_paths=s.read_paths + (path,))
        case ToolCallAction(tool):
            effect = ToolEvent(tool)
            nxt = replace(s, tool_calls=s.tool_calls + (tool,))
        case _:
            effect = StepEvent()
            nxt = s
    if c.spec.count_all_actions or isinstance(a, StepAction):
        count = s.step_count + 1
        nxt = replace(nxt, step_count=count, halted=count >= c.spec.max_steps)
    nxt = replace(
        nxt,
        history=s.history + ((s.current_node, a),),
        current_node=target,
        last_node=s.current_node,
        last_action=a,
    )
    event = ImplEvent(effect, Dispatch(s.current_node, label, target))
    return ((event, nxt),)


def impl_inv(c: ImplConstants, s: ImplState) -> bool:
    """Inductive invariant strengthening the refinement: holds at init and
    is preserved by every step."""
    if not impl_wf(c, s):
        return False
    if s.step_count > c.spec.max_steps:
        return False
    if s.halted and s.step_count < c.spec.max_steps:
        return False
    if c.spec.count_all_actions:
        if len(s.history) != s.step_count:
            return False
    else:
        if len(s.history) < s.step_count:
            return False
    if s.last_node is not NO_NODE:
        if not s.history or s.history[-1] != (s.last_node, s.last_action):
            return False
    return True


def impl_safety(c: ImplConstants, s: ImplState) -> bool:
    """The concrete boundary policy as a state predicate: the same three
    conjuncts as the abstract safety predicate, read off the concrete
    fields."""
    sc = c.spec
    return (
        all(path_under_root(sc.workspace_root, p, sc.prefix_mode) for p in s.read_paths)
        and all(t in sc.allowed_tools for t in s.tool_calls)
        and s.step_count <= sc.max_steps
    )


def event_in_policy(c: ImplConstants, pre: ImplState, event: ImplEvent | BoundaryEvent) -> bool:
    """Does an emitted event comply with the boundary policy, judged at its
    pre-state? Stutters always comply."""
    effect = event.effect if isinstance(event, ImplEvent) else event
    sc = c.spec
    match effect:
        case NoEffect():
            return True
        case ReadEvent(path):
            return path_under_root(sc.workspace_root, path, sc.prefix_mode)
        case ToolEvent(tool):
            return tool in sc.allowed_tools
        case StepEvent():
            return pre.step_count < sc.max_steps
    return False


def impl_system(c: ImplConstants, alphabet: tuple[Action, ...]) -> TransitionSystem:
    return TransitionSystem(
        initial_state=impl_init(c),
        step_relation=lambda s, a: impl_next(c, s, a),
        action_alphabet=alphabet,
    )

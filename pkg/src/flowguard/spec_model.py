"""Abstract boundary-policy machine: the specification side of the
refinement pair.

The machine tracks only the four boundary-visible variables (read paths,
tool calls, step count, halted flag). Its transition relation encodes the
policy directly: a rooted read appends, an allowlisted tool call appends,
a step advances the counter while capacity remains, and every (state,
action) pair also admits a no-effect stutter. The stutter option is what
lets a concrete machine reject an action for reasons the abstract machine
cannot see (wrong node kind, missing edge) and still refine.

Safety is deliberately a separate predicate, not a type invariant: unsafe
states must be representable so checks can reject them.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .actions import (
    Action,
    BoundaryEvent,
    NoEffect,
    ReadEvent,
    ReadPathAction,
    StepAction,
    StepEvent,
    ToolCallAction,
    ToolEvent,
)
from .lts import TransitionSystem

PREFIX_GUARDED = "guarded"
PREFIX_BARE = "bare"


@dataclass(frozen=True)
class SpecConstants:
    """Policy parameters shared by the abstract and concrete machines.

    prefix_mode:
      "guarded" -- a path is under the root iff it equals the root or
                   extends it across a '/' boundary ("/ws" covers "/ws/a"
                   and "/ws" itself but not "/wsx/a").
      "bare"    -- literal string-prefix matching, no separator guard.
    count_all_actions:
      True  -- every effected action consumes a step (default; keeps the
               history-length bookkeeping of the concrete machine exact).
      False -- only StepAction consumes steps.
    """

    workspace_root: str
    allowed_tools: frozenset[str]
    max_steps: int
    prefix_mode: str = PREFIX_GUARDED
    count_all_actions: bool = True

    def __post_init__(self) -> None:
        if not self.workspace_root:
            raise ValueError("workspace_root must be nonempty")
        if self.max_steps < 0:
            raise ValueError("max_steps must be >= 0")
        if self.prefix_mode not in (PREFIX_GUARDED, PREFIX_BARE):
            raise ValueError(f"unknown prefix_mode: {self.prefix_mode!r}")


@dataclass(frozen=True)
class SpecState:
    read_paths: tuple[str, ...] = ()
    tool_calls: tuple[str, ...] = ()
    step_count: int = 0
    halted: bool = False


def path_under_root(root: str, path: str, mode: str = PREFIX_GUARDED) -> bool:
    """Byte-exact prefix test; no normalization (that belongs to untrusted
    runtime plumbing, not the model)."""
    if mode == PREFIX_BARE:
        return path.startswith(root)
    if path == root:
        return True
    sep_root = root if root.endswith("/") else root + "/"
    return path.startswith(sep_root)


def spec_init(c: SpecConstants) -> SpecState:
    return SpecState()


def _counts_step(c: SpecConstants, a: Action) -> bool:
    return c.count_all_actions or isinstance(a, StepAction)


def _effected(c: SpecConstants, s: SpecState, a: Action) -> tuple[BoundaryEvent, SpecState] | None:
    """The policy transition for (s, a), or None when the policy rejects."""
    match a:
        case ReadPathAction(path):
            if not path_under_root(c.workspace_root, path, c.prefix_mode):
                return None
            event: BoundaryEvent = ReadEvent(path)
            nxt = replace(s, read_paths=s.read_paths + (path,))
        case ToolCallAction(tool):
            if tool not in c.allowed_tools:
                return None
            event = ToolEvent(tool)
            nxt = replace(s, tool_calls=s.tool_calls + (tool,))
        case StepAction():
            event = StepEvent()
            nxt = s
        case _:
            return None
    if _counts_step(c, a):
        if s.step_count >= c.max_steps:
            return None
        count = s.step_count + 1
        nxt = replace(nxt, step_count=count, halted=count >= c.max_steps)
    return event, nxt


def spec_next(c: SpecConstants, s: SpecState, a: Action) -> tuple[tuple[BoundaryEvent, SpecState], ...]:
    """All abstract successors of (s, a). Total by construction: the
    stutter (NoEffect, s) is always available, and it is the only successor
    when the policy rejects the action."""
    stutter = (NoEffect(), s)
    effect = _effected(c, s, a)
    if effect is None:
        return (stutter,)
    return (effect, stutter)


def spec_safety(c: SpecConstants, s: SpecState) -> bool:
    return (
        all(path_under_root(c.workspace_root, p, c.prefix_mode) for p in s.read_paths)
        and all(t in c.allowed_tools for t in s.tool_calls)
        and s.step_count <= c.max_steps
    )


def spec_system(c: SpecConstants, alphabet: tuple[Action, ...]) -> TransitionSystem:
    return TransitionSystem(
        initial_state=spec_init(c),
        step_relation=lambda s, a: spec_next(c, s, a),
        action_alphabet=alphabet,
    )


# ---------------------------------------------------------------------------
# Lemma-level checks: initial safety and inductive preservation


@dataclass(frozen=True)
class PreservationCounterexample:
    state: SpecState
    action: Action
    event: BoundaryEvent
    post_state: SpecState


@dataclass(frozen=True)
class PreservationVerdict:
    passed: bool
    explored_states: int
    counterexample: PreservationCounterexample | None = None


def check_init_safety(c: SpecConstants) -> bool:
    """Base case of abstract safety: the initial state satisfies the
    predicate for any well-formed constants."""
    return spec_safety(c, spec_init(c))


def check_safety_preserved(
    c: SpecConstants,
    alphabet: tuple[Action, ...],
    depth: int,
    *,
    next_relation=spec_next,
    safety=spec_safety,
) -> PreservationVerdict:
    """Inductive step of abstract safety, checked exhaustively: every
    successor of every safe state reachable within ``depth`` is safe.

    States at distance < depth are expanded; the first violating
    (state, action, event, post_state) quadruple in BFS order is reported.
    """
    init = spec_init(c)
    frontier: list[SpecState] = [init] if safety(c, init) else []
    seen: set[SpecState] = set(frontier)
    explored = 0
    for _layer in range(depth):
        nxt_frontier: list[SpecState] = []
        for s in frontier:
            explored += 1
            for a in alphabet:
                for e, s2 in next_relation(c, s, a):
                    if not safety(c, s2):
                        return PreservationVerdict(
                            False, explored, PreservationCounterexample(s, a, e, s2)
                        )
                    if s2 not in seen:
                        seen.add(s2)
                        nxt_frontier.append(s2)
        frontier = nxt_frontier
        if not frontier:
            break
    return PreservationVerdict(True, explored)

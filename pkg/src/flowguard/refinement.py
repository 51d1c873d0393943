"""Executable forward-simulation refinement between the concrete dispatch
machine and the abstract policy machine.

The simulation relation is the graph of an abstraction function over
states (erase history and node bookkeeping, keep the four boundary
fields), and the event relation is the graph of an abstraction function
over events (drop the dispatch annotation). Three obligations are
discharged by bounded exhaustive checking:

  * initial-state matching plus the invariant at init,
  * step simulation: every concrete step from an admitted state is matched
    by an abstract step with the identical action, the abstracted event,
    and the abstracted post-state, while the declared invariant is
    re-established, and
  * safety transport: abstract safety at the matched post-state implies
    concrete safety.

Admitted states are the reachable states within the depth bound plus a
fixed library of structured perturbations of them, filtered by the
assumed invariant. The perturbations stand in for the universal state
quantification of a deductive proof: they exhibit exactly the junk states
a weakened invariant would be forced to handle. With the full invariant
assumed, every perturbed state it admits still discharges all
obligations, so the extra states never cause spurious failures.

A trace-level soundness check composes the same ingredients in three
stages: lift the concrete trace to an abstract run by replaying actions
and abstracted events from the abstract initial state, check abstract
safety pointwise along the lifted run, then check the concrete safety
conjuncts on the concrete states. The stage that fails is reported.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

from .actions import Action, BoundaryEvent, ImplEvent, NoAction, ReadPathAction, ToolCallAction
from .impl_model import (
    NO_NODE,
    ImplConstants,
    ImplState,
    impl_init,
    impl_inv,
    impl_next,
    impl_safety,
    impl_wf,
)
from .lts import Trace
from .spec_model import (
    SpecConstants,
    SpecState,
    path_under_root,
    spec_init,
    spec_next,
    spec_safety,
)

ConstantsAbs = Callable[[ImplConstants], SpecConstants]
VariablesAbs = Callable[[ImplState], SpecState]
EventAbs = Callable[[ImplEvent], BoundaryEvent]
InvPredicate = Callable[[ImplConstants, ImplState], bool]


@dataclass(frozen=True)
class AbstractionBundle:
    """The abstraction functions inducing the state and event relations,
    plus the inductive invariant the step obligation re-establishes."""

    constants_abs: ConstantsAbs
    variables_abs: VariablesAbs
    event_abs: EventAbs
    inv: InvPredicate


def project_constants(c: ImplConstants) -> SpecConstants:
    return c.spec


def project_variables(s: ImplState) -> SpecState:
    return SpecState(
        read_paths=s.read_paths,
        tool_calls=s.tool_calls,
        step_count=s.step_count,
        halted=s.halted,
    )


def project_event(e: ImplEvent) -> BoundaryEvent:
    return e.effect


def default_bundle() -> AbstractionBundle:
    return AbstractionBundle(
        constants_abs=project_constants,
        variables_abs=project_variables,
        event_abs=project_event,
        inv=impl_inv,
    )


# ---------------------------------------------------------------------------
# Exploration: reachable states plus structured perturbations


def perturbations(c: ImplConstants, s: ImplState, alphabet: tuple[Action, ...]) -> tuple[ImplState, ...]:
    """Deterministic junk-state library around a reachable state.

    Each edit targets one invariant clause or one safety conjunct; all
    results stay well-formed (current_node untouched except by the node
    moves, which stay inside the graph).
    """
    out: list[ImplState] = []
    if s.history:
        out.append(replace(s, history=s.history[:-1]))
        out.append(replace(s, history=s.history + s.history[-1:]))
    out.append(replace(s, step_count=s.step_count + 1))
    if s.step_count > 0:
        out.append(replace(s, step_count=s.step_count - 1))
    out.append(replace(s, halted=not s.halted))

    sc = c.spec
    unrooted = next(
        (
            a.path
            for a in alphabet
            if isinstance(a, ReadPathAction)
            and not path_under_root(sc.workspace_root, a.path, sc.prefix_mode)
        ),
        None,
    )
    if unrooted is not None:
        out.append(replace(s, read_paths=s.read_paths + (unrooted,)))
    unlisted = next(
        (a.tool for a in alphabet if isinstance(a, ToolCallAction) and a.tool not in sc.allowed_tools),
        None,
    )
    if unlisted is None and "__unlisted__" not in sc.allowed_tools:
        unlisted = "__unlisted__"
    if unlisted is not None:
        out.append(replace(s, tool_calls=s.tool_calls + (unlisted,)))

    if s.last_node is not NO_NODE:
        out.append(replace(s, last_node=NO_NODE, last_action=NoAction()))
        out.append(replace(s, last_action=NoAction()))
    for node in sorted(c.graph.nodes):
        if node != s.current_node:
            out.append(replace(s, current_node=node))
    return tuple(out)


def reachable_layers(c: ImplConstants, alphabet: tuple[Action, ...], depth: int) -> list[list[ImplState]]:
    """BFS layers of the concrete machine: layers[d] holds the states first
    reached after d steps; len(layers) == depth + 1."""
    layers: list[list[ImplState]] = [[impl_init(c)]]
    seen: set[ImplState] = {impl_init(c)}
    for _ in range(depth):
        nxt: list[ImplState] = []
        for s in layers[-1]:
            for a in alphabet:
                for _e, s2 in impl_next(c, s, a):
                    if s2 not in seen:
                        seen.add(s2)
                        nxt.append(s2)
        layers.append(nxt)
    return layers


# ---------------------------------------------------------------------------
# Verdicts


@dataclass(frozen=True)
class StepCounterexample:
    state: ImplState
    action: Action
    event: ImplEvent
    post_state: ImplState
    detail: str


@dataclass(frozen=True)
class InitVerdict:
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class RefinementVerdict:
    r1: bool
    r2: bool
    r3: bool
    inv_inductive: bool
    explored_states: int
    reachable_states: int
    depth: int
    r2_counterexample: StepCounterexample | None = None
    r3_counterexample: StepCounterexample | None = None
    inv_counterexample: StepCounterexample | None = None

    @property
    def passed(self) -> bool:
        return self.r1 and self.r2 and self.r3 and self.inv_inductive

    def failures(self) -> list[str]:
        out = []
        if not self.r1:
            out.append("refinement_init")
        if not self.inv_inductive:
            out.append("inv_inductive")
        if not self.r2:
            out.append("r2_step_simulation")
        if not self.r3:
            out.append("r3_safety_transport")
        return out


def check_refinement_init(c: ImplConstants, b: AbstractionBundle) -> InitVerdict:
    """Initial obligation: the invariant holds at init and the abstracted
    initial state equals the abstract initial state."""
    s0 = impl_init(c)
    if not b.inv(c, s0):
        return InitVerdict(False, "invariant fails at the initial state")
    ca = b.constants_abs(c)
    if b.variables_abs(s0) != spec_init(ca):
        return InitVerdict(False, "abstracted initial state differs from the abstract init")
    return InitVerdict(True)


def check_refinement_next(
    c: ImplConstants,
    b: AbstractionBundle,
    alphabet: tuple[Action, ...],
    depth: int,
    *,
    next_relation=spec_next,
    safety=spec_safety,
    assume_inv: InvPredicate | None = None,
) -> RefinementVerdict:
    """Step obligations over every admitted state and every alphabet action.

    ``assume_inv`` filters the states obligations are checked from; it
    defaults to the bundle's invariant. The invariant obligation on the
    post-state always uses the bundle's declared invariant, so assuming a
    weaker predicate than the declared one must fail unless the declared
    invariant demanded nothing.
    """
    assume = assume_inv if assume_inv is not None else b.inv
    ca = b.constants_abs(c)

    layers = reachable_layers(c, alphabet, depth)
    bases: list[ImplState] = [s for layer in layers[:depth] for s in layer]
    reachable_count = len(bases)

    explored: list[ImplState] = []
    seen: set[ImplState] = set()
    for base in bases:
        for candidate in (base,) + perturbations(c, base, alphabet):
            if candidate in seen:
                continue
            seen.add(candidate)
            if impl_wf(c, candidate) and assume(c, candidate):
                explored.append(candidate)

    inv_ok, r2_ok, r3_ok = True, True, True
    inv_cx: StepCounterexample | None = None
    r2_cx: StepCounterexample | None = None
    r3_cx: StepCounterexample | None = None

    for s in explored:
        abs_pre = b.variables_abs(s)
        for a in alphabet:
            for e, s2 in impl_next(c, s, a):
                if inv_ok and not b.inv(c, s2):
                    inv_ok = False
                    inv_cx = StepCounterexample(s, a, e, s2, "declared invariant not re-established")
                # The matched abstract step must use the identical action
                # value the concrete step consumed; never a canonicalized
                # or re-parsed stand-in.
                query_action = a
                abs_succs = next_relation(ca, abs_pre, query_action)
                assert query_action == a
                wanted = (b.event_abs(e), b.variables_abs(s2))
                if wanted in abs_succs:
                    if r3_ok and safety(ca, wanted[1]) and not impl_safety(c, s2):
                        r3_ok = False
                        r3_cx = StepCounterexample(
                            s, a, e, s2, "abstract safety holds at the matched post-state but concrete safety fails"
                        )
                elif r2_ok:
                    r2_ok = False
                    r2_cx = StepCounterexample(
                        s, a, e, s2, "no abstract step matches the abstracted event and post-state"
                    )
        if not (inv_ok or r2_ok or r3_ok):
            break

    return RefinementVerdict(
        r1=check_refinement_init(c, b).passed,
        r2=r2_ok,
        r3=r3_ok,
        inv_inductive=inv_ok,
        explored_states=len(explored),
        reachable_states=reachable_count,
        depth=depth,
        r2_counterexample=r2_cx,
        r3_counterexample=r3_cx,
        inv_counterexample=inv_cx,
    )


# ---------------------------------------------------------------------------
# Trace-level soundness


@dataclass(frozen=True)
class SoundnessVerdict:
    passed: bool
    stage: int | None = None  # 1 = lift, 2 = abstract safety, 3 = concrete safety
    index: int | None = None
    detail: str = ""


def check_soundness(
    c: ImplConstants,
    b: AbstractionBundle,
    trace: Trace,
    *,
    next_relation=spec_next,
    safety=spec_safety,
) -> SoundnessVerdict:
    """Three-stage trace check.

    Stage 1 lifts the trace: replaying the action column from the abstract
    initial state, every step's abstracted event must be matched by an
    abstract step. Stage 2 checks abstract safety pointwise along the
    lifted run. Stage 3 checks the concrete safety conjuncts on every
    concrete state of the trace.
    """
    ca = b.constants_abs(c)

    abstract_states: list[SpecState] = [spec_init(ca)]
    for i, t in enumerate(trace.steps):
        ev = b.event_abs(t.event)
        matched = [(e, m) for e, m in next_relation(ca, abstract_states[-1], t.action) if e == ev]
        if not matched:
            return SoundnessVerdict(
                False, stage=1, index=i,
                detail=f"step {i}: no abstract step emits {ev!r} for {t.action!r}",
            )
        abstract_states.append(matched[0][1])

    for i, m in enumerate(abstract_states):
        if not safety(ca, m):
            return SoundnessVerdict(
                False, stage=2, index=i, detail=f"abstract safety fails at lifted state {i}"
            )

    for i, s in enumerate(trace.states()):
        if not impl_safety(c, s):
            which = _failed_conjunct(c, s)
            return SoundnessVerdict(
                False, stage=3, index=i, detail=f"concrete safety fails at state {i}: {which}"
            )

    return SoundnessVerdict(True)


def _failed_conjunct(c: ImplConstants, s: ImplState) -> str:
    sc = c.spec
    if not all(path_under_root(sc.workspace_root, p, sc.prefix_mode) for p in s.read_paths):
        return "read path outside the workspace root"
    if not all(t in sc.allowed_tools for t in s.tool_calls):
        return "tool call outside the allowlist"
    if s.step_count > sc.max_steps:
        return "step count above the bound"
    return "unknown"

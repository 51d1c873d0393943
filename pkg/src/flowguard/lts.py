"""Generic labeled-transition-system kit.

A system is a pile of immutable values: an initial state, a finite action
alphabet used for bounded exploration, and a step relation mapping
(state, action) to a finite, non-empty tuple of (event, next_state) pairs.
Determinism is the special case where that tuple has one entry.

Everything here is value-oriented: states, actions, events, and traces are
hashable frozen objects, so traces can be compared, deduplicated, and sent
across threads without ceremony.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Any, Callable, Iterator, Protocol, Sequence

State = Any
ActionValue = Any
EventValue = Any
Successor = tuple[EventValue, State]


class TotalityViolation(Exception):
    """The step relation returned no successors: a modeling bug, not a
    runtime condition."""


@dataclass(frozen=True)
class TransitionSystem:
    initial_state: State
    step_relation: Callable[[State, ActionValue], tuple[Successor, ...]]
    action_alphabet: tuple[ActionValue, ...]


def step(sys: TransitionSystem, s: State, a: ActionValue) -> tuple[Successor, ...]:
    """All (event, next_state) pairs related to (s, a). Never empty."""
    succs = tuple(sys.step_relation(s, a))
    if not succs:
        raise TotalityViolation(f"no successor for state={s!r} action={a!r}")
    return succs


@dataclass(frozen=True)
class TraceStep:
    pre_state: State
    action: ActionValue
    event: EventValue
    post_state: State


@dataclass(frozen=True)
class Trace:
    steps: tuple[TraceStep, ...]

    def __len__(self) -> int:
        return len(self.steps)

    def states(self) -> tuple[State, ...]:
        """Initial state followed by every post-state; empty trace yields ()."""
        if not self.steps:
            return ()
        return (self.steps[0].pre_state,) + tuple(t.post_state for t in self.steps)


def validate_trace(sys: TransitionSystem, trace: Trace) -> None:
    """Raise ValueError unless the trace chains from the initial state and
    every step is a member of the step relation."""
    if not trace.steps:
        return
    if trace.steps[0].pre_state != sys.initial_state:
        raise ValueError("trace does not start at the initial state")
    for i, t in enumerate(trace.steps):
        if i > 0 and trace.steps[i - 1].post_state != t.pre_state:
            raise ValueError(f"broken chaining at step {i}")
        if (t.event, t.post_state) not in step(sys, t.pre_state, t.action):
            raise ValueError(f"step {i} is not in the step relation")


def enumerate_havoc_traces(sys: TransitionSystem, depth: int) -> Iterator[Trace]:
    """Every trace of length exactly ``depth``: any alphabet action at each
    step, any related successor. Lazy; exhaustive; duplicate-free for
    deterministic relations."""
    if depth < 0:
        raise ValueError("depth must be >= 0")

    def go(state: State, prefix: tuple[TraceStep, ...]) -> Iterator[Trace]:
        if len(prefix) == depth:
            yield Trace(prefix)
            return
        for a in sys.action_alphabet:
            for event, nxt in step(sys, state, a):
                yield from go(nxt, prefix + (TraceStep(state, a, event, nxt),))

    yield from go(sys.initial_state, ())


# ---------------------------------------------------------------------------
# Oracles and nondeterminism resolvers


@dataclass(frozen=True)
class HistoryEntry:
    """One record of a run history. The final entry of the history handed to
    an oracle carries the state awaiting a choice, with action and event
    still None, so the history an oracle sees is always nonempty."""

    state: State
    action: ActionValue | None
    event: EventValue | None


class Oracle(Protocol):
    def choose(self, history: Sequence[HistoryEntry]) -> ActionValue: ...


Resolver = Callable[[Sequence[Successor]], Successor]


def first_match(successors: Sequence[Successor]) -> Successor:
    return successors[0]


def seeded_resolver(seed: int) -> Resolver:
    rng = random.Random(seed)

    def pick(successors: Sequence[Successor]) -> Successor:
        return successors[rng.randrange(len(successors))]

    return pick


def run_with_oracle(
    sys: TransitionSystem,
    oracle: Oracle,
    steps: int,
    resolver: Resolver = first_match,
) -> Trace:
    """One trace compatible with the oracle: the oracle picks each action,
    the resolver picks among the related successors."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    state = sys.initial_state
    done: list[HistoryEntry] = []
    out: list[TraceStep] = []
    for _ in range(steps):
        action = oracle.choose(tuple(done) + (HistoryEntry(state, None, None),))
        event, nxt = resolver(step(sys, state, action))
        done.append(HistoryEntry(state, action, event))
        out.append(TraceStep(state, action, event, nxt))
        state = nxt
    return Trace(tuple(out))

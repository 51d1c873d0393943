"""Oracle strategies and the live enforcement loop.

The driver plays the role of an arbitrary action source: it can be
scripted, uniformly random, adversarially biased toward out-of-policy
values, or an exhaustive cursor into the space of fixed-length scripts.
Whatever it chooses, the contained machine emits only policy-compliant
boundary events; the sweep checks that claim over every action sequence
of a given length.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Sequence

from .actions import (
    Action,
    ImplEvent,
    NoAction,
    NoEffect,
    ReadPathAction,
    ToolCallAction,
    format_action,
)
from .impl_model import (
    ImplConstants,
    ImplState,
    event_in_policy,
    impl_init,
    impl_inv,
    impl_next,
    impl_safety,
)
from .lts import HistoryEntry, Trace, TraceStep
from .spec_model import SpecConstants, path_under_root


def action_out_of_policy(c: SpecConstants, a: Action) -> bool:
    """Static policy complement: reads outside the root and tool calls
    outside the allowlist. Step capacity is state-dependent and not
    judged here."""
    match a:
        case ReadPathAction(path):
            return not path_under_root(c.workspace_root, path, c.prefix_mode)
        case ToolCallAction(tool):
            return tool not in c.allowed_tools
        case _:
            return False


# ---------------------------------------------------------------------------
# Strategies (all satisfy the lts.Oracle protocol)


class ScriptedOracle:
    """Plays a fixed script; NoAction once the script is exhausted."""

    def __init__(self, script: Sequence[Action]):
        self.script = tuple(script)

    def choose(self, history: Sequence[HistoryEntry]) -> Action:
        i = len(history) - 1  # completed steps so far
        return self.script[i] if i < len(self.script) else NoAction()


class SeededRandomOracle:
    def __init__(self, seed: int, alphabet: Sequence[Action]):
        if not alphabet:
            raise ValueError("alphabet must be nonempty")
        self.alphabet = tuple(alphabet)
        self._rng = random.Random(seed)

    def choose(self, history: Sequence[HistoryEntry]) -> Action:
        return self.alphabet[self._rng.randrange(len(self.alphabet))]


class AdversarialOracle:
    """Seeded sampler with extra weight on statically out-of-policy values,
    so rejection paths are hit early."""

    def __init__(self, seed: int, alphabet: Sequence[Action], constants: SpecConstants, boost: float = 4.0):
        if not alphabet:
            raise ValueError("alphabet must be nonempty")
        self.alphabet = tuple(alphabet)
        self.weights = tuple(
            boost if action_out_of_policy(constants, a) else 1.0 for a in self.alphabet
        )
        self._rng = random.Random(seed)

    def choose(self, history: Sequence[HistoryEntry]) -> Action:
        return self._rng.choices(self.alphabet, weights=self.weights, k=1)[0]


def decode_script(alphabet: Sequence[Action], cursor: int, length: int) -> tuple[Action, ...]:
    """The cursor-th length-``length`` script over the alphabet, in the same
    lexicographic order itertools.product uses (first step most
    significant)."""
    n = len(alphabet)
    total = n**length
    if not 0 <= cursor < total:
        raise ValueError(f"cursor {cursor} out of range for {n}^{length} scripts")
    digits = []
    for _ in range(length):
        cursor, d = divmod(cursor, n)
        digits.append(alphabet[d])
    return tuple(reversed(digits))


class ExhaustiveCursorOracle(ScriptedOracle):
    """Replays one point of the exhaustive sweep, addressed by index."""

    def __init__(self, alphabet: Sequence[Action], cursor: int, length: int):
        super().__init__(decode_script(alphabet, cursor, length))


# ---------------------------------------------------------------------------
# Driving and sweeping


@dataclass(frozen=True)
class RunRecord:
    trace: Trace
    emitted_events: tuple[ImplEvent, ...]
    rejected_count: int
    final_state: ImplState


def drive(c: ImplConstants, strategy, steps: int) -> RunRecord:
    """Run the enforcement loop for ``steps`` oracle queries."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    state = impl_init(c)
    done: list[HistoryEntry] = []
    recorded: list[TraceStep] = []
    events: list[ImplEvent] = []
    rejected = 0
    for _ in range(steps):
        action = strategy.choose(tuple(done) + (HistoryEntry(state, None, None),))
        ((event, nxt),) = impl_next(c, state, action)
        if isinstance(event.effect, NoEffect) and not isinstance(action, NoAction):
            rejected += 1
        done.append(HistoryEntry(state, action, event))
        recorded.append(TraceStep(state, action, event, nxt))
        events.append(event)
        state = nxt
    return RunRecord(Trace(tuple(recorded)), tuple(events), rejected, state)


@dataclass(frozen=True)
class SweepViolation:
    script: tuple[str, ...]  # action literals, verbatim
    step_index: int
    detail: str


@dataclass(frozen=True)
class SweepVerdict:
    passed: bool
    sequences: int
    violation: SweepViolation | None
    visited_states: frozenset[ImplState]


def sweep(
    c: ImplConstants,
    alphabet: tuple[Action, ...],
    depth: int,
    *,
    next_fn=impl_next,
) -> SweepVerdict:
    """Drive every action sequence of length ``depth``; pass iff every
    emitted event is policy-compliant and every visited state satisfies
    both the safety predicate and the inductive invariant.

    ``next_fn`` exists so tests can inject a deliberately broken step
    function and watch the sweep catch it; production callers leave it
    alone.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    init = impl_init(c)
    visited: set[ImplState] = {init}
    sequences = 0

    def complain(script: Sequence[Action], i: int, detail: str) -> SweepVerdict:
        literals = tuple(format_action(a) for a in script)
        return SweepVerdict(False, sequences, SweepViolation(literals, i, detail), frozenset(visited))

    for script in itertools.product(alphabet, repeat=depth):
        sequences += 1
        state = init
        for i, action in enumerate(script):
            ((event, nxt),) = next_fn(c, state, action)
            if not event_in_policy(c, state, event):
                return complain(script, i, f"out-of-policy event {event.effect!r}")
            if not impl_safety(c, nxt):
                return complain(script, i, "safety predicate violated")
            if not impl_inv(c, nxt):
                return complain(script, i, "inductive invariant violated")
            visited.add(nxt)
            state = nxt
    return SweepVerdict(True, sequences, None, frozenset(visited))

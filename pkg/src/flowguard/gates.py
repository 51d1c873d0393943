"""Specification-validation gates and the template-fitness check.

A bundle (constants, abstract transition relation, safety predicate,
abstraction functions, invariant) is only trustworthy if it demands real
structure and can tell a faithful machine from a corrupted one. Three
gates and a fitness audit enforce that:

  G1 resolution      -- the bundle loads from its serialized form and all
                        components validate, within a wall-clock budget.
  G2 vacuity         -- a permissive stub of the bundle must FAIL
                        verification. The stub keeps every obligation but
                        abandons the invariant strengthening: obligations
                        are checked from merely well-formed states while
                        the declared invariant must still be
                        re-established. If that stub verifies, the
                        declared invariant never demanded anything.
  G3 discrimination  -- each seeded modeling error (a small concrete edit
                        to the bundle) must FAIL verification. A surviving
                        mutant means the checks cannot distinguish the
                        faithful bundle from a corrupted one.
  fitness            -- every safety conjunct that quantifies over a state
                        sequence must have a reachable state in which that
                        sequence is nonempty. A conjunct with no witness
                        is vacuously true along every reachable state:
                        the machine never writes the field it polices.

"Verification" for gate purposes is the full lemma set: initial safety,
inductive safety preservation, initial refinement matching, and the step
simulation with its invariant obligation. Enumeration checks truth, not
proof effort, so bundle-invariant edits are applied to the assumption
side only (the obligations keep the declared invariant); a symmetric edit
to a non-load-bearing clause would otherwise be undetectable in
principle.

Mutations touch only the bundle. The constants, the concrete machine, and
the checker configuration are byte-identical before and after; the
fingerprint helper makes that checkable.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, replace
from typing import Callable

from .actions import (
    Action,
    NoEffect,
    ReadEvent,
    ReadPathAction,
    StepAction,
    StepEvent,
    ToolCallAction,
    ToolEvent,
    format_action,
    format_boundary_event,
)
from .flowfile import FlowDefinition, FlowFileError, flow_to_document, parse_flow, serialize_flow
from .impl_model import (
    NO_NODE,
    FlowGraphError,
    ImplConstants,
    ImplState,
    impl_wf,
)
from .refinement import (
    AbstractionBundle,
    InvPredicate,
    default_bundle,
    check_refinement_init,
    check_refinement_next,
    reachable_layers,
)
from .spec_model import (
    PreservationVerdict,
    SpecConstants,
    SpecState,
    check_safety_preserved,
    path_under_root,
    spec_init,
    spec_next,
    spec_safety,
)

DEFAULT_GATE_BUDGET_SECONDS = 30.0


@dataclass(frozen=True)
class SpecBundle:
    """Everything the gates treat as untrusted and mutable: the abstract
    relation, the safety predicate, and the abstraction bundle. Constants
    ride along for convenience but are never mutated."""

    constants: SpecConstants
    next_relation: Callable[[SpecConstants, SpecState, Action], tuple]
    safety: Callable[[SpecConstants, SpecState], bool]
    bundle_for_impl: AbstractionBundle
    provenance: str


def default_spec_bundle(c: ImplConstants, provenance: str) -> SpecBundle:
    return SpecBundle(
        constants=c.spec,
        next_relation=spec_next,
        safety=spec_safety,
        bundle_for_impl=default_bundle(),
        provenance=provenance,
    )


@dataclass(frozen=True)
class CheckConfig:
    """A bundle plus the invariant assumed when selecting obligation
    states. None means: assume the bundle's own declared invariant."""

    bundle: SpecBundle
    assume_inv: InvPredicate | None = None


@dataclass(frozen=True)
class Mutation:
    mutation_id: str
    kind: str  # "seeded-error" | "permissive-stub"
    description: str
    apply: Callable[[SpecBundle], CheckConfig]


# ---------------------------------------------------------------------------
# The seeded-error library. Each mutant is a deliberate, small, plausible
# modeling error written out in full so the diff against the real relation
# is explicit.


def _seeded_next_drop_allowlist(c: SpecConstants, s: SpecState, a: Action) -> tuple:
    """The abstract relation with the tool-allowlist membership check
    removed: any tool call is admitted."""
    stutter = (NoEffect(), s)
    match a:
        case ReadPathAction(path):
            if not path_under_root(c.workspace_root, path, c.prefix_mode):
                return (stutter,)
            event, nxt = ReadEvent(path), replace(s, read_paths=s.read_paths + (path,))
        case ToolCallAction(tool):
            # the membership guard belonged here
            event, nxt = ToolEvent(tool), replace(s, tool_calls=s.tool_calls + (tool,))
        case StepAction():
            event, nxt = StepEvent(), s
        case _:
            return (stutter,)
    if c.count_all_actions or isinstance(a, StepAction):
        if s.step_count >= c.max_steps:
            return (stutter,)
        count = s.step_count + 1
        nxt = replace(nxt, step_count=count, halted=count >= c.max_steps)
    return ((event, nxt), stutter)


def _seeded_next_bound_off_by_one(c: SpecConstants, s: SpecState, a: Action) -> tuple:
    """The abstract relation with the capacity comparison off by one:
    the step that lands beyond the bound is admitted."""
    stutter = (NoEffect(), s)
    match a:
        case ReadPathAction(path):
            if not path_under_root(c.workspace_root, path, c.prefix_mode):
                return (stutter,)
            event, nxt = ReadEvent(path), replace(s, read_paths=s.read_paths + (path,))
        case ToolCallAction(tool):
            if tool not in c.allowed_tools:
                return (stutter,)
            event, nxt = ToolEvent(tool), replace(s, tool_calls=s.tool_calls + (tool,))
        case StepAction():
            event, nxt = StepEvent(), s
        case _:
            return (stutter,)
    if c.count_all_actions or isinstance(a, StepAction):
        if s.step_count > c.max_steps:  # ">=" became ">"
            return (stutter,)
        count = s.step_count + 1
        nxt = replace(nxt, step_count=count, halted=count >= c.max_steps)
    return ((event, nxt), stutter)


def _collapse_events_to_noeffect(_e) -> NoEffect:
    return NoEffect()


def _inv_without_history_length(c: ImplConstants, s: ImplState) -> bool:
    """The declared invariant minus the history-length alignment clause."""
    if not impl_wf(c, s):
        return False
    if s.step_count > c.spec.max_steps:
        return False
    if s.halted and s.step_count < c.spec.max_steps:
        return False
    if s.last_node is not NO_NODE:
        if not s.history or s.history[-1] != (s.last_node, s.last_action):
            return False
    return True


def permissive_stub() -> Mutation:
    return Mutation(
        mutation_id="permissive-stub",
        kind="permissive-stub",
        description="invariant gutted to well-formedness only; obligations kept",
        apply=lambda b: CheckConfig(b, assume_inv=impl_wf),
    )


def identity_mutation() -> Mutation:
    return Mutation(
        mutation_id="identity",
        kind="seeded-error",
        description="changes nothing; must survive",
        apply=lambda b: CheckConfig(b),
    )


SEEDED_ERRORS: dict[str, Mutation] = {
    m.mutation_id: m
    for m in (
        Mutation(
            "drop-allowlist-guard",
            "seeded-error",
            "abstract relation admits any tool call",
            lambda b: CheckConfig(replace(b, next_relation=_seeded_next_drop_allowlist)),
        ),
        Mutation(
            "step-bound-off-by-one",
            "seeded-error",
            "abstract relation admits one step beyond the bound",
            lambda b: CheckConfig(replace(b, next_relation=_seeded_next_bound_off_by_one)),
        ),
        Mutation(
            "event-to-noeffect",
            "seeded-error",
            "event abstraction collapses every emitted event to NoEffect",
            lambda b: CheckConfig(
                replace(
                    b,
                    bundle_for_impl=replace(b.bundle_for_impl, event_abs=_collapse_events_to_noeffect),
                )
            ),
        ),
        Mutation(
            "drop-history-clause",
            "seeded-error",
            "assumed invariant loses the history-length alignment clause",
            lambda b: CheckConfig(b, assume_inv=_inv_without_history_length),
        ),
    )
}


def bundle_fingerprint(c: ImplConstants, alphabet: tuple[Action, ...]) -> str:
    """Hash of everything mutations must not touch: constants, graph,
    alphabet, and the checker configuration."""
    defn = FlowDefinition(provenance="", constants=c.spec, graph=c.graph, alphabet=alphabet)
    doc = flow_to_document(defn)
    doc["checker"] = {"concrete_machine": "impl_next", "abstract_init": "spec_init"}
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


# ---------------------------------------------------------------------------
# The verification stand-in the gates run mutants through


@dataclass(frozen=True)
class Obligation:
    name: str
    passed: bool
    detail: str = ""
    explored_states: int | None = None


@dataclass(frozen=True)
class VerificationOutcome:
    obligations: tuple[Obligation, ...]

    @property
    def passed(self) -> bool:
        return all(o.passed for o in self.obligations)

    def first_failure(self) -> Obligation | None:
        return next((o for o in self.obligations if not o.passed), None)


def _describe_preservation(v: PreservationVerdict) -> str:
    if v.passed or v.counterexample is None:
        return ""
    cx = v.counterexample
    return (
        f"unsafe successor via {format_action(cx.action)} "
        f"emitting {format_boundary_event(cx.event)}"
    )


def verify_bundle(
    c: ImplConstants,
    config: CheckConfig,
    alphabet: tuple[Action, ...],
    depth: int,
) -> VerificationOutcome:
    """Run the full lemma set on a (possibly mutated) bundle."""
    b = config.bundle
    obligations: list[Obligation] = []

    init_safe = b.safety(b.constants, spec_init(b.constants))
    obligations.append(Obligation("init_safety", init_safe))

    preserved = check_safety_preserved(
        b.constants, alphabet, depth, next_relation=b.next_relation, safety=b.safety
    )
    obligations.append(
        Obligation(
            "safety_preserved",
            preserved.passed,
            _describe_preservation(preserved),
            explored_states=preserved.explored_states,
        )
    )

    r_init = check_refinement_init(c, b.bundle_for_impl)
    obligations.append(Obligation("refinement_init", r_init.passed, r_init.detail))

    r_next = check_refinement_next(
        c,
        b.bundle_for_impl,
        alphabet,
        depth,
        next_relation=b.next_relation,
        safety=b.safety,
        assume_inv=config.assume_inv,
    )
    for name, ok, cx in (
        ("inv_inductive", r_next.inv_inductive, r_next.inv_counterexample),
        ("r2_step_simulation", r_next.r2, r_next.r2_counterexample),
        ("r3_safety_transport", r_next.r3, r_next.r3_counterexample),
    ):
        detail = ""
        if cx is not None:
            detail = f"{cx.detail}; action {format_action(cx.action)}"
        obligations.append(Obligation(name, ok, detail, explored_states=r_next.explored_states))

    return VerificationOutcome(tuple(obligations))


# ---------------------------------------------------------------------------
# Gates


@dataclass(frozen=True)
class GateVerdict:
    gate: str
    status: str  # "pass" | "fail" | "skipped"
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "pass"


@dataclass(frozen=True)
class ResolutionOutcome:
    verdict: GateVerdict
    flow: FlowDefinition | None = None
    bundle: SpecBundle | None = None


def gate_resolution(flow_text: str, timeout_seconds: float = DEFAULT_GATE_BUDGET_SECONDS) -> ResolutionOutcome:
    """G1: the bundle loads from its serialized form, every component
    validates, and loading fits the budget."""
    started = time.monotonic()
    try:
        flow = parse_flow(flow_text)
        if parse_flow(serialize_flow(flow)) != flow:
            raise FlowFileError("serialization does not round-trip")
        bundle = default_spec_bundle(flow.impl_constants, flow.provenance)
    except (FlowFileError, FlowGraphError, ValueError) as e:
        return ResolutionOutcome(GateVerdict("g1", "fail", str(e)))
    elapsed = time.monotonic() - started
    if elapsed > timeout_seconds:
        return ResolutionOutcome(
            GateVerdict("g1", "fail", f"load exceeded the {timeout_seconds:.0f}s budget")
        )
    return ResolutionOutcome(GateVerdict("g1", "pass"), flow, bundle)


def gate_vacuity(
    c: ImplConstants,
    bundle: SpecBundle,
    alphabet: tuple[Action, ...],
    depth: int,
) -> GateVerdict:
    """G2: the permissive stub must fail verification."""
    if depth < 1:
        return GateVerdict(
            "g2",
            "fail",
            "configuration floor: depth >= 1 required (no step obligations exist at depth 0, "
            "so the stub trivially verifies)",
        )
    outcome = verify_bundle(c, permissive_stub().apply(bundle), alphabet, depth)
    if outcome.passed:
        discharged = ", ".join(o.name for o in outcome.obligations)
        return GateVerdict("g2", "fail", f"vacuity witness: the stub discharged {discharged}")
    failed = outcome.first_failure()
    assert failed is not None
    return GateVerdict("g2", "pass", f"permissive stub failed at {failed.name}")


@dataclass(frozen=True)
class MutantResult:
    mutation_id: str
    killed: bool
    killed_by: str = ""
    detail: str = ""


def gate_discrimination(
    c: ImplConstants,
    bundle: SpecBundle,
    mutation: Mutation,
    alphabet: tuple[Action, ...],
    depth: int,
) -> tuple[GateVerdict, MutantResult]:
    """G3 for one mutation: the seeded error must fail verification."""
    if mutation.kind != "seeded-error":
        raise ValueError(f"G3 takes seeded errors, got kind {mutation.kind!r}")
    outcome = verify_bundle(c, mutation.apply(bundle), alphabet, depth)
    if outcome.passed:
        result = MutantResult(mutation.mutation_id, False, detail="alive mutation: all obligations discharged")
        return GateVerdict("g3", "fail", f"surviving mutant {mutation.mutation_id}"), result
    failed = outcome.first_failure()
    assert failed is not None
    result = MutantResult(mutation.mutation_id, True, killed_by=failed.name, detail=failed.detail)
    return GateVerdict("g3", "pass", f"mutant {mutation.mutation_id} killed by {failed.name}"), result


# ---------------------------------------------------------------------------
# Template fitness


@dataclass(frozen=True)
class ConjunctFitness:
    name: str
    status: str  # "witnessed" | "VACUOUS"
    witness_depth: int | None = None
    witness_value: tuple[str, ...] = ()


@dataclass(frozen=True)
class FitnessReport:
    conjuncts: tuple[ConjunctFitness, ...]

    @property
    def passed(self) -> bool:
        return all(cf.status == "witnessed" for cf in self.conjuncts)

    def vacuous_conjuncts(self) -> tuple[str, ...]:
        return tuple(cf.name for cf in self.conjuncts if cf.status == "VACUOUS")


def check_template_fitness(
    c: ImplConstants,
    bundle: SpecBundle,
    alphabet: tuple[Action, ...],
    depth: int,
) -> FitnessReport:
    """For each sequence-quantified safety conjunct, find a reachable state
    (within depth, through the abstraction) where the quantified sequence
    is nonempty. No witness means the conjunct is vacuously true along
    every reachable state and the field it polices is never written.

    The scalar step-count conjunct is exempt: it is exercised by any
    effected step, so it cannot silently abstain at depth >= 1.
    """
    abs_of = bundle.bundle_for_impl.variables_abs
    layers = reachable_layers(c, alphabet, depth)

    found: dict[str, ConjunctFitness] = {}
    fields = (("ReadPathsRooted", "read_paths"), ("ToolAllowlisted", "tool_calls"))
    for d, layer in enumerate(layers):
        for s in layer:
            projected = abs_of(s)
            for name, field_name in fields:
                if name in found:
                    continue
                value = getattr(projected, field_name)
                if value:
                    found[name] = ConjunctFitness(name, "witnessed", d, tuple(value))
        if len(found) == len(fields):
            break

    conjuncts = tuple(
        found.get(name, ConjunctFitness(name, "VACUOUS")) for name, _ in fields
    )
    return FitnessReport(conjuncts)


# ---------------------------------------------------------------------------
# The composed gate pipeline


@dataclass(frozen=True)
class GateReport:
    g1: GateVerdict
    g2: GateVerdict
    g3: GateVerdict
    fitness_verdict: GateVerdict
    mutants: tuple[MutantResult, ...] = ()
    fitness: FitnessReport | None = None

    @property
    def passed(self) -> bool:
        return all(v.passed for v in (self.g1, self.g2, self.g3, self.fitness_verdict))

    def failing_gates(self) -> tuple[str, ...]:
        return tuple(
            v.gate for v in (self.g1, self.g2, self.g3, self.fitness_verdict) if v.status == "fail"
        )


def run_gates(
    flow_text: str,
    depth: int,
    mutation_ids: tuple[str, ...] | None = None,
    timeout_seconds: float = DEFAULT_GATE_BUDGET_SECONDS,
) -> GateReport:
    """G1 -> G2 -> G3 -> fitness, short-circuiting after a G1 failure."""
    resolution = gate_resolution(flow_text, timeout_seconds)
    if not resolution.verdict.passed:
        skipped = GateVerdict("g2", "skipped", "g1 failed")
        return GateReport(
            g1=resolution.verdict,
            g2=skipped,
            g3=GateVerdict("g3", "skipped", "g1 failed"),
            fitness_verdict=GateVerdict("fitness", "skipped", "g1 failed"),
        )
    assert resolution.flow is not None and resolution.bundle is not None
    flow, bundle = resolution.flow, resolution.bundle
    c = flow.impl_constants

    g2 = gate_vacuity(c, bundle, flow.alphabet, depth)

    ids = mutation_ids if mutation_ids is not None else tuple(SEEDED_ERRORS)
    mutants: list[MutantResult] = []
    for mid in ids:
        if mid == "identity":
            mutation = identity_mutation()
        elif mid in SEEDED_ERRORS:
            mutation = SEEDED_ERRORS[mid]
        else:
            raise ValueError(f"unknown mutation id: {mid!r}")
        _verdict, result = gate_discrimination(c, bundle, mutation, flow.alphabet, depth)
        mutants.append(result)
    all_killed = all(m.killed for m in mutants)
    survivors = ", ".join(m.mutation_id for m in mutants if not m.killed)
    g3 = GateVerdict(
        "g3",
        "pass" if all_killed else "fail",
        f"{len(mutants)} mutants killed" if all_killed else f"surviving mutants: {survivors}",
    )

    fitness = check_template_fitness(c, bundle, flow.alphabet, depth)
    fitness_verdict = GateVerdict(
        "fitness",
        "pass" if fitness.passed else "fail",
        "all sequence conjuncts witnessed"
        if fitness.passed
        else "VACUOUS: " + ", ".join(fitness.vacuous_conjuncts()),
    )

    return GateReport(
        g1=resolution.verdict,
        g2=g2,
        g3=g3,
        fitness_verdict=fitness_verdict,
        mutants=tuple(mutants),
        fitness=fitness,
    )

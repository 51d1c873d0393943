"""Command-line entry point.

Subcommands: run, check, gates, sweep, replay. Exit codes follow one
contract everywhere: 0 all properties hold, 1 a property failed, 2 the
invocation or an input file was unusable.

Reports are single JSON documents with a schema_version field, written to
--out or stdout. They contain no timestamps or machine identifiers:
identical inputs produce byte-identical reports.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .actions import parse_action
from .flowfile import FlowDefinition, FlowFileError, flow_digest, load_flow
from .gates import (
    SEEDED_ERRORS,
    GateReport,
    identity_mutation,
    run_gates,
    verify_bundle,
    CheckConfig,
    default_spec_bundle,
)
from .havoc import AdversarialOracle, ScriptedOracle, SeededRandomOracle, drive, sweep
from .impl_model import FlowGraphError, event_in_policy
from .tracelog import TraceLogError, render_trace_log, replay_trace_log

REPORT_SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_PROPERTY_FAILURE = 1
EXIT_USAGE = 2


def _load(args) -> FlowDefinition:
    defn = load_flow(args.flow)
    if getattr(args, "prefix_mode", None):
        constants = dataclasses.replace(defn.constants, prefix_mode=args.prefix_mode)
        defn = dataclasses.replace(defn, constants=constants)
    return defn


def _emit(args, document: dict) -> None:
    text = json.dumps(document, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _build_strategy(args, defn: FlowDefinition):
    spec = args.strategy
    if spec == "random":
        return SeededRandomOracle(args.seed, defn.alphabet), "random"
    if spec == "adversarial":
        return AdversarialOracle(args.seed, defn.alphabet, defn.constants), "adversarial"
    if spec.startswith("scripted:"):
        literals = [piece for piece in spec[len("scripted:"):].split(";") if piece]
        script = [parse_action(lit) for lit in literals]
        return ScriptedOracle(script), "scripted"
    raise FlowFileError(f"unknown strategy: {spec!r} (use random, adversarial, or scripted:<lit>;<lit>)")


# ---------------------------------------------------------------------------
# Subcommands


def cmd_run(args) -> int:
    defn = _load(args)
    strategy, label = _build_strategy(args, defn)
    record = drive(defn.impl_constants, strategy, args.steps)
    seed = args.seed if label in ("random", "adversarial") else None
    text = render_trace_log(defn, record, strategy=args.strategy, seed=seed)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)

    c = defn.impl_constants
    violations = [
        i
        for i, step in enumerate(record.trace.steps)
        if not event_in_policy(c, step.pre_state, step.event)
    ]
    if violations:
        print(f"policy violation at step {violations[0]}", file=sys.stderr)
        return EXIT_PROPERTY_FAILURE
    print(
        f"run: {len(record.trace.steps)} steps, {record.rejected_count} rejected, 0 violations",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_check(args) -> int:
    defn = _load(args)
    c = defn.impl_constants
    bundle = default_spec_bundle(c, defn.provenance)
    if args.mutation:
        mutation = identity_mutation() if args.mutation == "identity" else SEEDED_ERRORS.get(args.mutation)
        if mutation is None:
            raise FlowFileError(f"unknown mutation id: {args.mutation!r}")
        config = mutation.apply(bundle)
    else:
        config = CheckConfig(bundle)

    outcome = verify_bundle(c, config, defn.alphabet, args.depth)
    sweep_verdict = sweep(c, defn.alphabet, args.depth)

    obligations = [
        {
            "name": o.name,
            "status": "pass" if o.passed else "fail",
            **({"detail": o.detail} if o.detail else {}),
            **({"explored_states": o.explored_states} if o.explored_states is not None else {}),
        }
        for o in outcome.obligations
    ]
    obligations.append(
        {
            "name": "havoc_sweep",
            "status": "pass" if sweep_verdict.passed else "fail",
            "sequences": sweep_verdict.sequences,
            **(
                {"violating_script": list(sweep_verdict.violation.script), "detail": sweep_verdict.violation.detail}
                if sweep_verdict.violation
                else {}
            ),
        }
    )
    warnings = []
    if args.depth < 1:
        warnings.append("depth 0: step obligations were not exercised")

    ok = outcome.passed and sweep_verdict.passed
    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": "check-report",
        "flow_digest": flow_digest(defn),
        "provenance": defn.provenance,
        "depth": args.depth,
        "mutation": args.mutation or None,
        "obligations": obligations,
        "warnings": warnings,
        "overall": "pass" if ok else "fail",
    }
    _emit(args, report)
    if not ok:
        first = next(o for o in obligations if o["status"] == "fail")
        print(f"check failed: {first['name']}: {first.get('detail', '')}", file=sys.stderr)
        return EXIT_PROPERTY_FAILURE
    return EXIT_OK


def _gate_report_document(defn: FlowDefinition, depth: int, report: GateReport) -> dict:
    doc = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": "gate-report",
        "flow_digest": flow_digest(defn),
        "provenance": defn.provenance,
        "depth": depth,
        "gates": {
            "g1": {"status": report.g1.status, "detail": report.g1.detail},
            "g2": {"status": report.g2.status, "detail": report.g2.detail},
            "g3": {
                "status": report.g3.status,
                "detail": report.g3.detail,
                "mutants": [
                    {
                        "id": m.mutation_id,
                        "killed": m.killed,
                        **({"killed_by": m.killed_by} if m.killed_by else {}),
                    }
                    for m in report.mutants
                ],
            },
            "fitness": {
                "status": report.fitness_verdict.status,
                "detail": report.fitness_verdict.detail,
                "conjuncts": [
                    {
                        "name": cf.name,
                        "status": cf.status,
                        **(
                            {"witness_depth": cf.witness_depth, "witness": list(cf.witness_value)}
                            if cf.status == "witnessed"
                            else {}
                        ),
                    }
                    for cf in (report.fitness.conjuncts if report.fitness else ())
                ],
            },
        },
        "overall": "pass" if report.passed else "fail",
    }
    return doc


def cmd_gates(args) -> int:
    flow_path = Path(args.flow)
    if not flow_path.exists():
        raise FlowFileError(f"no such flow file: {args.flow}")
    text = flow_path.read_text()
    mutation_ids = tuple(args.mutation.split(",")) if args.mutation else None
    report = run_gates(text, args.depth, mutation_ids)

    # For the report document we still need a parsed flow; on a G1 failure
    # there is none, so emit a reduced document.
    if report.g1.passed:
        defn = _load(args)
        _emit(args, _gate_report_document(defn, args.depth, report))
    else:
        _emit(
            args,
            {
                "schema_version": REPORT_SCHEMA_VERSION,
                "kind": "gate-report",
                "depth": args.depth,
                "gates": {"g1": {"status": "fail", "detail": report.g1.detail}},
                "overall": "fail",
            },
        )
    if not report.passed:
        print("failing gates: " + ", ".join(report.failing_gates()), file=sys.stderr)
        return EXIT_PROPERTY_FAILURE
    return EXIT_OK


def cmd_sweep(args) -> int:
    defn = _load(args)
    verdict = sweep(defn.impl_constants, defn.alphabet, args.depth)
    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": "sweep-report",
        "flow_digest": flow_digest(defn),
        "provenance": defn.provenance,
        "depth": args.depth,
        "sequences": verdict.sequences,
        "visited_states": len(verdict.visited_states),
        "overall": "pass" if verdict.passed else "fail",
        **(
            {"violating_script": list(verdict.violation.script), "detail": verdict.violation.detail}
            if verdict.violation
            else {}
        ),
    }
    _emit(args, report)
    return EXIT_OK if verdict.passed else EXIT_PROPERTY_FAILURE


def cmd_replay(args) -> int:
    defn = _load(args)
    try:
        text = Path(args.log).read_text()
        verdict = replay_trace_log(defn, text)
    except (OSError, TraceLogError) as e:
        print(f"cannot replay: {e}", file=sys.stderr)
        return EXIT_USAGE
    if not verdict.passed:
        print(f"replay mismatch: {verdict.detail}", file=sys.stderr)
        return EXIT_PROPERTY_FAILURE
    print(f"replay: {verdict.steps} steps reproduced exactly", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowguard",
        description="Contained flow-graph execution and its verification toolkit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, *, depth: bool = False) -> None:
        p.add_argument("--flow", required=True, help="flow-definition file (JSON)")
        p.add_argument("--out", default=None, help="write the report/log here instead of stdout")
        p.add_argument(
            "--prefix-mode",
            choices=["guarded", "bare"],
            default=None,
            help="override the workspace-prefix matching mode from the flow file",
        )
        if depth:
            p.add_argument("--depth", type=int, default=6, help="exploration depth (default 6)")

    p_run = sub.add_parser("run", help="drive the contained machine and write a trace log")
    common(p_run)
    p_run.add_argument("--steps", type=int, default=8, help="number of oracle queries (default 8)")
    p_run.add_argument("--seed", type=int, default=0, help="seed for randomized strategies")
    p_run.add_argument(
        "--strategy",
        default="random",
        help="random | adversarial | scripted:<action>;<action>;...",
    )
    p_run.set_defaults(fn=cmd_run)

    p_check = sub.add_parser("check", help="run the refinement and safety obligations plus a havoc sweep")
    common(p_check, depth=True)
    p_check.add_argument(
        "--mutation",
        default=None,
        help="inject a seeded error by id before checking (diagnostics aid)",
    )
    p_check.set_defaults(fn=cmd_check)

    p_gates = sub.add_parser("gates", help="run the validation gates and the template-fitness audit")
    common(p_gates, depth=True)
    p_gates.add_argument(
        "--mutation",
        default=None,
        help="comma-separated mutation ids for the discrimination gate (default: all shipped)",
    )
    p_gates.set_defaults(fn=cmd_gates)

    p_sweep = sub.add_parser("sweep", help="exhaustively drive every action sequence of the given length")
    common(p_sweep, depth=True)
    p_sweep.set_defaults(fn=cmd_sweep)

    p_replay = sub.add_parser("replay", help="re-run a trace log and verify the event column byte-exactly")
    common(p_replay)
    p_replay.add_argument("log", help="trace-log file produced by `run`")
    p_replay.set_defaults(fn=cmd_replay)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (FlowFileError, FlowGraphError, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

"""Exhaustive havoc sweeping.

Instead of sampling action sequences, enumerate all of them. With the
six-action alphabet and depth 4 that is 6^4 = 1296 sequences; the sweep
drives each one and checks every emitted event against the policy and
every visited state against the safety predicate and the inductive
invariant. Then we hand the sweep a sabotaged step function (allowlist
check skipped) and watch it produce a concrete violating script.
"""

import dataclasses
import time

from flowguard import ToolCallAction, read_agent, sweep
from flowguard.impl_model import impl_next

fixture = read_agent()

started = time.monotonic()
verdict = sweep(fixture.constants, fixture.alphabet, 4)
elapsed = time.monotonic() - started
print(f"swept {verdict.sequences} sequences in {elapsed:.2f}s: "
      f"{'all clean' if verdict.passed else 'VIOLATION'}")
print(f"distinct states visited: {len(verdict.visited_states)}")
print()


def sabotaged_next(c, s, a):
    """impl_next with the tool allowlist effectively disabled."""
    if isinstance(a, ToolCallAction) and not s.halted and s.step_count < c.spec.max_steps:
        widened = dataclasses.replace(
            c, spec=dataclasses.replace(c.spec, allowed_tools=c.spec.allowed_tools | {a.tool})
        )
        return impl_next(widened, s, a)
    return impl_next(c, s, a)


broken = sweep(fixture.constants, fixture.alphabet, 3, next_fn=sabotaged_next)
print(f"sweep of the sabotaged machine: {'clean (!!)' if broken.passed else 'violation found'}")
assert broken.violation is not None
print(f"  violating script: {list(broken.violation.script)}")
print(f"  at step {broken.violation.step_index}: {broken.violation.detail}")

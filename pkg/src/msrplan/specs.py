"""Goal/critical configuration specifications, traces, and compliance.

A specification is a set of pairs (pattern multiset, constraint set).  A
configuration satisfies the specification when some pair has a grounding
substitution embedding its pattern into the configuration with the
constraints satisfied.  Recognition is a brute-force enumeration over at most
m^eta substitutions, which is why the checker tracks the eta measure.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator, Optional, Union

from .kernel import Configuration, Role, Signature
from .rules import (
    Binding,
    FactPattern,
    RuleInstance,
    TimeConstraint,
    _match_patterns,
    _time_view,
    apply_instance,
    is_applicable,
    tick,
)


class SpecError(ValueError):
    pass


class SpecKind(enum.Enum):
    GOAL = "goal"
    CRITICAL = "critical"


@dataclass(frozen=True)
class SpecPair:
    """One (pattern, constraints) alternative of a specification."""

    pattern: tuple[FactPattern, ...]
    constraints: tuple[TimeConstraint, ...] = ()

    def __post_init__(self) -> None:
        tvars = {p.tvar for p in self.pattern}
        for c in self.constraints:
            for v in c.variables():
                if v not in tvars:
                    raise SpecError(
                        f"constraint variable {v} does not occur in the pair's pattern"
                    )

    def variables(self) -> set[str]:
        out = {p.tvar for p in self.pattern}
        for p in self.pattern:
            out |= p.atom.variables()
        return out

    def __str__(self) -> str:
        pats = ", ".join(str(p) for p in self.pattern)
        if self.constraints:
            return pats + " | " + ", ".join(str(c) for c in self.constraints)
        return pats


@dataclass(frozen=True)
class ConfigSpec:
    kind: SpecKind
    pairs: tuple[SpecPair, ...] = ()

    def check_roles(self, sig: Signature) -> list[str]:
        """Each pair must mention at least one predicate of the matching role."""
        wanted = Role.GOAL if self.kind is SpecKind.GOAL else Role.CRITICAL
        problems = []
        for i, pair in enumerate(self.pairs):
            roles = {sig.role(p.atom.pred) for p in pair.pattern}
            if wanted not in roles:
                problems.append(
                    f"{self.kind.value} pair {i} contains no {wanted.value} predicate"
                )
        return problems


def eta_measure(spec: ConfigSpec) -> int:
    """Max over pairs of the total (first-order plus time) variable count.

    A scenario is eta-simple iff eta_measure of its critical specification is
    strictly below eta.
    """
    if not spec.pairs:
        return 0
    return max(len(pair.variables()) for pair in spec.pairs)


def match_pair(pair: SpecPair, config: Configuration) -> Optional[Binding]:
    """First grounding substitution embedding the pair into the configuration.

    Enumeration follows the canonical order of the configuration, so the
    witness substitution is deterministic.  Distinct pattern entries may map
    onto the same fact: the match requires only that every substituted
    pattern occurs in the configuration.
    """
    by_pred = config.by_pred()
    found: list[Binding] = []
    _match_patterns(list(pair.pattern), by_pred, None, {}, pair.constraints, found)
    for sigma in found:
        if all(c.satisfied(_time_view(sigma)) for c in pair.constraints):
            return sigma
    return None


def match_spec(
    spec: ConfigSpec, config: Configuration
) -> Optional[tuple[int, Binding]]:
    """First (pair index, substitution) witnessing the specification, if any."""
    for i, pair in enumerate(spec.pairs):
        sigma = match_pair(pair, config)
        if sigma is not None:
            return (i, sigma)
    return None


TICK_STEP = "Tick"


@dataclass(frozen=True)
class TraceStep:
    """One step annotation plus the configuration it produced."""

    instance: Union[RuleInstance, str]  # a RuleInstance or the Tick marker
    result: Configuration

    @property
    def is_tick(self) -> bool:
        return isinstance(self.instance, str)

    @property
    def label(self) -> str:
        if self.is_tick:
            return TICK_STEP
        return self.instance.rule.name


@dataclass(frozen=True)
class Trace:
    """An annotated sequence of rule applications from an initial configuration."""

    initial: Configuration
    steps: tuple[TraceStep, ...] = ()

    def configurations(self) -> Iterator[Configuration]:
        yield self.initial
        for step in self.steps:
            yield step.result

    def config_at(self, index: int) -> Configuration:
        if index == 0:
            return self.initial
        return self.steps[index - 1].result

    @property
    def final(self) -> Configuration:
        return self.steps[-1].result if self.steps else self.initial

    def tick_count(self) -> int:
        return sum(1 for s in self.steps if s.is_tick)

    def __len__(self) -> int:
        return len(self.steps)

    def extended(self, step: TraceStep) -> "Trace":
        return Trace(self.initial, self.steps + (step,))

    def format_lines(self) -> list[str]:
        lines = []
        for k, step in enumerate(self.steps, start=1):
            cfg = step.result
            if step.is_tick:
                sigma = "{}"
                name = TICK_STEP
            else:
                name = step.instance.rule.name
                inner = ", ".join(f"{v}={t}" for v, t in sorted(step.instance.bindings))
                sigma = "{" + inner + "}"
            lines.append(
                f"{k}: {name} σ={sigma} ⇒ |S|={len(cfg)} t={cfg.global_time}"
            )
        return lines


def replay_errors(trace: Trace) -> list[str]:
    """Check that every step's configuration is the exact result of its annotation."""
    errors = []
    current = trace.initial
    for i, step in enumerate(trace.steps):
        if step.is_tick:
            expected = tick(current)
        else:
            if not is_applicable(step.instance, current):
                errors.append(f"step {i + 1}: instance {step.instance.key()} not applicable")
                current = step.result
                continue
            expected = apply_instance(current, step.instance)
        if expected != step.result:
            errors.append(f"step {i + 1}: recorded configuration does not match replay")
        current = step.result
    return errors


@dataclass(frozen=True)
class Violation:
    step_index: int  # configuration index within the trace (0 = initial)
    pair_index: int
    substitution: tuple[tuple[str, object], ...]

    def __str__(self) -> str:
        binds = ", ".join(f"{v}={t}" for v, t in self.substitution)
        return (
            f"critical configuration at step {self.step_index} "
            f"(pair {self.pair_index}, σ={{{binds}}})"
        )


@dataclass(frozen=True)
class ComplianceResult:
    ok: bool
    violation: Optional[Violation] = None


def check_compliance(trace: Trace, critical: ConfigSpec) -> ComplianceResult:
    """OK iff no configuration in the trace (including the initial one) is critical."""
    if critical.kind is not SpecKind.CRITICAL:
        raise SpecError("compliance is checked against a critical specification")
    for index, config in enumerate(trace.configurations()):
        hit = match_spec(critical, config)
        if hit is not None:
            pair_index, sigma = hit
            return ComplianceResult(
                ok=False,
                violation=Violation(
                    step_index=index,
                    pair_index=pair_index,
                    substitution=tuple(sorted(sigma.items())),
                ),
            )
    return ComplianceResult(ok=True)

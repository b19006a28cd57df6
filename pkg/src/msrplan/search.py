"""Successor enumeration and bounded search for compliant goal traces.

The search is an exhaustive depth-first exploration with instantaneous rules
tried before the time advance, instances in canonical order, and pruning of
states whose abstraction key was already seen with at least as much tick
budget.  That pruning is a bisimulation argument and is only sound for
progressing scenarios, so it is gated on the progressing flag.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Literal, Optional, Union

from .delta import abstract, delta_key
from .kernel import Configuration
from .rules import EngineError, RuleInstance, apply_instance, find_matches, tick
from .scenario import PlanningScenario, infer_dmax
from .specs import TICK_STEP, Trace, TraceStep, match_spec

Which = Literal["system", "updates", "both"]


def successors(
    scenario: PlanningScenario, config: Configuration, which: Which = "system"
) -> list[tuple[Union[RuleInstance, str], Configuration]]:
    """All canonical one-step moves from `config`, in deterministic order.

    Instantaneous instances come first (rules in declaration order, instances
    in canonical order), then the time advance when system moves are included.
    """
    if which == "system":
        rules = scenario.system_rules
    elif which == "updates":
        rules = scenario.update_rules
    elif which == "both":
        rules = scenario.system_rules + scenario.update_rules
    else:
        raise EngineError(f"unknown successor selector {which!r}")
    out: list[tuple[Union[RuleInstance, str], Configuration]] = []
    for rule in rules:
        for inst in find_matches(rule, config, scenario.signature):
            out.append((inst, apply_instance(config, inst, trusted=True)))
    if which != "updates":
        out.append((TICK_STEP, tick(config)))
    return out


@dataclass
class SearchStats:
    visited: int = 0
    pruned: int = 0


def _instantaneous_moves(
    scenario: PlanningScenario, config: Configuration
) -> list[tuple[RuleInstance, Configuration]]:
    out = []
    for rule in scenario.system_rules:
        for inst in find_matches(rule, config, scenario.signature):
            out.append((inst, apply_instance(config, inst, trusted=True)))
    return out


def find_compliant_goal_trace(
    scenario: PlanningScenario,
    tick_budget: int,
    *,
    use_memo: bool = True,
    stats: Optional[SearchStats] = None,
) -> Optional[Trace]:
    """A compliant trace of system rules from the initial configuration to a
    goal configuration using at most `tick_budget` time advances, or None.

    Search is exhaustive up to abstraction equivalence; depth is bounded by
    (tick_budget + 1) * m, the trace-length bound for progressing scenarios.
    Memoization requires a progressing scenario.
    """
    if tick_budget < 0:
        raise EngineError("tick budget must be a natural number")
    if use_memo and not scenario.progressing:
        raise EngineError(
            "abstraction-keyed memoization is sound only for progressing "
            "scenarios; pass use_memo=False"
        )
    m = len(scenario.initial)
    dmax = infer_dmax(scenario)
    depth_limit = (tick_budget + 1) * m
    # seen: abstraction key -> best tick budget it was explored with
    seen: dict[tuple, int] = {}

    found = _dfs_goal(
        scenario,
        scenario.initial,
        tick_budget,
        depth_limit,
        dmax,
        seen if use_memo else None,
        stats,
    )
    if found is None:
        return None
    trace = Trace(scenario.initial, tuple(found))
    if scenario.progressing:
        _assert_progressing_shape(trace, m)
    return trace


def _dfs_goal(
    scenario: PlanningScenario,
    root: Configuration,
    budget: int,
    depth_limit: int,
    dmax: int,
    seen: Optional[dict[tuple, int]],
    stats: Optional[SearchStats],
) -> Optional[list[TraceStep]]:
    # Iterative DFS; frames carry (config, remaining budget, move iterator).
    if match_spec(scenario.critical_spec, root) is not None:
        return None
    if match_spec(scenario.goal_spec, root) is not None:
        return []

    def moves(config: Configuration, remaining: int) -> Iterator[TraceStep]:
        for inst, nxt in _instantaneous_moves(scenario, config):
            yield TraceStep(inst, nxt)
        if remaining > 0:
            yield TraceStep(TICK_STEP, tick(config))

    if seen is not None:
        seen[delta_key(abstract(root, dmax))] = budget
    path: list[TraceStep] = []
    stack = [(root, budget, moves(root, budget))]
    while stack:
        config, remaining, it = stack[-1]
        step = next(it, None)
        if step is None:
            stack.pop()
            if path:
                path.pop()
            continue
        if stats is not None:
            stats.visited += 1
        nxt = step.result
        if match_spec(scenario.critical_spec, nxt) is not None:
            continue
        nxt_remaining = remaining - 1 if step.is_tick else remaining
        path.append(step)
        if match_spec(scenario.goal_spec, nxt) is not None:
            return path
        if len(path) >= depth_limit:
            path.pop()
            continue
        if seen is not None:
            key = delta_key(abstract(nxt, dmax))
            best = seen.get(key)
            if best is not None and best >= nxt_remaining:
                if stats is not None:
                    stats.pruned += 1
                path.pop()
                continue
            seen[key] = nxt_remaining
        stack.append((nxt, nxt_remaining, moves(nxt, nxt_remaining)))
    return None


def _assert_progressing_shape(trace: Trace, m: int) -> None:
    """Between consecutive time advances at most m instantaneous steps occur."""
    run = 0
    for step in trace.steps:
        if step.is_tick:
            run = 0
        else:
            run += 1
            if run > m:
                raise EngineError(
                    "progressing bound violated: more than m instantaneous "
                    "steps between consecutive time advances"
                )


def instantaneous_run_lengths(trace: Trace) -> list[int]:
    """Lengths of the instantaneous-step runs between time advances."""
    runs = [0]
    for step in trace.steps:
        if step.is_tick:
            runs.append(0)
        else:
            runs[-1] += 1
    return runs

"""Shared fixtures: the worked flight example, travel variants, random
scenario generators, and independent brute-force oracles."""

from __future__ import annotations

import itertools
import random

import pytest

from msrplan.kernel import (
    Configuration,
    Constant,
    FreshConstant,
    Role,
    Signature,
    TimedFact,
    Variable,
    make_signature,
)
from msrplan.rules import (
    GLOBAL_TIME_VAR,
    Atom,
    CreatedFact,
    FactPattern,
    Rule,
    RuleInstance,
    RuleRole,
    TimeConstraint,
)
from msrplan.scenario import PlanningScenario, load_bundled, parse_scenario
from msrplan.specs import ConfigSpec, SpecKind, SpecPair

WORKED_EXAMPLE = """
types city loc status eid ref fid;
consts FRA: city, DBV: city, airport: loc, center: loc,
       main: eid, no: status, done: status, id215: ref, id14: fid;
predicates At(city, loc): system, Flight2(fid, city, city): system,
           Event(eid, ref): goal, Attended(eid, status): critical;
init { Time@3d14:42, Attended(main, no)@0, At(FRA, airport)@3d14:05,
       Event(main, id215)@5d12:00, Flight2(id14, FRA, DBV)@3d15:25 }
rule system board {
  pre: Flight2(a, x, y)@T1;
  consume: At(x, airport)@T2;
  create: At(y, airport)@T+120;
  guard: T = T1, T2 + 30 <= T;
}
goal { Attended(main, done)@T1, Event(main, x)@T2 }
critical { Time@T, Attended(main, no)@T1, Event(main, x)@T2 | T > T2 }
"""


@pytest.fixture(scope="session")
def worked_example() -> PlanningScenario:
    return parse_scenario(WORKED_EXAMPLE, "worked_example")


@pytest.fixture(scope="session")
def travel() -> PlanningScenario:
    return load_bundled("travel.msr")


@pytest.fixture(scope="session")
def minimal() -> PlanningScenario:
    return load_bundled("minimal.msr")


def travel_with_start(travel: PlanningScenario, t0: int) -> PlanningScenario:
    """The bundled travel scenario re-based to start time t0."""
    facts = []
    for f in travel.initial:
        if f.pred == "Time":
            facts.append(TimedFact("Time", (), t0))
        elif f.pred == "ClockBeat":
            facts.append(TimedFact("ClockBeat", (), t0 + 1))
        else:
            facts.append(f)
    return travel.with_initial(Configuration(facts))


# ---------------------------------------------------------------------------
# Random scenario corpus
# ---------------------------------------------------------------------------

_PRED_POOL = {
    "P": ("obj",),
    "Q": ("obj", "obj"),
    "R": (),
    "S0": ("obj",),
}


def _random_atom(rng: random.Random, pred: str, arity: tuple[str, ...]) -> Atom:
    args = []
    for btype in arity:
        if rng.random() < 0.5:
            args.append(Constant(rng.choice("abc"), btype))
        else:
            args.append(Variable(rng.choice("xyz"), btype))
    return Atom(pred, tuple(args))


def _random_rule(
    rng: random.Random, name: str, role: RuleRole, progressing: bool
) -> Rule:
    preds = list(_PRED_POOL.items())
    size = rng.randint(1, 2)
    consumed = []
    for i in range(size):
        pred, arity = rng.choice(preds)
        consumed.append(FactPattern(_random_atom(rng, pred, arity), f"T{i + 1}"))
    created = []
    for i in range(size):
        pred, arity = rng.choice(preds)
        delay = rng.randint(1, 2) if (progressing and i == 0) else rng.randint(0, 2)
        created.append(CreatedFact(_random_atom(rng, pred, arity), delay))
    guard: list[TimeConstraint] = []
    if not progressing and rng.random() < 0.3:
        # occasionally force a future consumption so the rule is refused the
        # progressing classification
        guard.append(TimeConstraint("T1", ">", GLOBAL_TIME_VAR))
    rule = Rule(name, (), tuple(consumed), tuple(created), tuple(guard), role)
    if progressing:
        rule = rule.with_past_consumption()
    return rule


def random_scenario(
    seed: int, *, progressing: bool, with_updates: bool = False
) -> PlanningScenario:
    """A small random scenario over a fixed signature.

    Balanced by construction; when `progressing` every rule also consumes only
    past-or-present facts and creates a strictly-future one.
    """
    rng = random.Random(seed)
    sig = make_signature(
        base_types=["obj"],
        constants={"a": "obj", "b": "obj", "c": "obj"},
        predicates={**_PRED_POOL, "G0": ("obj",), "K0": ()},
        roles={
            **{p: Role.SYSTEM for p in _PRED_POOL},
            "G0": Role.GOAL,
            "K0": Role.CRITICAL,
        },
    )
    n_rules = rng.randint(2, 3)
    rules = [
        _random_rule(rng, f"r{i}", RuleRole.SYSTEM, progressing)
        for i in range(n_rules)
    ]
    updates: list[Rule] = []
    if with_updates:
        for i in range(rng.randint(1, 2)):
            updates.append(
                _random_rule(rng, f"u{i}", RuleRole.SYSTEM_UPDATE, progressing)
            )
    horizon = rng.randint(4, 6)
    facts = [
        TimedFact("Time", (), 0),
        TimedFact("G0", (Constant("a", "obj"),), 0),
        TimedFact("K0", (), horizon),
    ]
    for _ in range(rng.randint(3, 5)):
        pred, arity = rng.choice(list(_PRED_POOL.items()))
        args = tuple(Constant(rng.choice("abc"), t) for t in arity)
        facts.append(TimedFact(pred, args, rng.randint(0, 2)))
    goal = ConfigSpec(
        SpecKind.GOAL,
        (
            SpecPair(
                (
                    FactPattern(Atom("G0", (Variable("x", "obj"),)), "T1"),
                    FactPattern(
                        _random_atom(rng, *rng.choice(list(_PRED_POOL.items()))), "T2"
                    ),
                )
            ),
        ),
    )
    critical = ConfigSpec(
        SpecKind.CRITICAL,
        (SpecPair((FactPattern(Atom("Time"), "T"), FactPattern(Atom("K0"), "T"))),),
    )
    return PlanningScenario(
        signature=sig,
        system_rules=tuple(rules),
        update_rules=tuple(updates),
        goal_spec=goal,
        critical_spec=critical,
        initial=Configuration(facts),
        fact_size_bound=3,
    )


# ---------------------------------------------------------------------------
# Brute-force oracles (independent of the engine's matchers)
# ---------------------------------------------------------------------------

def _term_type(sig: Signature, term) -> str:
    return sig.term_type(term)


def _ground_pattern(atom: Atom, tvar: str, sigma: dict):
    args = []
    for arg in atom.args:
        if isinstance(arg, Variable):
            args.append(sigma[arg.name])
        else:
            args.append(arg)
    return TimedFact(atom.pred, tuple(args), sigma[tvar])


def brute_find_matches(
    rule: Rule, config: Configuration, sig: Signature
) -> set[str]:
    """Instance keys by exhaustive substitution enumeration.

    First-order variables range over all ground terms occurring in the
    configuration (restricted by type), time variables over all occurring
    timestamps, and fresh variables take the canonical fresh constant.
    """
    terms = [v for v in config.values() if not isinstance(v, int)]
    stamps = sorted(v for v in config.values() if isinstance(v, int))
    fo_vars: dict[str, str] = {}
    for p in (*rule.side, *rule.consumed):
        for arg in p.atom.args:
            if isinstance(arg, Variable):
                fo_vars[arg.name] = arg.base_type
    tvars = sorted({p.tvar for p in (*rule.side, *rule.consumed)})
    fresh_sorted = sorted(rule.fresh_vars())
    fresh_types: dict[str, str] = {}
    for c in rule.created:
        for arg in c.atom.args:
            if isinstance(arg, Variable) and arg.name in rule.fresh_vars():
                fresh_types.setdefault(arg.name, arg.base_type)
    taken: dict[str, set[int]] = {}
    for v in terms:
        if isinstance(v, FreshConstant):
            taken.setdefault(v.base_type, set()).add(v.index)
    fresh_assignment: dict[str, FreshConstant] = {}
    for name in fresh_sorted:
        btype = fresh_types.get(name, "")
        used = taken.setdefault(btype, set())
        index = 0
        while index in used:
            index += 1
        used.add(index)
        fresh_assignment[name] = FreshConstant(btype, index)

    names = sorted(fo_vars)
    keys: set[str] = set()
    candidates = {
        n: [t for t in terms if _term_type(sig, t) == fo_vars[n]] for n in names
    }
    for fo_choice in itertools.product(*(candidates[n] for n in names)):
        for t_choice in itertools.product(stamps, repeat=len(tvars)):
            sigma: dict = dict(zip(names, fo_choice))
            sigma.update(dict(zip(tvars, t_choice)))
            sigma[GLOBAL_TIME_VAR] = config.global_time
            needed = [
                _ground_pattern(p.atom, p.tvar, sigma)
                for p in (*rule.side, *rule.consumed)
            ]
            if not config.contains(needed):
                continue
            times = {v: t for v, t in sigma.items() if isinstance(t, int)}
            if not all(c.satisfied(times) for c in rule.effective_guard()):
                continue
            sigma.update(fresh_assignment)
            inst = RuleInstance(rule, tuple(sorted(sigma.items())))
            keys.add(inst.key())
    return keys


def brute_match_spec(spec: ConfigSpec, config: Configuration) -> bool:
    """Specification recognition by exhaustive substitution enumeration."""
    terms = [v for v in config.values() if not isinstance(v, int)]
    stamps = sorted(v for v in config.values() if isinstance(v, int))
    for pair in spec.pairs:
        fo_vars = sorted(
            {
                a.name
                for p in pair.pattern
                for a in p.atom.args
                if isinstance(a, Variable)
            }
        )
        tvars = sorted({p.tvar for p in pair.pattern})
        for fo_choice in itertools.product(terms, repeat=len(fo_vars)):
            for t_choice in itertools.product(stamps, repeat=len(tvars)):
                sigma: dict = dict(zip(fo_vars, fo_choice))
                sigma.update(dict(zip(tvars, t_choice)))
                needed = [
                    _ground_pattern(p.atom, p.tvar, sigma) for p in pair.pattern
                ]
                # collapsing substitutions are fine: every substituted pattern
                # must occur, occurrences need not be distinct
                if not all(config.count(f) >= 1 for f in needed):
                    continue
                times = {v: t for v, t in sigma.items() if isinstance(t, int)}
                if all(c.satisfied(times) for c in pair.constraints):
                    return True
    return False

"""Time-bounded resilience: decision procedure, witnesses, verification.

The checker decides whether some compliant goal trace within the tick budget
survives up to n adversarial update applications inside the disruption
window, replanning recursively after each.  The search decomposes along the
trace: a state is good when it is non-critical, every applicable update at it
(while the window is open) leads to a recursively resilient state, and either
the goal is matched or some successor is good.  Verdicts are memoized on
(abstraction key, updates left, window left), which is the lazy
candidate-trace iteration with sharing; soundness of the sharing needs a
progressing scenario.

The verifier is a separate traversal that replays annotations and re-derives
every obligation; it shares no pruning with the checker and serves as an
internal oracle for it.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Optional, Union

from .delta import abstract, delta_key
from .kernel import (
    MAX_TIMESTAMP,
    Configuration,
    Constant,
    FreshConstant,
    FuncApp,
    Signature,
    Term,
)
from .rules import (
    EngineError,
    RuleInstance,
    apply_instance,
    find_matches,
    is_applicable,
    tick,
)
from .scenario import PlanningScenario, infer_dmax
from .search import _instantaneous_moves, find_compliant_goal_trace
from .specs import TICK_STEP, Trace, TraceStep, match_spec

DEFAULT_ETA_CAP = 6


@dataclass(frozen=True)
class ResilienceQuery:
    """(n, a, b): updates tolerated, disruption window, recovery time."""

    n: int
    a: int
    b: int

    def __post_init__(self) -> None:
        if self.n < 0 or self.a < 0 or self.b < 0:
            raise EngineError("resilience parameters must be natural numbers")


@dataclass(frozen=True)
class WitnessTree:
    """A strategy certificate: a base trace plus a child certificate for every
    admissible update point."""

    query: ResilienceQuery
    trace: Trace
    children: tuple[tuple[int, RuleInstance, "WitnessTree"], ...] = ()

    def child_map(self) -> dict[tuple[int, str], tuple[RuleInstance, "WitnessTree"]]:
        return {(i, inst.key()): (inst, sub) for i, inst, sub in self.children}


@dataclass(frozen=True)
class ResilienceResult:
    resilient: bool
    witness: Optional[WitnessTree] = None
    refutation: tuple[str, ...] = ()

    def __bool__(self) -> bool:  # pragma: no cover
        return self.resilient


def enumerate_update_points(
    scenario: PlanningScenario, trace: Trace, window: int
) -> list[tuple[int, RuleInstance, Configuration]]:
    """Every admissible (configuration index, update instance, result).

    Covers every configuration of the trace, including the initial and final
    ones, whose elapsed time lies within the window.  Identical
    (configuration, instance) pairs arising from repeated configurations are
    reported once, at their first index.
    """
    t0 = trace.initial.global_time
    out: list[tuple[int, RuleInstance, Configuration]] = []
    seen: set[tuple[Configuration, str]] = set()
    for index, config in enumerate(trace.configurations()):
        if config.global_time - t0 > window:
            continue
        for rule in scenario.update_rules:
            for inst in find_matches(rule, config, scenario.signature):
                dedup = (config, inst.key())
                if dedup in seen:
                    continue
                seen.add(dedup)
                out.append((index, inst, apply_instance(config, inst)))
    return out


class _Checker:
    """Memoized existence checker plus deterministic witness reconstruction."""

    def __init__(self, scenario: PlanningScenario, b: int, use_memo: bool = True):
        self.scenario = scenario
        self.b = b
        self.m = len(scenario.initial)
        self.dmax = infer_dmax(scenario)
        self.use_memo = use_memo
        self.memo: dict[tuple, bool] = {}
        self.build_memo: dict[tuple, WitnessTree] = {}
        self.refutation: tuple[str, ...] = ()
        # per-configuration caches; states recur across levels and phases
        self._crit_cache: dict[Configuration, bool] = {}
        self._intern: dict[tuple, int] = {}
        self._goal_cache: dict[Configuration, bool] = {}
        self._dkey_cache: dict[Configuration, tuple] = {}
        self._updates_cache: dict[Configuration, list] = {}
        self._moves_cache: dict[Configuration, list] = {}

    # -- shared helpers ------------------------------------------------------

    def _key(self, config: Configuration, n: int, w: int) -> tuple:
        if not self.use_memo:
            # no abstraction-level sharing: states collapse only when the
            # concrete configurations coincide
            return (config, n, w)
        ident = self._dkey_cache.get(config)
        if ident is None:
            dkey = delta_key(abstract(config, self.dmax))
            ident = self._intern.setdefault(dkey, len(self._intern))
            self._dkey_cache[config] = ident
        return (ident, n, w)

    def _is_critical(self, config: Configuration) -> bool:
        hit = self._crit_cache.get(config)
        if hit is None:
            hit = match_spec(self.scenario.critical_spec, config) is not None
            self._crit_cache[config] = hit
        return hit

    def _is_goal(self, config: Configuration) -> bool:
        hit = self._goal_cache.get(config)
        if hit is None:
            hit = match_spec(self.scenario.goal_spec, config) is not None
            self._goal_cache[config] = hit
        return hit

    def _update_moves(
        self, config: Configuration
    ) -> list[tuple[RuleInstance, Configuration]]:
        hit = self._updates_cache.get(config)
        if hit is None:
            hit = []
            for rule in self.scenario.update_rules:
                for inst in find_matches(rule, config, self.scenario.signature):
                    hit.append((inst, apply_instance(config, inst, trusted=True)))
            self._updates_cache[config] = hit
        return hit

    def _updates_covered(self, config: Configuration, n: int, w: int) -> bool:
        """Every applicable update must lead to an (n-1, w, b)-resilient state."""
        for inst, updated in self._update_moves(config):
            if not self.decide(updated, n - 1, w):
                chain = (
                    f"update {inst.key()} at t={config.global_time} admits no "
                    f"({n - 1},{w},{self.b})-resilient reaction",
                )
                self.refutation = chain + self.refutation[:8]
                return False
        return True

    def _quick_verdict(self, config: Configuration, n: int, w: int) -> Optional[bool]:
        """Resolve a state without expanding successors, if possible.

        Update coverage is evaluated lazily: only states that otherwise lie on
        a compliant goal trace pay for it (a state that cannot reach the goal
        is refuted without running any reaction searches).
        """
        if self._is_critical(config):
            return False
        if self._is_goal(config):
            return self._coverage_ok(config, n, w)
        return None

    def _coverage_ok(self, config: Configuration, n: int, w: int) -> bool:
        if n > 0 and w >= 0:
            return self._updates_covered(config, n, w)
        return True

    # -- phase A: verdicts ----------------------------------------------------

    def decide(self, config: Configuration, n: int, w: int) -> bool:
        """Does an (n, w, b)-resilient trace from `config` exist?

        Iterative within a level; recursion across update levels only, so the
        Python stack depth is bounded by n.  In-progress revisits would mean
        an instantaneous cycle, which progressing rules exclude.
        """
        key = self._key(config, n, w)
        cached = self.memo.get(key)
        if cached is not None:
            return cached
        verdict = self._quick_verdict(config, n, w)
        if verdict is not None:
            self.memo[key] = verdict
            return verdict

        depth_limit = (max(w, 0) + self.b + 2) * self.m
        stack: list[list] = [[config, w, key, None]]
        onstack = {key}
        pending: Optional[bool] = None
        while stack:
            frame = stack[-1]
            cfg, fw, fkey, moves = frame
            if pending is True:
                # some successor is good; the state stands iff its own update
                # points are covered
                verdict = self._coverage_ok(cfg, n, fw)
                self.memo[fkey] = verdict
                onstack.discard(fkey)
                stack.pop()
                pending = verdict
                continue
            pending = None
            if moves is None:
                moves = frame[3] = iter(self._level_moves(cfg, fw))
            nxt = next(moves, None)
            if nxt is None:
                self.memo[fkey] = False
                onstack.discard(fkey)
                stack.pop()
                pending = False
                continue
            cfg2, w2 = nxt
            key2 = self._key(cfg2, n, w2)
            hit = self.memo.get(key2)
            if hit is not None:
                pending = hit
                continue
            if key2 in onstack or len(stack) >= depth_limit:
                pending = False
                continue
            verdict = self._quick_verdict(cfg2, n, w2)
            if verdict is not None:
                self.memo[key2] = verdict
                pending = verdict
                continue
            stack.append([cfg2, w2, key2, None])
            onstack.add(key2)
        return self.memo[key]

    def _inst_moves(self, config: Configuration) -> list:
        hit = self._moves_cache.get(config)
        if hit is None:
            hit = _instantaneous_moves(self.scenario, config)
            self._moves_cache[config] = hit
        return hit

    def _level_moves(self, config: Configuration, w: int):
        for _inst, nxt in self._inst_moves(config):
            yield (nxt, w)
        if w + self.b >= 1:
            yield (tick(config), w - 1)

    # -- phase B: witness reconstruction --------------------------------------

    def build(self, config: Configuration, n: int, w: int) -> WitnessTree:
        """Reconstruct the canonical witness for a state known to be good.

        Follows the leftmost decide-approved moves, so the chosen trace is the
        lexicographically least annotation sequence in the search order.
        """
        bkey = (config, n, w)
        cached = self.build_memo.get(bkey)
        if cached is not None:
            return cached
        depth_limit = (max(w, 0) + self.b + 2) * self.m
        steps: list[TraceStep] = []
        children: list[tuple[int, RuleInstance, WitnessTree]] = []
        covered: set[tuple[Configuration, str]] = set()
        current = config
        cur_w = w
        index = 0
        while True:
            if self._is_critical(current):
                raise EngineError("witness reconstruction entered a critical state")
            if n > 0 and cur_w >= 0:
                for inst, updated in self._update_moves(current):
                    # repeated configurations cover a point only once
                    dedup = (current, inst.key())
                    if dedup in covered:
                        continue
                    covered.add(dedup)
                    children.append((index, inst, self.build(updated, n - 1, cur_w)))
            if self._is_goal(current):
                break
            chosen = None
            for nxt, w2 in self._level_moves(current, cur_w):
                if self.decide(nxt, n, w2):
                    chosen = (nxt, w2)
                    break
            if chosen is None or len(steps) >= depth_limit:
                raise EngineError("witness reconstruction lost the certified path")
            nxt, w2 = chosen
            steps.append(TraceStep(TICK_STEP if w2 != cur_w else self._annotate(current, nxt), nxt))
            current, cur_w = nxt, w2
            index += 1
        witness = WitnessTree(
            query=ResilienceQuery(n, max(w, 0), self.b),
            trace=Trace(config, tuple(steps)),
            children=tuple(children),
        )
        self.build_memo[bkey] = witness
        return witness

    def _annotate(self, config: Configuration, result: Configuration) -> RuleInstance:
        for inst, nxt in self._inst_moves(config):
            if nxt == result:
                return inst
        raise EngineError("no annotation reproduces the chosen step")  # pragma: no cover


def check_resilience(
    scenario: PlanningScenario,
    query: ResilienceQuery,
    *,
    eta_cap: int = DEFAULT_ETA_CAP,
    use_memo: bool = True,
) -> ResilienceResult:
    """Decide (n,a,b)-resilience; emit a witness tree on success.

    Requires a validated progressing planning scenario whose eta measure does
    not exceed the cap (compliance checking costs m^eta).  For n = 0 on a
    non-progressing scenario the check falls back to plain bounded search
    with memoization disabled.
    """
    if query.a < 1:
        raise EngineError("the disruption window a must be positive")
    eta = scenario.eta()
    if eta > eta_cap:
        raise EngineError(
            f"critical specification uses {eta} variables per pair; cap is "
            f"{eta_cap} (compliance is brute force in m^eta)"
        )
    if scenario.initial.global_time + query.a + query.b > MAX_TIMESTAMP:
        raise EngineError("tick budget overflows the timestamp range")
    progressing = scenario.progressing
    if not progressing:
        if query.n > 0:
            raise EngineError(
                "resilience checking requires a progressing planning scenario"
            )
        trace = find_compliant_goal_trace(
            scenario, query.a + query.b, use_memo=False
        )
        if trace is None:
            return ResilienceResult(False, refutation=("no compliant goal trace",))
        return ResilienceResult(True, WitnessTree(query, trace))

    checker = _Checker(scenario, query.b, use_memo=use_memo)
    ok = checker.decide(scenario.initial, query.n, query.a)
    if not ok:
        refutation = checker.refutation or ("no compliant goal trace",)
        return ResilienceResult(False, refutation=refutation)
    witness = checker.build(scenario.initial, query.n, query.a)
    return ResilienceResult(True, witness)


# ---------------------------------------------------------------------------
# Witness serialization
# ---------------------------------------------------------------------------

def _term_to_str(term: Term) -> str:
    return str(term)


_TERM_TOKEN = re.compile(r"#[A-Za-z_][A-Za-z0-9_]*:\d+|[A-Za-z_][A-Za-z0-9_]*|[(),]")


def parse_ground_term(text: str, sig: Signature) -> Term:
    """Parse the rendered form of a ground term (constants, #type:k, f(..))."""
    tokens = _TERM_TOKEN.findall(text)
    if "".join(tokens).replace(" ", "") != text.replace(" ", ""):
        raise EngineError(f"unparseable term {text!r}")
    pos = 0

    def parse() -> Term:
        nonlocal pos
        if pos >= len(tokens):
            raise EngineError(f"unparseable term {text!r}")
        tok = tokens[pos]
        pos += 1
        if tok.startswith("#"):
            base, index = tok[1:].split(":")
            return FreshConstant(base, int(index))
        if pos < len(tokens) and tokens[pos] == "(":
            pos += 1
            args = []
            while True:
                args.append(parse())
                if pos < len(tokens) and tokens[pos] == ",":
                    pos += 1
                    continue
                break
            if pos >= len(tokens) or tokens[pos] != ")":
                raise EngineError(f"unparseable term {text!r}")
            pos += 1
            return FuncApp(tok, tuple(args))
        if tok in sig.constants:
            return Constant(tok, sig.constants[tok])
        raise EngineError(f"unknown constant {tok!r} in witness")

    term = parse()
    if pos != len(tokens):
        raise EngineError(f"unparseable term {text!r}")
    return term


def _step_to_dict(step: TraceStep) -> dict:
    if step.is_tick:
        return {"rule": TICK_STEP}
    sigma = {
        v: (t if isinstance(t, int) else _term_to_str(t))
        for v, t in step.instance.bindings
    }
    return {"rule": step.instance.rule.name, "sigma": sigma}


def witness_to_dict(witness: WitnessTree) -> dict:
    children = sorted(
        witness.children, key=lambda c: (c[0], c[1].key())
    )
    return {
        "query": {"n": witness.query.n, "a": witness.query.a, "b": witness.query.b},
        "trace": [_step_to_dict(s) for s in witness.trace.steps],
        "children": [
            {
                "step": i,
                "instance": {
                    "rule": inst.rule.name,
                    "sigma": {
                        v: (t if isinstance(t, int) else _term_to_str(t))
                        for v, t in inst.bindings
                    },
                },
                "subtree": witness_to_dict(sub),
            }
            for i, inst, sub in children
        ],
    }


def witness_to_json(witness: Union[WitnessTree, dict]) -> str:
    data = witness_to_dict(witness) if isinstance(witness, WitnessTree) else witness
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def witness_from_json(text: str) -> dict:
    data = json.loads(text)
    if not isinstance(data, dict):
        raise EngineError("witness file must contain a JSON object")
    return data


# ---------------------------------------------------------------------------
# Independent witness verification
# ---------------------------------------------------------------------------

def _instance_from_dict(
    scenario: PlanningScenario, data: dict, where: str, violations: list[str]
) -> Optional[RuleInstance]:
    rules = {r.name: r for r in scenario.rules()}
    name = data.get("rule")
    rule = rules.get(name)
    if rule is None:
        violations.append(f"{where}: unknown rule {name!r}")
        return None
    sigma = data.get("sigma", {})
    if not isinstance(sigma, dict):
        violations.append(f"{where}: malformed substitution")
        return None
    bindings = []
    try:
        for var in sorted(sigma):
            value = sigma[var]
            if isinstance(value, bool) or not isinstance(value, (int, str)):
                raise EngineError(f"binding {var} is neither timestamp nor term")
            if isinstance(value, int):
                bindings.append((var, value))
            else:
                bindings.append((var, parse_ground_term(value, scenario.signature)))
    except EngineError as exc:
        violations.append(f"{where}: {exc}")
        return None
    inst = RuleInstance(rule, tuple(bindings))
    missing = rule.all_variables() - {v for v, _ in bindings}
    if missing:
        violations.append(f"{where}: substitution misses {sorted(missing)}")
        return None
    return inst


def _replay_node_trace(
    scenario: PlanningScenario,
    start: Configuration,
    steps: list,
    where: str,
    violations: list[str],
) -> Optional[Trace]:
    current = start
    out: list[TraceStep] = []
    for k, raw in enumerate(steps):
        label = f"{where}.trace[{k}]"
        if not isinstance(raw, dict):
            violations.append(f"{label}: malformed step")
            return None
        if raw.get("rule") == TICK_STEP:
            current = tick(current)
            out.append(TraceStep(TICK_STEP, current))
            continue
        inst = _instance_from_dict(scenario, raw, label, violations)
        if inst is None:
            return None
        if inst.rule.role.value != "system":
            violations.append(f"{label}: trace uses non-system rule {inst.rule.name}")
            return None
        if not is_applicable(inst, current):
            violations.append(f"{label}: instance does not re-apply")
            return None
        current = apply_instance(current, inst)
        out.append(TraceStep(inst, current))
    return Trace(start, tuple(out))


def verify_witness(
    scenario: PlanningScenario,
    query: ResilienceQuery,
    witness: Union[WitnessTree, dict],
) -> tuple[bool, list[str]]:
    """Re-derive every obligation of a witness tree; no shared state with the
    checker.

    Checks per node: the query matches, annotations re-apply exactly, the
    trace is compliant and goal-terminated within the tick budget, children
    cover exactly the admissible update points, and each child verifies
    against the reduced query from the updated configuration.
    """
    data = witness_to_dict(witness) if isinstance(witness, WitnessTree) else witness
    violations: list[str] = []
    _verify_node(scenario, scenario.initial, query, data, "root", violations)
    return (not violations, violations)


def _verify_node(
    scenario: PlanningScenario,
    start: Configuration,
    query: ResilienceQuery,
    node: dict,
    where: str,
    violations: list[str],
) -> None:
    q = node.get("query", {})
    if not isinstance(q, dict):
        violations.append(f"{where}: malformed query")
        return
    if (q.get("n"), q.get("a"), q.get("b")) != (query.n, query.a, query.b):
        violations.append(
            f"{where}: query mismatch: node says ({q.get('n')},{q.get('a')},"
            f"{q.get('b')}), expected ({query.n},{query.a},{query.b})"
        )
    steps = node.get("trace", [])
    if not isinstance(steps, list):
        violations.append(f"{where}: malformed trace")
        return
    trace = _replay_node_trace(scenario, start, steps, where, violations)
    if trace is None:
        return
    for index, config in enumerate(trace.configurations()):
        if match_spec(scenario.critical_spec, config) is not None:
            violations.append(f"{where}: not compliant at step {index}")
            return
    if match_spec(scenario.goal_spec, trace.final) is None:
        violations.append(f"{where}: trace does not end in a goal configuration")
        return
    if trace.tick_count() > query.a + query.b:
        violations.append(
            f"{where}: tick budget exceeded ({trace.tick_count()} > "
            f"{query.a}+{query.b})"
        )
        return
    children = node.get("children", [])
    if not isinstance(children, list):
        violations.append(f"{where}: malformed children")
        return
    if query.n == 0:
        if children:
            violations.append(f"{where}: children present at n=0")
        return
    expected = enumerate_update_points(scenario, trace, query.a)
    expected_map = {(i, inst.key()): (inst, cfg) for i, inst, cfg in expected}
    seen_keys: set[tuple[int, str]] = set()
    for c_index, child in enumerate(children):
        label = f"{where}.children[{c_index}]"
        if not isinstance(child, dict) or not isinstance(child.get("instance"), dict):
            violations.append(f"{label}: malformed update point")
            continue
        inst = _instance_from_dict(
            scenario, child.get("instance", {}), label, violations
        )
        if inst is None:
            continue
        key = (child.get("step"), inst.key())
        if key not in expected_map:
            violations.append(f"{label}: unknown update point {key}")
            continue
        if key in seen_keys:
            violations.append(f"{label}: duplicate update point {key}")
            continue
        seen_keys.add(key)
        point_inst, updated = expected_map[key]
        d = trace.config_at(child["step"]).global_time - start.global_time
        child_query = ResilienceQuery(query.n - 1, query.a - d, query.b)
        subtree = child.get("subtree")
        if not isinstance(subtree, dict):
            violations.append(f"{label}: missing subtree")
            continue
        _verify_node(scenario, updated, child_query, subtree, label, violations)
    for key in expected_map:
        if key not in seen_keys:
            violations.append(f"{where}: uncovered update point {key}")

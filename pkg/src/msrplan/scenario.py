"""Planning scenarios: the container, the textual DSL, and validation.

A scenario file declares types, constants, predicates with roles, an initial
configuration, guarded rules tagged system / system_update / goal_update, and
goal / critical specification pairs.  Facts render as ``Pred(a,b)@N`` and
timestamps may use ``NdHH:MM`` clock sugar.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from importlib import resources
from typing import Iterable, Optional

from .kernel import (
    TIME_PREDICATE,
    Configuration,
    Constant,
    KernelError,
    Role,
    Signature,
    Term,
    TimedFact,
    Variable,
    clock_convert,
    fact_size,
    make_signature,
)
from .rules import (
    GLOBAL_TIME_VAR,
    Atom,
    CreatedFact,
    FactPattern,
    Rule,
    RuleClassification,
    RuleError,
    RuleRole,
    TimeConstraint,
    classify_rule,
)
from .specs import ConfigSpec, SpecError, SpecKind, SpecPair, eta_measure


@dataclass(frozen=True)
class Diagnostic:
    line: int
    col: int
    message: str

    def render(self, filename: str = "<scenario>") -> str:
        return f"{filename}:{self.line}:{self.col}: {self.message}"


class ScenarioError(ValueError):
    def __init__(self, diagnostics: list[Diagnostic], filename: str = "<scenario>"):
        self.diagnostics = diagnostics
        self.filename = filename
        super().__init__("\n".join(d.render(filename) for d in diagnostics))


@dataclass(frozen=True)
class PlanningScenario:
    """Signature, rules, goal/critical specifications, initial configuration."""

    signature: Signature
    system_rules: tuple[Rule, ...]
    update_rules: tuple[Rule, ...]
    goal_spec: ConfigSpec
    critical_spec: ConfigSpec
    initial: Configuration
    fact_size_bound: int
    declared_bound: bool = False
    inject_past: bool = True  # add T >= T_i for consumed facts of every rule

    def rules(self) -> tuple[Rule, ...]:
        return self.system_rules + self.update_rules

    def classify(self) -> dict[str, RuleClassification]:
        return {r.name: classify_rule(r, self.signature) for r in self.rules()}

    @property
    def progressing(self) -> bool:
        return all(c.progressing for c in self.classify().values())

    def eta(self) -> int:
        return eta_measure(self.critical_spec)

    def is_eta_simple(self, eta: int) -> bool:
        return self.eta() < eta

    def with_initial(self, initial: Configuration) -> "PlanningScenario":
        return replace(self, initial=initial)


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<clock>\d+d\d+:\d+)
  | (?P<number>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=|>=|[{}();,:@|+\-<>=])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # clock | number | ident | op | eof
    text: str
    line: int
    col: int


def _lex(text: str) -> tuple[list[Token], list[Diagnostic]]:
    tokens: list[Token] = []
    diagnostics: list[Diagnostic] = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            diagnostics.append(
                Diagnostic(line, col, f"unexpected character {text[pos]!r}")
            )
            pos += 1
            col += 1
            continue
        kind = m.lastgroup or ""
        lexeme = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, lexeme, line, col))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens, diagnostics


_CLOCK_RE = re.compile(r"(\d+)d(\d+):(\d+)")


def _clock_value(text: str, tok: Token, diags: list[Diagnostic]) -> int:
    m = _CLOCK_RE.fullmatch(text)
    assert m is not None
    try:
        return clock_convert(int(m.group(1)), int(m.group(2)), int(m.group(3)))
    except KernelError as exc:
        diags.append(Diagnostic(tok.line, tok.col, str(exc)))
        return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_ROLES = {"system": Role.SYSTEM, "goal": Role.GOAL, "critical": Role.CRITICAL}
_RULE_ROLES = {
    "system": RuleRole.SYSTEM,
    "system_update": RuleRole.SYSTEM_UPDATE,
    "goal_update": RuleRole.GOAL_UPDATE,
}
_RELS = {"<", "<=", "=", ">=", ">"}


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        self.diags: list[Diagnostic] = []
        self.types: list[str] = []
        self.consts: dict[str, str] = {}
        self.preds: dict[str, tuple[str, ...]] = {}
        self.roles: dict[str, Role] = {}
        self.init_facts: list[TimedFact] = []
        self.saw_init = False
        self.rules: list[Rule] = []
        self.goal_pairs: list[SpecPair] = []
        self.critical_pairs: list[SpecPair] = []
        self.bound: Optional[int] = None
        self.inject_past = True

    # -- token helpers ------------------------------------------------------

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def error(self, tok: Token, message: str) -> None:
        self.diags.append(Diagnostic(tok.line, tok.col, message))

    def fail(self, tok: Token, message: str) -> "ScenarioError":
        self.error(tok, message)
        raise ScenarioError(self.diags)

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.text != text:
            raise self.fail(tok, f"expected {text!r}, found {tok.text or 'end of file'!r}")
        return tok

    def expect_ident(self, what: str) -> Token:
        tok = self.next()
        if tok.kind != "ident":
            raise self.fail(tok, f"expected {what}, found {tok.text or 'end of file'!r}")
        return tok

    def expect_nat(self, what: str = "a number") -> int:
        tok = self.next()
        if tok.kind == "number":
            return int(tok.text)
        if tok.kind == "clock":
            return _clock_value(tok.text, tok, self.diags)
        raise self.fail(tok, f"expected {what}, found {tok.text or 'end of file'!r}")

    # -- top level -----------------------------------------------------------

    def parse(self) -> None:
        while True:
            tok = self.peek()
            if tok.kind == "eof":
                break
            if tok.text == "types":
                self.parse_types()
            elif tok.text == "consts":
                self.parse_consts()
            elif tok.text == "predicates":
                self.parse_predicates()
            elif tok.text == "bound":
                self.parse_bound()
            elif tok.text == "option":
                self.parse_option()
            elif tok.text == "init":
                self.parse_init()
            elif tok.text == "rule":
                self.parse_rule()
            elif tok.text == "goal":
                self.parse_spec_block(SpecKind.GOAL)
            elif tok.text == "critical":
                self.parse_spec_block(SpecKind.CRITICAL)
            else:
                raise self.fail(
                    tok,
                    "expected one of: types, consts, predicates, bound, option, "
                    f"init, rule, goal, critical; found {tok.text!r}",
                )

    def parse_types(self) -> None:
        self.expect("types")
        while self.peek().kind == "ident":
            name = self.next().text
            if name in self.types:
                self.error(self.tokens[self.pos - 1], f"duplicate type {name}")
            else:
                self.types.append(name)
        self.expect(";")

    def parse_consts(self) -> None:
        self.expect("consts")
        while self.peek().text != ";":
            name_tok = self.expect_ident("a constant name")
            self.expect(":")
            type_tok = self.expect_ident("a type name")
            if type_tok.text not in self.types:
                self.error(type_tok, f"unknown type {type_tok.text}")
            if name_tok.text in self.consts:
                self.error(name_tok, f"duplicate constant {name_tok.text}")
            self.consts[name_tok.text] = type_tok.text
            if self.peek().text == ",":
                self.next()
        self.expect(";")

    def parse_predicates(self) -> None:
        self.expect("predicates")
        while self.peek().text != ";":
            name_tok = self.expect_ident("a predicate name")
            name = name_tok.text
            args: list[str] = []
            if self.peek().text == "(":
                self.next()
                while True:
                    t = self.expect_ident("a type name")
                    if t.text not in self.types:
                        self.error(t, f"unknown type {t.text}")
                    args.append(t.text)
                    if self.peek().text == ",":
                        self.next()
                        continue
                    break
                self.expect(")")
            self.expect(":")
            role_tok = self.expect_ident("a role (system, goal, or critical)")
            role = _ROLES.get(role_tok.text)
            if role is None:
                self.error(role_tok, f"unknown role {role_tok.text}")
                role = Role.SYSTEM
            if name == TIME_PREDICATE:
                self.error(name_tok, f"{TIME_PREDICATE} is predeclared and cannot be redefined")
            elif name in self.preds:
                self.error(name_tok, f"duplicate predicate {name}")
            else:
                self.preds[name] = tuple(args)
                self.roles[name] = role
            if self.peek().text == ",":
                self.next()
        self.expect(";")

    def parse_bound(self) -> None:
        self.expect("bound")
        self.expect("facts")
        self.bound = self.expect_nat()
        self.expect(";")

    def parse_option(self) -> None:
        self.expect("option")
        tok = self.expect_ident("an option name")
        if tok.text == "explicit_constraints":
            self.inject_past = False
        else:
            self.error(tok, f"unknown option {tok.text}")
        self.expect(";")

    # -- terms and atoms ------------------------------------------------------

    def parse_ground_term(self, expected_type: Optional[str]) -> Optional[Term]:
        tok = self.expect_ident("a constant")
        if self.peek().text == "(":
            raise self.fail(
                tok, "function terms are not supported in scenario files"
            )
        if tok.text not in self.consts:
            self.error(tok, f"undeclared constant {tok.text}")
            return None
        if expected_type is not None and self.consts[tok.text] != expected_type:
            self.error(
                tok,
                f"constant {tok.text} has type {self.consts[tok.text]}, "
                f"expected {expected_type}",
            )
        return Constant(tok.text, self.consts[tok.text])

    def parse_init_fact(self) -> Optional[TimedFact]:
        name_tok = self.expect_ident("a predicate name")
        name = name_tok.text
        args: list[Term] = []
        arity: Optional[tuple[str, ...]]
        if name == TIME_PREDICATE:
            arity = ()
        else:
            arity = self.preds.get(name)
            if arity is None:
                self.error(name_tok, f"undeclared predicate {name}")
        if self.peek().text == "(":
            self.next()
            index = 0
            while True:
                expected = None
                if arity is not None and index < len(arity):
                    expected = arity[index]
                term = self.parse_ground_term(expected)
                if term is not None:
                    args.append(term)
                index += 1
                if self.peek().text == ",":
                    self.next()
                    continue
                break
            self.expect(")")
            if arity is not None and index != len(arity):
                self.error(name_tok, f"predicate {name} expects {len(arity)} arguments")
        elif arity:
            self.error(name_tok, f"predicate {name} expects {len(arity)} arguments")
        self.expect("@")
        ts = self.expect_nat("a timestamp")
        if arity is None or len(args) != len(arity):
            return None
        return TimedFact(name, tuple(args), ts)

    def parse_init(self) -> None:
        self.expect("init")
        self.expect("{")
        self.saw_init = True
        while self.peek().text != "}":
            fact = self.parse_init_fact()
            if fact is not None:
                self.init_facts.append(fact)
            if self.peek().text == ",":
                self.next()
        self.expect("}")

    def parse_atom(self, var_types: dict[str, tuple[str, Token]]) -> Optional[Atom]:
        name_tok = self.expect_ident("a predicate name")
        name = name_tok.text
        arity = self.preds.get(name)
        if name == TIME_PREDICATE:
            arity = ()
        elif arity is None:
            self.error(name_tok, f"undeclared predicate {name}")
        args: list[Term] = []
        count = 0
        if self.peek().text == "(":
            self.next()
            while True:
                tok = self.expect_ident("a term")
                if self.peek().text == "(":
                    raise self.fail(tok, "function terms are not supported in scenario files")
                expected = None
                if arity is not None and count < len(arity):
                    expected = arity[count]
                if tok.text in self.consts:
                    ctype = self.consts[tok.text]
                    if expected is not None and ctype != expected:
                        self.error(
                            tok,
                            f"constant {tok.text} has type {ctype}, expected {expected}",
                        )
                    args.append(Constant(tok.text, ctype))
                else:
                    # Undeclared identifiers in patterns are variables typed by
                    # their position.
                    seen = var_types.get(tok.text)
                    vtype = expected or (seen[0] if seen else "")
                    if seen is not None and expected is not None and seen[0] != expected:
                        self.error(
                            tok,
                            f"variable {tok.text} used at type {expected} but "
                            f"previously at type {seen[0]}",
                        )
                        vtype = seen[0]
                    if seen is None and vtype:
                        var_types[tok.text] = (vtype, tok)
                    args.append(Variable(tok.text, vtype))
                count += 1
                if self.peek().text == ",":
                    self.next()
                    continue
                break
            self.expect(")")
        if arity is not None and count != len(arity):
            self.error(name_tok, f"predicate {name} expects {len(arity)} arguments")
            return None
        if arity is None:
            return None
        return Atom(name, tuple(args))

    def parse_pattern(
        self, var_types: dict[str, tuple[str, Token]], tvars: set[str]
    ) -> Optional[FactPattern]:
        atom = self.parse_atom(var_types)
        self.expect("@")
        tok = self.expect_ident("a time variable")
        tvars.add(tok.text)
        if atom is None:
            return None
        return FactPattern(atom, tok.text)

    def parse_patterns(
        self, var_types: dict[str, tuple[str, Token]], tvars: set[str]
    ) -> list[FactPattern]:
        out = []
        while True:
            p = self.parse_pattern(var_types, tvars)
            if p is not None:
                out.append(p)
            if self.peek().text == ",":
                self.next()
                continue
            return out

    def parse_create(self, var_types: dict[str, tuple[str, Token]]) -> Optional[CreatedFact]:
        atom = self.parse_atom(var_types)
        self.expect("@")
        tok = self.peek()
        delay = 0
        if tok.text == "+":
            self.next()
            delay = self.expect_nat("a delay")
        elif tok.kind == "ident" and tok.text == GLOBAL_TIME_VAR:
            self.next()
            if self.peek().text == "+":
                self.next()
                delay = self.expect_nat("a delay")
        else:
            raise self.fail(
                tok,
                f"created facts carry timestamps {GLOBAL_TIME_VAR}+D; expected "
                f"'{GLOBAL_TIME_VAR}' or '+'",
            )
        if atom is None:
            return None
        return CreatedFact(atom, delay)

    def parse_constraint(self, tvars: set[str], scope: str) -> Optional[TimeConstraint]:
        def side() -> tuple[Optional[str], int]:
            tok = self.expect_ident("a time variable")
            name = tok.text
            if name not in tvars:
                self.error(
                    tok,
                    f"time variable {name} does not occur in the {scope}",
                )
                name = None  # type: ignore[assignment]
            off = 0
            if self.peek().text in ("+", "-"):
                signed = self.next().text
                value = self.expect_nat("an offset")
                off = value if signed == "+" else -value
            return name, off

        left, loff = side()
        rel_tok = self.next()
        if rel_tok.text not in _RELS:
            raise self.fail(rel_tok, f"expected a relation, found {rel_tok.text!r}")
        right, roff = side()
        if left is None or right is None:
            return None
        return TimeConstraint(left, rel_tok.text, right, roff - loff)

    def parse_constraints(self, tvars: set[str], scope: str) -> list[TimeConstraint]:
        out = []
        while True:
            c = self.parse_constraint(tvars, scope)
            if c is not None:
                out.append(c)
            if self.peek().text == ",":
                self.next()
                continue
            return out

    def parse_rule(self) -> None:
        self.expect("rule")
        role_tok = self.expect_ident("a rule role")
        role = _RULE_ROLES.get(role_tok.text)
        if role is None:
            self.error(
                role_tok,
                f"unknown rule role {role_tok.text!r} (one of: system, "
                "system_update, goal_update)",
            )
            role = RuleRole.SYSTEM
        name_tok = self.expect_ident("a rule name")
        self.expect("{")
        var_types: dict[str, tuple[str, Token]] = {}
        tvars: set[str] = {GLOBAL_TIME_VAR}
        side: list[FactPattern] = []
        consumed: list[FactPattern] = []
        created: list[CreatedFact] = []
        guard: list[TimeConstraint] = []
        guard_toks: list[Token] = []
        while self.peek().text != "}":
            clause_tok = self.expect_ident("a rule clause")
            self.expect(":")
            if clause_tok.text == "pre":
                side.extend(self.parse_patterns(var_types, tvars))
            elif clause_tok.text == "consume":
                consumed.extend(self.parse_patterns(var_types, tvars))
            elif clause_tok.text == "create":
                while True:
                    c = self.parse_create(var_types)
                    if c is not None:
                        created.append(c)
                    if self.peek().text == ",":
                        self.next()
                        continue
                    break
            elif clause_tok.text == "guard":
                guard_toks.append(clause_tok)
                guard.extend(self.parse_constraints(tvars, "rule's precondition"))
            else:
                raise self.fail(
                    clause_tok,
                    f"unknown rule clause {clause_tok.text!r} "
                    "(one of: pre, consume, create, guard)",
                )
            self.expect(";")
        self.expect("}")
        for p in (*side, *consumed):
            if p.atom.pred == TIME_PREDICATE:
                self.error(
                    name_tok,
                    f"rule {name_tok.text}: rules may not mention the global-time "
                    "fact in pre or consume; it is matched implicitly and never "
                    "modified",
                )
                return
        for c in created:
            if c.atom.pred == TIME_PREDICATE:
                self.error(
                    name_tok,
                    f"rule {name_tok.text}: rules may not create the global-time fact",
                )
                return
        try:
            rule = Rule(
                name=name_tok.text,
                side=tuple(side),
                consumed=tuple(consumed),
                created=tuple(created),
                guard=tuple(guard),
                role=role,
            )
        except RuleError as exc:
            self.error(name_tok, str(exc))
            return
        if self.inject_past:
            rule = rule.with_past_consumption()
        if any(r.name == rule.name for r in self.rules):
            self.error(name_tok, f"duplicate rule name {rule.name}")
            return
        self.rules.append(rule)

    def parse_spec_block(self, kind: SpecKind) -> None:
        head = self.next()  # goal | critical
        self.expect("{")
        var_types: dict[str, tuple[str, Token]] = {}
        tvars: set[str] = set()
        pattern = self.parse_patterns(var_types, tvars)
        constraints: list[TimeConstraint] = []
        if self.peek().text == "|":
            self.next()
            constraints = self.parse_constraints(tvars, "pair's pattern")
        self.expect("}")
        try:
            pair = SpecPair(tuple(pattern), tuple(constraints))
        except SpecError as exc:
            self.error(head, str(exc))
            return
        wanted = Role.GOAL if kind is SpecKind.GOAL else Role.CRITICAL
        roles = {
            self.roles.get(p.atom.pred, Role.TIME if p.atom.pred == TIME_PREDICATE else None)
            for p in pattern
        }
        if wanted not in roles:
            self.error(
                head,
                f"{kind.value} pattern must contain at least one {wanted.value} "
                "predicate",
            )
            return
        if kind is SpecKind.GOAL:
            self.goal_pairs.append(pair)
        else:
            self.critical_pairs.append(pair)

    # -- assembly ------------------------------------------------------------

    def build(self) -> PlanningScenario:
        if self.diags:
            raise ScenarioError(self.diags)
        if not self.saw_init:
            raise ScenarioError([Diagnostic(1, 1, "missing init block")])
        try:
            signature = make_signature(
                self.types, self.consts, self.preds, self.roles
            )
            initial = Configuration(self.init_facts)
            for f in initial:
                signature.check_fact_args(f.pred, f.args)
        except KernelError as exc:
            raise ScenarioError([Diagnostic(1, 1, str(exc))]) from exc
        inferred = _max_fact_size(self.init_facts, self.rules, default=1)
        bound = self.bound if self.bound is not None else inferred
        return PlanningScenario(
            signature=signature,
            system_rules=tuple(r for r in self.rules if r.role is RuleRole.SYSTEM),
            update_rules=tuple(r for r in self.rules if r.role is not RuleRole.SYSTEM),
            goal_spec=ConfigSpec(SpecKind.GOAL, tuple(self.goal_pairs)),
            critical_spec=ConfigSpec(SpecKind.CRITICAL, tuple(self.critical_pairs)),
            initial=initial,
            fact_size_bound=bound,
            declared_bound=self.bound is not None,
            inject_past=self.inject_past,
        )


def _atom_size(atom: Atom) -> int:
    return 1 + len(atom.args)  # variables stand for terms of size >= 1


def _max_fact_size(
    init_facts: Iterable[TimedFact], rules: Iterable[Rule], default: int
) -> int:
    sizes = [fact_size(f) for f in init_facts]
    for r in rules:
        for p in (*r.side, *r.consumed):
            sizes.append(_atom_size(p.atom))
        for c in r.created:
            sizes.append(_atom_size(c.atom))
    return max(sizes, default=default)


def parse_scenario(text: str, filename: str = "<scenario>") -> PlanningScenario:
    """Parse the scenario DSL; raises ScenarioError with located diagnostics."""
    tokens, diags = _lex(text)
    if diags:
        raise ScenarioError(diags, filename)
    parser = _Parser(tokens)
    try:
        parser.parse()
        return parser.build()
    except ScenarioError as exc:
        raise ScenarioError(exc.diagnostics, filename) from None


# ---------------------------------------------------------------------------
# Pretty printer
# ---------------------------------------------------------------------------

def _format_constraint(c: TimeConstraint) -> str:
    if c.offset > 0:
        return f"{c.left} {c.rel} {c.right} + {c.offset}"
    if c.offset < 0:
        return f"{c.left} {c.rel} {c.right} - {-c.offset}"
    return f"{c.left} {c.rel} {c.right}"


def pretty_print(scenario: PlanningScenario) -> str:
    """Canonical text form; parsing it back reproduces the scenario."""
    sig = scenario.signature
    out: list[str] = []
    out.append("types " + " ".join(sorted(sig.base_types)) + ";")
    if sig.constants:
        decls = ", ".join(f"{n}: {t}" for n, t in sorted(sig.constants.items()))
        out.append(f"consts {decls};")
    pred_decls = []
    for name in sig.predicates:
        if name == TIME_PREDICATE:
            continue
        args = sig.predicates[name]
        head = f"{name}({', '.join(args)})" if args else name
        pred_decls.append(f"{head}: {sig.predicate_roles[name].value}")
    if pred_decls:
        out.append("predicates\n  " + ",\n  ".join(pred_decls) + ";")
    if scenario.declared_bound:
        out.append(f"bound facts {scenario.fact_size_bound};")
    if not scenario.inject_past:
        out.append("option explicit_constraints;")
    out.append("")
    facts = ",\n  ".join(str(f) for f in scenario.initial.canonical_order())
    out.append("init {\n  " + facts + "\n}")
    out.append("")
    for rule in (*scenario.system_rules, *scenario.update_rules):
        lines = [f"rule {rule.role.value} {rule.name} {{"]
        if rule.side:
            lines.append("  pre: " + ", ".join(str(p) for p in rule.side) + ";")
        if rule.consumed:
            lines.append("  consume: " + ", ".join(str(p) for p in rule.consumed) + ";")
        if rule.created:
            lines.append("  create: " + ", ".join(str(c) for c in rule.created) + ";")
        written = [c for c in rule.guard if not c.implicit]
        if written:
            lines.append(
                "  guard: " + ", ".join(_format_constraint(c) for c in written) + ";"
            )
        lines.append("}")
        out.append("\n".join(lines))
    out.append("")
    for pair in scenario.goal_spec.pairs:
        out.append("goal { " + _format_pair(pair) + " }")
    for pair in scenario.critical_spec.pairs:
        out.append("critical { " + _format_pair(pair) + " }")
    return "\n".join(out) + "\n"


def _format_pair(pair: SpecPair) -> str:
    body = ", ".join(str(p) for p in pair.pattern)
    if pair.constraints:
        body += " | " + ", ".join(_format_constraint(c) for c in pair.constraints)
    return body


# ---------------------------------------------------------------------------
# Validation and syntactic bounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ValidationReport:
    classifications: dict[str, RuleClassification]
    progressing: bool
    eta: int
    dmax: int
    fact_size_bound: int
    fact_size_failures: tuple[str, ...]
    role_warnings: tuple[str, ...]

    def is_eta_simple(self, eta: int) -> bool:
        return self.eta < eta

    def render(self) -> str:
        lines = []
        for name, c in self.classifications.items():
            flags = []
            flags.append("balanced" if c.balanced else "UNBALANCED")
            flags.append("progressing" if c.progressing else "NOT-PROGRESSING")
            flags.append("role-ok" if c.role_valid else "role-warnings")
            lines.append(f"rule {name}: " + ", ".join(flags))
            for v in c.violations:
                lines.append(f"  - {v}")
        lines.append(f"scenario progressing: {'yes' if self.progressing else 'no'}")
        lines.append(f"eta measure: {self.eta} ({self.eta + 1}-simple)")
        lines.append(f"inferred Dmax: {self.dmax}")
        lines.append(f"fact size bound: {self.fact_size_bound}")
        for f in self.fact_size_failures:
            lines.append(f"fact size violation: {f}")
        return "\n".join(lines)


def infer_dmax(scenario: PlanningScenario) -> int:
    """Syntactic bound on the numbers appearing in the scenario, floored at 1.

    Covers initial timestamps, created-fact delays, and constraint offsets in
    rules and both specifications.
    """
    values = [1]
    for f in scenario.initial:
        values.append(f.ts)
    for r in scenario.rules():
        for c in r.created:
            values.append(c.delay)
        for g in r.guard:
            values.append(abs(g.offset))
    for spec in (scenario.goal_spec, scenario.critical_spec):
        for pair in spec.pairs:
            for g in pair.constraints:
                values.append(abs(g.offset))
    return max(values)


def validate_scenario(scenario: PlanningScenario) -> ValidationReport:
    """Pure, total report: classifications, progressing, eta, Dmax, size audit."""
    classifications = scenario.classify()
    role_warnings = []
    for name, c in classifications.items():
        for v in c.violations:
            if v.startswith("role("):
                role_warnings.append(f"{name}: {v}")
    failures = []
    for f in scenario.initial:
        size = fact_size(f)
        if size > scenario.fact_size_bound:
            failures.append(f"initial fact {f} has size {size}")
    for r in scenario.rules():
        for c in r.created:
            size = _atom_size(c.atom)
            if size > scenario.fact_size_bound:
                failures.append(f"rule {r.name} creates {c.atom} of size {size}")
    return ValidationReport(
        classifications=classifications,
        progressing=all(c.progressing for c in classifications.values()),
        eta=eta_measure(scenario.critical_spec),
        dmax=infer_dmax(scenario),
        fact_size_bound=scenario.fact_size_bound,
        fact_size_failures=tuple(failures),
        role_warnings=tuple(role_warnings),
    )


def load_bundled(name: str) -> PlanningScenario:
    """Parse one of the scenario files shipped with the package."""
    text = resources.files("msrplan.data").joinpath(name).read_text(encoding="utf-8")
    return parse_scenario(text, filename=name)


def bundled_text(name: str) -> str:
    return resources.files("msrplan.data").joinpath(name).read_text(encoding="utf-8")

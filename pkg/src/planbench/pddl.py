"""Reader and writer for a STRIPS subset of PDDL.

Supported: (define (domain ...)) with :requirements :strips, :predicates and
:action blocks whose preconditions are conjunctions of positive atoms and
whose effects are conjunctions of atoms and (not <atom>), plus the matching
(define (problem ...)) form. Typing, quantifiers, disjunction, conditional
effects, negative preconditions and numeric fluents are rejected with a
positioned diagnostic rather than silently ignored.

Identifiers are case-insensitive and normalized to lower case.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .core import (
    ActionSchema,
    Atom,
    Domain,
    GroundAction,
    Plan,
    PredicateSchema,
    Problem,
    State,
    parse_action_key,
)


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        self.line = line
        self.col = col
        super().__init__(f"line {line}, col {col}: {message}")


@dataclass(frozen=True)
class Token:
    text: str
    line: int
    col: int


_GOAL_KIND_RE = re.compile(r"^\s*;;\s*goal-kind:\s*(full|partial)\s*$", re.MULTILINE)


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
        elif ch in " \t\r":
            col += 1
            i += 1
        elif ch == ";":
            # comment runs to end of line
            while i < n and text[i] != "\n":
                i += 1
        elif ch in "()":
            tokens.append(Token(ch, line, col))
            col += 1
            i += 1
        else:
            start = i
            start_col = col
            while i < n and text[i] not in " \t\r\n();":
                i += 1
                col += 1
            tokens.append(Token(text[start:i].lower(), line, start_col))
    return tokens


# S-expressions are represented as Token leaves and list nodes.
class _Reader:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def read(self):
        tok = self.peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else Token("", 1, 1)
            raise ParseError("unexpected end of input (unbalanced parentheses?)", last.line, last.col)
        self.pos += 1
        if tok.text == "(":
            items = []
            while True:
                nxt = self.peek()
                if nxt is None:
                    raise ParseError("unclosed parenthesis", tok.line, tok.col)
                if nxt.text == ")":
                    self.pos += 1
                    return items
                items.append(self.read())
        if tok.text == ")":
            raise ParseError("unexpected ')'", tok.line, tok.col)
        return tok


def _read_single_form(text: str):
    tokens = tokenize(text)
    if not tokens:
        raise ParseError("empty input", 1, 1)
    reader = _Reader(tokens)
    form = reader.read()
    extra = reader.peek()
    if extra is not None:
        raise ParseError(f"trailing content {extra.text!r}", extra.line, extra.col)
    return form


def _pos(expr) -> tuple[int, int]:
    while isinstance(expr, list):
        if not expr:
            return (1, 1)
        expr = expr[0]
    return (expr.line, expr.col)


def _err(expr, message: str) -> ParseError:
    line, col = _pos(expr)
    return ParseError(message, line, col)


def _expect_symbol(expr, what: str) -> Token:
    if not isinstance(expr, Token):
        raise _err(expr, f"expected {what}, found a list")
    return expr


def _parse_atom(expr, where: str, arities: dict[str, int] | None = None) -> Atom:
    if not isinstance(expr, list) or not expr:
        raise _err(expr, f"expected an atom in {where}")
    head = _expect_symbol(expr[0], "a predicate name")
    if head.text in ("and", "not", "or", "forall", "exists", "when", "="):
        raise _err(expr, f"{head.text!r} is not allowed in {where}")
    args = []
    for item in expr[1:]:
        tok = _expect_symbol(item, "a term")
        if tok.text == "-":
            raise ParseError("typed terms are not supported (STRIPS subset only)", tok.line, tok.col)
        args.append(tok.text)
    if arities is not None:
        if head.text not in arities:
            raise ParseError(f"unknown predicate {head.text!r} in {where}", head.line, head.col)
        if arities[head.text] != len(args):
            raise ParseError(
                f"predicate {head.text!r} takes {arities[head.text]} arguments, got {len(args)}, in {where}",
                head.line,
                head.col,
            )
    return Atom(head.text, tuple(args))


def _parse_conjunction(
    expr, where: str, allow_not: bool, arities: dict[str, int] | None = None
) -> tuple[list[Atom], list[Atom]]:
    """Returns (positive, negated) atom lists; negated nonempty only if allow_not."""
    if not isinstance(expr, list) or not expr:
        raise _err(expr, f"expected an atom or (and ...) in {where}")
    head = expr[0]
    items: list
    if isinstance(head, Token) and head.text == "and":
        items = expr[1:]
    else:
        items = [expr]
    positive: list[Atom] = []
    negated: list[Atom] = []
    for item in items:
        if not isinstance(item, list) or not item:
            raise _err(item, f"expected an atom in {where}")
        h = item[0]
        if isinstance(h, Token) and h.text == "not":
            if not allow_not:
                raise ParseError(
                    f"negation is not supported in {where} (STRIPS subset only)", h.line, h.col
                )
            if len(item) != 2:
                raise ParseError("(not ...) takes exactly one atom", h.line, h.col)
            negated.append(_parse_atom(item[1], where, arities))
        elif isinstance(h, Token) and h.text in ("or", "forall", "exists", "when", "imply"):
            raise ParseError(f"{h.text!r} is not supported (STRIPS subset only)", h.line, h.col)
        else:
            positive.append(_parse_atom(item, where, arities))
    return positive, negated


def _parse_params(expr, where: str) -> tuple[str, ...]:
    if not isinstance(expr, list):
        raise _err(expr, f"expected a parameter list in {where}")
    params = []
    for item in expr:
        tok = _expect_symbol(item, "a parameter")
        if tok.text == "-":
            raise ParseError("typed parameters are not supported (STRIPS subset only)", tok.line, tok.col)
        if not tok.text.startswith("?"):
            raise ParseError(f"parameter {tok.text!r} must start with '?'", tok.line, tok.col)
        params.append(tok.text)
    return tuple(params)


def parse_domain(text: str) -> Domain:
    form = _read_single_form(text)
    if not isinstance(form, list) or not form:
        raise _err(form, "expected (define (domain ...))")
    head = _expect_symbol(form[0], "'define'")
    if head.text != "define":
        raise ParseError(f"expected 'define', found {head.text!r}", head.line, head.col)
    if len(form) < 2 or not isinstance(form[1], list) or len(form[1]) != 2:
        raise _err(form, "expected (domain NAME) after define")
    kind = _expect_symbol(form[1][0], "'domain'")
    if kind.text != "domain":
        raise ParseError(f"expected 'domain', found {kind.text!r}", kind.line, kind.col)
    name = _expect_symbol(form[1][1], "a domain name").text

    predicates: list[PredicateSchema] = []
    actions: list[ActionSchema] = []
    for section in form[2:]:
        if not isinstance(section, list) or not section:
            raise _err(section, "expected a (:keyword ...) section")
        key = _expect_symbol(section[0], "a section keyword").text
        if key == ":requirements":
            for req in section[1:]:
                tok = _expect_symbol(req, "a requirement")
                if tok.text != ":strips":
                    raise ParseError(
                        f"requirement {tok.text} is not supported (STRIPS subset only)",
                        tok.line,
                        tok.col,
                    )
        elif key == ":predicates":
            for decl in section[1:]:
                if not isinstance(decl, list) or not decl:
                    raise _err(decl, "expected a predicate declaration")
                pname = _expect_symbol(decl[0], "a predicate name").text
                params = _parse_params(decl[1:], f"predicate {pname}")
                predicates.append(PredicateSchema(pname, params))
        elif key == ":action":
            if len(section) < 2:
                raise _err(section, "action needs a name")
            name_tok = _expect_symbol(section[1], "an action name")
            aname = name_tok.text
            arities = {p.name: len(p.params) for p in predicates}
            params: tuple[str, ...] = ()
            precondition: list[Atom] = []
            add: list[Atom] = []
            delete: list[Atom] = []
            i = 2
            while i < len(section):
                kw = _expect_symbol(section[i], "an action keyword")
                if i + 1 >= len(section):
                    raise ParseError(f"{kw.text} needs a value", kw.line, kw.col)
                body = section[i + 1]
                if kw.text == ":parameters":
                    params = _parse_params(body, f"action {aname}")
                elif kw.text == ":precondition":
                    precondition, _ = _parse_conjunction(
                        body, f"the precondition of {aname}", allow_not=False, arities=arities
                    )
                elif kw.text == ":effect":
                    add, delete = _parse_conjunction(
                        body, f"the effect of {aname}", allow_not=True, arities=arities
                    )
                else:
                    raise ParseError(
                        f"unsupported action keyword {kw.text}", kw.line, kw.col
                    )
                i += 2
            try:
                actions.append(
                    ActionSchema(
                        name=aname,
                        params=params,
                        precondition=frozenset(precondition),
                        add=frozenset(add),
                        delete=frozenset(delete),
                    )
                )
            except ModelError as exc:
                raise ParseError(str(exc), name_tok.line, name_tok.col) from exc
        else:
            raise ParseError(f"unsupported section {key}", section[0].line, section[0].col)
    try:
        return Domain(name=name, predicates=tuple(predicates), actions=tuple(actions))
    except ModelError as exc:
        raise ParseError(str(exc), head.line, head.col) from exc


def parse_problem(text: str, domain: Domain) -> Problem:
    form = _read_single_form(text)
    if not isinstance(form, list) or not form:
        raise _err(form, "expected (define (problem ...))")
    head = _expect_symbol(form[0], "'define'")
    if head.text != "define":
        raise ParseError(f"expected 'define', found {head.text!r}", head.line, head.col)
    if len(form) < 2 or not isinstance(form[1], list) or len(form[1]) != 2:
        raise _err(form, "expected (problem NAME) after define")
    kind = _expect_symbol(form[1][0], "'problem'")
    if kind.text != "problem":
        raise ParseError(f"expected 'problem', found {kind.text!r}", kind.line, kind.col)

    arities = {p.name: p.arity for p in domain.predicates}
    objects: tuple[str, ...] = ()
    init_atoms: list[Atom] = []
    goal_atoms: list[Atom] = []
    domain_name = domain.name
    saw_goal = False

    def check_atom(a: Atom, expr) -> None:
        if a.predicate not in arities:
            raise _err(expr, f"unknown predicate {a.predicate!r}")
        if len(a.args) != arities[a.predicate]:
            raise _err(
                expr,
                f"predicate {a.predicate} expects {arities[a.predicate]} arguments, got {len(a.args)}",
            )
        for t in a.args:
            if t not in objects:
                raise _err(expr, f"reference to undeclared object {t!r}")

    for section in form[2:]:
        if not isinstance(section, list) or not section:
            raise _err(section, "expected a (:keyword ...) section")
        key = _expect_symbol(section[0], "a section keyword").text
        if key == ":domain":
            domain_name = _expect_symbol(section[1], "a domain name").text
            if domain_name != domain.name:
                raise _err(
                    section,
                    f"problem is for domain {domain_name!r}, got domain {domain.name!r}",
                )
        elif key == ":objects":
            names = []
            for item in section[1:]:
                tok = _expect_symbol(item, "an object name")
                if tok.text == "-":
                    raise ParseError(
                        "typed objects are not supported (STRIPS subset only)", tok.line, tok.col
                    )
                names.append(tok.text)
            objects = tuple(names)
        elif key == ":init":
            for item in section[1:]:
                a = _parse_atom(item, ":init")
                check_atom(a, item)
                init_atoms.append(a)
        elif key == ":goal":
            saw_goal = True
            if len(section) != 2:
                raise _err(section, ":goal takes exactly one formula")
            atoms, _ = _parse_conjunction(section[1], ":goal", allow_not=False)
            for a in atoms:
                check_atom(a, section[1])
            goal_atoms = atoms
        else:
            raise ParseError(f"unsupported section {key}", section[0].line, section[0].col)

    if not saw_goal or not goal_atoms:
        raise ParseError("goal nonempty violated", *_pos(form))

    goal_kind = "partial"
    m = _GOAL_KIND_RE.search(text)
    if m:
        goal_kind = m.group(1)
    return Problem(
        domain_name=domain_name,
        objects=objects,
        init=State(frozenset(init_atoms)),
        goal=frozenset(goal_atoms),
        goal_kind=goal_kind,
    )


def _emit_atom(a: Atom) -> str:
    return str(a)


def _emit_schema_atoms(atoms: frozenset[Atom], negate: bool = False) -> list[str]:
    out = []
    for a in sorted(atoms):
        out.append(f"(not {a})" if negate else str(a))
    return out


def emit_domain(domain: Domain) -> str:
    lines = [f"(define (domain {domain.name})", "  (:requirements :strips)"]
    if domain.predicates:
        decls = " ".join(
            f"({p.name}{''.join(' ' + v for v in p.params)})" for p in domain.predicates
        )
        lines.append(f"  (:predicates {decls})")
    for act in domain.actions:
        lines.append(f"  (:action {act.name}")
        lines.append(f"    :parameters ({' '.join(act.params)})")
        pre = " ".join(_emit_schema_atoms(act.precondition))
        lines.append(f"    :precondition (and {pre})")
        eff = " ".join(
            _emit_schema_atoms(act.add) + _emit_schema_atoms(act.delete, negate=True)
        )
        lines.append(f"    :effect (and {eff}))")
    lines.append(")")
    return "\n".join(lines) + "\n"


def emit_problem(problem: Problem, name: str = "instance") -> str:
    lines = [
        f";; goal-kind: {problem.goal_kind}",
        f"(define (problem {name})",
        f"  (:domain {problem.domain_name})",
        f"  (:objects {' '.join(problem.objects)})",
    ]
    init = " ".join(str(a) for a in sorted(problem.init.atoms))
    lines.append(f"  (:init {init})")
    goal = " ".join(str(a) for a in sorted(problem.goal))
    lines.append(f"  (:goal (and {goal}))")
    lines.append(")")
    return "\n".join(lines) + "\n"


def emit_pddl(value: Domain | Problem) -> str:
    if isinstance(value, Domain):
        return emit_domain(value)
    if isinstance(value, Problem):
        return emit_problem(value)
    raise TypeError(f"cannot emit {type(value).__name__} as PDDL")


def emit_plan(plan: Plan) -> str:
    """One grounded action per line."""
    return "".join(f"{step.key}\n" for step in plan)


def parse_plan(text: str, domain: Domain) -> Plan:
    steps: list[GroundAction] = []
    for raw in text.splitlines():
        line = raw.split(";", 1)[0].strip()
        if not line:
            continue
        steps.append(parse_action_key(line, domain))
    return Plan(tuple(steps))

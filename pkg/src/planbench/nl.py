"""Template-based translation between the symbolic model and natural
language, plus extraction of plans out of free-text completions.

Extraction is two-stage. Each line before the plan-end tag is first matched
exactly against the rendered form of every ground action (after whitespace,
case and trailing-period normalization). Lines that miss fall back to a
looser reading: the earliest (longest on ties) action name found in the
line picks the action, and object names are collected from the line's word
tokens in order. A line that neither stage can read aborts extraction.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources

from .core import Atom, Domain, GroundAction, Plan, State, ground_all


class MissingTemplateError(Exception):
    pass


class ExtractionError(Exception):
    """Base for everything that makes a completion unscoreable."""


class MissingPlanEndTagError(ExtractionError):
    def __init__(self, tag: str):
        self.tag = tag
        super().__init__(f"completion has no plan-end tag {tag!r}")


class UnparseableLineError(ExtractionError):
    def __init__(self, line_no: int, text: str):
        self.line_no = line_no
        self.text = text
        super().__init__(f"cannot parse plan line {line_no}: {text!r}")


DEFAULT_PLAN_END_TAG = "[PLAN END]"


@dataclass(frozen=True)
class TemplateSet:
    predicate_templates: dict[str, str]
    action_templates: dict[str, str]
    object_namer: dict[str, str] = field(default_factory=dict)
    plan_end_tag: str = DEFAULT_PLAN_END_TAG

    def name_object(self, obj: str) -> str:
        return self.object_namer.get(obj, obj)

    def predicate_pattern(self, name: str) -> str:
        try:
            return self.predicate_templates[name]
        except KeyError:
            raise MissingTemplateError(f"no template for predicate {name!r}") from None

    def action_pattern(self, name: str) -> str:
        try:
            return self.action_templates[name]
        except KeyError:
            raise MissingTemplateError(f"no template for action {name!r}") from None

    def check_domain(self, domain: Domain) -> None:
        """Every predicate and action must have a pattern with arity-many slots."""
        for p in domain.predicates:
            pat = self.predicate_pattern(p.name)
            _check_slots(pat, p.arity, f"predicate {p.name}")
        for a in domain.actions:
            pat = self.action_pattern(a.name)
            _check_slots(pat, len(a.params), f"action {a.name}")


def _check_slots(pattern: str, arity: int, what: str) -> None:
    slots = set(int(m) for m in re.findall(r"\{(\d+)\}", pattern))
    if slots != set(range(arity)):
        raise MissingTemplateError(
            f"template for {what} must use slots 0..{arity - 1}, found {sorted(slots)}"
        )


def load_templates(path: str) -> TemplateSet:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    return _templates_from_dict(raw)


def _templates_from_dict(raw: dict) -> TemplateSet:
    return TemplateSet(
        predicate_templates=dict(raw["predicates"]),
        action_templates=dict(raw["actions"]),
        object_namer=dict(raw.get("objects", {})),
        plan_end_tag=raw.get("plan_end_tag", DEFAULT_PLAN_END_TAG),
    )


def blocksworld_templates() -> TemplateSet:
    text = resources.files("planbench.data").joinpath("templates_blocksworld.json").read_text()
    return _templates_from_dict(json.loads(text))


def neutral_templates(domain: Domain) -> TemplateSet:
    """Arity-based wording for domains whose names carry no meaning, e.g.
    disguised vocabularies. Renamed tokens appear verbatim."""
    preds = {}
    for p in domain.predicates:
        if p.arity == 0:
            preds[p.name] = f"the condition {p.name} holds"
        else:
            parts = " over ".join("{%d}" % i for i in range(p.arity))
            preds[p.name] = f"the condition {p.name} holds for object {parts}"
    acts = {}
    for a in domain.actions:
        n = len(a.params)
        if n == 0:
            acts[a.name] = f"perform {a.name}"
        else:
            parts = " and object ".join("{%d}" % i for i in range(n))
            acts[a.name] = f"perform {a.name} on object {parts}"
    return TemplateSet(predicate_templates=preds, action_templates=acts)


def atom_to_nl(a: Atom, templates: TemplateSet) -> str:
    pattern = templates.predicate_pattern(a.predicate)
    return pattern.format(*(templates.name_object(t) for t in a.args))


def action_to_nl(action: GroundAction, templates: TemplateSet) -> str:
    pattern = templates.action_pattern(action.schema)
    return pattern.format(*(templates.name_object(t) for t in action.args))


def state_to_nl(state: State, templates: TemplateSet) -> str:
    return ", ".join(atom_to_nl(a, templates) for a in state.canonical())


def goal_to_nl(
    goal: frozenset[Atom], templates: TemplateSet, order: list[Atom] | None = None
) -> str:
    atoms = list(order) if order is not None else sorted(goal)
    return ", ".join(atom_to_nl(a, templates) for a in atoms)


def plan_to_nl(plan: Plan, templates: TemplateSet) -> str:
    lines = [action_to_nl(step, templates) for step in plan]
    lines.append(templates.plan_end_tag)
    return "\n".join(lines)


def _var_surface(i: int) -> str:
    names = ("x", "y", "z", "w")
    return names[i] if i < len(names) else f"v{i}"


def domain_to_nl(domain: Domain, templates: TemplateSet, include_costs: bool = False) -> str:
    """Lifted description of every action: imperative form, what it
    requires, and what it makes true and false."""
    lines = ["You can perform the following actions on the objects in front of you."]
    for act in domain.actions:
        binding = {p: _var_surface(i) for i, p in enumerate(act.params)}

        def render(a: Atom) -> str:
            pattern = templates.predicate_pattern(a.predicate)
            return pattern.format(
                *(binding.get(t, templates.name_object(t)) for t in a.args)
            )

        head = templates.action_pattern(act.name).format(
            *(binding[p] for p in act.params)
        )
        pre = "; ".join(render(a) for a in sorted(act.precondition)) or "nothing"
        adds = "; ".join(render(a) for a in sorted(act.add)) or "nothing"
        dels = "; ".join(render(a) for a in sorted(act.delete)) or "nothing"
        lines.append(
            f'To "{head}": requires that {pre}. Afterwards it is true that {adds}. '
            f"It stops being true that {dels}."
        )
    if include_costs:
        lines.append(
            "Each action has a cost of 1. The cost of a plan is the number of "
            "actions in it, and a cheaper plan is better."
        )
    return "\n".join(lines)


def problem_to_nl(
    problem, templates: TemplateSet, goal_order: list[Atom] | None = None
) -> str:
    init_text = state_to_nl(problem.init, templates)
    goal_text = goal_to_nl(problem.goal, templates, order=goal_order)
    return f"Initial state: {init_text}.\nGoal: {goal_text}."


PLAN_CUE = "Here is my plan:"


def assemble_prompt(
    domain_nl: str,
    examples: list[tuple[str, str]],
    query_problem_nl: str,
    cue: str = PLAN_CUE,
) -> str:
    """Domain card, then worked examples, then the query ending at the cue."""
    parts = [domain_nl]
    for problem_nl, plan_nl in examples:
        parts.append(f"{problem_nl}\n{cue}\n{plan_nl}")
    parts.append(f"{query_problem_nl}\n{cue}\n")
    return "\n\n".join(parts)


def _normalize_line(line: str) -> str:
    text = re.sub(r"\s+", " ", line.strip().lower())
    return text.rstrip(" .")


def _letters_only(text: str) -> str:
    return re.sub(r"[^a-z0-9]", "", text)


@dataclass
class ExtractionResult:
    plan: Plan
    methods: list[str]  # per line: "template" or "fallback"


def _exact_index(
    domain: Domain, objects: tuple[str, ...], templates: TemplateSet
) -> dict[str, GroundAction]:
    index: dict[str, GroundAction] = {}
    for action in ground_all(domain, objects):
        key = _normalize_line(action_to_nl(action, templates))
        index.setdefault(key, action)
    return index


def _fallback_parse(
    line: str, domain: Domain, objects: tuple[str, ...]
) -> GroundAction | None:
    from .core import ground

    condensed = _letters_only(line)
    best: tuple[int, int, str] | None = None
    for schema in domain.actions:
        pos = condensed.find(_letters_only(schema.name))
        if pos < 0:
            continue
        cand = (pos, -len(schema.name), schema.name)
        if best is None or cand < best:
            best = cand
    if best is None:
        return None
    schema = domain.action(best[2])
    universe = set(objects)
    args = [tok for tok in re.findall(r"[a-z0-9_-]+", line) if tok in universe]
    if len(args) != len(schema.params):
        return None
    return ground(schema, tuple(args))


def extract_plan_detailed(
    completion: str,
    domain: Domain,
    objects: tuple[str, ...] | list[str],
    templates: TemplateSet,
) -> ExtractionResult:
    tag = templates.plan_end_tag
    cut = completion.find(tag)
    if cut < 0:
        raise MissingPlanEndTagError(tag)
    body = completion[:cut]

    objects = tuple(objects)
    index = _exact_index(domain, objects, templates)
    steps: list[GroundAction] = []
    methods: list[str] = []
    for line_no, raw in enumerate(body.splitlines(), start=1):
        line = _normalize_line(raw)
        if not line:
            continue
        action = index.get(line)
        if action is not None:
            steps.append(action)
            methods.append("template")
            continue
        action = _fallback_parse(line, domain, objects)
        if action is None:
            raise UnparseableLineError(line_no, raw.strip())
        steps.append(action)
        methods.append("fallback")
    return ExtractionResult(plan=Plan(tuple(steps)), methods=methods)


def extract_plan(
    completion: str,
    domain: Domain,
    objects: tuple[str, ...] | list[str],
    templates: TemplateSet,
) -> Plan:
    return extract_plan_detailed(completion, domain, objects, templates).plan

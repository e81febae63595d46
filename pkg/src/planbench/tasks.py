"""The test-case curriculum: nine task families over blocksworld, each built
as a prompt plus a symbolic payload that suffices to score any completion
offline.

Payloads embed PDDL text, grounded-action keys like "(stack red blue)", and
atom keys like "(on red blue)", so instances serialize to JSON lines and a
prompt can always be re-rendered from its payload. That re-rendering path is
also what makes post-hoc disguising possible: rename the symbols in the
payload, switch to neutral templates, and render again.
"""

from __future__ import annotations

import dataclasses
import json
import random
import re
from dataclasses import dataclass, field
from typing import Callable

from . import blocks, nl, pddl, search
from .blocks import BlocksworldInstanceSpec
from .core import (
    Atom,
    Domain,
    Plan,
    Problem,
    State,
    execute,
    goal_satisfied,
    ground_all,
    parse_action_key,
    validate,
)

TASKS = (
    "plan_generation",
    "optimal_planning",
    "plan_execution",
    "goal_shuffle",
    "goal_full_to_partial",
    "goal_partial_to_full",
    "plan_reuse",
    "replanning",
    "generalization",
)

VERDICTS = ("correct", "incorrect", "ignored", "errored")


@dataclass
class TestInstance:
    id: str
    task: str
    seed: int
    prompt: str
    payload: dict
    examples_used: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class GeneralizationProgram:
    name: str
    applicable: Callable[[Problem], bool]
    trace: Callable[[Problem], Plan]


def _atom_from_key(key: str) -> Atom:
    parts = key.strip()[1:-1].split()
    return Atom(parts[0], tuple(parts[1:]))


def _state_from_keys(keys: list[str]) -> State:
    return State(frozenset(_atom_from_key(k) for k in keys))


def _plan_from_keys(keys: list[str], domain: Domain) -> Plan:
    return Plan(tuple(parse_action_key(k, domain) for k in keys))


_GROUND_CACHE: dict[tuple[Domain, tuple[str, ...]], list] = {}


def _ground_actions(domain: Domain, objects: tuple[str, ...]):
    key = (domain, objects)
    if key not in _GROUND_CACHE:
        _GROUND_CACHE[key] = ground_all(domain, objects)
    return _GROUND_CACHE[key]


def _rng_for(task: str, spec: BlocksworldInstanceSpec) -> random.Random:
    return random.Random(f"{task}:{spec.seed}:{spec.num_blocks}:{spec.goal_kind}")


def _derived_spec(rng: random.Random, spec: BlocksworldInstanceSpec, goal_kind: str | None = None) -> BlocksworldInstanceSpec:
    return BlocksworldInstanceSpec(
        num_blocks=spec.num_blocks,
        goal_kind=goal_kind or spec.goal_kind,
        seed=rng.getrandbits(48),
    )


def _solved(domain: Domain, problem: Problem) -> Plan:
    plan, _ = search.solve_optimal(domain, problem)
    return plan


def _fresh_solved(
    rng: random.Random,
    spec: BlocksworldInstanceSpec,
    domain: Domain,
    exclude: list[Problem],
    goal_kind: str | None = None,
) -> tuple[Problem, Plan]:
    """A solved instance distinct from everything in `exclude`."""
    while True:
        candidate = blocks.gen_instance(_derived_spec(rng, spec, goal_kind))
        if any(candidate.init == p.init and candidate.goal == p.goal for p in exclude):
            continue
        return candidate, _solved(domain, candidate)


def _sample_goal_over(
    rng: random.Random, problem: Problem, goal_kind: str
) -> frozenset[Atom]:
    """A fresh goal over the same blocks, unsatisfied in problem.init."""
    while True:
        stacks = blocks.sample_config(rng, problem.objects)
        placement = blocks.placement_atoms(stacks)
        if goal_kind == "full":
            if not placement <= problem.init.atoms:
                return placement
            continue
        on_facts = sorted(a for a in placement if a.predicate == blocks.ON)
        if not on_facts:
            continue
        k_max = min(len(problem.objects) - 2, len(on_facts))
        goal = frozenset(rng.sample(on_facts, rng.randint(1, k_max)))
        if not goal <= problem.init.atoms:
            return goal


def _partial_subset(
    rng: random.Random, full_goal: frozenset[Atom], init: State, num_blocks: int
) -> frozenset[Atom] | None:
    """Nonempty subset of the full goal's on-facts, unsatisfied at init."""
    on_facts = sorted(a for a in full_goal if a.predicate == blocks.ON)
    if not on_facts:
        return None
    k_max = min(num_blocks - 2, len(on_facts))
    for _ in range(32):
        goal = frozenset(rng.sample(on_facts, rng.randint(1, k_max)))
        if not goal <= init.atoms:
            return goal
    return None


# ---------------------------------------------------------------------------
# prompt rendering (shared by makers and by post-hoc disguising)


def _templates_for(domain: Domain, payload: dict) -> nl.TemplateSet:
    if payload.get("templates") == "neutral":
        return nl.neutral_templates(domain)
    return nl.blocksworld_templates()


def _example_block(example: dict, domain: Domain, templates: nl.TemplateSet, annotate_cost: bool) -> tuple[str, str]:
    problem = pddl.parse_problem(example["problem_pddl"], domain)
    plan = _plan_from_keys(example["plan"], domain)
    plan_nl = nl.plan_to_nl(plan, templates)
    if annotate_cost:
        plan_nl += f"\nThe cost of this plan is {len(plan)}."
    order = None
    if "goal_display_order" in example:
        order = [_atom_from_key(k) for k in example["goal_display_order"]]
    return nl.problem_to_nl(problem, templates, goal_order=order), plan_nl


def render_prompt(task: str, payload: dict) -> str:
    """Rebuild the prompt text from a payload alone."""
    domain = pddl.parse_domain(payload["domain_pddl"])
    templates = _templates_for(domain, payload)

    if task == "plan_execution":
        state = _state_from_keys(payload["init_state"])
        actions = _plan_from_keys(payload["actions"], domain)
        lines = [nl.domain_to_nl(domain, templates), ""]
        lines.append(f"Initial state: {nl.state_to_nl(state, templates)}.")
        if len(actions):
            lines.append("The following actions are performed in order:")
            lines.extend(nl.action_to_nl(a, templates) for a in actions)
        else:
            lines.append("No actions are performed.")
        lines.append(
            "After these actions, answer each question with yes or no, one answer per line."
        )
        for i, q in enumerate(payload["questions"], start=1):
            atom_text = nl.atom_to_nl(_atom_from_key(q["atom"]), templates)
            lines.append(f"{i}. Is it true that {atom_text}?")
        lines.append("Answers:")
        return "\n".join(lines)

    annotate = task == "optimal_planning"
    domain_nl = nl.domain_to_nl(domain, templates, include_costs=annotate)
    examples = [
        _example_block(ex, domain, templates, annotate)
        for ex in payload.get("examples", [])
    ]

    if task == "replanning":
        original = pddl.parse_problem(payload["original_problem_pddl"], domain)
        changed = pddl.parse_problem(payload["problem_pddl"], domain)
        prefix = _plan_from_keys(payload["executed_prefix"], domain)
        lines = [domain_nl, ""]
        lines.append(nl.problem_to_nl(original, templates))
        lines.append("Execution of this plan was started:")
        lines.extend(nl.action_to_nl(a, templates) for a in prefix)
        lines.append(
            "At this point the situation unexpectedly changed. The state is now: "
            f"{nl.state_to_nl(changed.init, templates)}."
        )
        lines.append(
            f"The goal is unchanged: {nl.goal_to_nl(changed.goal, templates)}."
        )
        lines.append(nl.PLAN_CUE)
        lines.append("")
        return "\n".join(lines)

    query = pddl.parse_problem(payload["problem_pddl"], domain)
    order = None
    if "goal_display_order" in payload:
        order = [_atom_from_key(k) for k in payload["goal_display_order"]]
    query_nl = nl.problem_to_nl(query, templates, goal_order=order)
    if task == "optimal_planning":
        query_nl += "\nFind the cheapest plan."
    return nl.assemble_prompt(domain_nl, examples, query_nl)


# ---------------------------------------------------------------------------
# task makers


def _base_payload(
    domain: Domain, spec: BlocksworldInstanceSpec, scoring_kind: str
) -> dict:
    return {
        "scoring_kind": scoring_kind,
        "templates": "blocksworld",
        "domain_pddl": pddl.emit_domain(domain),
        "num_blocks": spec.num_blocks,
    }


def _finish(
    task: str,
    spec: BlocksworldInstanceSpec,
    payload: dict,
    n_examples: int,
) -> TestInstance:
    instance_id = f"{task}-{spec.seed:012d}"
    return TestInstance(
        id=instance_id,
        task=task,
        seed=spec.seed,
        prompt=render_prompt(task, payload),
        payload=payload,
        examples_used=[f"{instance_id}-ex{i}" for i in range(n_examples)],
    )


def _example_entries(pairs: list[tuple[Problem, Plan]]) -> list[dict]:
    return [
        {"problem_pddl": pddl.emit_problem(p), "plan": list(plan.keys())}
        for p, plan in pairs
    ]


def make_plan_generation(spec: BlocksworldInstanceSpec, n_shots: int = 1) -> TestInstance:
    if n_shots < 1:
        raise ValueError("n_shots must be at least 1")
    domain = blocks.blocksworld_domain()
    rng = _rng_for("plan_generation", spec)
    query = blocks.gen_instance(spec)
    reference = _solved(domain, query)
    shown: list[tuple[Problem, Plan]] = []
    for _ in range(n_shots):
        shown.append(
            _fresh_solved(rng, spec, domain, [query] + [p for p, _ in shown])
        )
    templates = nl.blocksworld_templates()
    payload = _base_payload(domain, spec, "validate")
    payload.update(
        problem_pddl=pddl.emit_problem(query),
        optimal_cost=len(reference),
        reference=nl.plan_to_nl(reference, templates),
        examples=_example_entries(shown),
    )
    return _finish("plan_generation", spec, payload, n_shots)


def make_optimal_planning(spec: BlocksworldInstanceSpec, n_shots: int = 1) -> TestInstance:
    if n_shots < 1:
        raise ValueError("n_shots must be at least 1")
    domain = blocks.blocksworld_domain()
    rng = _rng_for("optimal_planning", spec)
    query = blocks.gen_instance(spec)
    reference = _solved(domain, query)
    shown: list[tuple[Problem, Plan]] = []
    for _ in range(n_shots):
        shown.append(
            _fresh_solved(rng, spec, domain, [query] + [p for p, _ in shown])
        )
    templates = nl.blocksworld_templates()
    payload = _base_payload(domain, spec, "validate_optimal")
    payload.update(
        problem_pddl=pddl.emit_problem(query),
        optimal_cost=len(reference),
        reference=nl.plan_to_nl(reference, templates),
        examples=_example_entries(shown),
    )
    return _finish("optimal_planning", spec, payload, n_shots)


def make_plan_execution(
    spec: BlocksworldInstanceSpec, walk_length: int | None = None, num_questions: int = 3
) -> TestInstance:
    domain = blocks.blocksworld_domain()
    rng = _rng_for("plan_execution", spec)
    objects = blocks.BLOCK_PALETTE[: spec.num_blocks]
    state = blocks.state_from_config(blocks.sample_config(rng, objects))
    length = walk_length if walk_length is not None else rng.randint(2, 4)

    actions = _ground_actions(domain, objects)
    walk = []
    current = state
    for _ in range(length):
        applicable_here = [a for a in actions if a.precondition <= current.atoms]
        step = rng.choice(applicable_here)
        walk.append(step)
        current = State((current.atoms - step.delete) | step.add)

    universe = {str(a) for a in _all_atoms(objects)}
    true_atoms = sorted(str(a) for a in current.atoms)
    false_atoms = sorted(universe - set(true_atoms))
    questions = []
    for _ in range(num_questions):
        want_yes = rng.random() < 0.5
        if (want_yes and true_atoms) or not false_atoms:
            key = rng.choice(true_atoms)
            true_atoms.remove(key)
            answer = "yes"
        else:
            key = rng.choice(false_atoms)
            false_atoms.remove(key)
            answer = "no"
        questions.append({"atom": key, "answer": answer})

    payload = _base_payload(domain, spec, "answers")
    payload.update(
        objects=list(objects),
        init_state=sorted(str(a) for a in state.atoms),
        actions=[a.key for a in walk],
        questions=questions,
        reference="\n".join(q["answer"] for q in questions),
    )
    return _finish("plan_execution", spec, payload, 0)


def _all_atoms(objects: tuple[str, ...]) -> list[Atom]:
    out = [Atom(blocks.ARM_EMPTY)]
    for b in objects:
        out.append(Atom(blocks.ON_TABLE, (b,)))
        out.append(Atom(blocks.CLEAR, (b,)))
        out.append(Atom(blocks.HOLDING, (b,)))
        for c in objects:
            if b != c:
                out.append(Atom(blocks.ON, (b, c)))
    return out


def make_goal_shuffle(spec: BlocksworldInstanceSpec, n_shots: int = 1) -> TestInstance:
    if n_shots < 1:
        raise ValueError("n_shots must be at least 1")
    domain = blocks.blocksworld_domain()
    rng = _rng_for("goal_shuffle", spec)
    base = blocks.gen_instance(spec)
    base_plan = _solved(domain, base)

    shown: list[tuple[Problem, Plan]] = []
    for _ in range(n_shots - 1):
        goal = _sample_goal_over(rng, base, spec.goal_kind)
        extra = dataclasses.replace(base, goal=goal)
        shown.append((extra, _solved(domain, extra)))
    shown.append((base, base_plan))

    canonical = sorted(base.goal)
    display = list(canonical)
    if len(display) >= 2:
        while display == canonical:
            rng.shuffle(display)

    payload = _base_payload(domain, spec, "validate")
    payload.update(
        problem_pddl=pddl.emit_problem(base),
        goal_display_order=[str(a) for a in display],
        optimal_cost=len(base_plan),
        reference=nl.plan_to_nl(base_plan, nl.blocksworld_templates()),
        examples=_example_entries(shown),
    )
    return _finish("goal_shuffle", spec, payload, n_shots)


def make_goal_full_to_partial(spec: BlocksworldInstanceSpec, n_shots: int = 1) -> TestInstance:
    if n_shots < 1:
        raise ValueError("n_shots must be at least 1")
    domain = blocks.blocksworld_domain()
    rng = _rng_for("goal_full_to_partial", spec)

    full_spec = dataclasses.replace(spec, goal_kind="full")
    while True:
        base = blocks.gen_instance(full_spec)
        subset = _partial_subset(rng, base.goal, base.init, spec.num_blocks)
        if subset is not None:
            break
        full_spec = dataclasses.replace(full_spec, seed=rng.getrandbits(48))
    base_plan = _solved(domain, base)

    shown: list[tuple[Problem, Plan]] = []
    for _ in range(n_shots - 1):
        goal = _sample_goal_over(rng, base, "full")
        extra = dataclasses.replace(base, goal=goal, goal_kind="full")
        shown.append((extra, _solved(domain, extra)))
    shown.append((base, base_plan))

    query = dataclasses.replace(base, goal=subset, goal_kind="partial")
    payload = _base_payload(domain, spec, "validate")
    payload.update(
        problem_pddl=pddl.emit_problem(query),
        optimal_cost=search.oracle_bfs(domain, query),
        reference=nl.plan_to_nl(base_plan, nl.blocksworld_templates()),
        examples=_example_entries(shown),
    )
    return _finish("goal_full_to_partial", spec, payload, n_shots)


def make_goal_partial_to_full(spec: BlocksworldInstanceSpec, n_shots: int = 1) -> TestInstance:
    if n_shots < 1:
        raise ValueError("n_shots must be at least 1")
    domain = blocks.blocksworld_domain()
    rng = _rng_for("goal_partial_to_full", spec)

    full_spec = dataclasses.replace(spec, goal_kind="full")
    while True:
        base = blocks.gen_instance(full_spec)
        subset = _partial_subset(rng, base.goal, base.init, spec.num_blocks)
        if subset is not None:
            break
        full_spec = dataclasses.replace(full_spec, seed=rng.getrandbits(48))
    reference = _solved(domain, base)

    shown: list[tuple[Problem, Plan]] = []
    for _ in range(n_shots - 1):
        goal = _sample_goal_over(rng, base, "partial")
        extra = dataclasses.replace(base, goal=goal, goal_kind="partial")
        shown.append((extra, _solved(domain, extra)))
    partial_example = dataclasses.replace(base, goal=subset, goal_kind="partial")
    shown.append((partial_example, _solved(domain, partial_example)))

    payload = _base_payload(domain, spec, "validate")
    payload.update(
        problem_pddl=pddl.emit_problem(base),
        optimal_cost=len(reference),
        reference=nl.plan_to_nl(reference, nl.blocksworld_templates()),
        examples=_example_entries(shown),
    )
    return _finish("goal_partial_to_full", spec, payload, n_shots)


def make_plan_reuse(spec: BlocksworldInstanceSpec, n_shots: int = 1) -> TestInstance:
    if n_shots < 1:
        raise ValueError("n_shots must be at least 1")
    domain = blocks.blocksworld_domain()
    rng = _rng_for("plan_reuse", spec)

    work_spec = spec
    while True:
        base = blocks.gen_instance(work_spec)
        base_plan = _solved(domain, base)
        if len(base_plan) >= 2:
            prefix_len = _pick_reuse_prefix(rng, domain, base, base_plan)
            if prefix_len is not None:
                break
        work_spec = dataclasses.replace(work_spec, seed=rng.getrandbits(48))

    prefix = Plan(base_plan.steps[:prefix_len])
    intermediate = execute(base.init, prefix).final_state
    goal = frozenset(
        a for a in intermediate.atoms if a.predicate in (blocks.ON, blocks.ON_TABLE)
    )
    query = dataclasses.replace(base, goal=goal, goal_kind="partial")

    shown: list[tuple[Problem, Plan]] = [(base, base_plan)]
    for _ in range(n_shots - 1):
        shown.insert(0, _fresh_solved(rng, spec, domain, [base] + [p for p, _ in shown]))

    payload = _base_payload(domain, spec, "validate")
    payload.update(
        problem_pddl=pddl.emit_problem(query),
        prefix_len=prefix_len,
        optimal_cost=search.oracle_bfs(domain, query),
        reference=nl.plan_to_nl(prefix, nl.blocksworld_templates()),
        examples=_example_entries(shown),
    )
    return _finish("plan_reuse", spec, payload, n_shots)


def _pick_reuse_prefix(
    rng: random.Random, domain: Domain, base: Problem, base_plan: Plan
) -> int | None:
    """A strict prefix length whose intermediate placement facts are not
    already satisfied at init. Length-1 prefixes never qualify (one pickup
    only removes placement facts), so usable references have >= 2 steps."""
    candidates = list(range(1, len(base_plan)))
    rng.shuffle(candidates)
    for length in candidates:
        intermediate = execute(base.init, Plan(base_plan.steps[:length])).final_state
        goal = frozenset(
            a for a in intermediate.atoms if a.predicate in (blocks.ON, blocks.ON_TABLE)
        )
        if goal and not goal <= base.init.atoms:
            return length
    return None


def make_replanning(spec: BlocksworldInstanceSpec) -> TestInstance:
    domain = blocks.blocksworld_domain()
    rng = _rng_for("replanning", spec)

    work_spec = spec
    while True:
        base = blocks.gen_instance(work_spec)
        base_plan = _solved(domain, base)
        surgery = _replanning_surgery(rng, base, base_plan)
        if surgery is not None:
            break
        work_spec = dataclasses.replace(work_spec, seed=rng.getrandbits(48))
    prefix_len, changed = surgery

    if not blocks.legal_state(changed, base.objects):
        raise AssertionError("replanning surgery produced an illegal state")
    query = Problem(
        domain_name=base.domain_name,
        objects=base.objects,
        init=changed,
        goal=base.goal,
        goal_kind=base.goal_kind,
    )
    reference = _solved(domain, query)

    payload = _base_payload(domain, spec, "validate")
    payload.update(
        problem_pddl=pddl.emit_problem(query),
        original_problem_pddl=pddl.emit_problem(base),
        executed_prefix=[s.key for s in base_plan.steps[:prefix_len]],
        optimal_cost=len(reference),
        reference=nl.plan_to_nl(reference, nl.blocksworld_templates()),
    )
    return _finish("replanning", spec, payload, 0)


def _replanning_surgery(
    rng: random.Random, base: Problem, base_plan: Plan
) -> tuple[int, State] | None:
    """Pick a prefix ending with a held block, then force that block onto a
    random clear block: remove holding(b) and clear(c), add on(b c),
    arm-empty and clear(b). Returns (prefix_len, changed state)."""
    holding_prefixes = [
        length
        for length in range(1, len(base_plan) + 1)
        if any(
            a.predicate == blocks.HOLDING
            for a in execute(base.init, Plan(base_plan.steps[:length])).final_state.atoms
        )
    ]
    rng.shuffle(holding_prefixes)
    for length in holding_prefixes:
        end = execute(base.init, Plan(base_plan.steps[:length])).final_state
        held = next(a.args[0] for a in end.atoms if a.predicate == blocks.HOLDING)
        clear_blocks = sorted(
            a.args[0] for a in end.atoms if a.predicate == blocks.CLEAR
        )
        rng.shuffle(clear_blocks)
        for target in clear_blocks:
            atoms = set(end.atoms)
            atoms.discard(Atom(blocks.HOLDING, (held,)))
            atoms.discard(Atom(blocks.CLEAR, (target,)))
            atoms.add(Atom(blocks.ON, (held, target)))
            atoms.add(Atom(blocks.ARM_EMPTY))
            atoms.add(Atom(blocks.CLEAR, (held,)))
            changed = State(frozenset(atoms))
            if not goal_satisfied(changed, base.goal):
                return length, changed
    return None


def unstack_all_then_build() -> GeneralizationProgram:
    """Phase 1 puts every block on the table; phase 2 builds each goal tower
    bottom-up. Applicable to any fully specified goal configuration."""
    domain = blocks.blocksworld_domain()

    def applicable(problem: Problem) -> bool:
        placed = set()
        for a in problem.goal:
            if a.predicate == blocks.ON_TABLE:
                placed.add(a.args[0])
            elif a.predicate == blocks.ON:
                placed.add(a.args[0])
            else:
                return False
        return placed == set(problem.objects)

    def trace(problem: Problem) -> Plan:
        steps = []
        state = problem.init
        while True:
            stacked_tops = sorted(
                a.args[0]
                for a in state.atoms
                if a.predicate == blocks.ON
                and Atom(blocks.CLEAR, (a.args[0],)) in state.atoms
            )
            if not stacked_tops:
                break
            top = stacked_tops[0]
            below = next(
                a.args[1]
                for a in state.atoms
                if a.predicate == blocks.ON and a.args[0] == top
            )
            for action_name, args in (("unstack", (top, below)), ("putdown", (top,))):
                ga = _ground_action(domain, action_name, args)
                state = State((state.atoms - ga.delete) | ga.add)
                steps.append(ga)
        above: dict[str, str] = {}
        bottoms = []
        for a in sorted(problem.goal):
            if a.predicate == blocks.ON:
                above[a.args[1]] = a.args[0]
            elif a.predicate == blocks.ON_TABLE:
                bottoms.append(a.args[0])
        for bottom in sorted(bottoms):
            current = bottom
            while current in above:
                nxt = above[current]
                for action_name, args in (("pickup", (nxt,)), ("stack", (nxt, current))):
                    ga = _ground_action(domain, action_name, args)
                    state = State((state.atoms - ga.delete) | ga.add)
                    steps.append(ga)
                current = nxt
        return Plan(tuple(steps))

    return GeneralizationProgram(
        name="unstack-all-then-build", applicable=applicable, trace=trace
    )


def _ground_action(domain: Domain, name: str, args: tuple[str, ...]):
    from .core import ground

    return ground(domain.action(name), args)


def make_generalization(
    spec: BlocksworldInstanceSpec,
    program: GeneralizationProgram | None = None,
    n_shots: int = 1,
) -> TestInstance:
    if n_shots < 1:
        raise ValueError("n_shots must be at least 1")
    domain = blocks.blocksworld_domain()
    rng = _rng_for("generalization", spec)
    program = program or unstack_all_then_build()

    full_spec = dataclasses.replace(spec, goal_kind="full")
    query = blocks.gen_instance(full_spec)
    if not program.applicable(query):
        raise ValueError(f"program {program.name} not applicable to the query")
    reference = program.trace(query)
    if not validate(query, reference).valid:
        raise AssertionError("program trace does not validate")

    shown: list[tuple[Problem, Plan]] = []
    exclude = [query]
    while len(shown) < n_shots:
        candidate = blocks.gen_instance(_derived_spec(rng, full_spec))
        if any(candidate.init == p.init and candidate.goal == p.goal for p in exclude):
            continue
        if not program.applicable(candidate):
            continue
        shown.append((candidate, program.trace(candidate)))
        exclude.append(candidate)

    payload = _base_payload(domain, full_spec, "validate")
    payload.update(
        problem_pddl=pddl.emit_problem(query),
        program=program.name,
        optimal_cost=search.oracle_bfs(domain, query),
        reference=nl.plan_to_nl(reference, nl.blocksworld_templates()),
        examples=_example_entries(shown),
    )
    return _finish("generalization", spec, payload, n_shots)


_MAKERS: dict[str, Callable] = {
    "plan_generation": make_plan_generation,
    "optimal_planning": make_optimal_planning,
    "plan_execution": lambda spec, n_shots=1: make_plan_execution(spec),
    "goal_shuffle": make_goal_shuffle,
    "goal_full_to_partial": make_goal_full_to_partial,
    "goal_partial_to_full": make_goal_partial_to_full,
    "plan_reuse": make_plan_reuse,
    "replanning": lambda spec, n_shots=1: make_replanning(spec),
    "generalization": make_generalization,
}


def make_task_instance(
    task: str,
    seed: int,
    num_blocks: int,
    goal_kind: str = "full",
    n_shots: int = 1,
    disguise_mode: str = "none",
    disguise_seed: int | None = None,
    lexicon: dict | None = None,
) -> TestInstance:
    if task not in _MAKERS:
        raise ValueError(f"unknown task {task!r}; expected one of {TASKS}")
    spec = BlocksworldInstanceSpec(num_blocks=num_blocks, goal_kind=goal_kind, seed=seed)
    instance = _MAKERS[task](spec, n_shots=n_shots)
    if disguise_mode != "none":
        instance = disguise_test_instance(
            instance, disguise_mode, seed=disguise_seed, lexicon=lexicon
        )
    return instance


# ---------------------------------------------------------------------------
# scoring


def score_completion(instance: TestInstance, completion: str) -> tuple[str, dict]:
    """Classify a raw completion as correct / incorrect / ignored using only
    the instance payload. Never raises on malformed completions."""
    payload = instance.payload
    kind = payload["scoring_kind"]
    domain = pddl.parse_domain(payload["domain_pddl"])

    if kind == "answers":
        expected = [q["answer"] for q in payload["questions"]]
        found = re.findall(r"\b(yes|no)\b", completion.lower())
        if len(found) < len(expected):
            return "ignored", {"reason": f"found {len(found)} of {len(expected)} answers"}
        got = found[: len(expected)]
        verdict = "correct" if got == expected else "incorrect"
        return verdict, {"answers": got}

    problem = pddl.parse_problem(payload["problem_pddl"], domain)
    templates = _templates_for(domain, payload)
    try:
        extraction = nl.extract_plan_detailed(completion, domain, problem.objects, templates)
    except nl.ExtractionError as exc:
        return "ignored", {"reason": str(exc)}
    plan = extraction.plan
    report = validate(problem, plan)
    diag = {
        "plan": list(plan.keys()),
        "methods": extraction.methods,
        "valid": report.valid,
        "detail": report.summary(),
        "cost": len(plan),
    }
    if kind == "validate":
        return ("correct" if report.valid else "incorrect"), diag
    if kind == "validate_optimal":
        ok = report.valid and len(plan) == payload["optimal_cost"]
        if report.valid and not ok:
            diag["detail"] = (
                f"valid but cost {len(plan)} != optimal {payload['optimal_cost']}"
            )
        return ("correct" if ok else "incorrect"), diag
    raise ValueError(f"unknown scoring kind {kind!r}")


def reference_completion(instance: TestInstance) -> str:
    return instance.payload["reference"]


def corrupt_reference(instance: TestInstance, rng: random.Random) -> str:
    """A single-edit corruption of the ground truth that is guaranteed to
    score incorrect: for plans, delete one non-final action (breaks the
    strict pickup/release alternation of blocksworld plans); for yes/no
    answer sheets, flip one answer."""
    payload = instance.payload
    reference = payload["reference"]
    if payload["scoring_kind"] == "answers":
        answers = reference.split("\n")
        i = rng.randrange(len(answers))
        answers[i] = "no" if answers[i] == "yes" else "yes"
        return "\n".join(answers)

    tag = nl.DEFAULT_PLAN_END_TAG
    body = reference.split(tag)[0]
    lines = [l for l in body.splitlines() if l.strip()]
    if not lines:
        raise ValueError("reference plan is empty; nothing to corrupt")
    if len(lines) >= 2:
        drop = rng.randrange(len(lines) - 1)
    else:
        drop = 0
    del lines[drop]
    return "\n".join(lines + [tag])


# ---------------------------------------------------------------------------
# disguising a built instance


def disguise_test_instance(
    instance: TestInstance,
    mode: str,
    seed: int | None = None,
    lexicon: dict | None = None,
) -> TestInstance:
    domain = pddl.parse_domain(instance.payload["domain_pddl"])
    payload = dict(instance.payload)

    problem_keys = [k for k in ("problem_pddl", "original_problem_pddl") if k in payload]
    problems = [pddl.parse_problem(payload[k], domain) for k in problem_keys]
    example_problems = [
        pddl.parse_problem(ex["problem_pddl"], domain)
        for ex in payload.get("examples", [])
    ]

    new_domain, renamed, mapping = blocks.disguise(
        domain, problems + example_problems, mode, seed=seed, lexicon=lexicon
    )
    renamed_problems = renamed[: len(problems)]
    renamed_examples = renamed[len(problems) :]
    templates = nl.neutral_templates(new_domain)

    payload["domain_pddl"] = pddl.emit_domain(new_domain)
    payload["templates"] = "neutral"
    for key, problem in zip(problem_keys, renamed_problems):
        payload[key] = pddl.emit_problem(problem)

    def rename_keys(keys: list[str]) -> list[str]:
        plan = _plan_from_keys(keys, domain)
        return list(blocks.rename_plan(plan, mapping, new_domain).keys())

    if "examples" in payload:
        payload["examples"] = [
            {**ex, "problem_pddl": pddl.emit_problem(rp), "plan": rename_keys(ex["plan"])}
            for ex, rp in zip(payload["examples"], renamed_examples)
        ]
    if "executed_prefix" in payload:
        payload["executed_prefix"] = rename_keys(payload["executed_prefix"])
    if "actions" in payload:
        payload["actions"] = rename_keys(payload["actions"])
    if "goal_display_order" in payload:
        payload["goal_display_order"] = [
            str(blocks.rename_atom(_atom_from_key(k), mapping))
            for k in payload["goal_display_order"]
        ]
    if "init_state" in payload:
        payload["init_state"] = sorted(
            str(blocks.rename_atom(_atom_from_key(k), mapping))
            for k in payload["init_state"]
        )
    if "questions" in payload:
        payload["questions"] = [
            {**q, "atom": str(blocks.rename_atom(_atom_from_key(q["atom"]), mapping))}
            for q in payload["questions"]
        ]
    if payload["scoring_kind"] != "answers" and "reference" in payload:
        original_templates = _templates_for(domain, instance.payload)
        ref_plan = nl.extract_plan(
            instance.payload["reference"], domain,
            pddl.parse_problem(instance.payload["problem_pddl"], domain).objects,
            original_templates,
        )
        disguised_ref = blocks.rename_plan(ref_plan, mapping, new_domain)
        payload["reference"] = nl.plan_to_nl(disguised_ref, templates)

    disguised = TestInstance(
        id=f"{instance.id}-{mode}",
        task=instance.task,
        seed=instance.seed,
        prompt=render_prompt(instance.task, payload),
        payload=payload,
        examples_used=list(instance.examples_used),
    )
    disguised.payload["disguise"] = {
        "mode": mode,
        "seed": seed,
        "rename": mapping.rename,
    }
    return disguised


# ---------------------------------------------------------------------------
# batch generation and persistence


def generate_curriculum(
    task: str,
    n: int,
    seed: int,
    num_blocks: int | None = None,
    goal_kind: str | None = None,
    n_shots: int = 1,
    disguise_mode: str = "none",
) -> list[TestInstance]:
    """n instances of one family with per-instance derived seeds."""
    rng = random.Random(f"curriculum:{task}:{seed}")
    out = []
    for _ in range(n):
        # Size skew keeps most optimal plans at 8 steps or fewer.
        nb = num_blocks if num_blocks is not None else rng.choices((3, 4, 5), weights=(2, 2, 1))[0]
        gk = goal_kind if goal_kind is not None else rng.choice(("full", "partial"))
        instance_seed = rng.getrandbits(48)
        out.append(
            make_task_instance(
                task,
                seed=instance_seed,
                num_blocks=nb,
                goal_kind=gk,
                n_shots=n_shots,
                disguise_mode=disguise_mode,
                disguise_seed=rng.getrandbits(32) if disguise_mode == "randomized" else None,
            )
        )
    return out


def save_instances(instances: list[TestInstance], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(json.dumps(dataclasses.asdict(inst)) + "\n")


def load_instances(path: str) -> list[TestInstance]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            out.append(TestInstance(**json.loads(line)))
    return out


def export_finetune_dataset(
    problems: list[Problem],
    plans: list[Plan],
    path: str,
    templates: nl.TemplateSet | None = None,
) -> int:
    """JSON-lines {prompt, completion} pairs for supervised tuning. Every
    plan must validate against its problem."""
    templates = templates or nl.blocksworld_templates()
    if len(problems) != len(plans):
        raise ValueError("problems and plans must pair up")
    records = []
    for i, (problem, plan) in enumerate(zip(problems, plans)):
        report = validate(problem, plan)
        if not report.valid:
            raise ValueError(f"plan {i} is invalid: {report.summary()}")
        prompt = nl.problem_to_nl(problem, templates) + "\n" + nl.PLAN_CUE + "\n"
        records.append({"prompt": prompt, "completion": nl.plan_to_nl(plan, templates)})
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    return len(records)

"""The concrete blocksworld domain: instance generation, state legality,
and name disguising ("mystery" variants).

Initial and goal configurations are sampled uniformly over all legal
arrangements of n distinguishable blocks into stacks. The count of such
arrangements is sum_k C(n-1,k-1) * n!/k! (13 for n=3, 73 for n=4, 501 for
n=5); sampling picks the stack count k with probability proportional to its
share, then a uniform permutation, then a uniform choice of cut points.
"""

from __future__ import annotations

import json
import math
import random
import string
from dataclasses import dataclass
from importlib import resources

from .core import Atom, Domain, Plan, Problem, State, atom, ground

BLOCK_PALETTE = ("red", "blue", "orange", "yellow", "white", "black", "cyan", "magenta")

ON = "on"
ON_TABLE = "on-table"
CLEAR = "clear"
HOLDING = "holding"
ARM_EMPTY = "arm-empty"


class LexiconTooSmallError(Exception):
    pass


def blocksworld_domain() -> Domain:
    """Standard 4-operator blocksworld with a one-block gripper."""
    from .core import ActionSchema, PredicateSchema

    ob, under = "?ob", "?underob"
    predicates = (
        PredicateSchema(ON, (ob, under)),
        PredicateSchema(ON_TABLE, (ob,)),
        PredicateSchema(CLEAR, (ob,)),
        PredicateSchema(HOLDING, (ob,)),
        PredicateSchema(ARM_EMPTY, ()),
    )
    actions = (
        ActionSchema(
            name="pickup",
            params=(ob,),
            precondition=frozenset({atom(CLEAR, ob), atom(ON_TABLE, ob), atom(ARM_EMPTY)}),
            add=frozenset({atom(HOLDING, ob)}),
            delete=frozenset({atom(CLEAR, ob), atom(ON_TABLE, ob), atom(ARM_EMPTY)}),
        ),
        ActionSchema(
            name="putdown",
            params=(ob,),
            precondition=frozenset({atom(HOLDING, ob)}),
            add=frozenset({atom(ON_TABLE, ob), atom(CLEAR, ob), atom(ARM_EMPTY)}),
            delete=frozenset({atom(HOLDING, ob)}),
        ),
        ActionSchema(
            name="stack",
            params=(ob, under),
            precondition=frozenset({atom(HOLDING, ob), atom(CLEAR, under)}),
            add=frozenset({atom(ON, ob, under), atom(CLEAR, ob), atom(ARM_EMPTY)}),
            delete=frozenset({atom(HOLDING, ob), atom(CLEAR, under)}),
        ),
        ActionSchema(
            name="unstack",
            params=(ob, under),
            precondition=frozenset({atom(ON, ob, under), atom(CLEAR, ob), atom(ARM_EMPTY)}),
            add=frozenset({atom(HOLDING, ob), atom(CLEAR, under)}),
            delete=frozenset({atom(ON, ob, under), atom(CLEAR, ob), atom(ARM_EMPTY)}),
        ),
    )
    return Domain(name="blocksworld", predicates=predicates, actions=actions)


def is_blocksworld(domain: Domain) -> bool:
    """True when the domain uses the undisguised blocksworld vocabulary."""
    preds = {(p.name, p.arity) for p in domain.predicates}
    wanted = {(ON, 2), (ON_TABLE, 1), (CLEAR, 1), (HOLDING, 1), (ARM_EMPTY, 0)}
    acts = {a.name for a in domain.actions}
    return wanted <= preds and {"pickup", "putdown", "stack", "unstack"} <= acts


@dataclass(frozen=True)
class BlocksworldInstanceSpec:
    num_blocks: int
    goal_kind: str = "full"
    seed: int = 0

    def __post_init__(self) -> None:
        if not 3 <= self.num_blocks <= 5:
            raise ValueError("num_blocks must be between 3 and 5")
        if self.goal_kind not in ("full", "partial"):
            raise ValueError(f"unknown goal_kind {self.goal_kind!r}")


def _config_counts(n: int) -> list[int]:
    # counts[k-1] = number of arrangements of n blocks into exactly k stacks
    return [math.comb(n - 1, k - 1) * math.factorial(n) // math.factorial(k) for k in range(1, n + 1)]


def sample_config(rng: random.Random, blocks: tuple[str, ...]) -> tuple[tuple[str, ...], ...]:
    """Uniform random arrangement of blocks into stacks (bottom first).

    Returned stacks are sorted by bottom block so equal configurations
    compare equal regardless of sampling path.
    """
    n = len(blocks)
    counts = _config_counts(n)
    k = rng.choices(range(1, n + 1), weights=counts)[0]
    perm = rng.sample(list(blocks), n)
    cuts = sorted(rng.sample(range(1, n), k - 1))
    bounds = [0] + cuts + [n]
    stacks = [tuple(perm[bounds[i] : bounds[i + 1]]) for i in range(k)]
    stacks.sort(key=lambda s: s[0])
    return tuple(stacks)


def state_from_config(stacks: tuple[tuple[str, ...], ...]) -> State:
    atoms = {atom(ARM_EMPTY)}
    for stack in stacks:
        atoms.add(atom(ON_TABLE, stack[0]))
        for above, below in zip(stack[1:], stack):
            atoms.add(atom(ON, above, below))
        atoms.add(atom(CLEAR, stack[-1]))
    return State(frozenset(atoms))


def placement_atoms(stacks: tuple[tuple[str, ...], ...]) -> frozenset[Atom]:
    """The on/on-table facts of a configuration (no clear or arm atoms)."""
    atoms = set()
    for stack in stacks:
        atoms.add(atom(ON_TABLE, stack[0]))
        for above, below in zip(stack[1:], stack):
            atoms.add(atom(ON, above, below))
    return frozenset(atoms)


def gen_instance(spec: BlocksworldInstanceSpec) -> Problem:
    """Random solvable instance; init and goal drawn uniformly and never
    equal in the facts the goal asks for."""
    rng = random.Random(spec.seed)
    n = spec.num_blocks
    blocks = BLOCK_PALETTE[:n]
    init_stacks = sample_config(rng, blocks)
    init = state_from_config(init_stacks)

    while True:
        goal_stacks = sample_config(rng, blocks)
        if spec.goal_kind == "full":
            goal = placement_atoms(goal_stacks)
            if not goal <= init.atoms:
                break
        else:
            on_facts = sorted(a for a in placement_atoms(goal_stacks) if a.predicate == ON)
            if not on_facts:
                continue
            k_max = min(n - 2, len(on_facts))
            k = rng.randint(1, k_max)
            goal = frozenset(rng.sample(on_facts, k))
            if not goal <= init.atoms:
                break

    return Problem(
        domain_name="blocksworld",
        objects=blocks,
        init=init,
        goal=goal,
        goal_kind=spec.goal_kind,
    )


def legal_state(state: State, objects: tuple[str, ...] | list[str]) -> bool:
    """Physical consistency of a blocksworld state.

    Checks: every block is exactly one of held / on the table / on exactly
    one block; at most one block held; arm-empty iff nothing held; clear(b)
    iff b is not held and nothing sits on b; at most one block directly on
    any block; the on-relation is acyclic; no stray objects or predicates.
    """
    objs = set(objects)
    held: set[str] = set()
    on_table: set[str] = set()
    supports: dict[str, list[str]] = {b: [] for b in objs}
    occupants: dict[str, list[str]] = {b: [] for b in objs}
    clear: set[str] = set()
    arm_empty = False

    for a in state.atoms:
        if any(t not in objs for t in a.args):
            return False
        if a.predicate == HOLDING:
            held.add(a.args[0])
        elif a.predicate == ON_TABLE:
            on_table.add(a.args[0])
        elif a.predicate == ON:
            top, below = a.args
            supports[top].append(below)
            occupants[below].append(top)
        elif a.predicate == CLEAR:
            clear.add(a.args[0])
        elif a.predicate == ARM_EMPTY:
            arm_empty = True
        else:
            return False

    if len(held) > 1:
        return False
    if arm_empty == bool(held):
        return False
    for b in objs:
        ways = (b in held) + (b in on_table) + len(supports[b])
        if ways != 1:
            return False
        if len(occupants[b]) > 1:
            return False
        should_be_clear = b not in held and not occupants[b]
        if (b in clear) != should_be_clear:
            return False
    # acyclicity of the on-relation
    for start in objs:
        seen = set()
        b = start
        while supports[b]:
            b = supports[b][0]
            if b in seen or b == start:
                return False
            seen.add(b)
    return True


@dataclass(frozen=True)
class DisguiseMapping:
    mode: str  # "deceptive" or "randomized"
    rename: dict[str, str]
    seed: int | None = None

    def __post_init__(self) -> None:
        values = list(self.rename.values())
        if len(set(values)) != len(values):
            raise ValueError("rename mapping is not a bijection")
        if set(values) & set(self.rename.keys()):
            raise ValueError("renamed token collides with an original token")

    def apply(self, name: str) -> str:
        return self.rename.get(name, name)

    def inverted(self) -> DisguiseMapping:
        return DisguiseMapping(
            mode=self.mode,
            rename={v: k for k, v in self.rename.items()},
            seed=self.seed,
        )


def load_lexicon(path: str | None = None) -> dict:
    """Deceptive word table: {"map": {name: word}, "extra": [spare words]}."""
    if path is None:
        text = resources.files("planbench.data").joinpath("deceptive_lexicon.json").read_text()
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return json.loads(text)


def _collect_names(domain: Domain, problems: list[Problem]) -> list[str]:
    names = [a.name for a in domain.actions] + [p.name for p in domain.predicates]
    seen = set(names)
    for prob in problems:
        for obj in prob.objects:
            if obj not in seen:
                names.append(obj)
                seen.add(obj)
    return names


def _random_token(rng: random.Random, taken: set[str]) -> str:
    while True:
        head = rng.choice(string.ascii_lowercase)
        tail = "".join(rng.choices(string.ascii_lowercase + string.digits, k=7))
        tok = head + tail
        if tok not in taken:
            return tok


def build_mapping(
    domain: Domain,
    problems: list[Problem],
    mode: str,
    seed: int | None = None,
    lexicon: dict | None = None,
) -> DisguiseMapping:
    names = _collect_names(domain, problems)
    originals = set(names)
    rename: dict[str, str] = {}
    if mode == "randomized":
        if seed is None:
            raise ValueError("randomized mode requires a seed")
        rng = random.Random(seed)
        taken = set(originals)
        for name in names:
            tok = _random_token(rng, taken)
            rename[name] = tok
            taken.add(tok)
    elif mode == "deceptive":
        lex = lexicon if lexicon is not None else load_lexicon()
        table = dict(lex.get("map", {}))
        extra = list(lex.get("extra", []))
        taken = set(originals) | set(table.values())
        for name in names:
            if name in table:
                word = table[name]
                if word in originals:
                    raise LexiconTooSmallError(
                        f"lexicon word {word!r} collides with an original name"
                    )
            else:
                while extra and (extra[0] in taken):
                    extra.pop(0)
                if not extra:
                    raise LexiconTooSmallError(
                        f"lexicon has no word left for {name!r}"
                    )
                word = extra.pop(0)
                taken.add(word)
            rename[name] = word
    else:
        raise ValueError(f"unknown disguise mode {mode!r}")
    return DisguiseMapping(mode=mode, rename=rename, seed=seed)


def rename_atom(a: Atom, mapping: DisguiseMapping) -> Atom:
    args = tuple(t if t.startswith("?") else mapping.apply(t) for t in a.args)
    return Atom(mapping.apply(a.predicate), args)


def rename_domain(domain: Domain, mapping: DisguiseMapping) -> Domain:
    from .core import ActionSchema, PredicateSchema

    predicates = tuple(
        PredicateSchema(mapping.apply(p.name), p.params) for p in domain.predicates
    )
    actions = tuple(
        ActionSchema(
            name=mapping.apply(a.name),
            params=a.params,
            precondition=frozenset(rename_atom(x, mapping) for x in a.precondition),
            add=frozenset(rename_atom(x, mapping) for x in a.add),
            delete=frozenset(rename_atom(x, mapping) for x in a.delete),
        )
        for a in domain.actions
    )
    return Domain(name=domain.name, predicates=predicates, actions=actions)


def rename_problem(problem: Problem, mapping: DisguiseMapping) -> Problem:
    return Problem(
        domain_name=problem.domain_name,
        objects=tuple(mapping.apply(o) for o in problem.objects),
        init=State(frozenset(rename_atom(a, mapping) for a in problem.init.atoms)),
        goal=frozenset(rename_atom(a, mapping) for a in problem.goal),
        goal_kind=problem.goal_kind,
    )


def rename_plan(plan: Plan, mapping: DisguiseMapping, target_domain: Domain) -> Plan:
    steps = []
    for step in plan:
        schema = target_domain.action(mapping.apply(step.schema))
        steps.append(ground(schema, tuple(mapping.apply(t) for t in step.args)))
    return Plan(tuple(steps))


def disguise(
    domain: Domain,
    problems: list[Problem],
    mode: str,
    seed: int | None = None,
    lexicon: dict | None = None,
) -> tuple[Domain, list[Problem], DisguiseMapping]:
    """Rename every action, predicate and object name by a fresh bijection.

    Structure (arities, effect shapes, init/goal layout) is untouched, so
    plan validity and optimal cost carry over exactly.
    """
    mapping = build_mapping(domain, problems, mode, seed=seed, lexicon=lexicon)
    new_domain = rename_domain(domain, mapping)
    new_problems = [rename_problem(p, mapping) for p in problems]
    return new_domain, new_problems, mapping


def undisguise(
    domain: Domain, problems: list[Problem], mapping: DisguiseMapping
) -> tuple[Domain, list[Problem]]:
    inv = mapping.inverted()
    return rename_domain(domain, inv), [rename_problem(p, inv) for p in problems]

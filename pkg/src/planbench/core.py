"""STRIPS world model: domains, problems, states, grounded actions, plan validation.

Everything here is immutable after construction and hashable, so states can be
used as dict keys during search and traces are reproducible.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass


class ModelError(Exception):
    """Base class for world-model construction and execution errors."""


class ArityMismatchError(ModelError):
    pass


class UnknownPredicateError(ModelError):
    pass


class InapplicableActionError(ModelError):
    def __init__(self, action: GroundAction, missing: frozenset[Atom]):
        self.action = action
        self.missing = missing
        atoms = ", ".join(str(a) for a in sorted(missing, key=str))
        super().__init__(f"action {action.key} not applicable, missing: {atoms}")


def is_variable(term: str) -> bool:
    return term.startswith("?")


@dataclass(frozen=True, order=True)
class Atom:
    """A predicate applied to terms. Ground iff no term is a ?variable."""

    predicate: str
    args: tuple[str, ...] = ()

    @property
    def grounded(self) -> bool:
        return not any(is_variable(t) for t in self.args)

    def substitute(self, binding: dict[str, str]) -> Atom:
        return Atom(self.predicate, tuple(binding.get(t, t) for t in self.args))

    def __str__(self) -> str:
        if not self.args:
            return f"({self.predicate})"
        return f"({self.predicate} {' '.join(self.args)})"


def atom(predicate: str, *args: str) -> Atom:
    """Shorthand constructor used heavily in tests."""
    return Atom(predicate, tuple(args))


@dataclass(frozen=True)
class PredicateSchema:
    name: str
    params: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.name:
            raise ModelError("predicate name must be nonempty")
        if len(set(self.params)) != len(self.params):
            raise ModelError(f"duplicate parameter in predicate {self.name}")

    @property
    def arity(self) -> int:
        return len(self.params)


@dataclass(frozen=True)
class ActionSchema:
    """Lifted action: conjunctive positive precondition, add and delete effects."""

    name: str
    params: tuple[str, ...]
    precondition: frozenset[Atom]
    add: frozenset[Atom]
    delete: frozenset[Atom]

    def __post_init__(self) -> None:
        if self.add & self.delete:
            raise ModelError(f"action {self.name}: add and delete effects overlap")
        declared = set(self.params)
        for group in (self.precondition, self.add, self.delete):
            for a in group:
                for t in a.args:
                    if is_variable(t) and t not in declared:
                        raise ModelError(
                            f"action {self.name}: variable {t} not in parameter list"
                        )


@dataclass(frozen=True)
class Domain:
    name: str
    predicates: tuple[PredicateSchema, ...]
    actions: tuple[ActionSchema, ...]

    def __post_init__(self) -> None:
        pred_names = [p.name for p in self.predicates]
        if len(set(pred_names)) != len(pred_names):
            raise ModelError("duplicate predicate name in domain")
        act_names = [a.name for a in self.actions]
        if len(set(act_names)) != len(act_names):
            raise ModelError("duplicate action name in domain")
        arities = {p.name: p.arity for p in self.predicates}
        for act in self.actions:
            for group in (act.precondition, act.add, act.delete):
                for a in group:
                    if a.predicate not in arities:
                        raise UnknownPredicateError(
                            f"action {act.name} uses unknown predicate {a.predicate}"
                        )
                    if len(a.args) != arities[a.predicate]:
                        raise ArityMismatchError(
                            f"action {act.name}: {a} has arity {len(a.args)}, "
                            f"predicate {a.predicate} expects {arities[a.predicate]}"
                        )

    def predicate(self, name: str) -> PredicateSchema:
        for p in self.predicates:
            if p.name == name:
                return p
        raise UnknownPredicateError(name)

    def action(self, name: str) -> ActionSchema:
        for a in self.actions:
            if a.name == name:
                return a
        raise ModelError(f"unknown action {name}")


@dataclass(frozen=True)
class State:
    """Closed-world state: the set of atoms that hold (absent means false)."""

    atoms: frozenset[Atom] = frozenset()

    def __post_init__(self) -> None:
        if not isinstance(self.atoms, frozenset):
            object.__setattr__(self, "atoms", frozenset(self.atoms))
        for a in self.atoms:
            if not a.grounded:
                raise ModelError(f"state contains lifted atom {a}")

    def holds(self, a: Atom) -> bool:
        return a in self.atoms

    def satisfies(self, goal: frozenset[Atom]) -> bool:
        return goal <= self.atoms

    def canonical(self) -> tuple[Atom, ...]:
        """Sorted atom tuple; the deterministic serialization order."""
        return tuple(sorted(self.atoms))

    def __iter__(self):
        return iter(self.atoms)

    def __len__(self) -> int:
        return len(self.atoms)

    def __str__(self) -> str:
        return " ".join(str(a) for a in self.canonical())


@dataclass(frozen=True)
class GroundAction:
    """An action schema with objects substituted for every parameter."""

    schema: str
    args: tuple[str, ...]
    precondition: frozenset[Atom]
    add: frozenset[Atom]
    delete: frozenset[Atom]

    @property
    def key(self) -> str:
        """Canonical one-line form, also the serialization used in plan files."""
        if not self.args:
            return f"({self.schema})"
        return f"({self.schema} {' '.join(self.args)})"

    def __str__(self) -> str:
        return self.key


@dataclass(frozen=True)
class Plan:
    steps: tuple[GroundAction, ...] = ()

    @property
    def cost(self) -> int:
        # Unit action cost: cost is plan length by definition.
        return len(self.steps)

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def __getitem__(self, i):
        return self.steps[i]

    def keys(self) -> tuple[str, ...]:
        return tuple(s.key for s in self.steps)

    def __str__(self) -> str:
        return "\n".join(s.key for s in self.steps)


@dataclass(frozen=True)
class Problem:
    domain_name: str
    objects: tuple[str, ...]
    init: State
    goal: frozenset[Atom]
    goal_kind: str = "partial"  # "full" or "partial"

    def __post_init__(self) -> None:
        if not self.goal:
            raise ModelError("goal nonempty violated")
        if self.goal_kind not in ("full", "partial"):
            raise ModelError(f"unknown goal_kind {self.goal_kind!r}")
        universe = set(self.objects)
        for a in self.init.atoms | self.goal:
            if not a.grounded:
                raise ModelError(f"init/goal contains lifted atom {a}")
            for t in a.args:
                if t not in universe:
                    raise ModelError(f"atom {a} references undeclared object {t}")


@dataclass
class ExecutionResult:
    """Outcome of running a plan forward from a state."""

    success: bool
    final_state: State
    failed_index: int | None = None
    missing: frozenset[Atom] = frozenset()


@dataclass
class ValidationReport:
    valid: bool
    failure_step: int | None
    missing_preconditions: frozenset[Atom]
    unmet_goals: frozenset[Atom]
    final_state: State | None

    def summary(self) -> str:
        if self.valid:
            return "valid"
        if self.failure_step is not None:
            missing = ", ".join(str(a) for a in sorted(self.missing_preconditions))
            return f"inapplicable at step {self.failure_step}: missing {missing}"
        unmet = ", ".join(str(a) for a in sorted(self.unmet_goals))
        return f"executes but goal unmet: {unmet}"


def ground(schema: ActionSchema, args: tuple[str, ...] | list[str]) -> GroundAction:
    """Substitute objects for the schema's parameters."""
    args = tuple(args)
    if len(args) != len(schema.params):
        raise ArityMismatchError(
            f"action {schema.name} expects {len(schema.params)} arguments, got {len(args)}"
        )
    binding = dict(zip(schema.params, args))
    return GroundAction(
        schema=schema.name,
        args=args,
        precondition=frozenset(a.substitute(binding) for a in schema.precondition),
        add=frozenset(a.substitute(binding) for a in schema.add),
        delete=frozenset(a.substitute(binding) for a in schema.delete),
    )


def applicable(state: State, action: GroundAction) -> bool:
    return action.precondition <= state.atoms


def apply(state: State, action: GroundAction) -> State:
    if not applicable(state, action):
        raise InapplicableActionError(action, action.precondition - state.atoms)
    return State((state.atoms - action.delete) | action.add)


def execute(state: State, plan: Plan) -> ExecutionResult:
    """Fold apply over the plan; stop at the first inapplicable step."""
    current = state
    for i, step in enumerate(plan):
        if not applicable(current, step):
            return ExecutionResult(
                success=False,
                final_state=current,
                failed_index=i,
                missing=step.precondition - current.atoms,
            )
        current = apply(current, step)
    return ExecutionResult(success=True, final_state=current)


def goal_satisfied(state: State, goal: frozenset[Atom]) -> bool:
    return goal <= state.atoms


def validate(problem: Problem, plan: Plan) -> ValidationReport:
    """Execute from problem.init and check the goal; never raises."""
    result = execute(problem.init, plan)
    if not result.success:
        return ValidationReport(
            valid=False,
            failure_step=result.failed_index,
            missing_preconditions=result.missing,
            unmet_goals=frozenset(),
            final_state=result.final_state,
        )
    unmet = frozenset(problem.goal) - result.final_state.atoms
    return ValidationReport(
        valid=not unmet,
        failure_step=None,
        missing_preconditions=frozenset(),
        unmet_goals=unmet,
        final_state=result.final_state,
    )


def ground_all(
    domain: Domain, objects: tuple[str, ...] | list[str], distinct: bool = True
) -> list[GroundAction]:
    """Every grounding of every action schema, sorted by key.

    distinct=True (the default) never binds the same object to two parameters,
    which is the right universe for blocksworld (stack a a is meaningless).
    """
    objs = tuple(objects)
    out: list[GroundAction] = []
    for schema in domain.actions:
        n = len(schema.params)
        combos = itertools.permutations(objs, n) if distinct else itertools.product(objs, repeat=n)
        for combo in combos:
            out.append(ground(schema, combo))
    out.sort(key=lambda g: g.key)
    return out


def parse_action_key(key: str, domain: Domain) -> GroundAction:
    """Inverse of GroundAction.key: '(stack a b)' back to a GroundAction."""
    text = key.strip()
    if not (text.startswith("(") and text.endswith(")")):
        raise ModelError(f"malformed action key {key!r}")
    parts = text[1:-1].split()
    if not parts:
        raise ModelError("empty action key")
    return ground(domain.action(parts[0]), tuple(parts[1:]))

"""Local-search plan repair seeded by a candidate (possibly broken) plan.

Neighborhood moves target the first remaining flaw: delete the flawed
action, insert an action whose add effects cover a missing atom immediately
before the flaw, or replace the flawed action with such an action. Selection
is greedy on remaining flaw weight with an epsilon chance of a random
improving-or-equal move; the search restarts from the seed after a run of
non-improving steps, and a step or wall-clock budget triggers a fallback
that keeps the seed's longest applicable prefix and plans the remainder.
The returned plan always validates as long as the problem is solvable at
all, which blocksworld instances between legal configurations always are.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass

from . import search, stats
from .core import Atom, Domain, GroundAction, Plan, Problem, State, ground_all, validate


@dataclass(frozen=True)
class Flaw:
    step: int | None  # None marks the unmet-goal flaw at the end
    missing: frozenset[Atom]


@dataclass(frozen=True)
class RepairBudget:
    max_steps: int = 5000
    restart_every: int = 200
    epsilon: float = 0.1
    max_seconds: float = 1.5

    def __post_init__(self) -> None:
        if self.max_steps < 1 or self.restart_every < 1:
            raise ValueError("max_steps and restart_every must be >= 1")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must be within [0, 1]")


@dataclass
class RepairResult:
    final: Plan
    seed: Plan
    edit_distance: int
    iterations: int
    fell_back_to_planner: bool
    wall_time: float


def flaws(problem: Problem, plan: Plan) -> list[Flaw]:
    """Skip-on-failure simulation: each inapplicable step yields a flaw and
    is skipped; unmet goal atoms at the end yield one final flaw. The list
    is empty exactly when the plan validates."""
    out: list[Flaw] = []
    atoms = problem.init.atoms
    for i, step in enumerate(plan):
        if step.precondition <= atoms:
            atoms = (atoms - step.delete) | step.add
        else:
            out.append(Flaw(step=i, missing=step.precondition - atoms))
    unmet = frozenset(problem.goal) - atoms
    if unmet:
        out.append(Flaw(step=None, missing=unmet))
    return out


def _flaw_weight(problem: Problem, steps: tuple[GroundAction, ...]) -> int:
    """Search gradient: inapplicable steps plus unmet goal atoms."""
    weight = 0
    atoms = problem.init.atoms
    for step in steps:
        if step.precondition <= atoms:
            atoms = (atoms - step.delete) | step.add
        else:
            weight += 1
    weight += len(frozenset(problem.goal) - atoms)
    return weight


def _neighborhood(
    steps: tuple[GroundAction, ...],
    flaw: Flaw,
    by_add: dict[Atom, list[GroundAction]],
) -> list[tuple[GroundAction, ...]]:
    moves: list[tuple[GroundAction, ...]] = []
    insert_at = flaw.step if flaw.step is not None else len(steps)
    if flaw.step is not None:
        moves.append(steps[: flaw.step] + steps[flaw.step + 1 :])
    for atom in sorted(flaw.missing):
        for action in by_add.get(atom, ()):
            moves.append(steps[:insert_at] + (action,) + steps[insert_at:])
            if flaw.step is not None:
                moves.append(
                    steps[: flaw.step] + (action,) + steps[flaw.step + 1 :]
                )
    return moves


def _fallback_plan(domain: Domain, problem: Problem, seed: Plan) -> Plan:
    """Longest applicable seed prefix, then a planner for whatever is left."""
    state = problem.init
    prefix: list[GroundAction] = []
    for step in seed:
        if not step.precondition <= state.atoms:
            break
        state = State((state.atoms - step.delete) | step.add)
        prefix.append(step)
    if frozenset(problem.goal) <= state.atoms:
        return Plan(tuple(prefix))
    rest_problem = Problem(
        domain_name=problem.domain_name,
        objects=problem.objects,
        init=state,
        goal=problem.goal,
        goal_kind=problem.goal_kind,
    )
    rest = search.solve_satisficing(domain, rest_problem)
    return Plan(tuple(prefix) + rest.steps)


def repair(
    domain: Domain,
    problem: Problem,
    seed_plan: Plan,
    budget: RepairBudget = RepairBudget(),
    rng_seed: int = 0,
) -> RepairResult:
    start = time.monotonic()
    rng = random.Random(rng_seed)

    by_add: dict[Atom, list[GroundAction]] = {}
    for action in ground_all(domain, problem.objects):
        for atom in action.add:
            by_add.setdefault(atom, []).append(action)

    def finish(steps: tuple[GroundAction, ...], iterations: int, fell_back: bool) -> RepairResult:
        final = Plan(steps)
        report = validate(problem, final)
        if not report.valid:
            raise AssertionError(f"repair produced an invalid plan: {report.summary()}")
        return RepairResult(
            final=final,
            seed=seed_plan,
            edit_distance=stats.levenshtein(seed_plan, final),
            iterations=iterations,
            fell_back_to_planner=fell_back,
            wall_time=time.monotonic() - start,
        )

    current = tuple(seed_plan.steps)
    iterations = 0
    non_improving = 0
    current_weight = _flaw_weight(problem, current)

    while current_weight > 0:
        if iterations >= budget.max_steps or time.monotonic() - start > budget.max_seconds:
            fallback = _fallback_plan(domain, problem, seed_plan)
            return finish(fallback.steps, iterations, True)

        flaw_list = flaws(problem, Plan(current))
        moves = _neighborhood(current, flaw_list[0], by_add)
        if not moves:
            fallback = _fallback_plan(domain, problem, seed_plan)
            return finish(fallback.steps, iterations, True)

        weighted = [(m, _flaw_weight(problem, m)) for m in moves]
        if rng.random() < budget.epsilon:
            pool = [mw for mw in weighted if mw[1] <= current_weight]
            chosen, weight = rng.choice(pool) if pool else min(weighted, key=lambda mw: mw[1])
        else:
            chosen, weight = min(weighted, key=lambda mw: mw[1])

        if weight >= current_weight:
            non_improving += 1
        else:
            non_improving = 0
        current, current_weight = chosen, weight
        iterations += 1

        if non_improving >= budget.restart_every:
            current = tuple(seed_plan.steps)
            current_weight = _flaw_weight(problem, current)
            non_improving = 0

    return finish(current, iterations, False)

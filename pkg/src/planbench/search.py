"""Forward state-space search: optimal A*, an independent BFS oracle, and a
greedy satisficing mode used by the repair fallback.

The A* heuristic counts blocks that must move at least once: a block is a
must-mover if its required support differs from its current one, or if it
sits anywhere above a must-mover. A placed must-mover needs two actions
(acquire and release), a held one needs one action, and a held unconstrained
block still needs one release before any other block can move. The count
never drops by more than one per action, so the heuristic is consistent and
A* with a closed set returns minimum-length plans. Non-blocksworld
vocabularies (disguised domains included) fall back to h = 0, which is plain
uniform-cost search and still optimal.
"""

from __future__ import annotations

import heapq
import time
from collections import deque
from dataclasses import dataclass

from . import blocks
from .core import Atom, Domain, Plan, Problem, State, goal_satisfied, ground_all


class Unsolvable(Exception):
    pass


class BudgetExceeded(Exception):
    pass


@dataclass
class SearchStats:
    expanded: int = 0
    generated: int = 0
    wall_time: float = 0.0


@dataclass(frozen=True)
class SearchBudget:
    max_expansions: int = 1_000_000
    max_seconds: float = 10.0


DEFAULT_BUDGET = SearchBudget()


def _support_map(atoms: frozenset[Atom]) -> tuple[dict[str, str], str | None]:
    """block -> its support ("table", "arm", or a block); plus the held block."""
    sup: dict[str, str] = {}
    held = None
    for a in atoms:
        if a.predicate == blocks.ON:
            sup[a.args[0]] = a.args[1]
        elif a.predicate == blocks.ON_TABLE:
            sup[a.args[0]] = "table"
        elif a.predicate == blocks.HOLDING:
            sup[a.args[0]] = "arm"
            held = a.args[0]
    return sup, held


def blocks_heuristic(goal: frozenset[Atom]):
    """Admissible, consistent must-move lower bound for blocksworld states."""
    want: dict[str, str] = {}
    for a in goal:
        if a.predicate == blocks.ON:
            want[a.args[0]] = a.args[1]
        elif a.predicate == blocks.ON_TABLE:
            want[a.args[0]] = "table"

    def h(state: State) -> int:
        sup, held = _support_map(state.atoms)
        movers = {b for b, target in want.items() if sup.get(b) != target}
        # anything stacked above a must-mover has to move too
        changed = True
        while changed:
            changed = False
            for b, below in sup.items():
                if b not in movers and below in movers:
                    movers.add(b)
                    changed = True
        total = 0
        for b in movers:
            total += 1 if b == held else 2
        if held is not None and held not in movers and movers:
            total += 1
        return total

    return h


def _zero_heuristic(state: State) -> int:
    return 0


def _pick_heuristic(domain: Domain, problem: Problem):
    if blocks.is_blocksworld(domain):
        return blocks_heuristic(problem.goal)
    return _zero_heuristic


def _reconstruct(came_from: dict, state: State) -> Plan:
    steps = []
    while came_from[state] is not None:
        prev, action = came_from[state]
        steps.append(action)
        state = prev
    steps.reverse()
    return Plan(tuple(steps))


def solve_optimal(
    domain: Domain, problem: Problem, budget: SearchBudget = DEFAULT_BUDGET
) -> tuple[Plan, SearchStats]:
    """A* with the consistent must-move heuristic; returned plans are
    minimum length. Ties break by node insertion order over successors
    generated in sorted ground-action order, so results are reproducible."""
    start_time = time.monotonic()
    stats = SearchStats()
    actions = ground_all(domain, problem.objects)
    h = _pick_heuristic(domain, problem)
    goal = frozenset(problem.goal)

    init = problem.init
    g_score: dict[State, int] = {init: 0}
    came_from: dict[State, tuple[State, object] | None] = {init: None}
    counter = 0
    open_heap: list[tuple[int, int, State]] = [(h(init), counter, init)]
    closed: set[State] = set()

    while open_heap:
        if stats.expanded >= budget.max_expansions:
            raise BudgetExceeded(f"expansion cap {budget.max_expansions} reached")
        if time.monotonic() - start_time > budget.max_seconds:
            raise BudgetExceeded(f"time cap {budget.max_seconds}s reached")
        _, _, state = heapq.heappop(open_heap)
        if state in closed:
            continue
        if goal_satisfied(state, goal):
            stats.wall_time = time.monotonic() - start_time
            return _reconstruct(came_from, state), stats
        closed.add(state)
        stats.expanded += 1
        g = g_score[state]
        for action in actions:
            if not action.precondition <= state.atoms:
                continue
            nxt = State((state.atoms - action.delete) | action.add)
            tentative = g + 1
            if nxt in closed or tentative >= g_score.get(nxt, 1 << 60):
                continue
            g_score[nxt] = tentative
            came_from[nxt] = (state, action)
            counter += 1
            stats.generated += 1
            heapq.heappush(open_heap, (tentative + h(nxt), counter, nxt))

    raise Unsolvable("goal unreachable from the initial state")


def oracle_bfs(
    domain: Domain, problem: Problem, budget: SearchBudget = DEFAULT_BUDGET
) -> int:
    """Heuristic-free breadth-first search; returns the exact optimal cost.

    Kept deliberately independent of solve_optimal (no shared search code)
    so the two can cross-check each other.
    """
    start_time = time.monotonic()
    goal = frozenset(problem.goal)
    if goal <= problem.init.atoms:
        return 0
    actions = ground_all(domain, problem.objects)
    visited = {problem.init.atoms}
    frontier = deque([(problem.init.atoms, 0)])
    expansions = 0
    while frontier:
        atoms, depth = frontier.popleft()
        expansions += 1
        if expansions >= budget.max_expansions:
            raise BudgetExceeded(f"expansion cap {budget.max_expansions} reached")
        if expansions % 1024 == 0 and time.monotonic() - start_time > budget.max_seconds:
            raise BudgetExceeded(f"time cap {budget.max_seconds}s reached")
        for action in actions:
            if not action.precondition <= atoms:
                continue
            nxt = (atoms - action.delete) | action.add
            if nxt in visited:
                continue
            if goal <= nxt:
                return depth + 1
            visited.add(nxt)
            frontier.append((nxt, depth + 1))
    raise Unsolvable("goal unreachable from the initial state")


def solve_satisficing(
    domain: Domain, problem: Problem, budget: SearchBudget = DEFAULT_BUDGET
) -> Plan:
    """Greedy best-first on the heuristic alone; returns some valid plan,
    not necessarily a shortest one. Complete over the reachable state space."""
    start_time = time.monotonic()
    actions = ground_all(domain, problem.objects)
    h = _pick_heuristic(domain, problem)
    goal = frozenset(problem.goal)

    init = problem.init
    came_from: dict[State, tuple[State, object] | None] = {init: None}
    counter = 0
    open_heap: list[tuple[int, int, State]] = [(h(init), counter, init)]
    seen = {init}
    expanded = 0

    while open_heap:
        if expanded >= budget.max_expansions:
            raise BudgetExceeded(f"expansion cap {budget.max_expansions} reached")
        if time.monotonic() - start_time > budget.max_seconds:
            raise BudgetExceeded(f"time cap {budget.max_seconds}s reached")
        _, _, state = heapq.heappop(open_heap)
        if goal_satisfied(state, goal):
            return _reconstruct(came_from, state)
        expanded += 1
        for action in actions:
            if not action.precondition <= state.atoms:
                continue
            nxt = State((state.atoms - action.delete) | action.add)
            if nxt in seen:
                continue
            seen.add(nxt)
            came_from[nxt] = (state, action)
            counter += 1
            heapq.heappush(open_heap, (h(nxt), counter, nxt))

    raise Unsolvable("goal unreachable from the initial state")

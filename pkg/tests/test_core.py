import itertools

import pytest

from planbench import blocks
from planbench.core import (
    ActionSchema,
    ArityMismatchError,
    Atom,
    Domain,
    InapplicableActionError,
    ModelError,
    Plan,
    PredicateSchema,
    Problem,
    State,
    UnknownPredicateError,
    applicable,
    apply,
    atom,
    execute,
    goal_satisfied,
    ground,
    ground_all,
    parse_action_key,
    validate,
)
from conftest import problem_from_stacks
from oracles import atoms_to_facts, action_to_tuple, bw_simulate


def test_atom_basics():
    a = atom("on", "a", "b")
    assert a.predicate == "on" and a.args == ("a", "b")
    assert a.grounded
    assert str(a) == "(on a b)"
    assert str(atom("arm-empty")) == "(arm-empty)"
    lifted = atom("on", "?x", "b")
    assert not lifted.grounded
    assert lifted.substitute({"?x": "a"}) == a


def test_atom_ordering_and_hash():
    a, b = atom("clear", "a"), atom("clear", "b")
    assert a < b
    assert len({a, b, atom("clear", "a")}) == 2


def test_action_schema_rejects_add_del_overlap():
    with pytest.raises(ModelError):
        ActionSchema(
            name="bad",
            params=("?x",),
            precondition=frozenset(),
            add=frozenset({atom("clear", "?x")}),
            delete=frozenset({atom("clear", "?x")}),
        )


def test_action_schema_rejects_unbound_variable():
    with pytest.raises(ModelError):
        ActionSchema(
            name="bad",
            params=("?x",),
            precondition=frozenset({atom("on", "?x", "?y")}),
            add=frozenset(),
            delete=frozenset(),
        )


def test_domain_validates_arities_and_uniqueness():
    on = PredicateSchema("on", ("?a", "?b"))
    with pytest.raises(ModelError):
        Domain(name="d", predicates=(on, on), actions=())
    with pytest.raises(ArityMismatchError):
        Domain(
            name="d",
            predicates=(on,),
            actions=(
                ActionSchema(
                    name="a",
                    params=("?x",),
                    precondition=frozenset({atom("on", "?x")}),
                    add=frozenset(),
                    delete=frozenset(),
                ),
            ),
        )
    with pytest.raises(UnknownPredicateError):
        Domain(
            name="d",
            predicates=(on,),
            actions=(
                ActionSchema(
                    name="a",
                    params=("?x",),
                    precondition=frozenset({atom("mystery", "?x")}),
                    add=frozenset(),
                    delete=frozenset(),
                ),
            ),
        )


def test_state_closed_world():
    s = State(frozenset({atom("clear", "a")}))
    assert s.holds(atom("clear", "a"))
    assert not s.holds(atom("clear", "b"))
    assert s.satisfies({atom("clear", "a")})
    assert not s.satisfies({atom("clear", "a"), atom("clear", "b")})
    assert len(s) == 1


def test_ground_substitution_matches_hand_expansion(domain):
    unstack = domain.action("unstack")
    ga = ground(unstack, ("a", "b"))
    assert atoms_to_facts(ga.precondition) == {("on", "a", "b"), ("clear", "a"), ("arm-empty",)}
    assert atoms_to_facts(ga.add) == {("holding", "a"), ("clear", "b")}
    assert atoms_to_facts(ga.delete) == {("on", "a", "b"), ("clear", "a"), ("arm-empty",)}
    assert ga.key == "(unstack a b)"


def test_ground_arity_error(domain):
    with pytest.raises(ArityMismatchError):
        ground(domain.action("stack"), ("a",))


def test_pickup_apply_and_inapplicable_error(domain):
    pickup = ground(domain.action("pickup"), ("a",))
    s = State(frozenset({atom("clear", "a"), atom("on-table", "a"), atom("arm-empty")}))
    assert applicable(s, pickup)
    nxt = apply(s, pickup)
    assert atoms_to_facts(nxt.atoms) == {("holding", "a")}

    short = State(frozenset({atom("clear", "a"), atom("on-table", "a")}))
    assert not applicable(short, pickup)
    with pytest.raises(InapplicableActionError) as err:
        apply(short, pickup)
    assert err.value.missing == frozenset({atom("arm-empty")})


def test_execute_empty_plan_and_failure_index(domain):
    s = blocks.state_from_config((("a",), ("b",)))
    result = execute(s, Plan(()))
    assert result.success and result.final_state == s

    stack_ab = ground(domain.action("stack"), ("a", "b"))
    result = execute(s, Plan((stack_ab,)))
    assert not result.success
    assert result.failed_index == 0
    assert atom("holding", "a") in result.missing


def test_execute_two_step_trace(domain):
    s = blocks.state_from_config((("a",), ("b",)))
    plan = Plan(
        (ground(domain.action("pickup"), ("a",)), ground(domain.action("stack"), ("a", "b")))
    )
    result = execute(s, plan)
    assert result.success
    assert atoms_to_facts(result.final_state.atoms) == {
        ("on", "a", "b"),
        ("clear", "a"),
        ("on-table", "b"),
        ("arm-empty",),
    }


def test_goal_satisfied_is_subset_test():
    s = State(frozenset({atom("on", "a", "b"), atom("clear", "a")}))
    assert goal_satisfied(s, {atom("on", "a", "b")})
    assert not goal_satisfied(s, {atom("on", "b", "a")})
    assert goal_satisfied(s, set())


def test_problem_requires_nonempty_grounded_goal():
    init = blocks.state_from_config((("a",), ("b",)))
    with pytest.raises(ModelError):
        Problem(domain_name="blocksworld", objects=("a", "b"), init=init, goal=frozenset())
    with pytest.raises(ModelError):
        Problem(
            domain_name="blocksworld",
            objects=("a", "b"),
            init=init,
            goal=frozenset({atom("on", "a", "c")}),
        )
    with pytest.raises(ModelError):
        Problem(
            domain_name="blocksworld",
            objects=("a", "b"),
            init=init,
            goal=frozenset({atom("on", "a", "?x")}),
        )


def test_validate_reports_first_failure(domain):
    problem = problem_from_stacks((("a",), ("b",)), (("b", "a"),))
    bad = Plan((ground(domain.action("stack"), ("a", "b")),))
    report = validate(problem, bad)
    assert not report.valid
    assert report.failure_step == 0
    assert atom("holding", "a") in report.missing_preconditions
    assert "inapplicable at step 0" in report.summary()


def test_validate_reports_unmet_goals(domain):
    # stacks are written bottom to top, so ("b", "a") puts a on b
    problem = problem_from_stacks((("a",), ("b",)), (("b", "a"),))
    report = validate(problem, Plan(()))
    assert not report.valid
    assert report.failure_step is None
    assert report.unmet_goals == frozenset({atom("on", "a", "b")})
    assert "goal unmet" in report.summary()


def test_validate_accepts_solution(domain):
    problem = problem_from_stacks((("a",), ("b",)), (("b", "a"),))
    plan = Plan(
        (ground(domain.action("pickup"), ("a",)), ground(domain.action("stack"), ("a", "b")))
    )
    report = validate(problem, plan)
    assert report.valid
    assert report.summary() == "valid"
    assert report.final_state is not None and report.final_state.holds(atom("on", "a", "b"))


def test_ground_all_count_matches_closed_form(domain):
    # 2n single-arg groundings plus 2n(n-1) ordered pairs
    for n, expected in ((2, 8), (3, 18), (4, 32), (5, 50)):
        objs = blocks.BLOCK_PALETTE[:n]
        pool = ground_all(domain, objs)
        assert len(pool) == expected
        assert len({a.key for a in pool}) == expected
        assert [a.key for a in pool] == sorted(a.key for a in pool)


def test_parse_action_key_round_trip(domain):
    pool = ground_all(domain, ("a", "b", "c"))
    for ga in pool:
        back = parse_action_key(ga.key, domain)
        assert back == ga


def test_parse_action_key_rejects_garbage(domain):
    for bad in ("(warp a)", "(stack a)", "pickup a", "(pickup a b c d)"):
        with pytest.raises(ModelError):
            parse_action_key(bad, domain)


def test_validate_matches_tuple_oracle_on_short_sequences(domain):
    """Spot equivalence against the independent tuple simulator (the full
    exhaustive sweep lives in the acceptance suite)."""
    problem = problem_from_stacks((("a",), ("b",)), (("a", "b"),))
    init_facts = atoms_to_facts(problem.init.atoms)
    goal_facts = atoms_to_facts(problem.goal)
    pool = ground_all(domain, ("a", "b"))
    for steps in itertools.product(pool, repeat=2):
        plan = Plan(steps)
        report = validate(problem, plan)
        executed, fail_at, goal_met = bw_simulate(
            init_facts, [action_to_tuple(s) for s in steps], goal_facts
        )
        assert report.valid == (executed and goal_met)
        assert report.failure_step == fail_at

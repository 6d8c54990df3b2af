"""Instance model: parsing, serialization, plan validation, preprocessing."""

from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings

from conftest import GOLDEN_PLAN, GOLDEN_TEXT, all_complete_plans, instances
from wspsolve import (
    AtLeast,
    AtMost,
    AuthorisationLists,
    BindingOfDuty,
    Never,
    NotAuthorised,
    NotEquals,
    ParseError,
    Valid,
    Violates,
    WorkflowInstance,
    format_solution,
    parse_instance,
    parse_solution,
    preprocess,
    serialize_instance,
    validate_plan,
)


def make_instance(k, n, auth, constraints=()):
    return WorkflowInstance(
        k, n, AuthorisationLists.from_user_steps(k, auth), tuple(constraints)
    )


# --- parsing ----------------------------------------------------------------


def test_parse_golden(golden_instance):
    inst = golden_instance
    assert inst.step_count == 4
    assert inst.user_count == 5
    assert inst.auth.user_steps[0] == {0, 1, 2, 3}
    assert inst.auth.user_steps[1] == {0}
    assert inst.auth.step_users[0] == {0, 1}
    assert inst.auth.step_users[2] == {0, 3, 4}
    assert inst.constraints == (
        BindingOfDuty(0, 1),
        NotEquals(1, 2),
        NotEquals(2, 3),
        NotEquals(3, 0),
    )


def test_parse_comments_and_blank_lines():
    text = "# header comment\n\nwsp 2 1  # trailing\n\nauth 0 0 1\nne 0 1 # pair\n"
    inst = parse_instance(text)
    assert inst.step_count == 2
    assert inst.constraints == (NotEquals(0, 1),)


def test_auth_line_may_be_empty():
    inst = parse_instance("wsp 2 2\nauth 0 0 1\nauth 1\n")
    assert inst.auth.user_steps[1] == frozenset()
    assert inst.auth.step_users[0] == {0}


@pytest.mark.parametrize(
    "text, line_no, fragment",
    [
        ("auth 0 0\n", 1, "header"),
        ("wsp 2 1\nwsp 2 1\n", 2, "duplicate header"),
        ("wsp 2 1\nauth 0 0\nfoo 1 2\n", 3, "unknown tag"),
        ("wsp 2 1\nauth 0 2\n", 2, "out of range"),
        ("wsp 2 1\nauth 0 0\nne 0 2\n", 3, "out of range"),
        ("wsp 2 1\nauth 0 x\n", 2, "integer"),
        ("wsp 2 1\nauth 0 0\nauth 0 1\n", 3, "duplicate auth"),
        ("wsp 2 2\nauth 0 0\n", 2, "missing auth line for user 1"),
        ("wsp 2 1\nauth 0 0\nne 1 1\n", 3, "differ"),
        ("wsp 2 1\nauth 0 0\nbd 1 1\n", 3, "differ"),
        ("wsp 5 1\nauth 0 0\natmost 4 0 1 2\n", 3, "1 <= r"),
        ("wsp 5 1\nauth 0 0\natleast 1 2\n", 3, "at least two"),
        ("wsp 0 1\n", 1, "positive"),
        ("", 1, "missing wsp header"),
    ],
)
def test_parse_errors_carry_line_numbers(text, line_no, fragment):
    with pytest.raises(ParseError) as exc:
        parse_instance(text)
    assert exc.value.line_no == line_no
    assert fragment in str(exc.value)


def test_serialize_golden_round_trips(golden_instance):
    assert serialize_instance(golden_instance) == GOLDEN_TEXT
    assert parse_instance(serialize_instance(golden_instance)) == golden_instance


@given(instances(max_steps=6, max_users=7))
def test_serialize_parse_round_trip(inst):
    assert parse_instance(serialize_instance(inst)) == inst


def test_serialize_rejects_never():
    inst = make_instance(2, 1, [{0, 1}], [Never(frozenset({0}), "x")])
    with pytest.raises(ValueError):
        serialize_instance(inst)


# --- authorisation lists ----------------------------------------------------


def test_authorisation_duality_and_masks():
    auth = AuthorisationLists.from_user_steps(3, [{0, 2}, {1}, set()])
    assert auth.step_users == (frozenset({0}), frozenset({1}), frozenset({0}))
    assert auth.step_user_masks == (0b001, 0b010, 0b001)
    flipped = AuthorisationLists.from_step_users(3, auth.step_users)
    assert flipped == auth


def test_authorisation_rejects_out_of_range():
    with pytest.raises(ValueError):
        AuthorisationLists.from_user_steps(2, [{0, 5}])
    with pytest.raises(ValueError):
        make_instance(2, 1, [{0}], [NotEquals(0, 1), AtMost(1, frozenset({0, 5}))])


# --- plan validation --------------------------------------------------------


def test_validate_plan_golden(golden_instance):
    assert validate_plan(golden_instance, GOLDEN_PLAN) == Valid()


def test_validate_plan_reports_first_unauthorised_step(golden_instance):
    # User 2 may only perform step 1, so step 0 fails first.
    verdict = validate_plan(golden_instance, {0: 2, 1: 2, 2: 3, 3: 4})
    assert verdict == NotAuthorised(0)


def test_validate_plan_reports_violated_constraint(golden_instance):
    # Steps 2 and 3 share user 3, breaking their not-equals pair.
    verdict = validate_plan(golden_instance, {0: 0, 1: 0, 2: 3, 3: 3})
    assert verdict == Violates(NotEquals(2, 3))


def test_validate_plan_rejects_incomplete(golden_instance):
    with pytest.raises(ValueError):
        validate_plan(golden_instance, {0: 0, 1: 0})
    with pytest.raises(ValueError):
        validate_plan(golden_instance, {0: 0, 1: 0, 2: 3, 5: 4})


# --- solution files ---------------------------------------------------------


def test_solution_round_trip():
    text = format_solution("sat", {1: 4, 0: 2})
    assert text == "sat\nassign 0 2\nassign 1 4\n"
    assert parse_solution(text) == ("sat", {0: 2, 1: 4})
    assert parse_solution(format_solution("unsat", None)) == ("unsat", None)
    assert parse_solution(format_solution("timeout", None)) == ("timeout", None)
    with pytest.raises(ValueError):
        format_solution("sat", None)
    with pytest.raises(ValueError):
        parse_solution("maybe\n")


# --- preprocessing ----------------------------------------------------------


def test_preprocess_golden(golden_instance):
    pre = preprocess(golden_instance)
    assert pre.instance.step_count == 3
    assert pre.step_map == (0, 0, 1, 2)
    assert pre.groups == ((0, 1), (2,), (3,))
    # The merged step keeps only users authorised for both halves.
    assert pre.instance.auth.step_users[0] == {0}
    assert pre.instance.constraints == (
        NotEquals(0, 1),
        NotEquals(1, 2),
        NotEquals(2, 0),
    )
    expanded = pre.expand_plan({0: 0, 1: 3, 2: 4})
    assert expanded == {0: 0, 1: 0, 2: 3, 3: 4}
    assert validate_plan(golden_instance, expanded) == Valid()


def test_preprocess_identity_without_binding_of_duty():
    inst = make_instance(3, 2, [{0, 1}, {1, 2}], [NotEquals(2, 0), AtMost(2, frozenset({0, 1}))])
    pre = preprocess(inst)
    assert pre.instance is inst
    assert pre.step_map == (0, 1, 2)
    assert pre.expand_plan({0: 0, 1: 1, 2: 1}) == {0: 0, 1: 1, 2: 1}


def test_preprocess_merges_chains():
    inst = make_instance(
        4,
        3,
        [{0, 1, 2, 3}, {0, 1, 2}, {1, 2, 3}],
        [BindingOfDuty(0, 1), BindingOfDuty(1, 2), NotEquals(0, 3)],
    )
    pre = preprocess(inst)
    assert pre.instance.step_count == 2
    assert pre.step_map == (0, 0, 0, 1)
    # Intersection over the three merged steps.
    assert pre.instance.auth.step_users[0] == {0, 1} & {0, 1, 2} & {0, 1, 2}
    assert pre.instance.constraints == (NotEquals(0, 1),)


def test_preprocess_contradictory_pair_becomes_never():
    inst = make_instance(
        2, 2, [{0, 1}, {0, 1}], [BindingOfDuty(0, 1), NotEquals(0, 1)]
    )
    pre = preprocess(inst)
    assert pre.instance.step_count == 1
    (marker,) = pre.instance.constraints
    assert isinstance(marker, Never)
    # Every expanded plan is invalid on both sides.
    for u in range(2):
        assert validate_plan(pre.instance, {0: u}) != Valid()
        assert validate_plan(inst, pre.expand_plan({0: u})) != Valid()


def test_preprocess_at_least_outgrowing_scope_becomes_never():
    inst = make_instance(
        3,
        3,
        [{0, 1, 2}] * 3,
        [BindingOfDuty(0, 1), AtLeast(3, frozenset({0, 1, 2}))],
    )
    pre = preprocess(inst)
    assert any(isinstance(c, Never) for c in pre.instance.constraints)


def test_preprocess_drops_trivialised_constraints():
    inst = make_instance(
        3,
        3,
        [{0, 1, 2}] * 3,
        [
            BindingOfDuty(0, 1),
            AtMost(2, frozenset({0, 1, 2})),  # shrinks to 2 steps, bound 2
            AtLeast(1, frozenset({0, 1, 2})),  # at-least-1 is vacuous once rewritten
        ],
    )
    pre = preprocess(inst)
    assert pre.instance.step_count == 2
    assert pre.instance.constraints == ()


def test_preprocess_deduplicates_repeats():
    inst = make_instance(
        3,
        2,
        [{0, 1, 2}, {0, 1, 2}],
        [NotEquals(0, 1), NotEquals(1, 0), NotEquals(0, 1), BindingOfDuty(1, 2)],
    )
    pre = preprocess(inst)
    assert pre.instance.constraints == (NotEquals(0, 1),)


def test_preprocess_empty_intersection_is_allowed():
    inst = make_instance(2, 2, [{0}, {1}], [BindingOfDuty(0, 1)])
    pre = preprocess(inst)
    assert pre.instance.step_count == 1
    assert pre.instance.auth.step_users[0] == frozenset()


@given(instances(max_steps=4, max_users=4))
@settings(max_examples=60)
def test_preprocess_preserves_validity_of_expanded_plans(inst):
    """A merged-instance plan expands to a valid original plan exactly
    when it was valid on the merged instance."""
    pre = preprocess(inst)
    for plan in all_complete_plans(pre.instance):
        merged_ok = isinstance(validate_plan(pre.instance, plan), Valid)
        original_ok = isinstance(
            validate_plan(inst, pre.expand_plan(plan)), Valid
        )
        assert merged_ok == original_ok


@given(instances(max_steps=4, max_users=4))
@settings(max_examples=40)
def test_preprocess_preserves_satisfiability(inst):
    """Merging never creates or destroys solutions overall."""
    pre = preprocess(inst)
    original_sat = any(
        isinstance(validate_plan(inst, p), Valid) for p in all_complete_plans(inst)
    )
    merged_sat = any(
        isinstance(validate_plan(pre.instance, p), Valid)
        for p in all_complete_plans(pre.instance)
    )
    assert original_sat == merged_sat

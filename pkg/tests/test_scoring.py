import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from credteam.aggregation import majority, weighted_majority
from credteam.core import AgentId, AgentOutput, RewardValue
from credteam.errors import MalformedJudgeReply, MissingContribution, TeamTooLarge
from credteam.judge import SyntheticJudge
from credteam.scoring import (
    ContributionVector,
    CredibilityLedger,
    judge_contributions,
    parse_judge_scores,
    shapley_contributions,
    update_credibility,
)

from oracles import shapley_by_permutations, shapley_exact_fractions


def outs(*answers):
    return [AgentOutput.first(AgentId(i), a) for i, a in enumerate(answers)]


def vote(subset):
    return majority(subset).final


def reward_for(gold):
    return lambda final: 1.0 if final == gold else -1.0


# --- Shapley ----------------------------------------------------------------------


def test_single_player_gets_full_value():
    cv = shapley_contributions(outs("A"), vote, reward_for("A"))
    assert cv.scores == {0: 1.0}


def test_three_agent_hand_example():
    o = outs("A", "A", "B")
    # oracle first: exact rational permutation average over all 3! orders
    def value(coalition):
        if not coalition:
            return 0
        return 1 if vote([o[i] for i in sorted(coalition)]) == "A" else -1

    expected = shapley_exact_fractions(3, value)
    assert expected == [Fraction(2, 3), Fraction(2, 3), Fraction(-1, 3)]
    cv = shapley_contributions(o, vote, reward_for("A"))
    for i, e in enumerate(expected):
        assert cv.scores[i] == pytest.approx(float(e), abs=1e-12)
    assert cv.total() == pytest.approx(1.0, abs=1e-12)


def test_identical_agents_get_identical_scores():
    cv = shapley_contributions(outs("B", "A", "A", "C"), vote, reward_for("A"))
    assert cv.scores[1] == cv.scores[2]


def test_team_too_large():
    with pytest.raises(TeamTooLarge):
        shapley_contributions(outs(*["A"] * 13), vote, reward_for("A"))


def _random_game(rnd, n):
    answers = [rnd.choice("ABC") for _ in range(n)]
    weights = {i: rnd.random() for i in range(n)}
    gold = rnd.choice("ABC")
    return outs(*answers), weights, gold


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 7), st.randoms(use_true_random=False))
def test_efficiency(n, rnd):
    o, w, gold = _random_game(rnd, n)
    agg = lambda s: weighted_majority(s, w).final
    cv = shapley_contributions(o, agg, reward_for(gold))
    assert cv.total() == pytest.approx(reward_for(gold)(agg(o)) - 0.0, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.randoms(use_true_random=False))
def test_matches_permutation_oracle(n, rnd):
    o, w, gold = _random_game(rnd, n)
    agg = lambda s: weighted_majority(s, w).final
    r = reward_for(gold)

    def value(coalition):
        return r(agg([o[i] for i in sorted(coalition)])) if coalition else 0.0

    expected = shapley_by_permutations(n, value)
    cv = shapley_contributions(o, agg, r)
    for i in range(n):
        assert cv.scores[i] == pytest.approx(expected[i], abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 7), st.randoms(use_true_random=False))
def test_dummy_player_scores_zero(n, rnd):
    # agent 0 is a dummy: the aggregate ignores its output entirely
    o, w, gold = _random_game(rnd, n)

    def agg(subset):
        rest = [x for x in subset if x.agent.index != 0]
        return majority(rest).final if rest else "none"

    def r(final):
        return {"none": 0.0, gold: 1.0}.get(final, -1.0)

    cv = shapley_contributions(o, agg, r)
    assert cv.scores[0] == pytest.approx(0.0, abs=1e-12)


def test_evaluation_order_independent():
    o = outs("A", "B", "A", "C", "B")
    w = {0: 0.3, 1: 0.9, 2: 0.2, 3: 0.4, 4: 0.1}
    agg = lambda s: weighted_majority(s, w).final
    a = shapley_contributions(o, agg, reward_for("A"))
    b = shapley_contributions(list(reversed(o)), agg, reward_for("A"))
    for i in range(5):
        assert a.scores[i] == pytest.approx(b.scores[i], abs=1e-12)


# --- judge contributions --------------------------------------------------------------


def test_synthetic_judge_heuristic():
    cv = judge_contributions("q", "B", outs("C", "C", "B", "B", "B"), [], SyntheticJudge())
    assert [cv.scores[i] for i in range(5)] == pytest.approx([0.1, 0.1, 0.8 / 3, 0.8 / 3, 0.8 / 3], abs=1e-12)
    assert cv.total() == pytest.approx(1.0, abs=1e-12)


def test_two_element_reply_for_five_agents_is_malformed():
    class Weak:
        def contributions(self, request):
            return {"csc": [0.2, 0.8]}

    with pytest.raises(MalformedJudgeReply) as exc:
        judge_contributions("q", "B", outs(*"ABCDE"), [], Weak())
    assert exc.value.kind == "length-mismatch"


def test_table_reply_is_accepted():
    vals = parse_judge_scores({"csc": [0.15, 0.20, 0.20, 0.25, 0.20]}, 5)
    assert math.fsum(vals) == pytest.approx(1.0, abs=1e-9)
    assert all(0 <= v <= 1 for v in vals)


@pytest.mark.parametrize("reply,kind", [
    ({"csc": [0.5, "x", 0.5]}, "non-numeric"),
    ({"csc": [0.5, 1.5, 0.0]}, "out-of-range"),
    ({"csc": [0.1, 0.1, 0.1]}, "out-of-range"),
    ({"scores": [1, 0, 0]}, "bad-shape"),
    ([0.3, 0.3, 0.4], "bad-shape"),
])
def test_reply_validation(reply, kind):
    with pytest.raises(MalformedJudgeReply) as exc:
        parse_judge_scores(reply, 3)
    assert exc.value.kind == kind


def test_sloppy_reply_is_renormalized():
    vals = parse_judge_scores({"csc": [0.3, 0.3, 0.3]}, 3)
    assert vals == pytest.approx([1 / 3] * 3)


# --- ledger update --------------------------------------------------------------------


def ledger(*vals, clamp=True):
    return CredibilityLedger({i: v for i, v in enumerate(vals)}, clamp=clamp)


def test_zero_contribution_and_zero_reward_leave_crs_unchanged():
    led = ledger(0.3, 0.7)
    cv = ContributionVector({0: 0.0, 1: 0.5}, "judge")
    after = update_credibility(led, cv, RewardValue(-1), 0.02)
    assert after[0] == 0.3
    after = update_credibility(led, ContributionVector({0: 0.4, 1: 0.6}, "judge"), RewardValue(0), 0.02)
    assert after.values() == [0.3, 0.7]


def test_table_row_reproduced():
    after = update_credibility(ledger(0.4711), ContributionVector({0: 0.25}, "judge"), RewardValue(-1), 0.01953)
    assert after[0] == pytest.approx(0.4688, abs=5e-4)


def test_non_team_agents_untouched():
    led = ledger(0.1, 0.2, 0.3)
    after = update_credibility(led, ContributionVector({1: 0.5}, "judge"), RewardValue(1), 0.5)
    assert after[0] == led[0] and after[2] == led[2]
    assert after.round_index == 1 and len(after.history) == 1


def test_missing_contribution_for_team_member():
    with pytest.raises(MissingContribution):
        update_credibility(ledger(0.5, 0.5), ContributionVector({0: 1.0}, "judge"), RewardValue(1), 0.1, team=[0, 1])


@given(st.floats(0.01, 1.0), st.floats(0.001, 1.0), st.floats(0.001, 1.0), st.floats(0.001, 0.5))
def test_monotone_in_reward_sign(crs, csc, r, eta):
    led = ledger(crs, clamp=False)
    cv = ContributionVector({0: csc}, "shapley")
    assert update_credibility(led, cv, RewardValue(-r), eta)[0] < crs
    assert update_credibility(led, cv, RewardValue(r), eta)[0] > crs


@given(st.floats(0, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(0.001, 5))
def test_clamp_keeps_unit_interval(crs, csc, r, eta):
    after = update_credibility(ledger(crs), ContributionVector({0: csc}, "judge"), RewardValue(r), eta)
    assert 0.0 <= after[0] <= 1.0


def test_oriented_vector_keeps_raw_values():
    cv = ContributionVector({0: 0.6, 1: -0.4}, "shapley")
    flipped = cv.oriented(-1)
    assert flipped.scores == {0: -0.6, 1: 0.4}
    assert flipped.raw == cv.scores
    assert ContributionVector.from_dict(flipped.to_dict()) == flipped

import pytest
from hypothesis import given, strategies as st

from credteam.aggregation import majority
from credteam.core import AgentId, AgentOutput, GoldAnswer, normalize_answer
from credteam.errors import InvalidField
from credteam.reward import GradingRubric, grade

EXACT = GradingRubric("exact")


def test_exact_match_and_miss():
    assert grade("C", GoldAnswer("C"), EXACT).value == 1.0
    assert grade("C", GoldAnswer("D"), EXACT).value == -1.0
    assert grade(" c ", GoldAnswer("C"), EXACT).value == 1.0


def test_tiered_alternate_band():
    gold = GoldAnswer("Paris", accepted_alternates=("paris, france", "the capital"))
    rubric = GradingRubric("tiered", partial_bands=(("paris, france", 0.7), ("*", 0.5)))
    assert grade("Paris", gold, rubric).value == 1.0
    assert grade("Paris, France", gold, rubric).value == 0.7
    assert grade("the capital", gold, rubric).value == 0.5
    assert grade("Lyon", gold, rubric).value == -1.0


def test_numeric_tolerance():
    gold = GoldAnswer("3.14", numeric_value=3.14159, numeric_tolerance=0.01)
    rubric = GradingRubric("numeric")
    assert grade("3.14", gold, rubric).value == 1.0
    assert grade("3.2", gold, rubric).value == -1.0
    assert grade("1,000", GoldAnswer("1000", numeric_value=1000.0), rubric).value == 1.0


def test_unparseable_numeric_is_wrong_and_flagged():
    r = grade("about three", GoldAnswer("3", numeric_value=3.0), GradingRubric("numeric"))
    assert r.value == -1.0 and r.flag == "unparseable-numeric"


def test_rubric_validation():
    with pytest.raises(InvalidField):
        GradingRubric("tiered", partial_bands=(("x", 0.3),))
    with pytest.raises(InvalidField):
        GradingRubric("exact", correct_reward=2.0)
    with pytest.raises(InvalidField):
        GradingRubric("fuzzy")


rubrics = st.sampled_from([
    EXACT,
    GradingRubric("numeric"),
    GradingRubric("tiered", partial_bands=(("*", 0.6),)),
    GradingRubric("exact", correct_reward=0.5, wrong_reward=-0.25),
])


@given(st.text(), st.text(min_size=1), st.lists(st.text(), max_size=3), rubrics)
def test_total_bounded_and_deterministic(final, canonical, alts, rubric):
    gold = GoldAnswer(canonical, accepted_alternates=tuple(alts))
    a = grade(final, gold, rubric)
    assert -1.0 <= a.value <= 1.0
    assert a == grade(final, gold, rubric)


@given(st.lists(st.sampled_from(["B", " b", "B  ", "c", "C"]), min_size=1, max_size=5))
def test_grading_agrees_with_aggregation_normalizer(answers):
    outs = [AgentOutput.first(AgentId(i), a) for i, a in enumerate(answers)]
    final = majority(outs).final
    expect = 1.0 if normalize_answer(final) == normalize_answer("B") else -1.0
    assert grade(final, GoldAnswer("B"), EXACT).value == expect

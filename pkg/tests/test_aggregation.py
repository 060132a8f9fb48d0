import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from credteam.aggregation import (
    coordinator_aggregate,
    cosine_distance,
    crs_centroid,
    embed,
    majority,
    select_nearest,
    similarity_ensemble,
    weighted_majority,
)
from credteam.core import AgentId, AgentOutput, normalize_answer
from credteam.errors import JudgeUnavailable, MissingCrS, TooFewOutputs
from credteam.judge import SyntheticJudge

from oracles import grouping_scan, nearest_scan, similarity_scan


def outs(*answers):
    return [AgentOutput.first(AgentId(i), a) for i, a in enumerate(answers)]


def stub_embedder(table):
    return lambda text: np.asarray(table[text], dtype=float)


# --- embedding ---------------------------------------------------------------


@given(st.text())
def test_embed_is_deterministic(x):
    assert np.array_equal(embed(x), embed(x))


def test_identical_answers_have_zero_distance():
    assert cosine_distance(embed("B"), embed("B")) == pytest.approx(0.0, abs=1e-15)


def test_unrelated_texts_are_far_apart():
    d = cosine_distance(embed("the cat sat"), embed("completely different words"))
    # golden value from the seed-0 hasher (one signed bucket collision)
    assert d == pytest.approx(1.3333333333333335, abs=1e-12)
    assert d > 0.5


def test_embedding_shape_and_norm():
    v = embed("some words here", dim=64)
    assert v.shape == (64,) and np.linalg.norm(v) == pytest.approx(1.0)
    assert not embed("", dim=64).any()


# --- centroid -----------------------------------------------------------------------


def test_centroid_identical_outputs():
    o = outs("x y", "x y", "x y")
    c = crs_centroid(o, {0: 0.4, 1: 0.4, 2: 0.4})
    assert np.allclose(c, 0.4 * embed("x y"))


def test_zero_weight_agent_vanishes():
    o = outs("alpha", "beta")
    c = crs_centroid(o, {0: 1.0, 1: 0.0})
    assert np.allclose(c, embed("alpha") / 2)


def test_centroid_hand_arithmetic():
    e = stub_embedder({"a": (1, 0), "b": (0, 1), "c": (1, 1)})
    c = crs_centroid(outs("a", "b", "c"), {0: 0.5, 1: 0.5, 2: 0.5}, e)
    assert np.allclose(c, [1 / 3, 1 / 3])


def test_centroid_missing_crs():
    with pytest.raises(MissingCrS):
        crs_centroid(outs("a", "b"), {0: 0.5})


def test_select_nearest_singleton_and_argmin():
    assert select_nearest(outs("only"), np.ones(256)).chosen_agent.index == 0
    e = stub_embedder({"p": (np.cos(0.9), np.sin(0.9)), "q": (np.cos(0.2), np.sin(0.2)),
                       "r": (np.cos(1.5), np.sin(1.5))})
    res = select_nearest(outs("p", "q", "r"), np.array([1.0, 0.0]), e)
    assert res.chosen_agent.index == 1 and res.final == "q"


@given(st.floats(1e-3, 1e3), st.lists(st.sampled_from(["A", "B", "C", "x y", "y z"]), min_size=1, max_size=6),
       st.lists(st.floats(0.01, 1.0), min_size=6, max_size=6))
def test_scaling_crs_keeps_the_choice(scale, answers, w):
    o = outs(*answers)
    crs = {i: w[i] for i in range(len(o))}
    scaled = {i: scale * v for i, v in crs.items()}
    a = select_nearest(o, crs_centroid(o, crs))
    b = select_nearest(o, crs_centroid(o, scaled))
    assert a.chosen_agent == b.chosen_agent


# --- voting ----------------------------------------------------------------------


def test_weighted_majority_example():
    r = weighted_majority(outs("C", "C", "C", "B", "B"), {0: 0.2, 1: 0.2, 2: 0.2, 3: 0.9, 4: 0.8})
    assert r.final == "B"


def test_majority_examples():
    assert majority(outs("B", "B", "C")).final == "B"
    assert majority(outs("B", "C")).final == "B"
    assert majority(outs("C", "C", "C", "B", "B")).final == "C"


def test_vote_groups_normalized_answers():
    r = majority(outs(" b", "C", "B "))
    assert r.final == " b" and r.chosen_agent.index == 0


answer_lists = st.lists(st.sampled_from(["A", "B", "C", "a", " b "]), min_size=1, max_size=8)


@given(answer_lists, st.floats(0.01, 1.0))
def test_uniform_weights_equal_majority(answers, c):
    o = outs(*answers)
    w = weighted_majority(o, {i: c for i in range(len(o))})
    m = majority(o)
    assert (w.final, w.chosen_agent) == (m.final, m.chosen_agent)


# --- similarity ----------------------------------------------------------------


def test_similarity_cluster_wins():
    r = similarity_ensemble(outs("outlier text", "B", "B", "B"))
    assert r.chosen_agent.index == 1


def test_similarity_two_outputs_tie():
    assert similarity_ensemble(outs("x", "y")).chosen_agent.index == 0


def test_similarity_needs_two():
    with pytest.raises(TooFewOutputs):
        similarity_ensemble(outs("x"))


# --- coordinator -------------------------------------------------------------------


def test_coordinator_reduces_to_weighted_majority():
    r = coordinator_aggregate(outs("C", "C", "B"), {0: 0.1, 1: 0.1, 2: 0.9}, SyntheticJudge())
    assert r.final == "B"


def test_coordinator_all_distinct_uses_most_credible():
    r = coordinator_aggregate(outs("A", "B", "C", "D"), {0: 0.3, 1: 0.2, 2: 0.8, 3: 0.5}, SyntheticJudge())
    assert r.final == "C" and r.chosen_agent.index == 2


def test_coordinator_unreachable_judge():
    class Down:
        def aggregate(self, request):
            raise JudgeUnavailable("connection refused")

    with pytest.raises(JudgeUnavailable):
        coordinator_aggregate(outs("A", "B"), {0: 0.5, 1: 0.5}, Down())


# --- oracle equivalence on small random instances ------------------------------------

alphabet = ["A", "B", "C", "D", "x y", "y z w", "x"]


@settings(max_examples=200)
@given(st.lists(st.sampled_from(alphabet), min_size=1, max_size=8),
       st.lists(st.floats(0.0, 1.0), min_size=8, max_size=8))
def test_aggregators_match_brute_force(answers, w):
    o = outs(*answers)
    crs = {i: w[i] for i in range(len(o))}
    vecs = [embed(a) for a in answers]
    centroid = crs_centroid(o, crs)
    assert select_nearest(o, centroid).chosen_agent.index == nearest_scan(vecs, centroid)
    keys = [normalize_answer(a) for a in answers]
    assert weighted_majority(o, crs).chosen_agent.index == grouping_scan(keys, [crs[i] for i in range(len(o))])
    if len(o) >= 2:
        assert similarity_ensemble(o).chosen_agent.index == similarity_scan(vecs)


def test_aggregators_are_pure():
    o = outs("A", "B", "B", "x y")
    crs = {0: 0.9, 1: 0.1, 2: 0.2, 3: 0.5}
    assert weighted_majority(o, crs) == weighted_majority(o, crs)
    assert select_nearest(o, crs_centroid(o, crs)) == select_nearest(o, crs_centroid(o, crs))
    assert similarity_ensemble(o) == similarity_ensemble(o)

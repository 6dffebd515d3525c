# -*- coding: utf-8 -*-
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mrsynth.estimation import compare_distributions, count_corpus, estimate_mle, uniform_weights
from mrsynth.exceptions import EstimationError, GrammarMismatchError
from mrsynth.grammar import WeightedGrammar, load_grammar
from mrsynth.models import EstimationConfig, SampleConfig
from mrsynth.sampler import sample_draws

G1_CORPUS = ["b", "a b", "a a b"]


def test_mle_ambiguous_corpus(g2: WeightedGrammar):
    weighted, report = estimate_mle(g2, ["x x x"])
    assert weighted.weights == pytest.approx((0.4, 0.6))
    assert report.parsed == 1
    assert report.skipped_unparseable == 0


def test_mle_g1(g1: WeightedGrammar):
    weighted, report = estimate_mle(g1, G1_CORPUS)
    assert weighted.weights == (0.5, 0.5)
    assert report.mode == "mle"
    assert report.instances == report.distinct_instances == report.parsed == 3


def test_mle_unseen_rule_gets_zero(g1: WeightedGrammar):
    weighted, _ = estimate_mle(g1, ["b"])
    assert weighted.weights == (0.0, 1.0)


def test_mle_smoothing(g1: WeightedGrammar):
    weighted, report = estimate_mle(g1, ["b"], EstimationConfig(smoothing=1.0))
    assert weighted.weights == pytest.approx((1 / 3, 2 / 3))
    assert all(weight > 0 for weight in weighted.weights)
    assert report.smoothing == 1.0


def test_mle_multiplicity(g1: WeightedGrammar):
    weighted, report = estimate_mle(g1, ["b", "b", "a b"])
    assert weighted.weights == pytest.approx((0.25, 0.75))
    assert report.instances == 3
    assert report.distinct_instances == 2


def test_mle_unobserved_nonterminal_falls_back_to_uniform():
    grammar = load_grammar("S -> 'a'\nS -> 'b' T\nT -> 'c'\nT -> 'd'")
    weighted, report = estimate_mle(grammar, ["a"])
    assert weighted.weights == (1.0, 0.0, 0.5, 0.5)
    assert report.unobserved_nonterminals == ["T"]


def test_mle_skips_unparseable(g1: WeightedGrammar):
    weighted, report = estimate_mle(g1, ["b", "b a", "c"])
    assert weighted.weights == (0.0, 1.0)
    assert report.parsed == 1
    assert report.skipped_unparseable == 2
    assert report.unknown_tokens == ["c"]


def test_mle_everything_unparseable(g1: WeightedGrammar):
    with pytest.raises(EstimationError) as info:
        estimate_mle(g1, ["c", "a"])
    assert info.value.unknown_tokens == ["c"]
    assert info.value.exit_code == 2


def test_mle_empty_corpus(g1: WeightedGrammar):
    with pytest.raises(EstimationError, match="empty"):
        estimate_mle(g1, [])


def test_mle_over_cap(g2: WeightedGrammar):
    corpus = [" ".join(["x"] * 6), "x x x"]
    _, skipped = estimate_mle(g2, corpus, EstimationConfig(cap=10))
    assert skipped.skipped_over_cap == 1
    assert skipped.parsed == 1
    _, kept = estimate_mle(g2, corpus, EstimationConfig(cap=10, skip_over_cap=False))
    assert kept.skipped_over_cap == 0
    assert kept.parsed == 2


def test_uniform_mode(geoquery: WeightedGrammar):
    weighted, report = estimate_mle(geoquery, ["anything"], EstimationConfig(mode="uniform"))
    assert report.mode == "uniform"
    var_rules = geoquery.grammar.rules_by_lhs["Var"]
    assert [weighted.weights[rule_id] for rule_id in var_rules] == [1 / 3] * 3
    assert weighted.weights[geoquery.grammar.rules_by_lhs["S"][0]] == 1.0


def test_uniform_weights_four_rules():
    grammar = load_grammar("S -> 'a' @ 1\nS -> 'b' @ 2\nS -> 'c' @ 3\nS -> 'd' @ 4")
    weighted = uniform_weights(grammar)
    assert weighted.weights == (0.25, 0.25, 0.25, 0.25)


def test_estimation_with_workers_matches_serial(geoquery: WeightedGrammar, geoquery_train):
    corpus = geoquery_train.mrs() * 3
    serial, _ = estimate_mle(geoquery, corpus, jobs=1)
    parallel, _ = estimate_mle(geoquery, corpus, jobs=2)
    assert serial.weights == parallel.weights


def test_count_corpus_tallies(geoquery: WeightedGrammar, geoquery_train):
    counts = count_corpus(geoquery, geoquery_train.mrs() + ["answer ( nowhere )"])
    assert counts.parsed == 10
    assert counts.skipped_unparseable == 1
    assert counts.unknown_tokens == ["nowhere"]


@settings(max_examples=25, deadline=None)
@given(st.permutations(["b", "a b", "a a b", "a a a b", "b", "a b"]))
def test_mle_order_invariant(g1: WeightedGrammar, corpus):
    weighted, _ = estimate_mle(g1, corpus, jobs=1)
    assert weighted.weights == estimate_mle(g1, sorted(corpus), jobs=1)[0].weights


def test_compare_identity(g1: WeightedGrammar):
    comparison = compare_distributions(g1, g1)
    assert set(comparison.deltas.values()) == {0.0}
    assert comparison.total_variation == {"S": 0.0}


def test_compare_uniform_vs_mle(g1: WeightedGrammar):
    uniform = uniform_weights(g1)
    assert compare_distributions(uniform, estimate_mle(g1, G1_CORPUS)[0]).total_variation == {
        "S": 0.0
    }
    comparison = compare_distributions(uniform, estimate_mle(g1, ["b"])[0])
    assert comparison.total_variation == {"S": 0.5}
    assert comparison.deltas == {0: 0.5, 1: -0.5}


def test_compare_mismatch(g1: WeightedGrammar, g2: WeightedGrammar):
    with pytest.raises(GrammarMismatchError):
        compare_distributions(g1, g2)


def test_mle_recovers_sampling_weights(g1: WeightedGrammar):
    truth = WeightedGrammar(grammar=g1.grammar, weights=(0.3, 0.7))
    samples, stats = sample_draws(truth, SampleConfig(count=50_000, seed=7), jobs=1)
    assert stats.returned == 50_000
    estimated, _ = estimate_mle(g1, [sample.tokens for sample in samples], jobs=1)
    for expected, actual in zip(truth.weights, estimated.weights):
        assert math.isclose(actual, expected, abs_tol=0.01)


g2_mrs = st.lists(st.integers(min_value=1, max_value=5).map(lambda n: " ".join(["x"] * n)))


@settings(max_examples=25, deadline=None)
@given(g2_mrs, g2_mrs)
def test_corpus_counts_are_additive(g2: WeightedGrammar, first, second):
    combined = count_corpus(g2, first + second, jobs=1).table
    separate = count_corpus(g2, first, jobs=1).table + count_corpus(g2, second, jobs=1).table
    assert combined == separate


@settings(max_examples=25, deadline=None)
@given(g2_mrs, st.integers(min_value=1, max_value=4))
def test_corpus_counts_scale_with_multiplicity(g2: WeightedGrammar, corpus, times):
    assert count_corpus(g2, corpus * times, jobs=1).table == count_corpus(
        g2, corpus, jobs=1
    ).table.scaled(times)

# -*- coding: utf-8 -*-
import math
from collections import Counter

import pytest

from mrsynth.estimation import uniform_weights
from mrsynth.exceptions import EnumerationError, FilterError, GrammarError
from mrsynth.grammar import WeightedGrammar, load_grammar
from mrsynth.models import SampleConfig
from mrsynth.parser import parse_all
from mrsynth.sampler import (
    DEPTH,
    EXCLUDED,
    LENGTH,
    Rejection,
    Sampler,
    derivation_count,
    enumerate_language,
    language_size,
    mean_depth,
    register_post_filter,
    resolve_post_filter,
    rng_for,
    sample_draws,
    sample_one,
    sample_unique,
)
from mrsynth.utils import tokenize

try:
    register_post_filter("reject-everything", lambda sample: False)
except FilterError:
    pass


def test_sample_one_rejects_on_depth():
    chain = load_grammar("S -> 'a' T\nT -> 'b' U\nU -> 'c'")
    result = sample_one(chain, SampleConfig(count=1, max_depth=2), rng_for(0, 0))
    assert result == Rejection(DEPTH)
    accepted = sample_one(chain, SampleConfig(count=1, max_depth=3), rng_for(0, 0))
    assert accepted.mr == "a b c"


def test_sample_one_rejects_on_length(g1: WeightedGrammar):
    only_recursion = WeightedGrammar(grammar=g1.grammar, weights=(1.0, 0.0))
    result = sample_one(only_recursion, SampleConfig(count=1, max_len=2), rng_for(0, 0))
    assert result == Rejection(LENGTH)


def test_zero_weight_rule_never_chosen(g1: WeightedGrammar):
    only_base = WeightedGrammar(grammar=g1.grammar, weights=(0.0, 1.0))
    samples, stats = sample_draws(only_base, SampleConfig(count=10_000), jobs=1)
    assert stats.returned == 10_000
    assert {sample.mr for sample in samples} == {"b"}


def test_sample_invariants(geoquery: WeightedGrammar):
    samples, _ = sample_unique(geoquery, SampleConfig(count=50, seed=11), jobs=1)
    assert len(samples) == 50
    for sample in samples:
        assert list(sample.tokens) == sample.derivation.yield_tokens(geoquery.grammar)
        product = math.prod(geoquery.weights[rule_id] for rule_id in sample.derivation.rules())
        assert math.isclose(math.exp(sample.logprob), product, rel_tol=1e-9)
        forest = parse_all(geoquery, sample.tokens)
        assert forest.count >= 1
        assert forest.contains(sample.derivation)
        assert sample.to_record().depth == sample.depths


def test_sample_unique_g1(g1: WeightedGrammar):
    samples, stats = sample_unique(g1, SampleConfig(count=3, max_len=3), jobs=1)
    assert {sample.mr for sample in samples} == {"b", "a b", "a a b"}
    assert stats.returned == 3
    assert not stats.budget_exhausted
    assert stats.language_size is None


def test_sample_unique_minimal(g1: WeightedGrammar):
    samples, stats = sample_unique(g1, SampleConfig(count=1), jobs=1)
    assert len(samples) == 1
    assert stats.attempts >= 1


def test_sample_unique_is_deterministic(geoquery: WeightedGrammar):
    cfg = SampleConfig(count=30, seed=2024)
    first, first_stats = sample_unique(geoquery, cfg, jobs=1)
    second, second_stats = sample_unique(geoquery, cfg, jobs=1)
    assert [s.mr for s in first] == [s.mr for s in second]
    assert first_stats == second_stats
    other, _ = sample_unique(geoquery, SampleConfig(count=30, seed=2025), jobs=1)
    assert [s.mr for s in first] != [s.mr for s in other]


def test_sample_unique_workers_match_serial(geoquery: WeightedGrammar):
    cfg = SampleConfig(count=40, seed=5)
    serial, serial_stats = sample_unique(geoquery, cfg, jobs=1)
    parallel, parallel_stats = sample_unique(geoquery, cfg, jobs=2)
    assert [s.mr for s in serial] == [s.mr for s in parallel]
    assert [s.logprob for s in serial] == [s.logprob for s in parallel]
    assert serial_stats == parallel_stats


def test_sample_unique_excludes(g1: WeightedGrammar):
    cfg = SampleConfig(count=2, max_len=3, exclude=["b"])
    samples, stats = sample_unique(g1, cfg, jobs=1)
    assert {sample.mr for sample in samples} == {"a b", "a a b"}
    assert stats.rejected_by_reason.get(EXCLUDED, 0) >= 1


def test_sample_unique_finite_language_is_exhausted(g1: WeightedGrammar):
    only_base = WeightedGrammar(grammar=g1.grammar, weights=(0.0, 1.0))
    samples, stats = sample_unique(only_base, SampleConfig(count=3), jobs=1)
    assert [sample.mr for sample in samples] == ["b"]
    assert stats.distinct_exhausted
    assert stats.language_size == 1


def test_exhaustive_mode_stays_within_budget():
    letters = load_grammar("S -> 'a'\nS -> 'b'\nS -> 'c'\nS -> 'd'\nS -> 'e'")
    cfg = SampleConfig(count=2, budget=2, exclude=["a", "b", "c"])
    samples, stats = sample_unique(letters, cfg, jobs=1)
    assert sorted(sample.mr for sample in samples) == ["d", "e"]
    assert stats.distinct_exhausted
    assert stats.attempts == 2 <= stats.budget
    assert not stats.budget_exhausted
    assert stats.rejected_by_reason == {EXCLUDED: 3}


def test_sample_unique_scan_runs_out(scan: WeightedGrammar):
    samples, stats = sample_unique(scan, SampleConfig(count=10_000, seed=1), jobs=1)
    assert stats.distinct_exhausted
    assert len(samples) == 9228
    assert stats.language_size == len(samples)
    assert len({sample.tokens for sample in samples}) == len(samples)
    again, _ = sample_unique(scan, SampleConfig(count=10_000, seed=1), jobs=1)
    assert [s.mr for s in again] == [s.mr for s in samples]


def test_post_filter_max_depth(g1: WeightedGrammar):
    cfg = SampleConfig(count=3, post_filter="max-depth-of(S, 2)")
    samples, _ = sample_unique(g1, cfg, jobs=1)
    assert {sample.mr for sample in samples} <= {"b", "a b", "a a b"}
    assert all(sample.depths["S"] <= 2 for sample in samples)


def test_post_filter_must_contain(geoquery: WeightedGrammar):
    cfg = SampleConfig(count=3, budget=20_000, seed=3, post_filter="must-contain('most')")
    samples, stats = sample_unique(geoquery, cfg, jobs=1)
    assert len(samples) == 3
    assert all("most" in sample.tokens for sample in samples)
    assert stats.rejected_by_reason["filter"] > 0


def test_post_filter_rejecting_everything(g1: WeightedGrammar):
    cfg = SampleConfig(count=2, budget=50, post_filter="reject-everything")
    samples, stats = sample_unique(g1, cfg, jobs=1)
    assert samples == []
    assert stats.budget_exhausted
    assert stats.attempts == 50
    assert stats.rejected_by_reason == {"filter": 50}


def test_post_filter_registry_errors():
    with pytest.raises(FilterError, match="already registered"):
        register_post_filter("must-contain", lambda sample, token: True)
    with pytest.raises(FilterError, match="Unknown post-filter"):
        resolve_post_filter("no-such-filter(1)")
    with pytest.raises(FilterError, match="takes 2 arguments"):
        resolve_post_filter("max-depth-of(S)")
    with pytest.raises(FilterError, match="Bad arguments"):
        resolve_post_filter("max-depth-of(S, deep)")
    with pytest.raises(FilterError, match="Malformed"):
        resolve_post_filter("max-depth-of(S, 2")
    adjacent = resolve_post_filter("forbid-adjacent(a, a)")
    assert str(adjacent) == "forbid-adjacent(a, a)"


def test_forbid_adjacent(g1: WeightedGrammar):
    cfg = SampleConfig(count=2, post_filter="forbid-adjacent(a, a)")
    samples, _ = sample_unique(g1, cfg, jobs=1)
    assert {sample.mr for sample in samples} == {"b", "a b"}


def test_depth_frequency_law(g1: WeightedGrammar):
    draws = 100_000
    samples, _ = sample_draws(g1, SampleConfig(count=draws, seed=99), jobs=1)
    assert len(samples) == draws
    depths = Counter(sample.depths["S"] for sample in samples)
    for depth in range(11):
        p = 0.5 ** (depth + 1)
        tolerance = 4 * math.sqrt(p * (1 - p) / draws)
        assert abs(depths[depth] / draws - p) <= tolerance
    frequency = sum(1 for sample in samples if sample.mr == "a b") / draws
    assert abs(frequency - 0.25) <= 0.01


def test_cp_recursion_is_shallower(pp_grammar: WeightedGrammar, cp_grammar: WeightedGrammar):
    pp, _ = sample_draws(pp_grammar, SampleConfig(count=10_000, seed=1), jobs=1)
    cp, _ = sample_draws(cp_grammar, SampleConfig(count=10_000, seed=1), jobs=1)
    assert mean_depth(cp, "S") < mean_depth(pp, "NP")


def test_sampler_refuses_all_zero_nonterminal():
    grammar = load_grammar("S -> 'a' T\nT -> 'b'")
    broken = WeightedGrammar(grammar=grammar.grammar, weights=(1.0, 0.0))
    with pytest.raises(GrammarError, match="weight zero"):
        Sampler(broken)


def test_enumerate_g1(g1: WeightedGrammar):
    language = enumerate_language(g1, max_len=4)
    assert not language.finite
    assert [" ".join(tokens) for tokens in language] == ["b", "a b", "a a b", "a a a b"]
    with pytest.raises(EnumerationError, match="recursive"):
        enumerate_language(g1)
    with pytest.raises(EnumerationError):
        enumerate_language(g1, max_len=4, strategy="memo")


def test_enumerate_geoquery_shortest(geoquery: WeightedGrammar):
    language = enumerate_language(geoquery, max_len=7)
    assert sorted(" ".join(tokens) for tokens in language) == [
        "answer ( capital ( all ) )",
        "answer ( city ( all ) )",
        "answer ( place ( all ) )",
        "answer ( state ( all ) )",
        "answer ( stateid ( ohio ) )",
        "answer ( stateid ( texas ) )",
        "answer ( stateid ( utah ) )",
        "answer ( stateid ( washington ) )",
    ]


def test_enumerate_scan_strategies_agree(scan: WeightedGrammar):
    memo = enumerate_language(scan, strategy="memo")
    leftmost = enumerate_language(scan, strategy="leftmost")
    assert memo.finite is True and leftmost.finite is True
    assert memo.count == leftmost.count == 9228
    assert memo.strings == leftmost.strings
    assert memo.count == language_size(uniform_weights(scan))
    assert derivation_count(scan) >= memo.count
    lengths = [len(tokens) for tokens in memo]
    assert lengths == sorted(lengths)


def test_derivation_count_refuses_recursion(g1: WeightedGrammar):
    with pytest.raises(EnumerationError):
        derivation_count(g1)


def test_rng_streams_are_reproducible():
    assert rng_for(1, 5).random() == rng_for(1, 5).random()
    assert rng_for(1, 5).random() != rng_for(1, 6).random()
    assert rng_for(1, 5).random() != rng_for(2, 5).random()


def test_sample_config_budget():
    assert SampleConfig(count=7).budget == 700
    with pytest.raises(ValueError):
        SampleConfig(count=10, budget=5)
    with pytest.raises(ValueError):
        SampleConfig(count=0)


def test_sample_tokens_helper(g1: WeightedGrammar):
    sampler = Sampler(g1)
    result = sampler.make_sample(tokenize("a b"), parse_all(g1, tokenize("a b")).canonical_tree())
    assert math.isclose(result.logprob, math.log(0.25))
    assert result.depths == {"S": 1}

# -*- coding: utf-8 -*-
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mrsynth.analytics import (
    average_length,
    build_report,
    depth_coverage,
    depth_histogram,
    instance_coverage,
    mr_perplexity,
    ngram_coverage,
    render_table,
    structure_coverage,
)
from mrsynth.estimation import estimate_mle
from mrsynth.exceptions import DataError, ParseError
from mrsynth.grammar import WeightedGrammar, load_grammar
from mrsynth.models import DatasetReport, ParallelDataset, ParallelRecord, SampleConfig
from mrsynth.sampler import sample_draws, sample_unique

from .conftest import make_dataset

sentences = st.lists(
    st.lists(st.sampled_from(["a", "b", "c"]), min_size=1, max_size=5).map(" ".join),
    min_size=1,
    max_size=6,
)


def test_ngram_coverage_cases():
    assert ngram_coverage(["a b c", "b c d"], ["a b d"], 2) == 50.0
    assert ngram_coverage(["a b c", "b c d"], ["b c"], 2) == 100.0
    assert ngram_coverage(["a b"], ["c d"], 1) == 0.0
    # shorter than n: no n-gram to cover
    assert ngram_coverage(["a b"], ["a"], 2) == 100.0


def test_coverage_of_empty_test_corpus():
    with pytest.raises(DataError):
        ngram_coverage(["a b"], [], 2)
    with pytest.raises(DataError):
        instance_coverage(["a b"], [])
    with pytest.raises(DataError, match="at least 1"):
        ngram_coverage(["a b"], ["a b"], 0)


def test_instance_coverage_cases(geoquery_train, geoquery_test):
    assert instance_coverage(["x"], ["x", "y"]) == 50.0
    assert instance_coverage(geoquery_train.mrs(), geoquery_train.mrs()) == 100.0
    assert instance_coverage(geoquery_train.mrs(), geoquery_test.mrs()) == 20.0


def test_average_length():
    assert average_length(["a b", "a b c d"]) == 3.0
    assert average_length([]) == 0.0


@settings(max_examples=50, deadline=None)
@given(sentences, sentences, st.integers(min_value=1, max_value=3))
def test_instance_coverage_implies_ngram_coverage(train, extra, n):
    # a test set drawn from train is fully covered at every order
    test = train[: max(1, len(train) // 2)]
    assert instance_coverage(train + extra, test) == 100.0
    assert ngram_coverage(train + extra, test, n) == 100.0


@settings(max_examples=50, deadline=None)
@given(sentences, sentences, sentences, st.integers(min_value=1, max_value=3))
def test_adding_training_data_never_lowers_coverage(train, extra, test, n):
    assert ngram_coverage(train + extra, test, n) >= ngram_coverage(train, test, n)
    assert instance_coverage(train + extra, test) >= instance_coverage(train, test)


def test_structure_coverage_g1(g1: WeightedGrammar):
    coverage = structure_coverage(g1, ["b"], ["a b"])
    assert coverage.percentage == 50.0
    assert coverage.uncovered == [("S", ("'a'", "S"))]
    assert structure_coverage(g1, ["a b"], ["a b"]).percentage == 100.0


def test_structure_coverage_reports_unseen_rule(geoquery: WeightedGrammar, geoquery_train):
    test = ["answer ( traverse_1 ( most ( riverid ( mississippi ) ) ) )"]
    coverage = structure_coverage(geoquery, geoquery_train.mrs(), test)
    assert ("River", ("'most'", "'('", "River", "')'")) in coverage.uncovered
    assert coverage.percentage < 100.0


def test_structure_coverage_geoquery_split(
    geoquery: WeightedGrammar, geoquery_train, geoquery_test
):
    coverage = structure_coverage(geoquery, geoquery_train.mrs(), geoquery_test.mrs())
    assert coverage.uncovered == [("CityName", ("'austin'",)), ("StateName", ("'utah'",))]
    assert coverage.skipped_unparseable == 0


def test_structure_coverage_skips_unparseable(g1: WeightedGrammar):
    coverage = structure_coverage(g1, ["b", "c"], ["b", "b a"])
    assert coverage.percentage == 100.0
    assert coverage.skipped_unparseable == 2
    with pytest.raises(ParseError):
        structure_coverage(g1, ["b"], ["c"])


def test_depth_histogram(g1: WeightedGrammar):
    corpus = ["b", "a b", "a a b"]
    assert depth_histogram(g1, corpus, ["S"]) == {("S", 0): 1, ("S", 1): 1, ("S", 2): 1}
    assert depth_histogram(g1, [], ["S"]) == {}
    assert depth_histogram(g1, corpus, ["T"]) == {("T", -1): 3}


def test_depth_histogram_skips_unparseable(g1: WeightedGrammar):
    assert depth_histogram(g1, ["a b", "c", "a b"], ["S"]) == {("S", 1): 2}


def test_depth_coverage(g1: WeightedGrammar):
    assert depth_coverage(g1, ["b", "a b"], ["a a b", "b"], "S") == 50.0
    assert depth_coverage(g1, ["a a b"], ["a a b", "b"], "S") == 100.0


def test_perplexity_closed_form(g1: WeightedGrammar):
    report = mr_perplexity(g1, ["a b"])
    assert report.token_count == 2
    assert math.isclose(report.total_logprob, math.log(0.25))
    assert math.isclose(report.perplexity, 2.0)


def test_perplexity_of_a_deterministic_language():
    report = mr_perplexity(load_grammar("S -> 'a' 'b'"), ["a b", "a b"])
    assert math.isclose(report.perplexity, 1.0)
    assert report.instance_nll == [0.0, 0.0]


def test_perplexity_leaves_out_zero_probability(g1: WeightedGrammar):
    only_base = WeightedGrammar(grammar=g1.grammar, weights=(0.0, 1.0))
    report = mr_perplexity(only_base, ["b", "a b", "c"])
    assert report.instances == 3
    assert report.zero_probability == 1
    assert report.unparseable == 1
    assert report.token_count == 1
    assert math.isclose(report.perplexity, 1.0)
    assert report.instance_nll[1:] == [None, None]


def test_perplexity_undefined_without_probable_instances(g1: WeightedGrammar):
    report = mr_perplexity(g1, ["c"])
    assert report.perplexity is None
    assert report.unparseable == 1


def test_true_weights_have_lower_perplexity(g1: WeightedGrammar):
    truth = WeightedGrammar(grammar=g1.grammar, weights=(0.3, 0.7))
    samples, _ = sample_draws(truth, SampleConfig(count=5_000, seed=17), jobs=1)
    corpus = [sample.tokens for sample in samples]
    assert mr_perplexity(truth, corpus).perplexity < mr_perplexity(g1, corpus).perplexity


def test_build_report(geoquery: WeightedGrammar, geoquery_train, geoquery_test):
    report = build_report(
        geoquery,
        geoquery_train,
        geoquery_test,
        augmented=geoquery_test,
        ngram_orders=[1, 2],
        depth_targets=["State"],
        with_perplexity=True,
    )
    assert list(report.rows) == ["train", "train+augmented"]
    train = report.rows["train"]
    assert train["english"].instances == 10
    assert train["english"].instance_coverage == 20.0
    assert train["mr"].instance_coverage == 20.0
    assert train["mr"].structure_coverage < 100.0
    assert sum(train["mr"].depth_histogram["State"].values()) == 10
    augmented = report.rows["train+augmented"]
    for side in ("english", "mr"):
        assert augmented[side].instances == 15
        assert augmented[side].instance_coverage == 100.0
        assert augmented[side].ngram_coverage == {1: 100.0, 2: 100.0}
        assert augmented[side].ngram_coverage[2] >= train[side].ngram_coverage[2]
    assert augmented["mr"].structure_coverage == 100.0
    assert report.perplexity.instances == 5
    assert report.perplexity.perplexity > 1.0
    assert DatasetReport.model_validate_json(report.model_dump_json()) == report


TOY_GRAMMAR = "S -> 'go' D\nS -> 'turn' D\nS -> 'look'\nS -> S 'twice'\nD -> 'left'\nD -> 'right'\n"
TOY_TRAIN = (
    [("walk left", "go left")] * 5
    + [("walk right again", "go right twice")] * 4
    + [("spin left", "turn left")] * 4
    + [("spin right again again", "turn right twice twice")] * 3
)
TOY_TEST = [
    ("walk left", "go left"),
    ("look around", "look"),
    ("walk left again", "go left twice"),
    ("spin left again again again", "turn left twice twice twice"),
]


def test_build_report_toy_split():
    grammar = load_grammar(TOY_GRAMMAR)
    train, test = make_dataset(TOY_TRAIN), make_dataset(TOY_TEST)
    assert len(train) + len(test) == 20
    report = build_report(grammar, train, test, ngram_orders=[1, 2, 3], depth_targets=["S"])
    english, mr = report.rows["train"]["english"], report.rows["train"]["mr"]
    assert english.instances == mr.instances == 16
    # (5 * 2 + 4 * 3 + 4 * 2 + 3 * 4) / 16 on both sides
    assert english.avg_length == mr.avg_length == 2.625
    assert english.instance_coverage == mr.instance_coverage == 25.0
    # 'look' and 'around' are never seen in train; 'left again' neither
    assert english.ngram_coverage == {1: pytest.approx(400 / 6), 2: 60.0, 3: 0.0}
    assert mr.ngram_coverage == {1: 80.0, 2: 75.0, 3: 0.0}
    assert english.structure_coverage is None
    assert english.depth_histogram is None
    assert mr.structure_coverage == 80.0
    assert mr.depth_histogram == {"S": {0: 9, 1: 4, 2: 3}}
    assert mr.skipped_unparseable == 0
    assert structure_coverage(grammar, train.mrs(), test.mrs()).uncovered == [
        ("S", ("'look'",))
    ]


def test_augmenting_from_the_test_grammar_adds_bigrams():
    grammar = load_grammar(TOY_GRAMMAR)
    train, test = make_dataset(TOY_TRAIN), make_dataset(TOY_TEST)
    estimated, _ = estimate_mle(grammar, test.mrs(), jobs=1)
    samples, _ = sample_unique(estimated, SampleConfig(count=30, seed=2), jobs=1)
    augmented = make_dataset([(sample.mr, sample.mr) for sample in samples])
    report = build_report(grammar, train, test, augmented=augmented, ngram_orders=[2])
    before = report.rows["train"]["mr"]
    after = report.rows["train+augmented"]["mr"]
    assert after.ngram_coverage[2] > before.ngram_coverage[2]
    assert after.structure_coverage == 100.0


def test_build_report_without_grammar(geoquery_train, geoquery_test):
    report = build_report(None, geoquery_train, geoquery_test, with_perplexity=True)
    assert list(report.rows) == ["train"]
    assert report.ngram_orders == [2]
    assert report.rows["train"]["mr"].structure_coverage is None
    assert report.perplexity is None


def test_build_report_rejects_empty_sentences(geoquery_train):
    broken = ParallelDataset(records=[ParallelRecord(sentence=" ", mr="answer ( city ( all ) )")])
    with pytest.raises(DataError, match="empty sentence"):
        build_report(None, geoquery_train, broken)


def test_render_table(geoquery: WeightedGrammar, geoquery_train, geoquery_test):
    report = build_report(geoquery, geoquery_train, geoquery_test, augmented=geoquery_test)
    lines = render_table(report).splitlines()
    assert len(lines) == 3
    assert lines[0].startswith("Data")
    assert "MR Bigrams(%)" in lines[0]
    assert "MR Structure(%)" in lines[0]
    assert lines[1].startswith("train ")
    assert lines[2].startswith("train+augmented")
    assert lines[2].split()[-1] == "100.0"
    assert len({len(line) for line in lines}) == 1


def test_render_table_toy_split():
    train = make_dataset([("one", "b")])
    report = build_report(load_grammar("S -> 'a' S\nS -> 'b'"), train, train)
    assert render_table(report).splitlines()[1].split() == [
        "train",
        "1.0",
        "100.0",
        "100.0",
        "1.0",
        "100.0",
        "100.0",
        "100.0",
    ]

# -*- coding: utf-8 -*-
"""Dataset statistics: lengths, n-gram and instance coverage, local structure coverage,
recursion depths and grammar-level perplexity.

Coverage always counts distinct types, never occurrences.
"""
import math
from collections import Counter
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union

import numpy as np
from loguru import logger
from nltk.util import ngrams

from mrsynth import config
from mrsynth.exceptions import DataError, ParseError
from mrsynth.grammar import Grammar, WeightedGrammar
from mrsynth.models import (
    CoverageReport,
    DatasetReport,
    ParallelDataset,
    PerplexityReport,
    StructureCoverage,
)
from mrsynth.parser import (
    ParseTree,
    StructureKey,
    inside_logprob,
    local_structures,
    parse_all,
    tree_depth,
)
from mrsynth.utils import tokenize

Tokens = Tuple[str, ...]
Corpus = Iterable[Union[str, Sequence[str]]]


def _as_tokens(corpus: Corpus) -> List[Tokens]:
    return [tokenize(item) if isinstance(item, str) else tuple(item) for item in corpus]


def _base(grammar: Union[Grammar, WeightedGrammar]) -> Grammar:
    return grammar.grammar if isinstance(grammar, WeightedGrammar) else grammar


def _percentage(part: int, whole: int) -> float:
    return 100.0 * part / whole


def ngram_types(corpus: Corpus, n: int) -> Set[Tokens]:
    return {gram for tokens in _as_tokens(corpus) for gram in ngrams(tokens, n)}


def ngram_coverage(train: Corpus, test: Corpus, n: int) -> float:
    """Percentage of distinct test n-grams that occur anywhere in train.

    Sequences shorter than ``n`` contribute no n-grams. A test corpus without any n-gram is
    fully covered.

    Raises:
        DataError: If the test corpus is empty or ``n`` is below 1.

    >>> ngram_coverage(["a b c", "b c d"], ["a b d"], 2)
    50.0
    """
    if n < 1:
        raise DataError(f"n-gram order must be at least 1, got {n}")
    test = _as_tokens(test)
    if not test:
        raise DataError("Cannot compute coverage of an empty test corpus")
    wanted = ngram_types(test, n)
    if not wanted:
        return 100.0
    observed = ngram_types(train, n)
    return _percentage(len(wanted & observed), len(wanted))


def instance_coverage(train: Corpus, test: Corpus) -> float:
    """Percentage of distinct test sequences appearing verbatim in train.

    >>> instance_coverage(["x"], ["x", "y"])
    50.0
    """
    wanted = set(_as_tokens(test))
    if not wanted:
        raise DataError("Cannot compute coverage of an empty test corpus")
    return _percentage(len(wanted & set(_as_tokens(train))), len(wanted))


def average_length(corpus: Corpus) -> float:
    lengths = [len(tokens) for tokens in _as_tokens(corpus)]
    return float(np.mean(lengths)) if lengths else 0.0


def canonical_trees(
    grammar: Union[Grammar, WeightedGrammar], corpus: Corpus
) -> Tuple[List[ParseTree], int]:
    """The first deterministic parse of every parseable instance, and the number skipped."""
    base = _base(grammar)
    cache: Dict[Tokens, Optional[ParseTree]] = {}
    trees: List[ParseTree] = []
    skipped = 0
    for tokens in _as_tokens(corpus):
        if tokens not in cache:
            forest = parse_all(base, tokens) if tokens else None
            cache[tokens] = forest.canonical_tree() if forest and forest.parseable else None
            if cache[tokens] is None:
                logger.warning(f"Skipping unparseable MR {' '.join(tokens)!r}")
        if cache[tokens] is None:
            skipped += 1
        else:
            trees.append(cache[tokens])
    return trees, skipped


def _structures(grammar: Grammar, trees: Iterable[ParseTree]) -> Set[StructureKey]:
    return set().union(*(local_structures(tree, grammar) for tree in trees))


def structure_coverage(
    grammar: Union[Grammar, WeightedGrammar], train: Corpus, test: Corpus
) -> StructureCoverage:
    """Coverage of the test set's parent/children structures by the training set's.

    Structures come from the canonical parse of each instance. Unparseable instances of either
    side are skipped and counted.

    Raises:
        ParseError: If no test instance parses.
    """
    base = _base(grammar)
    train_trees, train_skipped = canonical_trees(base, train)
    test_trees, test_skipped = canonical_trees(base, test)
    if not test_trees:
        raise ParseError("No test instance parses under the grammar")
    wanted = _structures(base, test_trees)
    observed = _structures(base, train_trees)
    return StructureCoverage(
        percentage=_percentage(len(wanted & observed), len(wanted)),
        uncovered=sorted(wanted - observed),
        skipped_unparseable=train_skipped + test_skipped,
    )


def depth_histogram(
    grammar: Union[Grammar, WeightedGrammar], corpus: Corpus, targets: Sequence[str]
) -> Dict[Tuple[str, int], int]:
    """Count instances by (target, depth of target in the canonical parse).

    >>> from mrsynth.grammar import load_grammar
    >>> g = load_grammar("S -> 'a' S\\nS -> 'b'")
    >>> depth_histogram(g, ["b", "a b", "a a b"], ["S"])
    {('S', 0): 1, ('S', 1): 1, ('S', 2): 1}
    """
    base = _base(grammar)
    trees, _ = canonical_trees(base, corpus)
    histogram: Counter = Counter(
        (target, tree_depth(tree, target, base)) for tree in trees for target in targets
    )
    return dict(sorted(histogram.items()))


def depth_coverage(
    grammar: Union[Grammar, WeightedGrammar], train: Corpus, test: Corpus, target: str
) -> float:
    """Percentage of test instances whose ``target`` depth does not exceed the deepest in train.

    The recursion analogue of structure coverage: local structures are blind to depth.

    Raises:
        ParseError: If no test instance parses.
    """
    base = _base(grammar)
    train_trees, _ = canonical_trees(base, train)
    test_trees, _ = canonical_trees(base, test)
    if not test_trees:
        raise ParseError("No test instance parses under the grammar")
    deepest = max((tree_depth(tree, target, base) for tree in train_trees), default=-1)
    covered = sum(1 for tree in test_trees if tree_depth(tree, target, base) <= deepest)
    return _percentage(covered, len(test_trees))


def mr_perplexity(weighted: WeightedGrammar, corpus: Corpus) -> PerplexityReport:
    """Per-token perplexity of a corpus under a weighted grammar.

    The probability of an MR sums over all of its parse trees. Unparseable and
    zero-probability instances are left out of the exponent and tallied; their entry in
    ``instance_nll`` is None.

    Returns:
        PerplexityReport: ``perplexity`` is None when no instance has positive probability.
    """
    base = weighted.grammar
    cache: Dict[Tokens, float] = {}
    total = 0.0
    token_count = 0
    unparseable = zero = 0
    losses: List[Optional[float]] = []
    tokens_list = _as_tokens(corpus)
    for tokens in tokens_list:
        if tokens not in cache:
            forest = parse_all(base, tokens) if tokens else None
            cache[tokens] = (
                inside_logprob(forest, weighted) if forest and forest.parseable else math.nan
            )
        logprob = cache[tokens]
        if math.isnan(logprob):
            unparseable += 1
            losses.append(None)
        elif math.isinf(logprob):
            zero += 1
            losses.append(None)
        else:
            total += logprob
            token_count += len(tokens)
            losses.append(-logprob)
    if unparseable or zero:
        logger.warning(
            f"Perplexity leaves out {unparseable} unparseable and {zero} zero-probability MRs"
        )
    perplexity = math.exp(-total / token_count) if token_count else None
    return PerplexityReport(
        instances=len(tokens_list),
        total_logprob=total,
        token_count=token_count,
        perplexity=perplexity,
        unparseable=unparseable,
        zero_probability=zero,
        instance_nll=losses,
    )


def coverage_report(
    side: str,
    train: Corpus,
    test: Corpus,
    ngram_orders: Sequence[int],
    grammar: Optional[Union[Grammar, WeightedGrammar]] = None,
    depth_targets: Sequence[str] = (),
) -> CoverageReport:
    """Statistics of one side of a training set against the test set.

    The grammar-based fields are filled for the MR side when a grammar is given.
    """
    train, test = _as_tokens(train), _as_tokens(test)
    report = CoverageReport(
        side=side,
        instances=len(train),
        avg_length=average_length(train),
        ngram_coverage={n: ngram_coverage(train, test, n) for n in ngram_orders},
        instance_coverage=instance_coverage(train, test),
    )
    if side == "mr" and grammar is not None:
        structures = structure_coverage(grammar, train, test)
        report.structure_coverage = structures.percentage
        report.skipped_unparseable = structures.skipped_unparseable
        if depth_targets:
            histogram = depth_histogram(grammar, train, depth_targets)
            nested: Dict[str, Dict[int, int]] = {}
            for (target, depth), count in histogram.items():
                nested.setdefault(target, {})[depth] = count
            report.depth_histogram = nested
    return report


def build_report(
    grammar: Optional[Union[Grammar, WeightedGrammar]],
    train: ParallelDataset,
    test: ParallelDataset,
    augmented: Optional[ParallelDataset] = None,
    ngram_orders: Optional[Sequence[int]] = None,
    depth_targets: Sequence[str] = (),
    with_perplexity: bool = False,
) -> DatasetReport:
    """Dataset statistics in the layout of one table row per training set.

    Rows are ``train`` and, when an augmented set is given, ``train+augmented``. Each row holds
    an english and an mr ``CoverageReport`` against the test set. With ``with_perplexity`` and a
    weighted grammar, the report also carries the perplexity of the test MRs.

    Raises:
        DataError: If any dataset has an empty sentence or the test set is empty.
    """
    ngram_orders = list(ngram_orders or config.ANALYSIS_NGRAM_ORDERS)
    for name, dataset in (("train", train), ("test", test), ("augmented", augmented)):
        if dataset is None:
            continue
        for index, record in enumerate(dataset.records, start=1):
            if not record.sentence.strip():
                raise DataError(f"{name} record {index} has an empty sentence")
    training_sets = {"train": train}
    if augmented is not None:
        training_sets["train+augmented"] = ParallelDataset(
            records=list(train.records) + list(augmented.records)
        )
    rows: Dict[str, Dict[str, CoverageReport]] = {}
    for row, dataset in training_sets.items():
        logger.info(f"Computing statistics for {row} ({len(dataset)} instances)")
        rows[row] = {
            "english": coverage_report(
                "english", dataset.sentences(), test.sentences(), ngram_orders
            ),
            "mr": coverage_report(
                "mr", dataset.mrs(), test.mrs(), ngram_orders, grammar, depth_targets
            ),
        }
    perplexity = None
    if with_perplexity and isinstance(grammar, WeightedGrammar):
        perplexity = mr_perplexity(grammar, test.mrs())
    return DatasetReport(ngram_orders=ngram_orders, rows=rows, perplexity=perplexity)


def render_table(report: DatasetReport) -> str:
    """Aligned text rendering: one line per row, length and coverage columns for each side."""
    headers = ["Data"]
    for side in ("English", "MR"):
        headers.append(f"{side} Avg length")
        headers.extend(f"{side} {_gram_name(n)}(%)" for n in report.ngram_orders)
        headers.append(f"{side} Instance(%)")
    has_structure = any(
        sides["mr"].structure_coverage is not None for sides in report.rows.values()
    )
    if has_structure:
        headers.append("MR Structure(%)")
    lines = []
    for row, sides in report.rows.items():
        cells = [row]
        for side in ("english", "mr"):
            stats = sides[side]
            cells.append(f"{stats.avg_length:.1f}")
            cells.extend(f"{stats.ngram_coverage[n]:.1f}" for n in report.ngram_orders)
            cells.append(f"{stats.instance_coverage:.1f}")
        if has_structure:
            structure = sides["mr"].structure_coverage
            cells.append("-" if structure is None else f"{structure:.1f}")
        lines.append(cells)
    widths = [max(len(line[i]) for line in [headers] + lines) for i in range(len(headers))]
    rendered = [
        "  ".join(
            cell.ljust(width) if i == 0 else cell.rjust(width)
            for i, (cell, width) in enumerate(zip(line, widths))
        )
        for line in [headers] + lines
    ]
    return "\n".join(rendered) + "\n"


def _gram_name(n: int) -> str:
    return {1: "Unigrams", 2: "Bigrams", 3: "Trigrams"}.get(n, f"{n}-grams")

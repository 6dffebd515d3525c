# -*- coding: utf-8 -*-
"""Rule weight estimation: maximum likelihood from parsed corpora, and uniform weights."""
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple, Union

from loguru import logger

from mrsynth import config
from mrsynth.exceptions import EstimationError, GrammarMismatchError
from mrsynth.grammar import Grammar, WeightedGrammar
from mrsynth.models import DistributionComparison, EstimationConfig, EstimationReport
from mrsynth.parser import RuleCountTable, count_rules, parse_all
from mrsynth.utils import tokenize

Corpus = Iterable[Union[str, Sequence[str]]]

PARSED = "parsed"
UNPARSEABLE = "unparseable"
OVER_CAP = "over-cap"

_worker_grammar: Optional[Grammar] = None


@dataclass
class CorpusCounts:
    table: RuleCountTable = field(default_factory=RuleCountTable)
    instances: int = 0
    distinct_instances: int = 0
    parsed: int = 0
    skipped_unparseable: int = 0
    skipped_over_cap: int = 0
    unknown_tokens: List[str] = field(default_factory=list)


def _base(grammar: Union[Grammar, WeightedGrammar]) -> Grammar:
    return grammar.grammar if isinstance(grammar, WeightedGrammar) else grammar


def _init_worker(grammar: Grammar) -> None:
    global _worker_grammar
    _worker_grammar = grammar


def _count_instance(
    job: Tuple[Tuple[str, ...], int, bool]
) -> Tuple[str, Optional[RuleCountTable], Tuple[str, ...], int]:
    tokens, cap, skip_over_cap = job
    forest = parse_all(_worker_grammar, tokens, cap=cap)
    if not forest.parseable:
        return UNPARSEABLE, None, forest.unknown_tokens, 0
    if forest.over_cap and skip_over_cap:
        return OVER_CAP, None, (), forest.count
    return PARSED, count_rules(forest, strict=False), (), forest.count


def count_corpus(
    grammar: Union[Grammar, WeightedGrammar],
    corpus: Corpus,
    cap: Optional[int] = None,
    skip_over_cap: bool = True,
    jobs: Optional[int] = None,
) -> CorpusCounts:
    """Sum fractional rule counts over a corpus of MRs.

    Each distinct MR is parsed once and its table is scaled by its multiplicity. Unparseable
    instances, and instances above the enumeration cap when ``skip_over_cap`` holds, are skipped
    with a warning and tallied.

    Args:
        grammar (Union[Grammar, WeightedGrammar]): The grammar to parse with.
        corpus (Corpus): MRs, as strings or token sequences.
        cap (int, optional): Enumeration cap. Defaults to ``config.ENUMERATION_CAP``.
        skip_over_cap (bool, optional): Skip over-cap instances. Defaults to True.
        jobs (int, optional): Worker processes. Defaults to ``config.JOBS``.

    Returns:
        CorpusCounts: The summed table and the skip tallies.
    """
    base = _base(grammar)
    cap = config.ENUMERATION_CAP if cap is None else cap
    jobs = config.JOBS if jobs is None else jobs
    multiplicity: Counter = Counter(
        tokenize(item) if isinstance(item, str) else tuple(item) for item in corpus
    )
    counts = CorpusCounts(
        instances=sum(multiplicity.values()), distinct_instances=len(multiplicity)
    )
    distinct = list(multiplicity)
    work = [(tokens, cap, skip_over_cap) for tokens in distinct]
    logger.info(
        f"Counting rules over {counts.instances} instances ({counts.distinct_instances} distinct)"
    )
    # make sure the binarization is cached before the grammar is shipped to workers
    base.binarized
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(
            max_workers=jobs, initializer=_init_worker, initargs=(base,)
        ) as executor:
            results = list(executor.map(_count_instance, work, chunksize=64))
    else:
        _init_worker(base)
        results = [_count_instance(job) for job in work]

    unknown: dict = {}
    tables = []
    for tokens, (status, table, missing, trees) in zip(distinct, results):
        weight = multiplicity[tokens]
        mr = " ".join(tokens)
        if status == UNPARSEABLE:
            counts.skipped_unparseable += weight
            unknown.update(dict.fromkeys(missing))
            detail = f", unknown tokens {list(missing)}" if missing else ""
            logger.warning(f"Skipping unparseable MR {mr!r}{detail}")
        elif status == OVER_CAP:
            counts.skipped_over_cap += weight
            logger.warning(f"Skipping MR {mr!r} with {trees} trees, above the cap of {cap}")
        else:
            counts.parsed += weight
            tables.append(table.scaled(weight))
    counts.table = RuleCountTable.sum(tables)
    counts.unknown_tokens = list(unknown)
    return counts


def weights_from_counts(
    grammar: Grammar, table: RuleCountTable, smoothing: float = 0.0
) -> Tuple[WeightedGrammar, List[str]]:
    """Relative frequencies within each lhs, with add-lambda smoothing.

    A nonterminal no parse ever touched gets uniform weights when ``smoothing`` is 0.

    Returns:
        Tuple[WeightedGrammar, List[str]]: The weighted grammar and the unobserved nonterminals.
    """
    smoothing = Fraction(smoothing)
    weights = [0.0] * len(grammar.rules)
    unobserved = []
    for lhs, rule_ids in grammar.rules_by_lhs.items():
        total = table.total(rule_ids)
        if total == 0:
            unobserved.append(lhs)
        if total == 0 and smoothing == 0:
            for rule_id in rule_ids:
                weights[rule_id] = 1.0 / len(rule_ids)
            continue
        denominator = total + smoothing * len(rule_ids)
        for rule_id in rule_ids:
            weights[rule_id] = float((table[rule_id] + smoothing) / denominator)
    return WeightedGrammar(grammar=grammar, weights=tuple(weights)), unobserved


def estimate_mle(
    grammar: Union[Grammar, WeightedGrammar],
    corpus: Corpus,
    cfg: Optional[EstimationConfig] = None,
    jobs: Optional[int] = None,
) -> Tuple[WeightedGrammar, EstimationReport]:
    """Estimate rule weights from a corpus of MRs by counting rule occurrences in parse trees.

    An MR with N trees contributes 1/N of each tree's rule occurrences. The weight of a rule
    ``N -> x`` is ``(count + smoothing) / (sum of counts for N + smoothing * k_N)``.

    Args:
        grammar (Union[Grammar, WeightedGrammar]): The grammar; existing weights are ignored.
        corpus (Corpus): MRs, as strings or token sequences.
        cfg (EstimationConfig, optional): Smoothing, cap and over-cap policy.
        jobs (int, optional): Worker processes for parsing. Defaults to ``config.JOBS``.

    Raises:
        EstimationError: If the corpus is empty or no instance could be counted.

    Returns:
        Tuple[WeightedGrammar, EstimationReport]: The estimated grammar and what was skipped.
    """
    cfg = cfg or EstimationConfig()
    if cfg.mode == "uniform":
        return uniform_weights(grammar), EstimationReport(mode="uniform")
    base = _base(grammar)
    corpus = list(corpus)
    if not corpus:
        raise EstimationError("Cannot estimate weights from an empty corpus")
    counts = count_corpus(
        base, corpus, cap=cfg.cap, skip_over_cap=cfg.skip_over_cap, jobs=jobs
    )
    if counts.parsed == 0:
        raise EstimationError(
            f"None of the {counts.instances} corpus instances could be counted "
            f"({counts.skipped_unparseable} unparseable, {counts.skipped_over_cap} over the cap)",
            unknown_tokens=counts.unknown_tokens,
        )
    weighted, unobserved = weights_from_counts(base, counts.table, cfg.smoothing)
    for lhs in unobserved:
        if cfg.smoothing == 0:
            logger.warning(f"Nonterminal {lhs} never observed, falling back to uniform weights")
    report = EstimationReport(
        mode="mle",
        smoothing=cfg.smoothing,
        instances=counts.instances,
        distinct_instances=counts.distinct_instances,
        parsed=counts.parsed,
        skipped_unparseable=counts.skipped_unparseable,
        skipped_over_cap=counts.skipped_over_cap,
        unobserved_nonterminals=unobserved,
        unknown_tokens=counts.unknown_tokens,
    )
    logger.info(
        f"Estimated weights from {counts.parsed}/{counts.instances} instances "
        f"({counts.skipped_unparseable} unparseable, {counts.skipped_over_cap} over the cap)"
    )
    return weighted, report


def uniform_weights(grammar: Union[Grammar, WeightedGrammar]) -> WeightedGrammar:
    """Every rule for a nonterminal with k rules gets weight 1/k.

    >>> from mrsynth.grammar import load_grammar
    >>> uniform_weights(load_grammar("S -> 'a' @ 3\\nS -> 'b' @ 1")).weights
    (0.5, 0.5)
    """
    base = _base(grammar)
    weights = [0.0] * len(base.rules)
    for rule_ids in base.rules_by_lhs.values():
        for rule_id in rule_ids:
            weights[rule_id] = 1.0 / len(rule_ids)
    return WeightedGrammar(grammar=base, weights=tuple(weights))


def compare_distributions(a: WeightedGrammar, b: WeightedGrammar) -> DistributionComparison:
    """Per-rule deltas (``a - b``) and total variation distance per nonterminal.

    Raises:
        GrammarMismatchError: If the two weightings are over different grammars.
    """
    if not a.grammar.is_compatible(b.grammar):
        raise GrammarMismatchError("Cannot compare weights of different grammars")
    deltas = {
        rule.id: a.weights[rule.id] - b.weights[rule.id] for rule in a.grammar.rules
    }
    total_variation = {
        lhs: 0.5 * math.fsum(abs(deltas[rule_id]) for rule_id in rule_ids)
        for lhs, rule_ids in a.grammar.rules_by_lhs.items()
    }
    return DistributionComparison(deltas=deltas, total_variation=total_variation)

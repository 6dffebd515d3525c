# -*- coding: utf-8 -*-
"""Sampling MRs from weighted grammars and enumerating finite MR languages.

Every attempt draws from its own counter-based random stream keyed by (seed, attempt index),
and results are consumed in attempt order, so the output does not depend on the number of
worker processes.
"""
import math
import re
from bisect import bisect_right
from collections import Counter, deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import chain, islice, product
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Set, Tuple, Union

import numpy as np
from loguru import logger

from mrsynth import config
from mrsynth.exceptions import EnumerationError, FilterError, GrammarError
from mrsynth.grammar import Grammar, WeightedGrammar, _cyclic_nodes, _dependency_graph
from mrsynth.models import SampleConfig, SampleRecord, SampleStats
from mrsynth.parser import ParseTree, tree_depths
from mrsynth.utils import string_to_list, tokenize

DEPTH = "depth"
LENGTH = "length"
FILTER = "filter"
DUPLICATE = "duplicate"
EXCLUDED = "excluded"

Tokens = Tuple[str, ...]


@dataclass(frozen=True)
class MRSample:
    tokens: Tokens
    derivation: ParseTree
    logprob: float
    depths: Dict[str, int] = field(default_factory=dict, compare=False)

    @property
    def mr(self) -> str:
        return " ".join(self.tokens)

    def to_record(self) -> SampleRecord:
        return SampleRecord(mr=self.mr, logprob=self.logprob, depth=self.depths)


@dataclass(frozen=True)
class Rejection:
    reason: str


# Post-filters


@dataclass(frozen=True)
class PostFilter:
    name: str
    args: tuple
    predicate: Callable[..., bool] = field(compare=False)

    def __call__(self, sample: MRSample) -> bool:
        return bool(self.predicate(sample, *self.args))

    def __str__(self) -> str:
        return f"{self.name}({', '.join(str(arg) for arg in self.args)})"


@dataclass(frozen=True)
class _FilterEntry:
    predicate: Callable[..., bool]
    arity: Optional[int]
    parse_args: Optional[Callable[..., tuple]]


_POST_FILTERS: Dict[str, _FilterEntry] = {}
_FILTER_SPEC = re.compile(r"^\s*([A-Za-z][\w-]*)\s*(?:\((.*)\))?\s*$")


def register_post_filter(
    name: str,
    predicate: Callable[..., bool],
    arity: Optional[int] = None,
    parse_args: Optional[Callable[..., tuple]] = None,
) -> None:
    """Make a predicate over ``MRSample`` selectable as a sampling post-filter.

    The predicate is called as ``predicate(sample, *args)`` with the arguments given in the
    filter spec, e.g. ``must-contain(most)``.

    Args:
        name (str): The filter name used in specs.
        predicate (Callable[..., bool]): Returns True to accept the sample.
        arity (int, optional): Required argument count, unchecked when None.
        parse_args (Callable[..., tuple], optional): Converts the argument strings once.

    Raises:
        FilterError: If the name is taken or invalid.
    """
    if not re.fullmatch(r"[A-Za-z][\w-]*", name):
        raise FilterError(f"Invalid post-filter name {name!r}")
    if name in _POST_FILTERS:
        raise FilterError(f"Post-filter {name!r} is already registered")
    _POST_FILTERS[name] = _FilterEntry(predicate, arity, parse_args)


def resolve_post_filter(spec: str) -> PostFilter:
    """Turn a spec such as ``max-depth-of(S, 2)`` into a callable filter.

    >>> resolve_post_filter("must-contain('most')").args
    ('most',)
    """
    match = _FILTER_SPEC.match(spec)
    if not match:
        raise FilterError(f"Malformed post-filter spec {spec!r}")
    name, raw_args = match.group(1), match.group(2)
    if name not in _POST_FILTERS:
        known = ", ".join(sorted(_POST_FILTERS))
        raise FilterError(f"Unknown post-filter {name!r}; known: {known}")
    entry = _POST_FILTERS[name]
    args = tuple(arg.strip("'\"") for arg in string_to_list(raw_args)) if raw_args else ()
    if entry.arity is not None and len(args) != entry.arity:
        raise FilterError(f"Post-filter {name} takes {entry.arity} arguments, got {len(args)}")
    if entry.parse_args is not None:
        try:
            args = tuple(entry.parse_args(*args))
        except (TypeError, ValueError) as exc:
            raise FilterError(f"Bad arguments for post-filter {name}: {exc}")
    return PostFilter(name=name, args=args, predicate=entry.predicate)


def _max_depth_of(sample: MRSample, nonterminal: str, depth: int) -> bool:
    return sample.depths.get(nonterminal, -1) <= depth


def _must_contain(sample: MRSample, token: str) -> bool:
    return token in sample.tokens


def _forbid_adjacent(sample: MRSample, first: str, second: str) -> bool:
    return not any(a == first and b == second for a, b in zip(sample.tokens, sample.tokens[1:]))


register_post_filter(
    "max-depth-of", _max_depth_of, arity=2, parse_args=lambda nt, depth: (nt, int(depth))
)
register_post_filter("must-contain", _must_contain, arity=1)
register_post_filter("forbid-adjacent", _forbid_adjacent, arity=2)


# Grammar measurements


def min_lengths(grammar: Grammar) -> Dict[str, float]:
    """Length of the shortest yield of every nonterminal (``inf`` when nonproductive)."""
    lengths = {lhs: math.inf for lhs in grammar.nonterminals}
    changed = True
    while changed:
        changed = False
        for rule in grammar.rules:
            total = sum(1 if s.terminal else lengths.get(s.name, math.inf) for s in rule.rhs)
            if total < lengths[rule.lhs]:
                lengths[rule.lhs] = total
                changed = True
    return lengths


def _restrict(grammar: Grammar, allowed: Optional[Set[int]]) -> List[int]:
    return [rule.id for rule in grammar.rules if allowed is None or rule.id in allowed]


def _topological(grammar: Grammar, allowed: Optional[Set[int]] = None) -> List[str]:
    """Nonterminals children first; the allowed rules must not be recursive."""
    graph = _dependency_graph(grammar.rules[rule_id] for rule_id in _restrict(grammar, allowed))
    if _cyclic_nodes(graph):
        raise EnumerationError("The grammar is recursive, its language is infinite")
    order: List[str] = []
    visited: Set[str] = set()
    for root in graph:
        if root in visited:
            continue
        visited.add(root)
        stack = [(root, iter(sorted(graph.get(root, ()))))]
        while stack:
            node, children = stack[-1]
            child = next(children, None)
            if child is None:
                stack.pop()
                order.append(node)
            elif child not in visited:
                visited.add(child)
                stack.append((child, iter(sorted(graph.get(child, ())))))
    return order


def derivation_count(
    grammar: Union[Grammar, WeightedGrammar], allowed: Optional[Set[int]] = None
) -> int:
    """Exact number of complete derivations from the start symbol of a non-recursive grammar.

    Raises:
        EnumerationError: If the grammar is recursive.
    """
    base = grammar.grammar if isinstance(grammar, WeightedGrammar) else grammar
    counts: Dict[str, int] = {}
    for lhs in _topological(base, allowed):
        counts[lhs] = sum(
            math.prod(1 if s.terminal else counts.get(s.name, 0) for s in rule.rhs)
            for rule in base.rules_for(lhs)
            if allowed is None or rule.id in allowed
        )
    return counts.get(base.start, 0)


def _yield_table(
    grammar: Grammar, allowed: Optional[Set[int]] = None
) -> Dict[str, Dict[Tokens, ParseTree]]:
    """Bottom-up yield sets of a non-recursive grammar, one representative derivation per yield.

    The representative is the first derivation in rule order.
    """
    table: Dict[str, Dict[Tokens, ParseTree]] = {}
    for lhs in _topological(grammar, allowed):
        yields: Dict[Tokens, ParseTree] = {}
        for rule in grammar.rules_for(lhs):
            if allowed is not None and rule.id not in allowed:
                continue
            parts = [
                [((symbol.name,), None)] if symbol.terminal else list(table[symbol.name].items())
                for symbol in rule.rhs
            ]
            for combination in product(*parts):
                tokens = tuple(chain.from_iterable(piece for piece, _ in combination))
                if tokens not in yields:
                    children = tuple(tree for _, tree in combination if tree is not None)
                    yields[tokens] = ParseTree(rule.id, children)
        table[lhs] = yields
    return table


def _max_length(grammar: Grammar) -> int:
    longest: Dict[str, float] = {}
    for lhs in _topological(grammar):
        longest[lhs] = max(
            (
                sum(1 if s.terminal else longest[s.name] for s in rule.rhs)
                for rule in grammar.rules_for(lhs)
            ),
            default=0,
        )
    return int(longest.get(grammar.start, 0))


def _leftmost_language(grammar: Grammar, max_len: int) -> Set[Tokens]:
    if _cyclic_nodes(_dependency_graph(grammar.rules, unit_only=True)):
        raise EnumerationError("Cannot enumerate a grammar with cyclic unit productions")
    shortest = min_lengths(grammar)
    found: Set[Tokens] = set()
    if math.isinf(shortest[grammar.start]):
        return found
    # (emitted prefix, pending symbols as a tuple with the next symbol last, lower bound)
    stack = [((), ((grammar.start, False),), shortest[grammar.start])]
    while stack:
        prefix, pending, bound = stack.pop()
        while pending and pending[-1][1]:
            prefix = prefix + (pending[-1][0],)
            pending = pending[:-1]
        if not pending:
            found.add(prefix)
            continue
        name = pending[-1][0]
        rest = pending[:-1]
        for rule in grammar.rules_for(name):
            rhs_bound = sum(1 if s.terminal else shortest[s.name] for s in rule.rhs)
            new_bound = bound - shortest[name] + rhs_bound
            if new_bound > max_len:
                continue
            expansion = tuple((s.name, s.terminal) for s in reversed(rule.rhs))
            stack.append((prefix, rest + expansion, new_bound))
    return found


@dataclass
class LanguageEnumeration:
    finite: bool
    strings: List[Tokens]
    max_len: Optional[int] = None
    strategy: str = "memo"

    @property
    def count(self) -> int:
        return len(self.strings)

    def __iter__(self) -> Iterator[Tokens]:
        return iter(self.strings)


def enumerate_language(
    grammar: Union[Grammar, WeightedGrammar],
    max_len: Optional[int] = None,
    strategy: str = "auto",
) -> LanguageEnumeration:
    """Every distinct derivable string, shortest first, then lexicographically.

    Args:
        grammar (Union[Grammar, WeightedGrammar]): The grammar; weights are ignored.
        max_len (int, optional): Length bound. Required for recursive grammars.
        strategy (str, optional): ``memo`` (bottom-up yield sets, non-recursive grammars only),
            ``leftmost`` (length-bounded leftmost expansion) or ``auto``. Defaults to ``auto``.

    Raises:
        EnumerationError: For a recursive grammar without ``max_len``, or ``memo`` on a recursive
            grammar.

    Returns:
        LanguageEnumeration: The strings and the finiteness verdict.
    """
    base = grammar.grammar if isinstance(grammar, WeightedGrammar) else grammar
    finite = not base.is_recursive()
    if strategy not in ("auto", "memo", "leftmost"):
        raise EnumerationError(f"Unknown enumeration strategy {strategy!r}")
    if not finite and max_len is None:
        raise EnumerationError("The grammar is recursive; enumerating it needs a maximum length")
    if strategy == "auto":
        strategy = "memo" if finite else "leftmost"
    if strategy == "memo":
        if not finite:
            raise EnumerationError("The memo strategy only handles non-recursive grammars")
        strings = list(_yield_table(base).get(base.start, {}))
        if max_len is not None:
            strings = [tokens for tokens in strings if len(tokens) <= max_len]
    else:
        bound = max_len if max_len is not None else _max_length(base)
        strings = list(_leftmost_language(base, bound))
    strings.sort(key=lambda tokens: (len(tokens), tokens))
    logger.info(
        f"Enumerated {len(strings)} strings ({'finite' if finite else 'recursive'} grammar, "
        f"{strategy} strategy)"
    )
    return LanguageEnumeration(finite=finite, strings=strings, max_len=max_len, strategy=strategy)


# Sampling


def rng_for(seed: int, attempt: int) -> np.random.Generator:
    """The random stream of one attempt: Philox keyed by the seed, attempt in the high word."""
    return np.random.Generator(np.random.Philox(key=seed, counter=attempt << 192))


def tree_height(tree: ParseTree) -> int:
    height = 0
    stack = [(tree, 1)]
    while stack:
        node, level = stack.pop()
        height = max(height, level)
        stack.extend((child, level + 1) for child in node.children)
    return height


def _freeze(root: tuple) -> ParseTree:
    built: List[ParseTree] = []
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        rule_id, children = node
        if done:
            k = len(children)
            subtrees = tuple(built[len(built) - k :]) if k else ()
            if k:
                del built[len(built) - k :]
            built.append(ParseTree(rule_id, subtrees))
        else:
            stack.append((node, True))
            stack.extend((child, False) for child in reversed(children))
    return built[0]


class Sampler:
    """Top-down leftmost derivation sampler with rejection on caps and on the post-filter.

    Zero-weight rules are never chosen, and a nonterminal with a single usable rule consumes no
    random draw.
    """

    def __init__(
        self,
        weighted: WeightedGrammar,
        max_depth: Optional[int] = None,
        max_len: Optional[int] = None,
        post_filter: Optional[Union[str, PostFilter]] = None,
    ):
        self.weighted = weighted
        self.grammar = weighted.grammar
        self.max_depth = config.SAMPLE_MAX_DEPTH if max_depth is None else max_depth
        self.max_len = config.SAMPLE_MAX_LEN if max_len is None else max_len
        if isinstance(post_filter, str):
            post_filter = resolve_post_filter(post_filter)
        self.post_filter = post_filter
        self.choices: Dict[str, Tuple[Tuple[int, ...], Tuple[float, ...]]] = {}
        for lhs, rule_ids in self.grammar.rules_by_lhs.items():
            usable = tuple(rule_id for rule_id in rule_ids if weighted.weights[rule_id] > 0)
            if not usable:
                raise GrammarError(f"Every rule for {lhs} has weight zero")
            total = math.fsum(weighted.weights[rule_id] for rule_id in usable)
            cumulative = np.cumsum([weighted.weights[rule_id] / total for rule_id in usable])
            self.choices[lhs] = (usable, tuple(float(value) for value in cumulative))
        self.log_weights = [weighted.log_weight(rule.id) for rule in self.grammar.rules]
        self.shortest = min_lengths(self.grammar)
        self.rhs_shortest = [
            sum(1 if s.terminal else self.shortest[s.name] for s in rule.rhs)
            for rule in self.grammar.rules
        ]

    @classmethod
    def from_config(cls, weighted: WeightedGrammar, cfg: SampleConfig) -> "Sampler":
        return cls(weighted, cfg.max_depth, cfg.max_len, cfg.post_filter)

    def _choose(self, lhs: str, rng: np.random.Generator) -> int:
        rule_ids, cumulative = self.choices[lhs]
        if len(rule_ids) == 1:
            return rule_ids[0]
        index = bisect_right(cumulative, rng.random())
        return rule_ids[min(index, len(rule_ids) - 1)]

    def draw(self, rng: np.random.Generator) -> Union[MRSample, Rejection]:
        rules = self.grammar.rules
        tokens: List[str] = []
        logprob = 0.0
        root: List[tuple] = []
        bound = self.shortest[self.grammar.start]
        # entries: (symbol, depth, parent's children) with depth None for terminals
        stack = [(self.grammar.start, 1, root)]
        while stack:
            name, depth, siblings = stack.pop()
            if depth is None:
                tokens.append(name)
                continue
            if depth > self.max_depth:
                return Rejection(DEPTH)
            rule_id = self._choose(name, rng)
            logprob += self.log_weights[rule_id]
            bound += self.rhs_shortest[rule_id] - self.shortest[name]
            if bound > self.max_len:
                return Rejection(LENGTH)
            children: List[tuple] = []
            siblings.append((rule_id, children))
            for symbol in reversed(rules[rule_id].rhs):
                if symbol.terminal:
                    stack.append((symbol.name, None, None))
                else:
                    stack.append((symbol.name, depth + 1, children))
        derivation = _freeze(root[0])
        sample = MRSample(
            tokens=tuple(tokens),
            derivation=derivation,
            logprob=logprob,
            depths=tree_depths(derivation, self.grammar),
        )
        if self.post_filter is not None and not self.post_filter(sample):
            return Rejection(FILTER)
        return sample

    def make_sample(self, tokens: Tokens, derivation: ParseTree) -> Union[MRSample, Rejection]:
        """Apply the caps and the post-filter to a known derivation."""
        if tree_height(derivation) > self.max_depth:
            return Rejection(DEPTH)
        if len(tokens) > self.max_len:
            return Rejection(LENGTH)
        sample = MRSample(
            tokens=tokens,
            derivation=derivation,
            logprob=math.fsum(self.log_weights[rule_id] for rule_id in derivation.rules()),
            depths=tree_depths(derivation, self.grammar),
        )
        if self.post_filter is not None and not self.post_filter(sample):
            return Rejection(FILTER)
        return sample


def sample_one(
    g: WeightedGrammar, cfg: SampleConfig, rng: np.random.Generator
) -> Union[MRSample, Rejection]:
    return Sampler.from_config(g, cfg).draw(rng)


@dataclass(frozen=True)
class _SamplingJob:
    weighted: WeightedGrammar
    max_depth: int
    max_len: int
    post_filter: Optional[str]
    seed: int


_worker_sampler: Optional[Sampler] = None
_worker_seed: int = 0


def _init_worker(job: _SamplingJob) -> None:
    global _worker_sampler, _worker_seed
    _worker_sampler = Sampler(job.weighted, job.max_depth, job.max_len, job.post_filter)
    _worker_seed = job.seed


def _run_batch(bounds: Tuple[int, int]) -> List[Union[MRSample, Rejection]]:
    start, stop = bounds
    return [_worker_sampler.draw(rng_for(_worker_seed, attempt)) for attempt in range(start, stop)]


def _attempts(job: _SamplingJob, budget: int, jobs: int) -> Iterator[Union[MRSample, Rejection]]:
    """Attempt results in attempt order, for at most ``budget`` attempts."""
    if jobs <= 1:
        sampler = Sampler(job.weighted, job.max_depth, job.max_len, job.post_filter)
        for attempt in range(budget):
            yield sampler.draw(rng_for(job.seed, attempt))
        return
    size = config.SAMPLE_BATCH_SIZE
    starts = iter(range(0, budget, size))
    executor = ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(job,))
    try:
        pending = deque(
            executor.submit(_run_batch, (start, min(start + size, budget)))
            for start in islice(starts, 2 * jobs)
        )
        while pending:
            results = pending.popleft().result()
            start = next(starts, None)
            if start is not None:
                pending.append(executor.submit(_run_batch, (start, min(start + size, budget))))
            yield from results
    finally:
        executor.shutdown(wait=True, cancel_futures=True)


def _job(g: WeightedGrammar, cfg: SampleConfig) -> _SamplingJob:
    post_filter = cfg.post_filter
    if post_filter is not None:
        resolve_post_filter(post_filter)
    return _SamplingJob(g, cfg.max_depth, cfg.max_len, post_filter, cfg.seed)


def positive_rules(g: WeightedGrammar) -> Set[int]:
    return {rule.id for rule in g.rules if g.weights[rule.id] > 0}


def finite_language(
    g: WeightedGrammar, limit: Optional[int] = None
) -> Optional[Dict[Tokens, ParseTree]]:
    """The positive-probability strings with a representative derivation each.

    Returns None when the positive-weight part of the grammar is recursive or has more than
    ``limit`` derivations (``config.LANGUAGE_SIZE_LIMIT`` by default).
    """
    limit = config.LANGUAGE_SIZE_LIMIT if limit is None else limit
    allowed = positive_rules(g)
    try:
        derivations = derivation_count(g, allowed)
    except EnumerationError:
        return None
    if derivations > limit:
        return None
    return _yield_table(g.grammar, allowed).get(g.start, {})


def language_size(g: WeightedGrammar, limit: Optional[int] = None) -> Optional[int]:
    """Number of distinct strings with positive probability, if the language is finite and small."""
    language = finite_language(g, limit)
    return None if language is None else len(language)


def _exhaustive(
    g: WeightedGrammar,
    cfg: SampleConfig,
    excluded: Set[Tokens],
    language: Dict[Tokens, ParseTree],
) -> Tuple[List[MRSample], SampleStats]:
    sampler = Sampler.from_config(g, cfg)
    size = len(language)
    rejected: Counter = Counter()
    accepted: List[MRSample] = []
    attempts = 0
    for tokens in sorted(language, key=lambda tokens: (len(tokens), tokens)):
        # excluded strings cost no attempt, so attempts <= count <= budget
        if tokens in excluded:
            rejected[EXCLUDED] += 1
            continue
        attempts += 1
        result = sampler.make_sample(tokens, language[tokens])
        if isinstance(result, Rejection):
            rejected[result.reason] += 1
        else:
            accepted.append(result)
    order = np.random.Generator(np.random.Philox(key=cfg.seed)).permutation(len(accepted))
    samples = [accepted[index] for index in order[: cfg.count]]
    stats = SampleStats(
        requested=cfg.count,
        returned=len(samples),
        attempts=attempts,
        budget=cfg.budget,
        rejected_by_reason=dict(sorted(rejected.items())),
        language_size=size,
        distinct_exhausted=True,
    )
    if len(samples) < cfg.count:
        logger.warning(
            f"Only {len(samples)} distinct MRs exist for {cfg.count} requested "
            f"(language size {size})"
        )
    return samples, stats


def sample_unique(
    g: WeightedGrammar,
    cfg: SampleConfig,
    jobs: Optional[int] = None,
) -> Tuple[List[MRSample], SampleStats]:
    """Sample up to ``cfg.count`` MRs with pairwise distinct token sequences.

    MRs listed in ``cfg.exclude`` are never returned. Sampling stops when enough MRs are
    collected or the attempt budget runs out. When the positive-probability language is finite
    and holds no more strings than requested, every string of it is returned instead (in a
    seeded random order) and ``distinct_exhausted`` is set.

    Args:
        g (WeightedGrammar): The weighted grammar.
        cfg (SampleConfig): Count, caps, budget, seed, exclusions and post-filter.
        jobs (int, optional): Worker processes. Defaults to ``config.JOBS``.

    Returns:
        Tuple[List[MRSample], SampleStats]: Samples in acceptance order and run statistics.
    """
    jobs = config.JOBS if jobs is None else jobs
    job = _job(g, cfg)
    excluded = {tokenize(mr) for mr in cfg.exclude}
    language = finite_language(g)
    size = None if language is None else len(language)
    if language is not None:
        logger.info(f"The grammar has a finite language of {size} MRs")
        available = size - sum(1 for tokens in excluded if tokens in language)
        if available <= cfg.count:
            return _exhaustive(g, cfg, excluded, language)

    seen: Set[Tokens] = set()
    samples: List[MRSample] = []
    rejected: Counter = Counter()
    attempts = 0
    for result in _attempts(job, cfg.budget, jobs):
        attempts += 1
        if isinstance(result, Rejection):
            rejected[result.reason] += 1
        elif result.tokens in excluded:
            rejected[EXCLUDED] += 1
        elif result.tokens in seen:
            rejected[DUPLICATE] += 1
        else:
            seen.add(result.tokens)
            samples.append(result)
            if len(samples) == cfg.count:
                break
    stats = SampleStats(
        requested=cfg.count,
        returned=len(samples),
        attempts=attempts,
        budget=cfg.budget,
        rejected_by_reason=dict(sorted(rejected.items())),
        budget_exhausted=len(samples) < cfg.count,
        language_size=size,
    )
    if stats.budget_exhausted:
        logger.warning(
            f"Attempt budget of {cfg.budget} exhausted with {len(samples)}/{cfg.count} MRs"
        )
    logger.info(f"Sampled {len(samples)} unique MRs in {attempts} attempts")
    return samples, stats


def sample_draws(
    g: WeightedGrammar,
    cfg: SampleConfig,
    n: Optional[int] = None,
    jobs: Optional[int] = None,
) -> Tuple[List[MRSample], SampleStats]:
    """Independent accepted draws, duplicates kept, until ``n`` are accepted or the budget ends."""
    jobs = config.JOBS if jobs is None else jobs
    n = cfg.count if n is None else n
    budget = max(cfg.budget, n)
    samples: List[MRSample] = []
    rejected: Counter = Counter()
    attempts = 0
    for result in _attempts(_job(g, cfg), budget, jobs):
        attempts += 1
        if isinstance(result, Rejection):
            rejected[result.reason] += 1
            continue
        samples.append(result)
        if len(samples) == n:
            break
    stats = SampleStats(
        requested=n,
        returned=len(samples),
        attempts=attempts,
        budget=budget,
        rejected_by_reason=dict(sorted(rejected.items())),
        budget_exhausted=len(samples) < n,
    )
    if stats.budget_exhausted:
        logger.warning(f"Attempt budget of {budget} exhausted with {len(samples)}/{n} draws")
    return samples, stats


def mean_depth(samples: Sequence[MRSample], target: str) -> float:
    return float(np.mean([sample.depths.get(target, -1) for sample in samples]))

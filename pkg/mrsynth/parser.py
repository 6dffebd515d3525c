# -*- coding: utf-8 -*-
"""CYK chart parsing over binarized grammars with packed forests.

Forests keep every derivation. Tree counts are exact integers; the enumeration cap only flags
instances whose ambiguity is too large for tree-by-tree processing.
"""
import math
import sys
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Set, Tuple, Union

import numpy as np
from loguru import logger
from nltk import Tree

from mrsynth import config
from mrsynth.exceptions import ParseError, UsageError
from mrsynth.grammar import BinarizedGrammar, Grammar, WeightedGrammar

Item = Tuple[str, int, int]
Edge = Tuple[int, int, Tuple[Item, ...]]
StructureKey = Tuple[str, Tuple[str, ...]]


@dataclass(frozen=True)
class ParseTree:
    """A derivation in the original grammar: a rule id and one subtree per rhs nonterminal."""

    rule: int
    children: Tuple["ParseTree", ...] = ()

    def nodes(self) -> Iterator["ParseTree"]:
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def rules(self) -> Iterator[int]:
        for node in self.nodes():
            yield node.rule

    def size(self) -> int:
        return sum(1 for _ in self.nodes())

    def yield_tokens(self, grammar: Grammar) -> List[str]:
        tokens: List[str] = []
        stack = [(iter(grammar.rules[self.rule].rhs), iter(self.children))]
        while stack:
            symbols, children = stack[-1]
            symbol = next(symbols, None)
            if symbol is None:
                stack.pop()
            elif symbol.terminal:
                tokens.append(symbol.name)
            else:
                child = next(children)
                stack.append((iter(grammar.rules[child.rule].rhs), iter(child.children)))
        return tokens

    def is_valid(self, grammar: Grammar) -> bool:
        """Whether every node's children match its rule's rhs nonterminals."""
        for node in self.nodes():
            if not 0 <= node.rule < len(grammar.rules):
                return False
            expected = grammar.rules[node.rule].nonterminals
            actual = tuple(grammar.rules[child.rule].lhs for child in node.children)
            if expected != actual:
                return False
        return True

    def to_nltk(self, grammar: Grammar) -> Tree:
        rule = grammar.rules[self.rule]
        children = iter(self.children)
        return Tree(
            rule.lhs,
            [
                symbol.name if symbol.terminal else next(children).to_nltk(grammar)
                for symbol in rule.rhs
            ],
        )

    def bracketed(self, grammar: Grammar) -> str:
        return self.to_nltk(grammar).pformat(margin=sys.maxsize)


class RuleCountTable:
    """Fractional rule occurrence counts keyed by rule id.

    Counts are exact rationals, so sums do not depend on the order instances are added in.
    """

    def __init__(self, counts: Optional[Mapping[int, Union[int, Fraction]]] = None):
        self._counts: Dict[int, Fraction] = {}
        for rule_id, count in (counts or {}).items():
            if count < 0:
                raise ValueError(f"Negative count for rule {rule_id}")
            if count:
                self._counts[rule_id] = Fraction(count)

    def __getitem__(self, rule_id: int) -> Fraction:
        return self._counts.get(rule_id, Fraction(0))

    def __add__(self, other: "RuleCountTable") -> "RuleCountTable":
        merged = dict(self._counts)
        for rule_id, count in other._counts.items():
            merged[rule_id] = merged.get(rule_id, Fraction(0)) + count
        return RuleCountTable(merged)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, RuleCountTable) and self._counts == other._counts

    def __repr__(self) -> str:
        return f"RuleCountTable({dict(sorted(self._counts.items()))})"

    def __len__(self) -> int:
        return len(self._counts)

    def scaled(self, factor: Union[int, Fraction]) -> "RuleCountTable":
        return RuleCountTable({rule_id: count * factor for rule_id, count in self._counts.items()})

    def items(self) -> List[Tuple[int, Fraction]]:
        return sorted(self._counts.items())

    def total(self, rule_ids: Iterable[int]) -> Fraction:
        return sum((self[rule_id] for rule_id in rule_ids), Fraction(0))

    def as_floats(self) -> Dict[int, float]:
        return {rule_id: float(count) for rule_id, count in self.items()}

    @classmethod
    def sum(cls, tables: Iterable["RuleCountTable"]) -> "RuleCountTable":
        total = cls()
        for table in tables:
            total = total + table
        return total


@dataclass
class ParseForest:
    grammar: BinarizedGrammar
    tokens: Tuple[str, ...]
    cap: int
    chart: Dict[Item, Tuple[Edge, ...]] = field(default_factory=dict, repr=False)
    inside: Dict[Item, int] = field(default_factory=dict, repr=False)
    unknown_tokens: Tuple[str, ...] = ()

    @property
    def root(self) -> Item:
        return (self.grammar.start, 0, len(self.tokens))

    @property
    def count(self) -> int:
        return self.inside.get(self.root, 0)

    @property
    def over_cap(self) -> bool:
        return self.count > self.cap

    @property
    def parseable(self) -> bool:
        return self.count > 0

    def describe_count(self) -> str:
        return f">= {self.cap}" if self.over_cap else str(self.count)

    def _derivations(self, item: Item) -> Iterator[tuple]:
        for rule_id, _, children in self.chart[item]:
            if not children:
                yield (rule_id, ())
            elif len(children) == 1:
                for child in self._derivations(children[0]):
                    yield (rule_id, (child,))
            else:
                for left in self._derivations(children[0]):
                    for right in self._derivations(children[1]):
                        yield (rule_id, (left, right))

    def _convert(self, node: tuple) -> ParseTree:
        rule_id, children = node
        rule = self.grammar.rules[rule_id]
        return ParseTree(rule.origin, tuple(self._collect(children, rule.origin)))

    def _collect(self, children: Sequence[tuple], origin: int) -> Iterator[ParseTree]:
        for child in children:
            rule = self.grammar.rules[child[0]]
            if rule.origin is None:
                continue
            if rule.origin == origin and not rule.head:
                yield from self._collect(child[1], origin)
            else:
                yield self._convert(child)

    def trees(self, limit: Optional[int] = None) -> Iterator[ParseTree]:
        """Iterate over the original-grammar trees in deterministic order.

        Edges are ordered by (split point, binarized rule id) and subtrees are combined
        left-major, recursively.
        """
        if not self.parseable:
            return
        for index, node in enumerate(self._derivations(self.root)):
            if limit is not None and index >= limit:
                return
            yield self._convert(node)

    def canonical_tree(self) -> ParseTree:
        """The first tree in the deterministic order."""
        tree = next(self.trees(limit=1), None)
        if tree is None:
            raise ParseError(f"No parse for {' '.join(self.tokens)!r}")
        return tree

    def contains(self, tree: ParseTree) -> bool:
        return any(candidate == tree for candidate in self.trees(limit=self.cap))

    def top_down_items(self) -> List[Item]:
        """Items reachable from the root, every parent before its children."""
        if not self.parseable:
            return []
        reachable: Set[Item] = {self.root}
        stack = [self.root]
        while stack:
            item = stack.pop()
            for _, _, children in self.chart[item]:
                for child in children:
                    if child not in reachable:
                        reachable.add(child)
                        stack.append(child)
        rank = self.grammar.unit_rank
        return sorted(reachable, key=lambda item: (item[1] - item[2], -rank[item[0]], item))


def _unit_closure(
    grammar: BinarizedGrammar, cell: Dict[str, List[Edge]], start: int, end: int
) -> None:
    for parent in grammar.unit_parents:
        for rule_id in grammar.unit_by_parent[parent]:
            child = grammar.rules[rule_id].rhs[0]
            if child in cell:
                cell.setdefault(parent, []).append((rule_id, -1, ((child, start, end),)))


def _fill_inside(
    grammar: BinarizedGrammar,
    cell: Dict[str, List[Edge]],
    start: int,
    end: int,
    inside: Dict[Item, int],
) -> None:
    unit_parents = set(grammar.unit_parents)
    ordered = [symbol for symbol in cell if symbol not in unit_parents]
    ordered += [symbol for symbol in grammar.unit_parents if symbol in cell]
    for symbol in ordered:
        total = 0
        for _, _, children in cell[symbol]:
            product = 1
            for child in children:
                product *= inside[child]
            total += product
        inside[(symbol, start, end)] = total


def _as_binarized(grammar: Union[Grammar, WeightedGrammar, BinarizedGrammar]) -> BinarizedGrammar:
    if isinstance(grammar, WeightedGrammar):
        return grammar.grammar.binarized
    if isinstance(grammar, Grammar):
        return grammar.binarized
    return grammar


def parse_all(
    grammar: Union[Grammar, WeightedGrammar, BinarizedGrammar],
    tokens: Sequence[str],
    cap: Optional[int] = None,
) -> ParseForest:
    """Parse a token sequence and pack all of its derivations.

    Args:
        grammar: The grammar; plain and weighted grammars are binarized on first use.
        tokens (Sequence[str]): The MR tokens.
        cap (int, optional): Enumeration cap. Defaults to ``config.ENUMERATION_CAP``.

    Raises:
        ParseError: If ``tokens`` is empty.

    Returns:
        ParseForest: Count 0 when the sequence is outside the language; out-of-vocabulary tokens
            are listed in ``unknown_tokens``.
    """
    binarized = _as_binarized(grammar)
    tokens = tuple(tokens)
    cap = config.ENUMERATION_CAP if cap is None else cap
    if not tokens:
        raise ParseError("Cannot parse an empty token sequence")
    unknown = tuple(
        dict.fromkeys(token for token in tokens if token not in binarized.lexical_by_token)
    )
    if unknown:
        logger.debug(f"Unknown terminals {unknown} in {' '.join(tokens)!r}")
        return ParseForest(grammar=binarized, tokens=tokens, cap=cap, unknown_tokens=unknown)

    n = len(tokens)
    cells: Dict[Tuple[int, int], Dict[str, List[Edge]]] = {}
    inside: Dict[Item, int] = {}
    for i, token in enumerate(tokens):
        cell: Dict[str, List[Edge]] = {}
        for rule_id in binarized.lexical_by_token[token]:
            cell.setdefault(binarized.rules[rule_id].lhs, []).append((rule_id, -1, ()))
        _unit_closure(binarized, cell, i, i + 1)
        _fill_inside(binarized, cell, i, i + 1, inside)
        cells[(i, i + 1)] = cell

    for length in range(2, n + 1):
        for i in range(0, n - length + 1):
            j = i + length
            cell = {}
            for k in range(i + 1, j):
                left, right = cells[(i, k)], cells[(k, j)]
                if not left or not right:
                    continue
                for left_symbol in left:
                    partners = binarized.binary_by_left.get(left_symbol)
                    if not partners:
                        continue
                    if len(partners) <= len(right):
                        matches = [(s, ids) for s, ids in partners.items() if s in right]
                    else:
                        matches = [(s, partners[s]) for s in right if s in partners]
                    for right_symbol, rule_ids in matches:
                        children = ((left_symbol, i, k), (right_symbol, k, j))
                        for rule_id in rule_ids:
                            lhs = binarized.rules[rule_id].lhs
                            cell.setdefault(lhs, []).append((rule_id, k, children))
            _unit_closure(binarized, cell, i, j)
            _fill_inside(binarized, cell, i, j, inside)
            cells[(i, j)] = cell

    chart: Dict[Item, Tuple[Edge, ...]] = {}
    for (i, j), cell in cells.items():
        for symbol, edges in cell.items():
            chart[(symbol, i, j)] = tuple(sorted(edges, key=lambda edge: (edge[1], edge[0])))
    forest = ParseForest(grammar=binarized, tokens=tokens, cap=cap, chart=chart, inside=inside)
    if forest.over_cap:
        logger.debug(f"{forest.count} trees for {' '.join(tokens)!r}, above the cap of {cap}")
    return forest


def count_rules(forest: ParseForest, strict: bool = True) -> RuleCountTable:
    """Fractional rule counts: each of the N trees contributes its occurrences divided by N.

    Occurrence totals over all trees come from integer outside counts on the packed forest,
    so nothing is enumerated.

    Args:
        forest (ParseForest): A forest with at least one tree.
        strict (bool, optional): Refuse forests above the enumeration cap. Defaults to True.

    Raises:
        ParseError: If the forest is empty, or over the cap while ``strict``.

    Returns:
        RuleCountTable: Counts keyed by original rule id.
    """
    total_trees = forest.count
    if total_trees == 0:
        raise ParseError(f"Empty forest for {' '.join(forest.tokens)!r}")
    if strict and forest.over_cap:
        raise ParseError(
            f"{' '.join(forest.tokens)!r} has {total_trees} trees, above the cap of {forest.cap}"
        )
    rules = forest.grammar.rules
    outside: Dict[Item, int] = {forest.root: 1}
    occurrences: Counter = Counter()
    for item in forest.top_down_items():
        outer = outside.get(item, 0)
        if not outer:
            continue
        for rule_id, _, children in forest.chart[item]:
            inner = [forest.inside[child] for child in children]
            uses = outer * math.prod(inner)
            rule = rules[rule_id]
            if rule.head:
                occurrences[rule.origin] += uses
            for index, child in enumerate(children):
                siblings = math.prod(inner[:index] + inner[index + 1 :])
                outside[child] = outside.get(child, 0) + outer * siblings
    return RuleCountTable(
        {rule_id: Fraction(total, total_trees) for rule_id, total in occurrences.items()}
    )


def count_tree(tree: ParseTree) -> RuleCountTable:
    return RuleCountTable(Counter(tree.rules()))


def inside_logprob(forest: ParseForest, weighted: WeightedGrammar) -> float:
    """Log of the summed probability of every tree in the forest (``-inf`` if none)."""
    if not forest.parseable:
        return -math.inf
    log_weights = [
        math.log(weight) if weight > 0 else -math.inf
        for weight in forest.grammar.rule_weights(weighted)
    ]
    inside: Dict[Item, float] = {}
    for item in reversed(forest.top_down_items()):
        scores = [
            log_weights[rule_id] + sum(inside[child] for child in children)
            for rule_id, _, children in forest.chart[item]
        ]
        inside[item] = float(np.logaddexp.reduce(scores)) if len(scores) > 1 else scores[0]
    return inside[forest.root]


def tree_depth(tree: ParseTree, target: str, grammar: Grammar) -> int:
    """Maximum number of ``target`` nodes on a root-to-leaf path, minus one (-1 if absent)."""
    deepest = 0
    stack = [(tree, 0)]
    while stack:
        node, seen = stack.pop()
        if grammar.rules[node.rule].lhs == target:
            seen += 1
        deepest = max(deepest, seen)
        stack.extend((child, seen) for child in node.children)
    return deepest - 1


def tree_depths(tree: ParseTree, grammar: Grammar) -> Dict[str, int]:
    """``tree_depth`` for every nonterminal occurring in the tree, in one pass."""
    frames = [[tree, 0, {}]]
    result: Dict[str, int] = {}
    while frames:
        frame = frames[-1]
        node, index, merged = frame
        if index < len(node.children):
            frame[1] += 1
            frames.append([node.children[index], 0, {}])
            continue
        frames.pop()
        lhs = grammar.rules[node.rule].lhs
        merged[lhs] = merged.get(lhs, 0) + 1
        if not frames:
            result = merged
            break
        parent = frames[-1][2]
        for symbol, count in merged.items():
            if count > parent.get(symbol, 0):
                parent[symbol] = count
    return {symbol: count - 1 for symbol, count in sorted(result.items())}


def local_structures(tree: ParseTree, grammar: Grammar, order: int = 2) -> Set[StructureKey]:
    """Parent/children pairs (2-LS) of every internal node, as (lhs, rhs spelling) keys."""
    if order != 2:
        raise UsageError(f"Only order-2 local structures are supported, got {order}")
    return {grammar.rules[rule_id].shape for rule_id in tree.rules()}

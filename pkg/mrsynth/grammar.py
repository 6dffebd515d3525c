# -*- coding: utf-8 -*-
"""Grammar data model, grammar file format, validation and binarization.

Grammar files are UTF-8 text::

    # comment
    %start S
    S -> 'answer' '(' Var ')' @ 1
    Var -> City

Quoted symbols are terminals, unquoted ones are nonterminals. Alternatives are written as
separate lines. Weights are optional; when an lhs has none they are uniform, otherwise they are
normalized per lhs.
"""
import math
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from loguru import logger

from mrsynth.exceptions import GrammarError, GrammarSyntaxError

WEIGHT_TOLERANCE = 1e-9
RESERVED_PREFIX = "@"


@dataclass(frozen=True)
class Symbol:
    name: str
    terminal: bool

    def __post_init__(self):
        if not self.name or any(char.isspace() for char in self.name):
            raise GrammarError(f"Invalid symbol name: {self.name!r}")

    def __str__(self) -> str:
        return f"'{self.name}'" if self.terminal else self.name


@dataclass(frozen=True)
class Rule:
    id: int
    lhs: str
    rhs: Tuple[Symbol, ...]

    def __post_init__(self):
        if not self.rhs:
            raise GrammarError(f"Rule {self.id} for {self.lhs} has an empty right-hand side")

    @property
    def shape(self) -> Tuple[str, Tuple[str, ...]]:
        """The (lhs, rhs spelling) pair identifying this rule's local structure."""
        return self.lhs, tuple(str(symbol) for symbol in self.rhs)

    @property
    def nonterminals(self) -> Tuple[str, ...]:
        return tuple(symbol.name for symbol in self.rhs if not symbol.terminal)

    def __str__(self) -> str:
        return f"{self.lhs} -> {' '.join(str(symbol) for symbol in self.rhs)}"


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    message: str
    symbol: Optional[str] = None


@dataclass(frozen=True)
class Grammar:
    rules: Tuple[Rule, ...]
    start: str

    def __post_init__(self):
        for index, rule in enumerate(self.rules):
            if rule.id != index:
                raise GrammarError(f"Rule ids must be dense and ordered, got {rule.id} at {index}")

    @cached_property
    def nonterminals(self) -> Tuple[str, ...]:
        """Nonterminals with at least one rule, in order of first definition."""
        return tuple(dict.fromkeys(rule.lhs for rule in self.rules))

    @cached_property
    def terminals(self) -> frozenset:
        return frozenset(
            symbol.name for rule in self.rules for symbol in rule.rhs if symbol.terminal
        )

    @cached_property
    def rules_by_lhs(self) -> Dict[str, Tuple[int, ...]]:
        index: Dict[str, List[int]] = {}
        for rule in self.rules:
            index.setdefault(rule.lhs, []).append(rule.id)
        return {lhs: tuple(ids) for lhs, ids in index.items()}

    @cached_property
    def binarized(self) -> "BinarizedGrammar":
        return binarize(self)

    def rules_for(self, lhs: str) -> Tuple[Rule, ...]:
        return tuple(self.rules[rule_id] for rule_id in self.rules_by_lhs.get(lhs, ()))

    def is_recursive(self) -> bool:
        """Whether some nonterminal can derive a sentential form containing itself."""
        return bool(_cyclic_nodes(_dependency_graph(self.rules)))

    def is_compatible(self, other: "Grammar") -> bool:
        return self.start == other.start and self.rules == other.rules


@dataclass(frozen=True)
class WeightedGrammar:
    grammar: Grammar
    weights: Tuple[float, ...]

    def __post_init__(self):
        if len(self.weights) != len(self.grammar.rules):
            raise GrammarError(
                f"Expected {len(self.grammar.rules)} weights, got {len(self.weights)}"
            )

    @classmethod
    def normalized(cls, grammar: Grammar, raw_weights: Sequence[float]) -> "WeightedGrammar":
        """Build a weighted grammar, normalizing raw weights within each lhs.

        Args:
            grammar (Grammar): The underlying grammar.
            raw_weights (Sequence[float]): One nonnegative raw weight per rule.

        Raises:
            GrammarError: If a weight is negative or an lhs has weights summing to zero.

        Returns:
            WeightedGrammar: Weights sum to 1 within each lhs.
        """
        weights = [float(weight) for weight in raw_weights]
        if any(weight < 0 or math.isnan(weight) for weight in weights):
            raise GrammarError("Rule weights must be nonnegative")
        for lhs, rule_ids in grammar.rules_by_lhs.items():
            total = math.fsum(weights[rule_id] for rule_id in rule_ids)
            if total <= 0:
                raise GrammarError(f"Weights of the rules for {lhs} sum to zero")
            for rule_id in rule_ids:
                weights[rule_id] = weights[rule_id] / total
        return cls(grammar=grammar, weights=tuple(weights))

    @property
    def rules(self) -> Tuple[Rule, ...]:
        return self.grammar.rules

    @property
    def start(self) -> str:
        return self.grammar.start

    def log_weight(self, rule_id: int) -> float:
        weight = self.weights[rule_id]
        return math.log(weight) if weight > 0 else -math.inf


@dataclass(frozen=True)
class BinaryRule:
    """A rule of the binarized grammar.

    ``origin`` is the id of the original rule this one was carved from (None for the shared
    preterminal rules) and ``head`` marks the rule that completes the original rule's chain.
    """

    id: int
    lhs: str
    rhs: Tuple[str, ...]
    lexical: bool
    origin: Optional[int]
    head: bool


@dataclass(frozen=True)
class BinarizedGrammar:
    source: Grammar
    rules: Tuple[BinaryRule, ...]
    unit_order: Tuple[str, ...]
    chains: Dict[int, Tuple[int, ...]] = field(hash=False, compare=False)

    @property
    def start(self) -> str:
        return self.source.start

    @cached_property
    def lexical_by_token(self) -> Dict[str, Tuple[int, ...]]:
        index: Dict[str, List[int]] = {}
        for rule in self.rules:
            if rule.lexical:
                index.setdefault(rule.rhs[0], []).append(rule.id)
        return {token: tuple(ids) for token, ids in index.items()}

    @cached_property
    def binary_by_pair(self) -> Dict[Tuple[str, str], Tuple[int, ...]]:
        index: Dict[Tuple[str, str], List[int]] = {}
        for rule in self.rules:
            if len(rule.rhs) == 2:
                index.setdefault(rule.rhs, []).append(rule.id)
        return {pair: tuple(ids) for pair, ids in index.items()}

    @cached_property
    def unit_by_parent(self) -> Dict[str, Tuple[int, ...]]:
        index: Dict[str, List[int]] = {}
        for rule in self.rules:
            if len(rule.rhs) == 1 and not rule.lexical:
                index.setdefault(rule.lhs, []).append(rule.id)
        return {lhs: tuple(ids) for lhs, ids in index.items()}

    @cached_property
    def binary_by_left(self) -> Dict[str, Dict[str, Tuple[int, ...]]]:
        index: Dict[str, Dict[str, Tuple[int, ...]]] = {}
        for (left, right), ids in self.binary_by_pair.items():
            index.setdefault(left, {})[right] = ids
        return index

    @cached_property
    def unit_parents(self) -> Tuple[str, ...]:
        """Symbols with unit rules, children before parents."""
        return tuple(name for name in self.unit_order if name in self.unit_by_parent)

    @cached_property
    def unit_rank(self) -> Dict[str, int]:
        return {name: rank for rank, name in enumerate(self.unit_order)}

    def rule_weights(self, weighted: WeightedGrammar) -> Tuple[float, ...]:
        """Per binarized rule weight: the original weight on chain heads, 1 elsewhere."""
        return tuple(
            weighted.weights[rule.origin] if rule.head else 1.0 for rule in self.rules
        )


def _parse_symbol(token: str, line_number: int) -> Symbol:
    if token.startswith("'"):
        if len(token) < 3 or not token.endswith("'"):
            raise GrammarSyntaxError(f"Malformed terminal {token}", line_number)
        return Symbol(token[1:-1], terminal=True)
    if "'" in token:
        raise GrammarSyntaxError(f"Malformed symbol {token}", line_number)
    if token.startswith(RESERVED_PREFIX) or token.startswith("%"):
        raise GrammarSyntaxError(f"Nonterminal names may not start with {token[0]}", line_number)
    return Symbol(token, terminal=False)


def _split_weight(rhs_tokens: List[str], line_number: int) -> Tuple[List[str], Optional[float]]:
    weight_text = None
    if len(rhs_tokens) >= 2 and rhs_tokens[-2] == "@":
        weight_text = rhs_tokens[-1]
        rhs_tokens = rhs_tokens[:-2]
    elif rhs_tokens and rhs_tokens[-1].startswith("@") and len(rhs_tokens[-1]) > 1:
        weight_text = rhs_tokens[-1][1:]
        rhs_tokens = rhs_tokens[:-1]
    elif "@" in rhs_tokens:
        raise GrammarSyntaxError("Weight marker '@' must precede a single weight", line_number)
    if weight_text is None:
        return rhs_tokens, None
    try:
        weight = float(weight_text)
    except ValueError:
        raise GrammarSyntaxError(f"Invalid weight {weight_text!r}", line_number)
    if math.isnan(weight) or math.isinf(weight):
        raise GrammarSyntaxError(f"Invalid weight {weight_text!r}", line_number)
    if weight < 0:
        raise GrammarSyntaxError(f"Negative weight {weight_text}", line_number)
    return rhs_tokens, weight


def load_grammar(text: str) -> WeightedGrammar:
    """Parse grammar file contents into a validated weighted grammar.

    Args:
        text (str): The grammar file contents.

    Raises:
        GrammarSyntaxError: On malformed lines, duplicate ``%start`` or negative weights.
        GrammarError: On undefined nonterminals or inconsistent weights.

    Returns:
        WeightedGrammar: The grammar with weights normalized per lhs.

    >>> load_grammar("S -> 'a' S\\nS -> 'b'").weights
    (0.5, 0.5)
    """
    start: Optional[str] = None
    rules: List[Rule] = []
    raw_weights: List[Optional[float]] = []
    defined_at: Dict[str, int] = {}
    used_at: Dict[str, int] = {}
    for line_number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("%"):
            parts = line.split()
            if parts[0] != "%start" or len(parts) != 2:
                raise GrammarSyntaxError(f"Unknown directive {line!r}", line_number)
            if start is not None:
                raise GrammarSyntaxError("Duplicate %start directive", line_number)
            symbol = _parse_symbol(parts[1], line_number)
            if symbol.terminal:
                raise GrammarSyntaxError("Start symbol must be a nonterminal", line_number)
            start = symbol.name
            continue
        if "->" not in line:
            raise GrammarSyntaxError(f"Expected 'LHS -> symbols', got {line!r}", line_number)
        lhs_text, rhs_text = line.split("->", 1)
        lhs_tokens = lhs_text.split()
        if len(lhs_tokens) != 1:
            raise GrammarSyntaxError("Left-hand side must be a single nonterminal", line_number)
        lhs = _parse_symbol(lhs_tokens[0], line_number)
        if lhs.terminal:
            raise GrammarSyntaxError("Left-hand side must be a nonterminal", line_number)
        rhs_tokens, weight = _split_weight(rhs_text.split(), line_number)
        if not rhs_tokens:
            raise GrammarSyntaxError("Empty right-hand side", line_number)
        rhs = tuple(_parse_symbol(token, line_number) for token in rhs_tokens)
        for symbol in rhs:
            if not symbol.terminal:
                used_at.setdefault(symbol.name, line_number)
        defined_at.setdefault(lhs.name, line_number)
        rules.append(Rule(id=len(rules), lhs=lhs.name, rhs=rhs))
        raw_weights.append(weight)

    if not rules:
        raise GrammarError("Grammar has no rules")
    for name, line_number in used_at.items():
        if name not in defined_at:
            raise GrammarError(f"line {line_number}: unknown nonterminal {name} (no rules)")
    if start is None:
        start = rules[0].lhs
    elif start not in defined_at:
        raise GrammarError(f"Start symbol {start} has no rules")

    grammar = Grammar(rules=tuple(rules), start=start)
    weights: List[float] = [0.0] * len(rules)
    for lhs, rule_ids in grammar.rules_by_lhs.items():
        explicit = [raw_weights[rule_id] for rule_id in rule_ids]
        if all(weight is None for weight in explicit):
            for rule_id in rule_ids:
                weights[rule_id] = 1.0
        elif any(weight is None for weight in explicit):
            raise GrammarError(f"Rules for {lhs} mix explicit and implicit weights")
        else:
            for rule_id, weight in zip(rule_ids, explicit):
                weights[rule_id] = weight
    weighted = WeightedGrammar.normalized(grammar, weights)
    logger.debug(
        f"Loaded grammar with {len(rules)} rules, {len(grammar.nonterminals)} nonterminals "
        f"and start symbol {start}"
    )
    return weighted


def store_grammar(weighted: WeightedGrammar) -> str:
    """Render a weighted grammar in the grammar file format.

    Rules are written in id order with weights printed to 12 significant digits.
    """
    lines = [f"%start {weighted.start}"]
    for rule, weight in zip(weighted.rules, weighted.weights):
        lines.append(f"{rule} @ {format(weight, '.12g')}")
    return "\n".join(lines) + "\n"


def bundled_grammar_names() -> List[str]:
    return sorted(
        entry.name[: -len(".cfg")]
        for entry in resources.files("mrsynth.grammars").iterdir()
        if entry.name.endswith(".cfg")
    )


def load_bundled_grammar(name: str) -> WeightedGrammar:
    """Load a grammar shipped in ``mrsynth/grammars`` (``geoquery``, ``scan`` or ``cfq``)."""
    resource = resources.files("mrsynth.grammars").joinpath(f"{name}.cfg")
    if not resource.is_file():
        raise GrammarError(f"No bundled grammar named {name!r}")
    return load_grammar(resource.read_text(encoding="utf-8"))


def read_grammar_text(ref: str) -> str:
    """Contents of the grammar file at ``ref``, or of the bundled grammar named ``ref``.

    Raises:
        GrammarError: If ``ref`` is neither a file nor a bundled grammar name, or the file is not
            valid UTF-8.
    """
    path = Path(ref)
    if path.is_file():
        try:
            return path.read_bytes().decode("utf-8")
        except UnicodeDecodeError as exc:
            raise GrammarError(f"{ref}: invalid UTF-8 at byte {exc.start}")
    resource = resources.files("mrsynth.grammars").joinpath(f"{ref}.cfg")
    if "/" not in ref and resource.is_file():
        return resource.read_text(encoding="utf-8")
    raise GrammarError(
        f"No grammar file or bundled grammar named {ref!r} "
        f"(bundled: {', '.join(bundled_grammar_names())})"
    )


def _dependency_graph(rules: Iterable[Rule], unit_only: bool = False) -> Dict[str, set]:
    graph: Dict[str, set] = {}
    for rule in rules:
        targets = graph.setdefault(rule.lhs, set())
        if unit_only and (len(rule.rhs) != 1 or rule.rhs[0].terminal):
            continue
        targets.update(rule.nonterminals)
    return graph


def _cyclic_nodes(graph: Dict[str, set]) -> List[str]:
    """Nodes lying on a cycle, in sorted order."""
    cyclic = []
    for node in sorted(graph):
        seen = set()
        stack = list(graph.get(node, ()))
        while stack:
            current = stack.pop()
            if current == node:
                cyclic.append(node)
                break
            if current in seen:
                continue
            seen.add(current)
            stack.extend(graph.get(current, ()))
    return cyclic


def _productive(grammar: Grammar) -> set:
    productive: set = set()
    changed = True
    while changed:
        changed = False
        for rule in grammar.rules:
            if rule.lhs in productive:
                continue
            if all(name in productive for name in rule.nonterminals):
                productive.add(rule.lhs)
                changed = True
    return productive


def _reachable(grammar: Grammar) -> set:
    reachable = {grammar.start}
    stack = [grammar.start]
    while stack:
        current = stack.pop()
        for rule in grammar.rules_for(current):
            for name in rule.nonterminals:
                if name not in reachable:
                    reachable.add(name)
                    stack.append(name)
    return reachable


def validate(grammar: Union[Grammar, WeightedGrammar]) -> List[Diagnostic]:
    """Check grammar invariants.

    Errors cover broken invariants (undefined nonterminals, start without rules, weights that
    are not normalized, cyclic unit productions). Warnings cover unreachable and nonproductive
    nonterminals.

    Args:
        grammar (Union[Grammar, WeightedGrammar]): The grammar to check.

    Returns:
        List[Diagnostic]: Empty iff every invariant holds and nothing is worth a warning.
    """
    weighted = grammar if isinstance(grammar, WeightedGrammar) else None
    base = weighted.grammar if weighted else grammar
    diagnostics: List[Diagnostic] = []

    defined = set(base.rules_by_lhs)
    if base.start not in defined:
        diagnostics.append(
            Diagnostic(
                "error", "start-undefined", f"Start symbol {base.start} has no rules", base.start
            )
        )
    for name in sorted({name for rule in base.rules for name in rule.nonterminals} - defined):
        diagnostics.append(
            Diagnostic("error", "undefined", f"Nonterminal {name} has no rules", name)
        )
    for name in _cyclic_nodes(_dependency_graph(base.rules, unit_only=True)):
        diagnostics.append(
            Diagnostic(
                "error",
                "unit-cycle",
                f"Nonterminal {name} lies on a cycle of unit productions",
                name,
            )
        )

    if weighted is not None:
        for rule, weight in zip(base.rules, weighted.weights):
            if not 0.0 <= weight <= 1.0:
                diagnostics.append(
                    Diagnostic(
                        "error", "weight-range", f"Weight {weight} of rule {rule} is outside [0, 1]"
                    )
                )
        for lhs, rule_ids in base.rules_by_lhs.items():
            total = math.fsum(weighted.weights[rule_id] for rule_id in rule_ids)
            if abs(total - 1.0) > WEIGHT_TOLERANCE:
                diagnostics.append(
                    Diagnostic(
                        "error", "not-normalized", f"Weights for {lhs} sum to {total}", lhs
                    )
                )

    reachable = _reachable(base)
    for name in base.nonterminals:
        if name not in reachable:
            diagnostics.append(
                Diagnostic("warning", "unreachable", f"Nonterminal {name} is unreachable", name)
            )
    productive = _productive(base)
    for name in base.nonterminals:
        if name not in productive:
            diagnostics.append(
                Diagnostic(
                    "warning",
                    "nonproductive",
                    f"Nonterminal {name} cannot derive any finite terminal string",
                    name,
                )
            )
    return diagnostics


def preterminal_name(token: str) -> str:
    return f"{RESERVED_PREFIX}t:{token}"


def chain_name(rule_id: int, step: int) -> str:
    return f"{RESERVED_PREFIX}r{rule_id}.{step}"


def binarize(grammar: Grammar) -> BinarizedGrammar:
    """Left-branching binarization with fresh, deterministically named symbols.

    Rules with a right-hand side of length one are kept as they are. Longer rules become a
    chain ``@r<id>.1 -> Y1 Y2``, ``@r<id>.2 -> @r<id>.1 Y3``, ..., ``lhs -> @r<id>.<k-2> Yk``
    in which every terminal ``t`` is replaced by the shared preterminal ``@t:t``.

    Raises:
        GrammarError: If the grammar has cyclic unit productions.
    """
    cycles = _cyclic_nodes(_dependency_graph(grammar.rules, unit_only=True))
    if cycles:
        raise GrammarError(f"Cannot binarize: unit production cycle through {', '.join(cycles)}")

    rules: List[BinaryRule] = []
    chains: Dict[int, Tuple[int, ...]] = {}
    preterminals: Dict[str, int] = {}

    def add(
        lhs: str, rhs: Tuple[str, ...], lexical: bool, origin: Optional[int], head: bool
    ) -> int:
        rule = BinaryRule(len(rules), lhs, rhs, lexical, origin, head)
        rules.append(rule)
        return rule.id

    def name_of(symbol: Symbol) -> str:
        if not symbol.terminal:
            return symbol.name
        name = preterminal_name(symbol.name)
        if symbol.name not in preterminals:
            preterminals[symbol.name] = add(name, (symbol.name,), True, None, False)
        return name

    for rule in grammar.rules:
        if len(rule.rhs) == 1:
            symbol = rule.rhs[0]
            chains[rule.id] = (add(rule.lhs, (symbol.name,), symbol.terminal, rule.id, True),)
            continue
        names = [name_of(symbol) for symbol in rule.rhs]
        chain = []
        current = names[0]
        for step, name in enumerate(names[1:-1], start=1):
            intermediate = chain_name(rule.id, step)
            chain.append(add(intermediate, (current, name), False, rule.id, False))
            current = intermediate
        chain.append(add(rule.lhs, (current, names[-1]), False, rule.id, True))
        chains[rule.id] = tuple(chain)

    # children before parents, so unit closure over a chart cell can run in one pass
    unit_children: Dict[str, set] = {}
    for rule in rules:
        if len(rule.rhs) == 1 and not rule.lexical:
            unit_children.setdefault(rule.lhs, set()).add(rule.rhs[0])
    order: List[str] = []
    visited: set = set()

    def visit(name: str):
        if name in visited:
            return
        visited.add(name)
        for child in sorted(unit_children.get(name, ())):
            visit(child)
        order.append(name)

    for name in dict.fromkeys(rule.lhs for rule in rules):
        visit(name)

    return BinarizedGrammar(
        source=grammar, rules=tuple(rules), unit_order=tuple(order), chains=chains
    )

# -*- coding: utf-8 -*-
from argparse import ArgumentParser
from time import perf_counter

from loguru import logger

from mrsynth.grammar import load_grammar, read_grammar_text
from mrsynth.sampler import derivation_count, enumerate_language
from mrsynth.utils import setup_logging

PUBLISHED_COUNT = 9228


def run(grammar_ref: str, expected: int) -> int:
    grammar = load_grammar(read_grammar_text(grammar_ref)).grammar
    if grammar.is_recursive():
        logger.error(f"{grammar_ref} is recursive, its language is not finite")
        return 2

    counts = {}
    for strategy in ("memo", "leftmost"):
        started = perf_counter()
        counts[strategy] = enumerate_language(grammar, strategy=strategy).count
        logger.info(f"{strategy}: {counts[strategy]} MRs in {perf_counter() - started:.1f}s")
    if counts["memo"] != counts["leftmost"]:
        logger.error(f"Enumeration strategies disagree: {counts}")
        return 2

    count = counts["memo"]
    print(f"derivations: {derivation_count(grammar)}")
    print(f"distinct MRs: {count}")
    print(f"published: {expected} (difference {count - expected:+d})")
    return 0


if __name__ == "__main__":
    parser = ArgumentParser()
    parser.add_argument("--grammar", type=str, default="scan")
    parser.add_argument("--expected", type=int, default=PUBLISHED_COUNT)
    args = parser.parse_args()
    setup_logging()
    raise SystemExit(run(args.grammar, args.expected))

# -*- coding: utf-8 -*-
"""The ``mrsynth`` command line.

Results go to files or standard output, logs go to standard error. Exit codes: 0 success,
1 usage error, 2 data error, 3 backtranslator error.
"""
import json
import shlex
import sys
from argparse import SUPPRESS, ArgumentParser, Namespace
from typing import List, Optional, Sequence

from loguru import logger
from pydantic import ValidationError

from mrsynth import __version__, config
from mrsynth.analytics import build_report, render_table
from mrsynth.datasets import load_dataset, read_corpus
from mrsynth.estimation import compare_distributions, estimate_mle
from mrsynth.exceptions import MrsynthError, UsageError
from mrsynth.grammar import WeightedGrammar, load_grammar, read_grammar_text, store_grammar
from mrsynth.models import BacktranslatorSpec, EnumerationResult, EstimationConfig, SampleConfig
from mrsynth.parser import parse_all
from mrsynth.pipeline import LAYOUTS, WEIGHTS_MODES, augment, replay
from mrsynth.sampler import enumerate_language, sample_draws, sample_unique
from mrsynth.utils import atomic_write_text, profiled, setup_logging, setup_sentry, tokenize

BACKTRANSLATOR_KINDS = ("http", "command", "echo-stub", "table-stub")


class _ArgumentParser(ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _grammar(ref: str) -> WeightedGrammar:
    return load_grammar(read_grammar_text(ref))


def _emit(text: str, path: Optional[str]) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        atomic_write_text(path, text)


def _jsonl(lines: Sequence[str]) -> str:
    return "".join(line + "\n" for line in lines)


def _seed(args: Namespace) -> int:
    return config.DEFAULT_SEED if getattr(args, "seed", None) is None else args.seed


def _sample_config(args: Namespace, exclude: List[str]) -> SampleConfig:
    fields = {
        "count": args.count,
        "max_depth": args.max_depth,
        "max_len": args.max_len,
        "budget": args.budget,
        "seed": _seed(args),
        "exclude": exclude,
        "post_filter": args.filter,
    }
    return SampleConfig(**{key: value for key, value in fields.items() if value is not None})


def cmd_parse(args: Namespace) -> int:
    grammar = _grammar(args.grammar)
    lines = []
    for mr in read_corpus(args.corpus):
        forest = parse_all(grammar, tokenize(mr), cap=args.cap)
        trees = [tree.bracketed(grammar.grammar) for tree in forest.trees(limit=args.trees)]
        lines.append(
            json.dumps(
                {
                    "mr": mr,
                    "count": forest.count,
                    "over_cap": forest.over_cap,
                    "unknown_tokens": list(forest.unknown_tokens),
                    "trees": trees,
                },
                ensure_ascii=False,
            )
        )
        if not forest.parseable:
            logger.warning(f"No parse for {mr!r}")
    _emit(_jsonl(lines), args.out)
    return 0


def cmd_estimate(args: Namespace) -> int:
    grammar = _grammar(args.grammar)
    corpus = [mr for path in args.corpus for mr in read_corpus(path)]
    cfg = EstimationConfig(
        mode=args.mode,
        smoothing=args.smoothing,
        skip_over_cap=not args.keep_over_cap,
        cap=args.cap,
    )
    weighted, report = estimate_mle(grammar, corpus, cfg, jobs=getattr(args, "jobs", None))
    _emit(store_grammar(weighted), args.out)
    if args.report:
        atomic_write_text(args.report, report.model_dump_json(indent=2) + "\n")
    return 0


def cmd_sample(args: Namespace) -> int:
    weighted = _grammar(args.grammar)
    exclude = [mr for path in args.exclude for mr in read_corpus(path)]
    cfg = _sample_config(args, exclude)
    jobs = getattr(args, "jobs", None)
    if args.with_replacement:
        samples, stats = sample_draws(weighted, cfg, jobs=jobs)
    else:
        samples, stats = sample_unique(weighted, cfg, jobs=jobs)
    _emit(_jsonl([sample.to_record().model_dump_json() for sample in samples]), args.out)
    if args.stats:
        atomic_write_text(args.stats, stats.model_dump_json(indent=2) + "\n")
    else:
        logger.info(f"Sampling stats: {stats.model_dump_json()}")
    return 0


def cmd_enumerate(args: Namespace) -> int:
    weighted = _grammar(args.grammar)
    language = enumerate_language(weighted, max_len=args.max_len, strategy=args.strategy)
    _emit(_jsonl([" ".join(tokens) for tokens in language]), args.out)
    result = EnumerationResult(finite=language.finite, count=language.count, max_len=args.max_len)
    # when the strings go to stdout, the summary goes to stderr
    summary = sys.stderr if args.out in (None, "-") else sys.stdout
    print(result.model_dump_json(), file=summary)
    return 0


def cmd_analyze(args: Namespace) -> int:
    grammar = _grammar(args.grammar) if args.grammar else None
    if args.perplexity and grammar is None:
        raise UsageError("--perplexity needs --grammar")
    train = load_dataset(args.train)
    test = load_dataset(args.test)
    augmented = load_dataset(args.augmented, with_origin=True) if args.augmented else None
    report = build_report(
        grammar,
        train,
        test,
        augmented=augmented,
        ngram_orders=args.ngram or None,
        depth_targets=args.depth_target,
        with_perplexity=args.perplexity,
    )
    if args.out:
        atomic_write_text(args.out, report.model_dump_json(indent=2) + "\n")
    sys.stdout.write(render_table(report))
    if report.perplexity is not None:
        perplexity = report.perplexity.perplexity
        print(f"MR perplexity: {'-' if perplexity is None else f'{perplexity:.4f}'}")
    return 0


def _backtranslator(args: Namespace) -> BacktranslatorSpec:
    fields = {
        "kind": args.backtranslator,
        "endpoint": args.endpoint,
        "command": shlex.split(args.command) if args.command else None,
        "mapping_path": args.mapping,
        "batch_size": args.batch_size,
        "timeout": args.timeout,
        "concurrency": args.concurrency,
    }
    return BacktranslatorSpec(**{key: value for key, value in fields.items() if value is not None})


def cmd_augment(args: Namespace) -> int:
    if args.replay:
        manifest = replay(args.replay, outputs=args.out or None, out_manifest=args.manifest)
    else:
        required = {
            "--grammar": args.grammar,
            "--dataset": args.dataset,
            "--count": args.count,
            "--out": args.out,
        }
        missing = [flag for flag, value in required.items() if not value]
        if missing:
            raise UsageError(f"augment needs {', '.join(missing)} (or --replay)")
        exclude = [mr for path in args.exclude for mr in read_corpus(path)]
        manifest = augment(
            grammar_path=args.grammar,
            dataset_path=args.dataset,
            sample_config=_sample_config(args, exclude),
            backtranslator=_backtranslator(args),
            outputs=args.out,
            manifest_path=args.manifest or f"{args.out[0]}.manifest.json",
            weights_mode=args.weights,
            corpus_paths=args.corpus,
            weights_path=args.weights_file,
            smoothing=args.smoothing,
            layout=args.layout,
            jobs=getattr(args, "jobs", None),
        )
    logger.info(f"Returned {manifest.returned}/{manifest.requested} synthetic MRs")
    return 0


def cmd_compare(args: Namespace) -> int:
    comparison = compare_distributions(_grammar(args.first), _grammar(args.second))
    print(comparison.model_dump_json(indent=2))
    return 0


def cmd_serve(args: Namespace) -> int:
    import uvicorn

    if args.table:
        config.STUB_TABLE_PATH = args.table
    from mrsynth.main import app

    uvicorn.run(app, host=args.host or config.STUB_HOST, port=args.port or config.STUB_PORT)
    return 0


def _add_sampling_arguments(parser: ArgumentParser) -> None:
    parser.add_argument("--count", type=int, help="number of MRs to sample")
    parser.add_argument("--max-depth", type=int, help="tree depth cap")
    parser.add_argument("--max-len", type=int, help="token count cap")
    parser.add_argument("--budget", type=int, help="attempt budget")
    parser.add_argument(
        "--exclude", action="append", default=[], help="file of MRs never to return"
    )
    parser.add_argument("--filter", help="post-filter spec, e.g. 'max-depth-of(S, 2)'")


def build_parser() -> ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=SUPPRESS, help="random seed")
    common.add_argument("--jobs", type=int, default=SUPPRESS, help="worker processes")
    common.add_argument("--log-level", default=SUPPRESS, help="DEBUG, INFO, WARNING or ERROR")

    parser = _ArgumentParser(prog="mrsynth", parents=[common])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    parse = commands.add_parser("parse", parents=[common], help="parse an MR corpus")
    parse.add_argument("--grammar", required=True)
    parse.add_argument("--corpus", required=True)
    parse.add_argument("--cap", type=int)
    parse.add_argument("--trees", type=int, default=0, help="trees to print per MR")
    parse.add_argument("--out")
    parse.set_defaults(handler=cmd_parse)

    estimate = commands.add_parser("estimate", parents=[common], help="estimate rule weights")
    estimate.add_argument("--grammar", required=True)
    estimate.add_argument("--corpus", action="append", default=[])
    estimate.add_argument("--mode", choices=("mle", "uniform"), default="mle")
    estimate.add_argument("--smoothing", type=float, default=0.0)
    estimate.add_argument("--cap", type=int)
    estimate.add_argument("--keep-over-cap", action="store_true")
    estimate.add_argument("--out")
    estimate.add_argument("--report", help="where the estimation report goes")
    estimate.set_defaults(handler=cmd_estimate)

    sample = commands.add_parser("sample", parents=[common], help="sample MRs")
    sample.add_argument("--grammar", required=True)
    _add_sampling_arguments(sample)
    sample.add_argument("--with-replacement", action="store_true")
    sample.add_argument("--out")
    sample.add_argument("--stats", help="where the sampling stats go")
    sample.set_defaults(handler=cmd_sample)

    enumerate_ = commands.add_parser("enumerate", parents=[common], help="list a language")
    enumerate_.add_argument("--grammar", required=True)
    enumerate_.add_argument("--max-len", type=int)
    enumerate_.add_argument("--strategy", choices=("auto", "memo", "leftmost"), default="auto")
    enumerate_.add_argument(
        "--out", help="file for the strings; without it they go to stdout and the summary to stderr"
    )
    enumerate_.set_defaults(handler=cmd_enumerate)

    analyze = commands.add_parser("analyze", parents=[common], help="dataset statistics")
    analyze.add_argument("--grammar")
    analyze.add_argument("--train", required=True)
    analyze.add_argument("--test", required=True)
    analyze.add_argument("--augmented")
    analyze.add_argument("--ngram", type=int, action="append", default=[])
    analyze.add_argument("--depth-target", action="append", default=[])
    analyze.add_argument("--perplexity", action="store_true", help="perplexity of test MRs")
    analyze.add_argument("--out")
    analyze.set_defaults(handler=cmd_analyze)

    augment_ = commands.add_parser("augment", parents=[common], help="build augmented data")
    augment_.add_argument("--grammar")
    augment_.add_argument("--dataset")
    _add_sampling_arguments(augment_)
    augment_.add_argument("--weights", choices=WEIGHTS_MODES, default="uniform")
    augment_.add_argument("--corpus", action="append", default=[])
    augment_.add_argument("--weights-file")
    augment_.add_argument("--smoothing", type=float, default=0.0)
    augment_.add_argument("--layout", choices=LAYOUTS, default="concat")
    augment_.add_argument("--backtranslator", choices=BACKTRANSLATOR_KINDS, default="echo-stub")
    augment_.add_argument("--endpoint")
    augment_.add_argument("--command", help="backtranslator command line")
    augment_.add_argument("--mapping", help="dataset file used as the table-stub mapping")
    augment_.add_argument("--batch-size", type=int)
    augment_.add_argument("--concurrency", type=int)
    augment_.add_argument("--timeout", type=float)
    augment_.add_argument("--out", action="append", default=[], help="output dataset(s)")
    augment_.add_argument("--manifest")
    augment_.add_argument("--replay", metavar="MANIFEST", help="rerun a recorded augmentation")
    augment_.set_defaults(handler=cmd_augment)

    compare = commands.add_parser("compare", parents=[common], help="compare two weightings")
    compare.add_argument("first")
    compare.add_argument("second")
    compare.set_defaults(handler=cmd_compare)

    serve = commands.add_parser("serve", parents=[common], help="run the stub backtranslator")
    serve.add_argument("--host")
    serve.add_argument("--port", type=int)
    serve.add_argument("--table", help="dataset file with the MR to sentence mapping")
    serve.set_defaults(handler=cmd_serve)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc.message, file=sys.stderr)
        return exc.exit_code
    setup_logging(getattr(args, "log_level", None))
    setup_sentry()
    try:
        with profiled():
            return args.handler(args)
    except MrsynthError as exc:
        logger.error(exc.message)
        return exc.exit_code
    except ValidationError as exc:
        logger.error(f"Invalid arguments: {exc}")
        return UsageError.exit_code
    except OSError as exc:
        logger.error(str(exc))
        return 2


if __name__ == "__main__":
    sys.exit(main())

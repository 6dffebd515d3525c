# -*- coding: utf-8 -*-
"""End-to-end augmentation: weights, sampling, backtranslation and dataset assembly."""
import asyncio
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from pydantic import ValidationError

from mrsynth import __version__
from mrsynth.backtranslation import backtranslate
from mrsynth.datasets import dump_dataset, infer_format, load_dataset, read_corpus
from mrsynth.estimation import estimate_mle, uniform_weights
from mrsynth.exceptions import DataError, GrammarMismatchError, UsageError
from mrsynth.grammar import WeightedGrammar, load_grammar, read_grammar_text
from mrsynth.models import (
    BacktranslatorSpec,
    EstimationConfig,
    ParallelDataset,
    ParallelRecord,
    RunManifest,
    SampleConfig,
)
from mrsynth.sampler import sample_unique
from mrsynth.utils import atomic_write_files, text_sha256

WEIGHTS_MODES = ("mle-corpus", "uniform", "weighted-grammar-file")
LAYOUTS = ("concat", "pretrain")


def shuffle_records(records: Sequence[ParallelRecord], seed: int) -> List[ParallelRecord]:
    order = np.random.Generator(np.random.Philox(key=seed)).permutation(len(records))
    return [records[index] for index in order]


def assemble(
    original: ParallelDataset,
    synthetic: ParallelDataset,
    layout: str = "concat",
    seed: int = 0,
    shuffle: bool = True,
) -> List[ParallelDataset]:
    """Lay out original and synthetic data for training.

    ``concat`` gives one dataset holding both (shuffled with ``seed`` unless ``shuffle`` is
    False). ``pretrain`` gives the synthetic data for the first stage and the original data for
    the second.

    Raises:
        UsageError: On an unknown layout.
    """
    originals = [record.model_copy(update={"origin": "original"}) for record in original.records]
    synthetics = [
        record.model_copy(update={"origin": "synthetic"}) for record in synthetic.records
    ]
    if layout == "concat":
        records = originals + synthetics
        if shuffle:
            records = shuffle_records(records, seed)
        return [ParallelDataset(records=records)]
    if layout == "pretrain":
        return [ParallelDataset(records=synthetics), ParallelDataset(records=originals)]
    raise UsageError(f"Unknown layout {layout!r}, expected one of {', '.join(LAYOUTS)}")


def resolve_weights(
    grammar_text: str,
    weights_mode: str,
    corpus_paths: Sequence[str] = (),
    weights_path: Optional[str] = None,
    smoothing: float = 0.0,
    jobs: Optional[int] = None,
) -> Tuple[WeightedGrammar, int]:
    """The weighted grammar for a weights mode, and how many corpus instances were skipped.

    Raises:
        UsageError: On an unknown mode or a missing corpus.
        GrammarMismatchError: If a weighted grammar file has different rules.
    """
    grammar = load_grammar(grammar_text)
    if weights_mode == "uniform":
        return uniform_weights(grammar), 0
    if weights_mode == "weighted-grammar-file":
        if weights_path is None:
            return grammar, 0
        weighted = load_grammar(read_grammar_text(weights_path))
        if not weighted.grammar.is_compatible(grammar.grammar):
            raise GrammarMismatchError(f"{weights_path} does not have the grammar's rules")
        return weighted, 0
    if weights_mode == "mle-corpus":
        if not corpus_paths:
            raise UsageError("The mle-corpus weights mode needs at least one corpus file")
        corpus = [mr for path in corpus_paths for mr in read_corpus(path)]
        weighted, report = estimate_mle(
            grammar, corpus, EstimationConfig(mode="mle", smoothing=smoothing), jobs=jobs
        )
        return weighted, report.skipped_unparseable + report.skipped_over_cap
    raise UsageError(f"Unknown weights mode {weights_mode!r}")


def augment(
    grammar_path: str,
    dataset_path: str,
    sample_config: SampleConfig,
    backtranslator: BacktranslatorSpec,
    outputs: Sequence[str],
    manifest_path: str,
    weights_mode: str = "uniform",
    corpus_paths: Sequence[str] = (),
    weights_path: Optional[str] = None,
    smoothing: float = 0.0,
    layout: str = "concat",
    jobs: Optional[int] = None,
) -> RunManifest:
    """Sample MRs, backtranslate them and write the augmented dataset(s) plus a run manifest.

    Every output is computed before anything is written. The datasets and the manifest are
    written as one set: on failure none of them is left behind.

    Args:
        grammar_path (str): Grammar file, or the name of a bundled grammar.
        dataset_path (str): The original training set.
        sample_config (SampleConfig): What and how much to sample.
        backtranslator (BacktranslatorSpec): How to get sentences for the sampled MRs.
        outputs (Sequence[str]): One path for ``concat``, two (stage 1, stage 2) for ``pretrain``.
        manifest_path (str): Where the run manifest goes.
        weights_mode (str, optional): ``mle-corpus``, ``uniform`` or ``weighted-grammar-file``.
        corpus_paths (Sequence[str], optional): MR corpora for ``mle-corpus``.
        weights_path (str, optional): Weighted grammar for ``weighted-grammar-file``; the
            grammar file's own weights are used when None.
        smoothing (float, optional): Add-lambda smoothing for ``mle-corpus``.
        layout (str, optional): ``concat`` or ``pretrain``.
        jobs (int, optional): Worker processes.

    Raises:
        UsageError: On inconsistent arguments.
        MrsynthError: Propagated from estimation, sampling, backtranslation and I/O.

    Returns:
        RunManifest: The manifest that was written.
    """
    if layout not in LAYOUTS:
        raise UsageError(f"Unknown layout {layout!r}, expected one of {', '.join(LAYOUTS)}")
    expected_outputs = 1 if layout == "concat" else 2
    if len(outputs) != expected_outputs:
        raise UsageError(f"The {layout} layout writes {expected_outputs} files, got {len(outputs)}")
    if weights_mode not in WEIGHTS_MODES:
        raise UsageError(f"Unknown weights mode {weights_mode!r}")

    grammar_text = read_grammar_text(grammar_path)
    weighted, skipped = resolve_weights(
        grammar_text, weights_mode, corpus_paths, weights_path, smoothing, jobs
    )
    original = load_dataset(dataset_path)
    samples, stats = sample_unique(weighted, sample_config, jobs=jobs)
    mrs = [sample.mr for sample in samples]
    sentences = asyncio.run(backtranslate(mrs, backtranslator))
    synthetic = ParallelDataset(
        records=[
            ParallelRecord(sentence=sentence, mr=mr, origin="synthetic")
            for sentence, mr in zip(sentences, mrs)
        ]
    )
    datasets = assemble(original, synthetic, layout, seed=sample_config.seed)

    manifest = RunManifest(
        grammar_sha256=text_sha256(grammar_text),
        weights_mode=weights_mode,
        corpus_paths=list(corpus_paths),
        seed=sample_config.seed,
        requested=stats.requested,
        returned=stats.returned,
        rejected_by_reason=stats.rejected_by_reason,
        skipped_unparseable=skipped,
        layout=layout,
        version=__version__,
        grammar_path=grammar_path,
        weights_path=weights_path,
        dataset_path=dataset_path,
        smoothing=smoothing,
        sample_config=sample_config,
        backtranslator=backtranslator,
        outputs=list(outputs),
    )
    files = {
        path: dump_dataset(dataset, infer_format(path))
        for dataset, path in zip(datasets, outputs)
    }
    files[manifest_path] = manifest.model_dump_json(indent=2) + "\n"
    atomic_write_files(files)
    for dataset, path in zip(datasets, outputs):
        logger.info(f"Wrote {len(dataset)} records to {path}")
    logger.info(
        f"Augmented {len(original)} records with {len(synthetic)} synthetic ones ({layout})"
    )
    return manifest


def load_manifest(path: str) -> RunManifest:
    try:
        return RunManifest.model_validate_json(Path(path).read_bytes())
    except ValidationError as exc:
        raise DataError(f"{path}: not a run manifest: {exc.errors()[0]['msg']}")


def replay(
    manifest_path: str, outputs: Optional[Sequence[str]] = None, out_manifest: Optional[str] = None
) -> RunManifest:
    """Rerun the augmentation a manifest describes.

    Raises:
        GrammarMismatchError: If the grammar changed since the manifest was written.
    """
    manifest = load_manifest(manifest_path)
    grammar_text = read_grammar_text(manifest.grammar_path)
    if text_sha256(grammar_text) != manifest.grammar_sha256:
        raise GrammarMismatchError(
            f"{manifest.grammar_path} changed since the run recorded in {manifest_path}"
        )
    return augment(
        grammar_path=manifest.grammar_path,
        dataset_path=manifest.dataset_path,
        sample_config=manifest.sample_config,
        backtranslator=manifest.backtranslator,
        outputs=list(outputs) if outputs else manifest.outputs,
        manifest_path=out_manifest or manifest_path,
        weights_mode=manifest.weights_mode,
        corpus_paths=manifest.corpus_paths,
        weights_path=manifest.weights_path,
        smoothing=manifest.smoothing,
        layout=manifest.layout,
    )

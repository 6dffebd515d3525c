# -*- coding: utf-8 -*-
"""Parallel dataset and MR corpus files.

TSV datasets hold ``sentence<TAB>mr`` per line; JSONL datasets hold objects with ``sentence``
and ``mr`` fields. Emitted files add a third column (field) ``origin``.
"""
import json
from pathlib import Path
from typing import Iterator, List, Optional, Tuple, Union

from loguru import logger
from pydantic import ValidationError

from mrsynth.exceptions import DatasetFormatError
from mrsynth.models import ParallelDataset, ParallelRecord
from mrsynth.utils import atomic_write_text

DATASET_FORMATS = ("tsv", "jsonl")
CORPUS_FORMATS = ("lines", "tsv", "jsonl")


def infer_format(path: Union[str, Path], default: str = "tsv") -> str:
    """Guess a file format from its suffix.

    >>> infer_format("train.jsonl")
    'jsonl'
    >>> infer_format("mrs.txt", default="lines")
    'lines'
    """
    suffix = Path(path).suffix.lower()
    if suffix in (".jsonl", ".json"):
        return "jsonl"
    if suffix == ".tsv":
        return "tsv"
    return default


def read_lines(path: Union[str, Path]) -> Iterator[Tuple[int, str]]:
    """Numbered lines of a UTF-8 file, line endings stripped.

    Raises:
        DatasetFormatError: On bytes that are not valid UTF-8, with the line and byte offset.
    """
    offset = 0
    with open(path, "rb") as handle:
        for line_number, raw in enumerate(handle, start=1):
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise DatasetFormatError(
                    f"invalid UTF-8 at byte {offset + exc.start}", line=line_number, path=str(path)
                )
            offset += len(raw)
            yield line_number, line.rstrip("\r\n")


def _record(
    fields: dict, line_number: int, path: str, with_origin: bool
) -> ParallelRecord:
    if not with_origin and "origin" in fields:
        fields = {key: value for key, value in fields.items() if key != "origin"}
    try:
        return ParallelRecord(**fields)
    except ValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(part) for part in error['loc'])}: {error['msg']}"
            for error in exc.errors()
        )
        raise DatasetFormatError(problems, line=line_number, path=path)


def _parse_tsv_line(line: str, line_number: int, path: str, with_origin: bool) -> dict:
    fields = line.split("\t")
    allowed = (2, 3) if with_origin else (2,)
    if len(fields) not in allowed:
        expected = " or ".join(str(count) for count in allowed)
        raise DatasetFormatError(
            f"expected {expected} tab-separated fields, got {len(fields)}",
            line=line_number,
            path=path,
        )
    parsed = {"sentence": fields[0], "mr": fields[1]}
    if len(fields) == 3:
        parsed["origin"] = fields[2]
    return parsed


def _parse_jsonl_line(line: str, line_number: int, path: str) -> dict:
    try:
        value = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"invalid JSON: {exc.msg}", line=line_number, path=path)
    if not isinstance(value, dict):
        raise DatasetFormatError("expected a JSON object", line=line_number, path=path)
    for key in ("sentence", "mr"):
        if not isinstance(value.get(key), str):
            raise DatasetFormatError(
                f"field {key!r} must be a string", line=line_number, path=path
            )
    return value


def load_dataset(
    path: Union[str, Path], fmt: Optional[str] = None, with_origin: bool = False
) -> ParallelDataset:
    """Read a parallel dataset.

    Args:
        path (Union[str, Path]): The dataset file.
        fmt (str, optional): ``tsv`` or ``jsonl``. Inferred from the suffix when None.
        with_origin (bool, optional): Accept the ``origin`` column of emitted files.
            Defaults to False, which makes every record ``original``.

    Raises:
        DatasetFormatError: On a malformed line, with its line number.

    Returns:
        ParallelDataset: The records in file order.
    """
    fmt = fmt or infer_format(path)
    if fmt not in DATASET_FORMATS:
        raise DatasetFormatError(f"Unknown dataset format {fmt!r}", path=str(path))
    records: List[ParallelRecord] = []
    for line_number, line in read_lines(path):
        if not line.strip():
            continue
        if fmt == "tsv":
            fields = _parse_tsv_line(line, line_number, str(path), with_origin)
        else:
            fields = _parse_jsonl_line(line, line_number, str(path))
        records.append(_record(fields, line_number, str(path), with_origin))
    logger.debug(f"Loaded {len(records)} records from {path}")
    return ParallelDataset(records=records)


def dump_dataset(dataset: ParallelDataset, fmt: str = "tsv") -> str:
    """Render a dataset with its origin column.

    Raises:
        DatasetFormatError: If a record has an empty sentence, or tabs or newlines in a TSV field.
    """
    if fmt not in DATASET_FORMATS:
        raise DatasetFormatError(f"Unknown dataset format {fmt!r}")
    lines = []
    for index, record in enumerate(dataset.records, start=1):
        if not record.sentence.strip():
            raise DatasetFormatError(f"record {index} has an empty sentence")
        if fmt == "tsv":
            fields = (record.sentence, record.mr, record.origin)
            if any("\t" in field or "\n" in field for field in fields):
                raise DatasetFormatError(f"record {index} has a tab or newline in a field")
            lines.append("\t".join(fields))
        else:
            lines.append(json.dumps(record.model_dump(), ensure_ascii=False))
    return "".join(line + "\n" for line in lines)


def write_dataset(dataset: ParallelDataset, path: Union[str, Path], fmt: Optional[str] = None):
    """Write a dataset atomically (temporary file, then rename)."""
    atomic_write_text(path, dump_dataset(dataset, fmt or infer_format(path)))
    logger.info(f"Wrote {len(dataset)} records to {path}")


def read_corpus(path: Union[str, Path], fmt: Optional[str] = None) -> List[str]:
    """Read MRs: one per line, or the MR field of a TSV or JSONL dataset.

    Args:
        path (Union[str, Path]): The corpus file.
        fmt (str, optional): ``lines``, ``tsv`` or ``jsonl``. Inferred from the suffix when None,
            with plain lines for unknown suffixes.

    Returns:
        List[str]: The MRs in file order, blank lines skipped.
    """
    fmt = fmt or infer_format(path, default="lines")
    if fmt not in CORPUS_FORMATS:
        raise DatasetFormatError(f"Unknown corpus format {fmt!r}", path=str(path))
    if fmt != "lines":
        return load_dataset(path, fmt, with_origin=True).mrs()
    return [line.strip() for _, line in read_lines(path) if line.strip()]

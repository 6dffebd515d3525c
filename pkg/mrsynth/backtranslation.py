# -*- coding: utf-8 -*-
"""Backtranslation clients: MRs in, one sentence per MR out, order preserved.

Every failure aborts the whole call with a ``BacktranslationError``.
"""
import asyncio
import json
from typing import Dict, List, Optional, Sequence

import httpx
from loguru import logger
from pydantic import ValidationError

from mrsynth.datasets import load_dataset
from mrsynth.exceptions import BacktranslationError, DatasetFormatError
from mrsynth.models import BacktranslateRequest, BacktranslateResponse, BacktranslatorSpec


def batches(items: Sequence[str], size: int) -> List[List[str]]:
    """Split into consecutive batches.

    >>> batches(["a", "b", "c"], 2)
    [['a', 'b'], ['c']]
    """
    return [list(items[start : start + size]) for start in range(0, len(items), size)]


def load_table(path: str) -> Dict[str, str]:
    """MR to sentence mapping from a dataset file; the first sentence of a repeated MR wins."""
    try:
        dataset = load_dataset(path, with_origin=True)
    except (OSError, DatasetFormatError) as exc:
        raise BacktranslationError(f"Cannot load mapping file {path}: {exc}")
    table: Dict[str, str] = {}
    for record in dataset.records:
        table.setdefault(" ".join(record.mr.split()), record.sentence)
    return table


def lookup(table: Dict[str, str], mrs: Sequence[str]) -> List[str]:
    missing = [mr for mr in mrs if " ".join(mr.split()) not in table]
    if missing:
        raise BacktranslationError(
            f"{len(missing)} MRs missing from the mapping table, first: {missing[0]!r}"
        )
    return [table[" ".join(mr.split())] for mr in mrs]


def _check_length(mrs: Sequence[str], sentences: Sequence[str]) -> List[str]:
    if len(sentences) != len(mrs):
        raise BacktranslationError(f"Got {len(sentences)} sentences for {len(mrs)} MRs")
    return list(sentences)


async def _http_batch(client: httpx.AsyncClient, spec: BacktranslatorSpec, mrs: List[str]):
    payload = BacktranslateRequest(mrs=mrs).model_dump()
    try:
        response = await client.post(spec.endpoint, json=payload, timeout=spec.timeout)
        response.raise_for_status()
        body = BacktranslateResponse.model_validate(response.json())
    except httpx.TimeoutException:
        raise BacktranslationError(f"Backtranslator at {spec.endpoint} timed out")
    except httpx.HTTPStatusError as exc:
        raise BacktranslationError(
            f"Backtranslator at {spec.endpoint} answered {exc.response.status_code}"
        )
    except httpx.HTTPError as exc:
        raise BacktranslationError(f"Backtranslator at {spec.endpoint} unreachable: {exc}")
    except (ValueError, ValidationError) as exc:
        raise BacktranslationError(f"Malformed backtranslator response: {exc}")
    return _check_length(mrs, body.sentences)


async def _command_batch(spec: BacktranslatorSpec, mrs: List[str]) -> List[str]:
    request = "".join(json.dumps({"mr": mr}, ensure_ascii=False) + "\n" for mr in mrs)
    try:
        process = await asyncio.create_subprocess_exec(
            *spec.command,
            stdin=asyncio.subprocess.PIPE,
            stdout=asyncio.subprocess.PIPE,
            stderr=asyncio.subprocess.PIPE,
        )
    except OSError as exc:
        raise BacktranslationError(f"Cannot start backtranslator {spec.command[0]}: {exc}")
    try:
        stdout, stderr = await asyncio.wait_for(
            process.communicate(request.encode("utf-8")), timeout=spec.timeout
        )
    except asyncio.TimeoutError:
        process.kill()
        await process.wait()
        raise BacktranslationError(f"Backtranslator {spec.command[0]} timed out")
    if process.returncode != 0:
        detail = stderr.decode("utf-8", errors="replace").strip()
        raise BacktranslationError(
            f"Backtranslator {spec.command[0]} exited with {process.returncode}: {detail}"
        )
    sentences = []
    for line in stdout.decode("utf-8").splitlines():
        if not line.strip():
            continue
        try:
            value = json.loads(line)
            sentences.append(value["sentence"] if isinstance(value, dict) else value)
        except (ValueError, KeyError):
            raise BacktranslationError(f"Malformed backtranslator output line {line!r}")
        if not isinstance(sentences[-1], str):
            raise BacktranslationError(f"Malformed backtranslator output line {line!r}")
    return _check_length(mrs, sentences)


async def backtranslate(
    mrs: Sequence[str],
    spec: BacktranslatorSpec,
    client: Optional[httpx.AsyncClient] = None,
) -> List[str]:
    """Generate one sentence per MR with the configured backtranslator.

    Batches of ``spec.batch_size`` MRs run concurrently, at most ``spec.concurrency`` at a time,
    and the results are put back in input order.

    Args:
        mrs (Sequence[str]): The MRs.
        spec (BacktranslatorSpec): Which backtranslator to use and how.
        client (httpx.AsyncClient, optional): Client for the ``http`` kind; one is created when
            None.

    Raises:
        BacktranslationError: On unreachable endpoints, timeouts, malformed or short responses,
            and mapping misses.

    Returns:
        List[str]: The sentences.
    """
    mrs = list(mrs)
    if spec.kind == "echo-stub":
        return mrs
    if spec.kind == "table-stub":
        return lookup(load_table(spec.mapping_path), mrs)

    semaphore = asyncio.Semaphore(spec.concurrency)
    chunks = batches(mrs, spec.batch_size)
    logger.info(f"Backtranslating {len(mrs)} MRs in {len(chunks)} batches ({spec.kind})")

    async def run(chunk: List[str], http: Optional[httpx.AsyncClient]) -> List[str]:
        async with semaphore:
            if spec.kind == "http":
                return await _http_batch(http, spec, chunk)
            return await _command_batch(spec, chunk)

    if spec.kind == "http" and client is None:
        async with httpx.AsyncClient(timeout=spec.timeout) as http:
            results = await asyncio.gather(*(run(chunk, http) for chunk in chunks))
    else:
        results = await asyncio.gather(*(run(chunk, client) for chunk in chunks))
    return [sentence for result in results for sentence in result]


def backtranslate_sync(mrs: Sequence[str], spec: BacktranslatorSpec) -> List[str]:
    return asyncio.run(backtranslate(mrs, spec))

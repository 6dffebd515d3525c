# -*- coding: utf-8 -*-
from functools import lru_cache
from typing import Dict, Optional

from fastapi import HTTPException
from loguru import logger

from mrsynth import config
from mrsynth.backtranslation import load_table
from mrsynth.exceptions import BacktranslationError


@lru_cache(maxsize=1)
def _cached_table(path: str) -> Dict[str, str]:
    table = load_table(path)
    logger.info(f"Loaded {len(table)} MR mappings from {path}")
    return table


async def get_stub_table() -> Optional[Dict[str, str]]:
    """The lookup table of the stub backtranslator, or None to echo MRs back."""
    if not config.STUB_TABLE_PATH:
        return None
    try:
        return _cached_table(config.STUB_TABLE_PATH)
    except BacktranslationError as exc:
        raise HTTPException(status_code=500, detail=exc.message)

# -*- coding: utf-8 -*-
from typing import Dict, Optional

from fastapi import APIRouter, Depends, HTTPException
from loguru import logger

from mrsynth.dependencies import get_stub_table
from mrsynth.models import BacktranslateRequest, BacktranslateResponse, Status

router = APIRouter(tags=["backtranslate"])


@router.get("/health")
async def health() -> Status:
    return Status(message="ok", success=True)


@router.post("/backtranslate", responses={404: {"description": "MR not in the mapping table"}})
async def backtranslate(
    request: BacktranslateRequest, table: Optional[Dict[str, str]] = Depends(get_stub_table)
) -> BacktranslateResponse:
    logger.debug(f"Backtranslating {len(request.mrs)} MRs")
    if table is None:
        return BacktranslateResponse(sentences=list(request.mrs))
    sentences = []
    for mr in request.mrs:
        sentence = table.get(" ".join(mr.split()))
        if sentence is None:
            raise HTTPException(status_code=404, detail=f"MR not in the mapping table: {mr}")
        sentences.append(sentence)
    return BacktranslateResponse(sentences=sentences)

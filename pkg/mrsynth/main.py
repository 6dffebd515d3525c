# -*- coding: utf-8 -*-
from fastapi import FastAPI
from loguru import logger

from mrsynth import __version__, config
from mrsynth.routers import backtranslate
from mrsynth.utils import register_middlewares_profile, setup_logging, setup_sentry

setup_logging()
setup_sentry()

app = FastAPI(
    title="mrsynth stub backtranslator",
    version=__version__,
)

logger.debug(f"STUB_TABLE_PATH: {config.STUB_TABLE_PATH}")
app.include_router(backtranslate.router)

if config.PROFILING_ENABLED:
    register_middlewares_profile(app)

# -*- coding: utf-8 -*-
import socket

from . import getenv_flag, getenv_int_or_action, getenv_list_or_action, getenv_or_action

# Logging
LOG_LEVEL = getenv_or_action("LOG_LEVEL", action="ignore", default="INFO")

# Parsing
ENUMERATION_CAP = getenv_int_or_action("ENUMERATION_CAP", action="ignore", default=1000)

# Sampling
SAMPLE_MAX_DEPTH = getenv_int_or_action("SAMPLE_MAX_DEPTH", action="ignore", default=50)
SAMPLE_MAX_LEN = getenv_int_or_action("SAMPLE_MAX_LEN", action="ignore", default=512)
SAMPLE_BUDGET_FACTOR = getenv_int_or_action("SAMPLE_BUDGET_FACTOR", action="ignore", default=100)
SAMPLE_BATCH_SIZE = getenv_int_or_action("SAMPLE_BATCH_SIZE", action="ignore", default=1024)
# Finite languages with at most this many derivations get an exact size in sampling stats
LANGUAGE_SIZE_LIMIT = getenv_int_or_action(
    "LANGUAGE_SIZE_LIMIT", action="ignore", default=1_000_000
)
DEFAULT_SEED = getenv_int_or_action("DEFAULT_SEED", action="ignore", default=0)

# Parallelism
JOBS = getenv_int_or_action("JOBS", action="ignore", default=1)

# Analysis
ANALYSIS_NGRAM_ORDERS = [
    int(n) for n in getenv_list_or_action("ANALYSIS_NGRAM_ORDERS", action="ignore", default="2")
]

# Backtranslation
BACKTRANSLATOR_BATCH_SIZE = getenv_int_or_action(
    "BACKTRANSLATOR_BATCH_SIZE", action="ignore", default=32
)
BACKTRANSLATOR_CONCURRENCY = getenv_int_or_action(
    "BACKTRANSLATOR_CONCURRENCY", action="ignore", default=4
)

# Sentry
SENTRY_ENABLE = False
SENTRY_DSN = None
SENTRY_ENVIRONMENT = None

# Profiling
PROFILING_ENABLED = getenv_flag("PROFILING_ENABLED")

# Host
HOST = socket.gethostname()

# Requests timeout
REQUESTS_DEFAULT_TIMEOUT = getenv_int_or_action(
    "REQUESTS_DEFAULT_TIMEOUT", action="ignore", default=30
)

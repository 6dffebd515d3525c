# -*- coding: utf-8 -*-
from . import getenv_int_or_action, getenv_or_action
from .base import *  # noqa: F401, F403

# Backtranslation stub server
STUB_HOST = getenv_or_action("STUB_HOST", action="ignore", default="127.0.0.1")
STUB_PORT = getenv_int_or_action("STUB_PORT", action="ignore", default=8001)
STUB_TABLE_PATH = getenv_or_action("STUB_TABLE_PATH", action="ignore")

# Profile
PROFILING_PATH = "."

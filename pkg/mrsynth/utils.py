# -*- coding: utf-8 -*-
import hashlib
import os
import sys
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, List, Mapping, Tuple, Union

import sentry_sdk
from fastapi import FastAPI, Request
from loguru import logger
from pyinstrument import Profiler
from pyinstrument.renderers.html import HTMLRenderer
from pyinstrument.renderers.speedscope import SpeedscopeRenderer

from mrsynth import config

PROFILE_TYPE_TO_EXT = {"html": "html", "speedscope": "speedscope.json"}
PROFILE_TYPE_TO_RENDERER = {"html": HTMLRenderer, "speedscope": SpeedscopeRenderer}


def tokenize(text: str) -> Tuple[str, ...]:
    """Split an MR or a sentence on whitespace.

    Args:
        text (str): The string to split.

    Returns:
        Tuple[str, ...]: The tokens.

    >>> tokenize("answer ( loc_1 ( cityid ( houston , _ ) ) )")[:3]
    ('answer', '(', 'loc_1')
    """
    return tuple(text.split())


def text_sha256(text: str) -> str:
    """Hash UTF-8 text.

    Args:
        text (str): The text.

    Returns:
        str: The hex digest.
    """
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def atomic_write_text(path: Union[str, Path], text: str) -> None:
    """Write a file through a temporary sibling and a rename, so readers never see partial output.

    Args:
        path (Union[str, Path]): The destination.
        text (str): The contents, written as UTF-8.
    """
    atomic_write_files({path: text})


def atomic_write_files(files: Mapping[Union[str, Path], str]) -> None:
    """Write several files as a unit.

    Every file is staged in a temporary sibling before any rename. If staging or a rename fails,
    the temporaries and the destinations already renamed are removed, so no partial set is left.

    Args:
        files (Mapping[Union[str, Path], str]): Destination to UTF-8 contents.
    """
    staged: List[Tuple[str, Path]] = []
    replaced: List[Path] = []
    try:
        for destination, text in files.items():
            path = Path(destination)
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, temporary = tempfile.mkstemp(
                prefix=f".{path.name}.", suffix=".tmp", dir=path.parent
            )
            staged.append((temporary, path))
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
                handle.write(text)
        for temporary, path in staged:
            os.replace(temporary, path)
            replaced.append(path)
    except BaseException:
        for temporary, _ in staged:
            if os.path.exists(temporary):
                os.unlink(temporary)
        for path in replaced:
            logger.warning(f"Removing {path}, the rest of its set could not be written")
            path.unlink()
        raise
    for _, path in staged:
        logger.debug(f"Wrote {path}")


def setup_logging(level: str = None) -> None:
    logger.remove()
    logger.add(sys.stderr, level=(level or config.LOG_LEVEL).upper())


def setup_sentry() -> None:
    if config.SENTRY_ENABLE:
        sentry_sdk.init(
            dsn=config.SENTRY_DSN,
            traces_sample_rate=0,
            environment=config.SENTRY_ENVIRONMENT,
        )


def string_to_list(string_: str) -> List[str]:
    """Convert a comma separated string to a list of stripped items.

    Args:
        string_ (str): The string to convert.

    Returns:
        list: The list.

    >>> string_to_list("S, 2")
    ['S', '2']
    """
    return [item.strip() for item in string_.split(",")]


def profile_output_path(profile_type: str) -> str:
    extension = PROFILE_TYPE_TO_EXT[profile_type]
    return f"{config.PROFILING_PATH}/{config.HOST}.profile.{extension}"


@contextmanager
def profiled(profile_type: str = "speedscope") -> Iterator[None]:
    """Profile the enclosed block when profiling is enabled.

    The report lands in ``{PROFILING_PATH}/{HOST}.profile.{extension}``, like request profiles
    of the stub server.
    """
    if not config.PROFILING_ENABLED:
        yield
        return
    with Profiler(interval=0.001) as profiler:
        yield
    renderer = PROFILE_TYPE_TO_RENDERER[profile_type]()
    with open(profile_output_path(profile_type), "w") as out:
        out.write(profiler.output(renderer=renderer))


def register_middlewares_profile(app: FastAPI):
    @app.middleware("http")
    async def profile_request(request: Request, call_next):
        """Profile the current request

        Taken from https://pyinstrument.readthedocs.io/en/latest/guide.html
        with small improvements.

        """
        # The default profile format is speedscope
        profile_type = request.query_params.get("profile_format", "speedscope")
        if profile_type not in PROFILE_TYPE_TO_EXT:
            profile_type = "speedscope"

        with Profiler(interval=0.001, async_mode="enabled") as profiler:
            response = await call_next(request)

        renderer = PROFILE_TYPE_TO_RENDERER[profile_type]()
        with open(profile_output_path(profile_type), "w") as out:
            out.write(profiler.output(renderer=renderer))
        return response

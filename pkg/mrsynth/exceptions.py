# -*- coding: utf-8 -*-
from typing import List


class MrsynthError(Exception):
    """Base class for every error the toolkit raises on purpose.

    The command line maps each subclass to a process exit code.
    """

    exit_code = 2

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class UsageError(MrsynthError):
    exit_code = 1


class DataError(MrsynthError):
    exit_code = 2


class GrammarSyntaxError(DataError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class GrammarError(DataError):
    pass


class GrammarMismatchError(DataError):
    pass


class DatasetFormatError(DataError):
    def __init__(self, message: str, line: int = None, path: str = None):
        location = ""
        if path:
            location += f"{path}: "
        if line is not None:
            location += f"line {line}: "
        super().__init__(f"{location}{message}")
        self.line = line
        self.path = path


class ParseError(DataError):
    pass


class EnumerationError(DataError):
    pass


class FilterError(DataError):
    pass


class EstimationError(DataError):
    def __init__(self, message: str, unknown_tokens: List[str] = None):
        super().__init__(message)
        self.unknown_tokens = unknown_tokens or []


class BacktranslationError(MrsynthError):
    """A backtranslation batch failed. The whole run is aborted; retrying may succeed."""

    exit_code = 3
    retriable = True

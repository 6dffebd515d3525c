# -*- coding: utf-8 -*-
from os import getenv
from typing import List

from loguru import logger


def getenv_or_action(env_name: str, *, action: str = "raise", default: str = None) -> str:
    """Get an environment variable or raise an exception.

    Args:
        env_name (str): The name of the environment variable.
        action (str, optional): What to do when the variable is not set and has no default:
            "raise", "warn" or "ignore". Defaults to "raise".
        default (str, optional): Value used when the variable is not set. Defaults to None.

    Raises:
        ValueError: If the action is not one of "raise", "warn", or "ignore".
        EnvironmentError: If the variable is not set, has no default and the action is "raise".

    Returns:
        str: The value of the environment variable, or the default.
    """
    if action not in ["raise", "warn", "ignore"]:
        raise ValueError("action must be one of 'raise', 'warn', or 'ignore'")

    value = getenv(env_name, default)
    if value is None:
        if action == "raise":
            raise EnvironmentError(f"Environment variable {env_name} is not set.")
        elif action == "warn":
            logger.warning(f"Warning: Environment variable {env_name} is not set.")
    return value


def getenv_int_or_action(env_name: str, *, action: str = "raise", default: int = None) -> int:
    """Integer environment variable; None when unset without a default.

    Raises:
        ValueError: If the value is not an integer.
    """
    value = getenv_or_action(
        env_name, action=action, default=None if default is None else str(default)
    )
    if value is None:
        return None
    try:
        return int(value)
    except ValueError:
        raise ValueError(f"Environment variable {env_name} must be an integer, got {value!r}")


def getenv_flag(env_name: str, default: bool = False) -> bool:
    """Boolean environment variable: "true" in any case turns it on.

    >>> getenv_flag("MRSYNTH_UNSET_FLAG", default=True)
    True
    """
    return getenv_or_action(env_name, action="ignore", default=str(default)).lower() == "true"


def getenv_list_or_action(
    env_name: str, *, action: str = "raise", default: str = None
) -> List[str]:
    """Comma-separated environment variable as a list, blank items dropped.

    Returns:
        List[str]: The items, or an empty list when the variable is not set.
    """
    value = getenv_or_action(env_name, action=action, default=default)
    if value is None:
        return []
    return [item.strip() for item in value.split(",") if item.strip()]


environment = getenv_or_action("ENVIRONMENT", action="ignore", default="dev")
if environment not in ["dev", "prod"]:
    raise ValueError("ENVIRONMENT must be one of 'dev' or 'prod'")

if environment == "dev":
    from mrsynth.config.dev import *  # noqa: F401, F403

else:
    from mrsynth.config.prod import *  # noqa: F401, F403

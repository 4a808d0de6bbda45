import os
from dotenv import load_dotenv

# Load environment variables from the .env file
load_dotenv()

from typing import Optional
from loguru import logger


def parse_env_int(name: str, default: int, minimum: Optional[int] = None) -> int:
    """
    Parses an integer environment variable.
    If the variable is unset, malformed or below `minimum`, returns the default.

    :param name: Name of the environment variable.
    :param default: Value used when parsing fails.
    :param minimum: Smallest accepted value (inclusive).
    :return: Parsed integer or the default.
    """
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        value = int(raw.strip())
    except ValueError as e:
        logger.error(f"Error parsing {name}={raw!r}: {e}. Using default {default}.")
        return default
    if minimum is not None and value < minimum:
        logger.error(f"{name}={value} is below the minimum {minimum}. Using default {default}.")
        return default
    return value


LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")
# An empty LOG_FILE disables the file sink.
LOG_FILE: str = os.getenv("LOG_FILE", "logs/ooscam.log")
OUTPUT_DIR: str = os.getenv("OOSCAM_OUTPUT_DIR", "runs")

# Caps the number of episodes evaluated concurrently during training.
THREADS: int = parse_env_int("OOSCAM_THREADS", os.cpu_count() or 1, minimum=1)

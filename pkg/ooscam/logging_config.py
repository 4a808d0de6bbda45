import sys
from typing import Optional

from loguru import logger

CONSOLE_FORMAT = ("<green>{time:HH:mm:ss.SSS}</green> | <level>{level: <8}</level> | "
                  "<cyan>{name}</cyan> - <level>{message}</level>")


def setup_logging(level: Optional[str] = None, log_file: Optional[str] = None):
    """
    Configures a colored console sink and, unless the log file is empty, a
    rotating file sink. `level` and `log_file` override LOG_LEVEL and LOG_FILE.
    """
    # Local import ensures that config.py is fully initialized.
    from ooscam.config.config import LOG_FILE, LOG_LEVEL

    level = (level or LOG_LEVEL).upper()
    log_file = LOG_FILE if log_file is None else log_file

    logger.remove()
    logger.add(sys.stdout, level=level, colorize=True, format=CONSOLE_FORMAT)

    if log_file:
        logger.add(
            log_file,
            level=level,
            encoding="utf-8",
            rotation="10 MB",
            compression="zip",
        )
    logger.debug(f"Logging at {level}" + (f", file {log_file}" if log_file else ", no log file"))

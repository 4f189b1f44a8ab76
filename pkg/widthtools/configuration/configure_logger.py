from loguru import logger
import sys
import datetime
from pathlib import Path
from typing import Optional


def configure_logger(
        log_to_file: bool = False,
        output_directory: Optional[Path] = None,
        log_filename: Optional[str] = None,
        level: Optional[str] = None,
):
    logger.remove()  # remove default logger

    level = level.upper() if level else None
    if level not in {"CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG", "TRACE"}:
        level = "INFO"

    # add file logger set to DEBUG level
    if log_to_file:
        timestamp = datetime.datetime.now(datetime.UTC).strftime("%Y%m%d-%H%M%S")
        log_filename = f"widthtools_{timestamp}.log" if log_filename is None else log_filename
        output_directory = Path.cwd() / "logs" if output_directory is None else Path(output_directory) / "logs"
        logger.add(
            output_directory.joinpath(log_filename), level="DEBUG", rotation="1 MB"
        )

    # add console logger with formatting
    logger_format = "<white>{time:YYYY-MM-DD HH:mm:ss.SSSSSS}</white> "
    logger_format += "--- <level>{level}</level> | <cyan>{name}</cyan> <level>{message}</level>"
    logger.add(
        sys.stderr, level=level,
        format=logger_format,
    )

import logging
import os
from typing import Optional

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def setup_logging(level: Optional[str] = None):
    """Configure root logging for entm.

    The level is taken from ``level`` or the LOG_LEVEL environment variable.
    Long scans and REE solves log their progress at DEBUG, so LOG_LEVEL=DEBUG
    is the switch to watch a run.
    """
    log_level = (level or os.getenv("LOG_LEVEL", "CRITICAL")).upper()
    logging.basicConfig(
        level=getattr(logging, log_level, logging.WARNING),
        format=LOG_FORMAT,
        # Console only; CSV/JSON artifacts carry the results
        handlers=[logging.StreamHandler()],
    )


setup_logging()

import logging
import sys
from typing import TYPE_CHECKING, Any

import numpy as np
import structlog
from structlog.typing import EventDict, Processor, WrappedLogger

from blinky_bss.config import LOG_LEVELS, get_app_config

LOG_FILE_NAME = "blinky_bss.log"


def numpy_to_builtins(_: WrappedLogger, __: str, event_dict: EventDict) -> EventDict:
    """Turns numpy scalars and arrays in log fields into plain Python values."""
    for key, value in event_dict.items():
        if isinstance(value, np.ndarray):
            event_dict[key] = value.tolist()
        elif isinstance(value, np.generic):
            event_dict[key] = value.item()
    return event_dict


def _pre_chain() -> list[Processor]:
    return [
        structlog.contextvars.merge_contextvars,
        structlog.processors.TimeStamper(fmt="iso", utc=True),
        structlog.processors.add_log_level,
        structlog.stdlib.add_logger_name,
        numpy_to_builtins,
    ]


def _handler(handler: logging.Handler, renderer: Processor) -> logging.Handler:
    handler.setFormatter(
        structlog.stdlib.ProcessorFormatter(processor=renderer, foreign_pre_chain=_pre_chain())
    )
    return handler


def setup_logging(level: LOG_LEVELS | None = None) -> None:
    """Console lines on stderr and JSON lines in `<logs_dir>/blinky_bss.log`.

    stdout is left to command output. `level` overrides the configured log level.
    """
    config = get_app_config()
    level = level or config.log_level
    config.logs_dir.mkdir(parents=True, exist_ok=True)

    logging.basicConfig(
        level=level,
        handlers=[
            _handler(
                logging.StreamHandler(sys.stderr),
                structlog.dev.ConsoleRenderer(colors=sys.stderr.isatty()),
            ),
            _handler(
                logging.FileHandler(config.logs_dir / LOG_FILE_NAME, encoding="utf-8"),
                structlog.processors.JSONRenderer(),
            ),
        ],
        force=True,
    )

    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            *_pre_chain(),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.stdlib.ProcessorFormatter.wrap_for_formatter,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(level),
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )


# proxy type to the structlog bound logger that satisfies beartype
type Logger = Any
if TYPE_CHECKING:
    from structlog.stdlib import BoundLogger

    type Logger = BoundLogger

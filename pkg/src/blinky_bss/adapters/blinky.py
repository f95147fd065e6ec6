"""Loading and storing blinky power matrices U (one row per sensor, one column per frame)."""

import pathlib

import numpy as np
import pandas as pd
from structlog import get_logger

from blinky_bss.domain import exceptions, ports
from blinky_bss.domain.model import FloatArray
from blinky_bss.dsp.scene import blinky_signals
from blinky_bss.utils.logger import Logger

logger: Logger = get_logger()

CSV_FLOAT_FORMAT = "%.17g"


def read_blinky_csv(file_path: pathlib.Path) -> FloatArray:
    """
    Reads a B x N matrix of non-negative power values without a header.

    Raises:
        AudioReadError: If the file is missing, unreadable or not a numeric matrix.
        SignalError: If an entry is negative or not finite.
    """
    if not file_path.is_file():
        raise exceptions.AudioReadError(f"Could not find blinky file {file_path}")
    try:
        frame = pd.read_csv(
            file_path, header=None, dtype=np.float64, float_precision="round_trip"
        )
    except (OSError, ValueError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise exceptions.AudioReadError(
            f"Failed to read blinky matrix {file_path}: {e}"
        ) from e

    U = frame.to_numpy(dtype=np.float64)
    if not np.all(np.isfinite(U)):
        raise exceptions.SignalError(f"Blinky matrix {file_path} has non-finite entries")
    if np.any(U < 0):
        raise exceptions.SignalError(f"Blinky matrix {file_path} has negative entries")
    logger.debug("Read blinky matrix", path=str(file_path), shape=list(U.shape))
    return U


def write_blinky_csv(U: FloatArray, file_path: pathlib.Path) -> None:
    try:
        file_path.parent.mkdir(parents=True, exist_ok=True)
        pd.DataFrame(U).to_csv(
            file_path, header=False, index=False, float_format=CSV_FLOAT_FORMAT
        )
    except OSError as e:
        raise exceptions.AudioWriteError(
            f"Failed to write blinky matrix {file_path}: {e}"
        ) from e
    logger.debug("Wrote blinky matrix", path=str(file_path), shape=list(U.shape))


def load_blinky_power(
    file_paths: list[pathlib.Path],
    storage: ports.AudioStorage,
    frame_size: int,
) -> FloatArray:
    """
    Blinky power from either a single CSV matrix or a set of WAV recordings
    taken at the sensor positions (reduced with `blinky_signals`).
    """
    if not file_paths:
        raise exceptions.MissingBlinkyDataError("No blinky files were given")
    csv_paths = [path for path in file_paths if path.suffix.lower() == ".csv"]
    if csv_paths:
        if len(file_paths) != 1:
            raise exceptions.ConfigurationError(
                "Give either one blinky CSV or a set of blinky WAV files, not both"
            )
        return read_blinky_csv(csv_paths[0])
    return blinky_signals(storage.read_many(file_paths), frame_size)

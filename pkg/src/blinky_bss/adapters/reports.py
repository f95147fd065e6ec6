"""
Result documents of the harness and of single separations.

JSON documents are msgspec structs; result tables are pandas frames written
with a fixed float format so that identical runs give identical bytes.
"""

import pathlib
from collections.abc import Sequence
from typing import Any

import msgspec
import numpy as np
import pandas as pd
from structlog import get_logger

from blinky_bss.domain import exceptions
from blinky_bss.domain.model import EvalReport, SeparationResult, Summary
from blinky_bss.domain.structs import GridPoint
from blinky_bss.dsp.metrics import WEAK_SOURCE_INDEX
from blinky_bss.utils.logger import Logger

logger: Logger = get_logger()

RESULT_COLUMNS = [
    "algo",
    "n_mics",
    "n_sources",
    "seed",
    "source_index",
    "sdr_db",
    "sir_db",
]
SORT_COLUMNS = RESULT_COLUMNS[:5]
GROUP_COLUMNS = ["algo", "n_mics", "n_sources"]
FLOAT_FORMAT = "%.6f"


class ResultRow(msgspec.Struct, frozen=True):
    algo: str
    n_mics: int
    n_sources: int
    seed: int
    source_index: int
    sdr_db: float
    sir_db: float


class ComplexMatrix(msgspec.Struct, frozen=True):
    real: list[Any]
    imag: list[Any]


class SeparationRecord(msgspec.Struct, frozen=True):
    algorithm: str
    channels: list[int]
    cost_trace: list[float]
    max_normalization_error: float
    max_condition_number: float
    demixing: ComplexMatrix
    variances: list[list[float]]
    gains: list[list[float]] | None = None


class RunReport(msgspec.Struct, frozen=True):
    run_id: str
    timestamp: str
    config: dict[str, Any]
    separation: SeparationRecord
    outputs: list[str] = []


class SkippedPoint(msgspec.Struct, frozen=True):
    n_sources: int
    n_mics: int
    seed: int
    reason: str


class ExperimentReport(msgspec.Struct, frozen=True):
    run_id: str
    timestamp: str
    plan: dict[str, Any]
    n_rows: int
    skipped: list[SkippedPoint]
    summary: dict[str, Summary]


def _enc_hook(obj: Any) -> Any:
    if isinstance(obj, pathlib.PurePath):
        return str(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise NotImplementedError(f"Objects of type {type(obj)} are not supported")


def to_builtins(obj: Any) -> Any:
    """Dataclasses, enums, paths and arrays as plain JSON-compatible values."""
    return msgspec.to_builtins(obj, enc_hook=_enc_hook)


def separation_record(result: SeparationResult) -> SeparationRecord:
    W = result.demixing.W
    return SeparationRecord(
        algorithm=result.algorithm.value,
        channels=list(result.channels),
        cost_trace=list(result.cost_trace),
        max_normalization_error=result.max_normalization_error,
        max_condition_number=result.max_condition_number,
        demixing=ComplexMatrix(real=W.real.tolist(), imag=W.imag.tolist()),
        variances=result.variances.tolist(),
        gains=None if result.gains is None else result.gains.tolist(),
    )


def skipped_point(point: GridPoint) -> SkippedPoint:
    return SkippedPoint(
        n_sources=point.n_sources,
        n_mics=point.n_mics,
        seed=point.seed,
        reason=f"n_mics={point.n_mics} < n_sources={point.n_sources}",
    )


def write_json(document: Any, file_path: pathlib.Path) -> None:
    encoded = msgspec.json.format(msgspec.json.encode(document, enc_hook=_enc_hook))
    try:
        file_path.parent.mkdir(parents=True, exist_ok=True)
        file_path.write_bytes(encoded + b"\n")
    except OSError as e:
        raise exceptions.AudioWriteError(
            f"Failed to write report {file_path}: {e}"
        ) from e
    logger.debug("Wrote report", path=str(file_path))


def read_json(file_path: pathlib.Path) -> Any:
    try:
        return msgspec.json.decode(file_path.read_bytes())
    except OSError as e:
        raise exceptions.AudioReadError(f"Failed to read {file_path}: {e}") from e
    except msgspec.DecodeError as e:
        raise exceptions.ConfigurationError(f"Invalid JSON in {file_path}: {e}") from e


def result_rows(
    algo: str, point: GridPoint, report: EvalReport
) -> list[ResultRow]:
    """One row per reference source of a single evaluated separation."""
    return [
        ResultRow(
            algo=algo,
            n_mics=point.n_mics,
            n_sources=point.n_sources,
            seed=point.seed,
            source_index=j,
            sdr_db=report.sdr[j],
            sir_db=report.sir[j],
        )
        for j in range(report.n_sources)
    ]


def results_frame(rows: Sequence[ResultRow]) -> pd.DataFrame:
    """Rows as a frame with the fixed columns, sorted canonically."""
    frame = pd.DataFrame(
        [msgspec.structs.astuple(row) for row in rows], columns=RESULT_COLUMNS
    )
    return frame.sort_values(SORT_COLUMNS, kind="stable").reset_index(drop=True)


def write_csv(frame: pd.DataFrame, file_path: pathlib.Path) -> None:
    try:
        file_path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(file_path, index=False, float_format=FLOAT_FORMAT)
    except OSError as e:
        raise exceptions.AudioWriteError(f"Failed to write table {file_path}: {e}") from e
    logger.debug("Wrote table", path=str(file_path), n_rows=len(frame))


def read_results_csv(file_path: pathlib.Path) -> pd.DataFrame:
    """
    Raises:
        AudioReadError: If the file cannot be read.
        ConfigurationError: If the result columns are missing.
    """
    if not file_path.is_file():
        raise exceptions.AudioReadError(f"Could not find results file {file_path}")
    try:
        frame = pd.read_csv(file_path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise exceptions.AudioReadError(f"Failed to read {file_path}: {e}") from e
    missing = [column for column in RESULT_COLUMNS if column not in frame.columns]
    if missing:
        raise exceptions.ConfigurationError(
            f"Results file {file_path} lacks columns {missing}"
        )
    return frame[RESULT_COLUMNS]


def _quartiles(frame: pd.DataFrame, prefix: str) -> pd.DataFrame:
    grouped = frame.groupby(GROUP_COLUMNS, sort=True)
    parts = {}
    for metric in ("sdr", "sir"):
        column = grouped[f"{metric}_db"]
        parts[f"{prefix}{metric}_median"] = column.median()
        parts[f"{prefix}{metric}_q25"] = column.quantile(0.25)
        parts[f"{prefix}{metric}_q75"] = column.quantile(0.75)
    return pd.DataFrame(parts)


def summary_frame(results: pd.DataFrame) -> pd.DataFrame:
    """
    Median and quartiles (linear interpolation) of SDR and SIR per
    (algo, n_mics, n_sources), over all sources and for the weak source alone.
    """
    if results.empty:
        raise exceptions.ConfigurationError("Cannot summarize an empty results table")
    overall = _quartiles(results, "")
    overall.insert(0, "count", results.groupby(GROUP_COLUMNS, sort=True).size())
    weak = _quartiles(results[results["source_index"] == WEAK_SOURCE_INDEX], "weak_")
    return overall.join(weak, how="left").reset_index()

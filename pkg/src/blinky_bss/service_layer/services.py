from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import pandas as pd
import structlog
from structlog import get_logger

from blinky_bss.adapters import blinky as blinky_files
from blinky_bss.adapters import reports
from blinky_bss.domain import exceptions, model, ports
from blinky_bss.domain.structs import (
    ExperimentPlan,
    GridPoint,
    JointConfig,
    Scene,
    SceneConfig,
)
from blinky_bss.dsp import metrics, scene as scenes, stft
from blinky_bss.separation import blinkiva
from blinky_bss.separation.auxiva import AuxIVASeparator
from blinky_bss.separation.blinkiva import BlinkIVASeparator
from blinky_bss.service_layer.helpers import (
    generate_id,
    scene_generators,
    utc_timestamp,
)
from blinky_bss.utils.logger import Logger

logger: Logger = get_logger()

REFERENCE_MIC = 0

SUPPORTED_SEPARATORS: dict[model.Algorithm, Callable[[JointConfig], ports.Separator]] = {
    model.Algorithm.AUXIVA: lambda joint: AuxIVASeparator(
        n_iter=joint.n_iter, epsilon=joint.epsilon
    ),
    model.Algorithm.BLINKIVA: BlinkIVASeparator,
}


def make_separator(algorithm: model.Algorithm, joint: JointConfig) -> ports.Separator:
    factory = SUPPORTED_SEPARATORS.get(algorithm)
    if factory is None:
        raise exceptions.UnsupportedAlgorithmError(
            f"Algorithm '{algorithm.value}' is not implemented"
        )
    return factory(joint)


# --- Scenes ---


def load_sources(
    file_paths: Sequence[Path], storage: ports.AudioStorage
) -> list[model.TimeSignal]:
    """Reads one source per file; multichannel files contribute their first channel."""
    return [storage.read(path).channel(0) for path in file_paths]


def bundled_sources(
    n_sources: int, n_samples: int, sample_rate: int, rng: np.random.Generator
) -> list[model.TimeSignal]:
    return [
        model.TimeSignal(
            samples=scenes.speech_like_source(n_samples, sample_rate, rng),
            sample_rate=sample_rate,
        )
        for _ in range(n_sources)
    ]


def simulate(
    config: SceneConfig,
    sources: Sequence[model.TimeSignal] | None = None,
    sample_rate: int = model.DEFAULT_SAMPLE_RATE,
    frame_size: int = scenes.DEFAULT_FRAME_SIZE,
) -> Scene:
    """Builds the scene of `config.seed`.

    Args:
        config: Scene description.
        sources: Source recordings; the first `n_sources` are used. Bundled
            speech-like sources are generated when None.
        sample_rate: Rate of the bundled sources.
        frame_size: STFT frame size of the blinky power.

    Returns:
        The mixed Scene.

    Raises:
        ConfigurationError: If fewer sources than `config.n_sources` are given.
        InfeasibleSINRError: If the level targets cannot be met.
    """
    source_rng, mixing_rng = scene_generators(config.seed)
    if sources is None:
        n_samples = int(round(config.duration_s * sample_rate))
        chosen = bundled_sources(config.n_sources, n_samples, sample_rate, source_rng)
    else:
        if len(sources) < config.n_sources:
            raise exceptions.ConfigurationError(
                f"Scene needs {config.n_sources} source recordings, got {len(sources)}"
            )
        chosen = list(sources[: config.n_sources])
    return scenes.mix(config, chosen, mixing_rng, frame_size)


def write_scene(scene: Scene, storage: ports.AudioStorage, out_dir: Path) -> list[Path]:
    """Writes mics.wav, blinky.csv, reference_<k>.wav and scene.json; returns the paths."""
    mics_path = out_dir / "mics.wav"
    storage.write(scene.mic_signals, mics_path)
    blinky_path = out_dir / "blinky.csv"
    blinky_files.write_blinky_csv(scene.blinky_power, blinky_path)
    written = [mics_path, blinky_path]
    for k, reference in enumerate(scene.references):
        path = out_dir / f"reference_{k}.wav"
        storage.write(reference, path)
        written.append(path)
    config_path = out_dir / "scene.json"
    reports.write_json(reports.to_builtins(scene.config), config_path)
    written.append(config_path)
    logger.info("Scene written", out_dir=str(out_dir), n_files=len(written))
    return written


# --- Separation ---


def separate(
    spec: model.Spectrogram,
    separator: ports.Separator,
    n_sources: int,
    blinky_power: model.FloatArray | None = None,
) -> model.SeparationResult:
    if blinky_power is not None and blinky_power.shape[1] != spec.n_frames:
        raise exceptions.FrameGeometryError(
            f"Blinky data has {blinky_power.shape[1]} frames, microphones have {spec.n_frames}"
        )
    return separator.separate(spec, n_sources, blinky_power)


def reconstruct(
    result: model.SeparationResult, reference_channel: int | None = REFERENCE_MIC
) -> list[model.TimeSignal]:
    """Time-domain target signals, projected back onto `reference_channel` unless it is None."""
    demixed = result.demixed
    if reference_channel is not None:
        demixed = blinkiva.projection_back(demixed, result.demixing, reference_channel)
    output = stft.synthesize(demixed.select(result.channels))
    return [output.channel(m) for m in range(output.n_channels)]


def evaluate(
    references: Sequence[model.TimeSignal],
    estimates: Sequence[model.TimeSignal],
    filter_len: int = metrics.DEFAULT_FILTER_LEN,
) -> model.EvalReport:
    return metrics.bss_eval(references, estimates, filter_len)


def separate_files(
    mic_paths: Sequence[Path],
    blinky_paths: Sequence[Path],
    algorithm: model.Algorithm,
    n_sources: int,
    joint: JointConfig,
    storage: ports.AudioStorage,
    frame_size: int,
    out_dir: Path,
    reference_channel: int | None = REFERENCE_MIC,
) -> reports.RunReport:
    """Separates recorded microphone signals and writes source_<k>.wav plus report.json.

    Args:
        mic_paths: One multichannel WAV or several WAVs whose channels are stacked.
        blinky_paths: One CSV matrix U or a set of blinky WAVs; may be empty for auxiva.
        algorithm: Separation algorithm.
        n_sources: Number of target sources K.
        joint: Iteration counts and seeds.
        storage: Audio storage used for every WAV read and write.
        frame_size: STFT frame size.
        out_dir: Output directory.
        reference_channel: Microphone used for projection back, None to skip it.

    Returns:
        The run report that was written to `out_dir / "report.json"`.

    Raises:
        MissingBlinkyDataError: If blinkiva is requested without blinky data.
        AudioIOError: If an input cannot be read or an output cannot be written.
        NumericalError: If the separation meets a singular or degenerate state.
    """
    run_id = generate_id()
    if algorithm.requires_blinky and not blinky_paths:
        raise exceptions.MissingBlinkyDataError(
            "blinkiva needs blinky power measurements; provide --blinky or use --algo auxiva"
        )
    mics = storage.read_many(list(mic_paths))
    blinky_power = (
        blinky_files.load_blinky_power(list(blinky_paths), storage, frame_size)
        if blinky_paths
        else None
    )
    with structlog.contextvars.bound_contextvars(run_id=run_id, algo=algorithm.value):
        logger.info(
            "Separating files",
            n_mics=mics.n_channels,
            n_sources=n_sources,
            n_samples=mics.n_samples,
        )
        spec = stft.analyze(mics, frame_size)
        result = separate(spec, make_separator(algorithm, joint), n_sources, blinky_power)
        estimates = reconstruct(result, reference_channel)

        outputs = []
        for k, estimate in enumerate(estimates):
            path = out_dir / f"source_{k}.wav"
            storage.write(estimate, path)
            outputs.append(str(path))

        report = reports.RunReport(
            run_id=run_id,
            timestamp=utc_timestamp(),
            config={
                "algorithm": algorithm.value,
                "n_sources": n_sources,
                "frame_size": frame_size,
                "sample_rate": mics.sample_rate,
                "reference_channel": reference_channel,
                "mics": [str(path) for path in mic_paths],
                "blinky": [str(path) for path in blinky_paths],
                "joint": reports.to_builtins(joint),
            },
            separation=reports.separation_record(result),
            outputs=outputs,
        )
        reports.write_json(report, out_dir / "report.json")
        logger.info("Separation written", out_dir=str(out_dir), n_outputs=len(outputs))
    return report


# --- Experiments ---


@dataclass(frozen=True)
class PointResult:
    algorithm: model.Algorithm
    point: GridPoint
    report: model.EvalReport


@dataclass(frozen=True)
class ExperimentOutcome:
    results: pd.DataFrame
    summary: pd.DataFrame
    report: reports.ExperimentReport


def run_point(
    plan: ExperimentPlan,
    point: GridPoint,
    sources: Sequence[model.TimeSignal] | None,
    sample_rate: int,
    frame_size: int,
) -> list[PointResult]:
    """Builds the scene of one grid point and evaluates every algorithm of the plan on it."""
    config = plan.scene.for_grid_point(point.n_sources, point.n_mics, point.seed)
    joint = replace(plan.joint, seed=plan.joint.seed + point.seed)
    scene = simulate(config, sources, sample_rate, frame_size)
    spec = stft.analyze(scene.mic_signals, frame_size)

    outcomes = []
    for algorithm in plan.algorithms:
        with structlog.contextvars.bound_contextvars(
            algo=algorithm.value,
            n_mics=point.n_mics,
            n_sources=point.n_sources,
            seed=point.seed,
        ):
            result = separate(
                spec,
                make_separator(algorithm, joint),
                point.n_sources,
                scene.blinky_power,
            )
            report = evaluate(scene.references, reconstruct(result))
            logger.info("Grid point evaluated", sdr=report.sdr, sir=report.sir)
        outcomes.append(PointResult(algorithm=algorithm, point=point, report=report))
    return outcomes


def _plan_sources(
    plan: ExperimentPlan, storage: ports.AudioStorage | None
) -> list[model.TimeSignal] | None:
    if not plan.source_wavs:
        return None
    if storage is None:
        raise exceptions.ConfigurationError("Source WAVs need an audio storage")
    needed = max(plan.n_sources)
    if len(plan.source_wavs) < needed:
        raise exceptions.ConfigurationError(
            f"Plan needs {needed} source WAVs, got {len(plan.source_wavs)}"
        )
    return load_sources(plan.source_wavs, storage)


def run_experiment(
    plan: ExperimentPlan,
    storage: ports.AudioStorage | None = None,
    sample_rate: int = model.DEFAULT_SAMPLE_RATE,
    frame_size: int = scenes.DEFAULT_FRAME_SIZE,
) -> ExperimentOutcome:
    """Runs every feasible grid point and writes results.csv, results.json and summary.csv.

    Grid points are spread over `plan.threads` worker threads; the result table
    is sorted canonically, so its bytes do not depend on scheduling.

    Raises:
        ConfigurationError: If the plan cannot be run.
        AudioIOError: If a source WAV cannot be read or an output cannot be written.
        NumericalError: If a separation fails.
    """
    run_id = generate_id()
    sources = _plan_sources(plan, storage)
    skipped = plan.skipped_points()
    for point in skipped:
        logger.warning(
            "Skipping infeasible grid point",
            n_sources=point.n_sources,
            n_mics=point.n_mics,
            seed=point.seed,
        )

    points = plan.feasible_points()
    logger.info(
        "Starting experiment",
        run_id=run_id,
        n_points=len(points),
        n_skipped=len(skipped),
        algorithms=[algorithm.value for algorithm in plan.algorithms],
        threads=plan.threads,
    )

    def work(point: GridPoint) -> list[PointResult]:
        with structlog.contextvars.bound_contextvars(run_id=run_id):
            return run_point(plan, point, sources, sample_rate, frame_size)

    with ThreadPoolExecutor(max_workers=plan.threads) as executor:
        outcomes = [item for batch in executor.map(work, points) for item in batch]

    rows = [
        row
        for outcome in outcomes
        for row in reports.result_rows(
            outcome.algorithm.value, outcome.point, outcome.report
        )
    ]
    results = reports.results_frame(rows)
    summary = reports.summary_frame(results)
    per_algorithm = {
        algorithm.value: metrics.summarize(
            [outcome.report for outcome in outcomes if outcome.algorithm is algorithm]
        )
        for algorithm in plan.algorithms
    }
    report = reports.ExperimentReport(
        run_id=run_id,
        timestamp=utc_timestamp(),
        plan=reports.to_builtins(plan),
        n_rows=len(results),
        skipped=[reports.skipped_point(point) for point in skipped],
        summary=per_algorithm,
    )

    reports.write_csv(results, plan.out_dir / "results.csv")
    reports.write_json(report, plan.out_dir / "results.json")
    reports.write_csv(summary, plan.out_dir / "summary.csv")
    for algorithm, stats in per_algorithm.items():
        logger.info(
            "Experiment summary",
            algo=algorithm,
            sdr_median=stats.sdr.median,
            sir_median=stats.sir.median,
        )
    return ExperimentOutcome(results=results, summary=summary, report=report)


def report(results_path: Path, out_dir: Path) -> pd.DataFrame:
    """Plot-ready summary.csv from an existing results.csv."""
    summary = reports.summary_frame(reports.read_results_csv(results_path))
    reports.write_csv(summary, out_dir / "summary.csv")
    logger.info("Summary written", out_dir=str(out_dir), n_groups=len(summary))
    return summary

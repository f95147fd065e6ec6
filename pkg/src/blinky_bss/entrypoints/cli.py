from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import Annotated, Any

import typer
from structlog import get_logger

from blinky_bss.entrypoints import dependencies, exit_codes
from blinky_bss.entrypoints.schemas import (
    ExperimentPlanSchema,
    JointConfigSchema,
    SceneConfigSchema,
)
from blinky_bss.service_layer import parsing, services
from blinky_bss.utils.logger import Logger, setup_logging

logger: Logger = get_logger()

app = typer.Typer(
    name="blinky-bss",
    help="Blind source separation with microphones and blinky sound power sensors.",
    no_args_is_help=True,
    pretty_exceptions_enable=False,
)


@app.callback()
def main() -> None:
    setup_logging()


@contextmanager
def exit_on_error() -> Iterator[None]:
    """Turns handled failures into a one-line message and the mapped exit code."""
    try:
        yield
    except exit_codes.HANDLED_EXCEPTIONS as e:
        code = exit_codes.exit_code_for(e)
        logger.error("Command failed", error=str(e), exit_code=code)
        typer.echo(f"error: {exit_codes.error_message(e)}", err=True)
        raise typer.Exit(code) from e


def _overrides(**values: Any) -> dict[str, Any]:
    return {key: value for key, value in values.items() if value is not None}


def _joint_config(
    config_path: Path | None,
    iters: int | None,
    nmf_sub_iters: int | None,
    seed: int | None,
) -> JointConfigSchema:
    schema = (
        JointConfigSchema.from_file(config_path) if config_path else JointConfigSchema()
    )
    update = _overrides(n_iter=iters, nmf_sub_iter=nmf_sub_iters, seed=seed)
    return JointConfigSchema.model_validate(schema.model_dump() | update)


"""
--- Commands ---
[x] - simulate: synthesize a scene to WAV/CSV
[x] - separate: separate recorded microphone files
[x] - bench: run an experiment grid
[x] - report: summarize an existing results table
"""


@app.command()
def simulate(
    config_path: Annotated[
        Path | None, typer.Option("--config", help="SceneConfig JSON file.")
    ] = None,
    out_dir: Annotated[Path, typer.Option("--out-dir")] = Path("scene"),
    seed: Annotated[int | None, typer.Option("--seed", min=0)] = None,
    sources: Annotated[int | None, typer.Option("--sources", min=1)] = None,
    mics: Annotated[int | None, typer.Option("--mics", min=1)] = None,
    blinkies: Annotated[int | None, typer.Option("--blinkies", min=1)] = None,
    source_wav: Annotated[
        list[Path] | None,
        typer.Option("--source-wav", help="Source recording, repeat once per source."),
    ] = None,
) -> None:
    """Synthesizes a scene: mics.wav, blinky.csv, reference_<k>.wav and scene.json."""
    with exit_on_error():
        schema = (
            SceneConfigSchema.from_file(config_path)
            if config_path
            else SceneConfigSchema()
        )
        update = _overrides(seed=seed, n_sources=sources, n_mics=mics, n_blinkies=blinkies)
        if update.get("n_sources", schema.n_sources) != schema.n_sources:
            update["variances"] = None
        scene_config = SceneConfigSchema.model_validate(
            schema.model_dump() | update
        ).to_domain()

        app_config = dependencies.get_config()
        storage = dependencies.get_audio_storage()
        recordings = services.load_sources(source_wav, storage) if source_wav else None
        scene = services.simulate(
            scene_config, recordings, app_config.sample_rate, app_config.frame_size
        )
        for path in services.write_scene(scene, storage, out_dir):
            typer.echo(str(path))


@app.command()
def separate(
    mics: Annotated[
        list[Path],
        typer.Option("--mics", help="Multichannel WAV, or one WAV per microphone."),
    ],
    sources: Annotated[int, typer.Option("--sources", min=1)],
    blinky: Annotated[
        list[Path] | None,
        typer.Option("--blinky", help="Blinky CSV matrix, or one WAV per blinky."),
    ] = None,
    algo: Annotated[str, typer.Option("--algo")] = "blinkiva",
    config_path: Annotated[
        Path | None, typer.Option("--config", help="JointConfig JSON file.")
    ] = None,
    iters: Annotated[int | None, typer.Option("--iters", min=0)] = None,
    nmf_sub_iters: Annotated[int | None, typer.Option("--nmf-sub-iters", min=1)] = None,
    seed: Annotated[int | None, typer.Option("--seed", min=0)] = None,
    reference_mic: Annotated[int, typer.Option("--reference-mic", min=0)] = 0,
    projection_back: Annotated[
        bool, typer.Option("--projection-back/--no-projection-back")
    ] = True,
    out_dir: Annotated[Path, typer.Option("--out-dir")] = Path("separated"),
) -> None:
    """Separates microphone recordings into source_<k>.wav files and report.json."""
    with exit_on_error():
        algorithm = parsing.parse_algorithm(algo)
        joint = _joint_config(config_path, iters, nmf_sub_iters, seed).to_domain()
        app_config = dependencies.get_config()
        report = services.separate_files(
            mic_paths=mics,
            blinky_paths=blinky or [],
            algorithm=algorithm,
            n_sources=sources,
            joint=joint,
            storage=dependencies.get_audio_storage(),
            frame_size=app_config.frame_size,
            out_dir=out_dir,
            reference_channel=reference_mic if projection_back else None,
        )
        for path in report.outputs:
            typer.echo(path)
        typer.echo(str(out_dir / "report.json"))


@app.command()
def bench(
    config_path: Annotated[
        Path | None, typer.Option("--config", help="ExperimentPlan JSON file.")
    ] = None,
    threads: Annotated[int | None, typer.Option("--threads", min=1)] = None,
    out_dir: Annotated[Path | None, typer.Option("--out-dir")] = None,
    seed: Annotated[
        int | None, typer.Option("--seed", min=0, help="First scene seed.")
    ] = None,
    seeds: Annotated[int | None, typer.Option("--seeds", min=1)] = None,
    iters: Annotated[int | None, typer.Option("--iters", min=0)] = None,
    nmf_sub_iters: Annotated[int | None, typer.Option("--nmf-sub-iters", min=1)] = None,
    algo: Annotated[
        list[str] | None, typer.Option("--algo", help="Algorithm, repeat to compare several.")
    ] = None,
    mics: Annotated[
        list[int] | None,
        typer.Option("--mics", min=1, help="Microphone count, repeat per grid value."),
    ] = None,
    sources: Annotated[
        list[int] | None,
        typer.Option("--sources", min=1, help="Source count, repeat per grid value."),
    ] = None,
    blinkies: Annotated[int | None, typer.Option("--blinkies", min=1)] = None,
) -> None:
    """Runs the benchmark grid: results.csv, results.json and summary.csv."""
    with exit_on_error():
        schema = (
            ExperimentPlanSchema.from_file(config_path)
            if config_path
            else ExperimentPlanSchema()
        )
        document = schema.model_dump()
        algorithms = [parsing.parse_algorithm(name).value for name in algo] if algo else None
        document |= _overrides(
            threads=threads,
            out_dir=out_dir,
            n_seeds=seeds,
            n_mics=mics,
            n_sources=sources,
            algorithms=algorithms,
        )
        document["joint"] |= _overrides(n_iter=iters, nmf_sub_iter=nmf_sub_iters)
        document["scene"] |= _overrides(seed=seed, n_blinkies=blinkies)

        app_config = dependencies.get_config()
        plan = ExperimentPlanSchema.model_validate(document).to_domain(
            default_out_dir=app_config.results_dir,
            default_threads=app_config.threads,
        )
        outcome = services.run_experiment(
            plan,
            dependencies.get_audio_storage(),
            app_config.sample_rate,
            app_config.frame_size,
        )
        typer.echo(outcome.summary.to_string(index=False))
        typer.echo(str(plan.out_dir / "results.csv"))


@app.command()
def report(
    results: Annotated[Path, typer.Option("--results")],
    out_dir: Annotated[Path, typer.Option("--out-dir")] = Path("."),
) -> None:
    """Writes a plot-ready summary.csv from a results.csv."""
    with exit_on_error():
        summary = services.report(results, out_dir)
        typer.echo(summary.to_string(index=False))

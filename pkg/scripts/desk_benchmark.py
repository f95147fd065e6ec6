"""Desk-scale comparison of auxiva and blinkiva on synthetic scenes."""

import sys
from pathlib import Path

from dotenv import load_dotenv
from structlog import get_logger

from blinky_bss.config import get_app_config
from blinky_bss.domain.model import Algorithm
from blinky_bss.domain.structs import ExperimentPlan, JointConfig, SceneConfig
from blinky_bss.service_layer import services
from blinky_bss.utils.logger import Logger, setup_logging

_ = load_dotenv()

setup_logging()

logger: Logger = get_logger()


def desk_plan(out_dir: Path, threads: int) -> ExperimentPlan:
    """K=2 sources, M in {2, 3, 4} microphones, B=6 blinkies, 10 seeds."""
    return ExperimentPlan(
        n_sources=(2,),
        n_mics=(2, 3, 4),
        algorithms=(Algorithm.AUXIVA, Algorithm.BLINKIVA),
        n_seeds=10,
        joint=JointConfig(n_iter=100, nmf_sub_iter=20),
        scene=SceneConfig(n_blinkies=6, rir_length=2048, rir_decay_ms=150.0),
        out_dir=out_dir,
        threads=threads,
    )


def run_desk_benchmark(out_dir: Path | None = None) -> None:
    app_config = get_app_config()
    plan = desk_plan(out_dir or app_config.results_dir / "desk", app_config.threads)
    logger.info(f"Running desk benchmark into {plan.out_dir}")
    outcome = services.run_experiment(
        plan, sample_rate=app_config.sample_rate, frame_size=app_config.frame_size
    )
    print(outcome.summary.to_string(index=False))


if __name__ == "__main__":
    run_desk_benchmark(Path(sys.argv[1]) if len(sys.argv) > 1 else None)

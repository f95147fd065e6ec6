import uuid
from datetime import UTC, datetime

import numpy as np


def generate_id() -> str:
    """Generates a unique identifier as a string.

    Creates a random UUID (version 4) used to tag a separation or benchmark run
    in its JSON report and log lines.

    Returns:
        A unique identifier represented as a string.
    """
    return str(uuid.uuid4())


def utc_timestamp() -> str:
    return datetime.now(UTC).isoformat(timespec="seconds")


def scene_generators(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent (source, mixing) generators derived from one scene seed.

    Bundled sources and the mixing process draw from separate streams, so user
    supplied sources leave the RIRs and noise of a seed unchanged.
    """
    source_seq, mixing_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(source_seq), np.random.default_rng(mixing_seq)

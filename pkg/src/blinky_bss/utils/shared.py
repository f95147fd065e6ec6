from pathlib import Path

REPO_ROOT_MARKERS = ["pyproject.toml", ".git", ".gitignore"]


def _find_by_marker(start: Path, marker: str) -> Path | None:
    """Look upwards from ``start`` for a directory containing ``marker``."""
    for parent in [start, *start.parents]:
        if (parent / marker).exists():
            return parent
    return None


def find_repository_root(start: str | Path | None = None) -> Path:
    """Locate the checkout root, falling back to the working directory.

    An installed wheel has no marker above it, in which case the current
    working directory is where `.env`, `logs/` and `results/` are expected.
    """
    path = Path(start or __file__).resolve()
    for marker in REPO_ROOT_MARKERS:
        if marker_root := _find_by_marker(path, marker):
            return marker_root
    return Path.cwd()


REPO_ROOT: Path = find_repository_root()

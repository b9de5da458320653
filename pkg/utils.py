import os
import tempfile
from pathlib import Path
from typing import Union

import numpy as np
import yaml

from dotenv import load_dotenv

load_dotenv()


def write_atomic(path: Union[str, Path], text: str):
    """
    Write text to path through a temporary file in the same directory, then rename.

    :param path: Destination path.
    :param text: Full file contents.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def max_workers(default: int = 4) -> int:
    """Worker cap from OCULOFILT_THREADS (at least 1)."""
    raw = os.getenv("OCULOFILT_THREADS")
    if not raw:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        return default


def wrap_phase(phase):
    """Wrap angles in radians to (-pi, pi]; -pi maps to pi."""
    return np.pi - np.mod(np.pi - np.asarray(phase, dtype=float), 2.0 * np.pi)


def default_config_path() -> Path:
    """OCULOFILT_CONFIG if set, else config/config.yaml next to this file."""
    override = os.getenv("OCULOFILT_CONFIG")
    if override:
        return Path(override)
    return Path(__file__).resolve().parent / "config" / "config.yaml"


def load_config(path: Union[str, Path, None] = None) -> dict:
    """
    Load the YAML configuration file.

    :param path: Path to the YAML file; defaults to default_config_path().
    :return: Parsed configuration dictionary.
    """
    with open(path or default_config_path(), "r") as file:
        return yaml.safe_load(file) or {}

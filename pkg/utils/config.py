from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import Optional

from dotenv import dotenv_values, load_dotenv
from pydantic import BaseModel, Field

from utils.errors import InvalidArgumentError

VERSION = "0.1.0"


class Settings(BaseModel):
    log_level: str = Field(default="WARNING", description="Root log level for the CLI.")
    n_jobs: int = Field(default=1, description="joblib workers for candidate fits.")


def get_settings() -> Settings:
    load_dotenv()
    try:
        n_jobs = int(os.environ.get("IMPRECISE_N_JOBS", "1"))
    except ValueError as e:
        raise InvalidArgumentError(f"IMPRECISE_N_JOBS must be an integer: {e}")
    return Settings(
        log_level=os.environ.get("IMPRECISE_LOG_LEVEL", "WARNING").upper(),
        n_jobs=n_jobs,
    )


def configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.WARNING),
        force=True,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def read_config_file(path: Optional[Path]) -> dict[str, str]:
    """key=value file mirroring long flag names; keys are normalised to click parameter names."""
    if path is None:
        return {}
    if not path.exists():
        raise InvalidArgumentError(f"Config file not found: {path}")
    values = dotenv_values(path)
    return {
        key.strip().lstrip("-").replace("-", "_"): value
        for key, value in values.items()
        if value is not None
    }

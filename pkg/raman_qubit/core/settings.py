from __future__ import annotations

from functools import lru_cache
from pathlib import Path

from dotenv import load_dotenv
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

# Load environment variables from .env file
load_dotenv()


class Settings(BaseSettings):
    """Centralised process configuration.

    Notes
    -----
    * Only *how* the process runs lives here (parallelism, logging, default
      output location).  *What* is simulated lives in the JSON run spec.
    * Every variable is prefixed with ``RAMAN_`` (``export RAMAN_WORKERS=8``).
    """

    model_config = SettingsConfigDict(
        env_prefix="RAMAN_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",  # Allow unrelated entries in .env
    )

    # === Parallel sweeps ===
    workers: int = Field(1, ge=1, description="Worker processes for grid sweeps")

    # === Logging ===
    log_level: str = Field("INFO")
    log_json: bool = Field(False)

    # === Artifacts ===
    output_dir: Path = Field(Path("results"))


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Singleton loader so every import shares the same validated settings object."""

    return Settings()

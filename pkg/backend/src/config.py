# src/config.py
import os
import sys

from dotenv import load_dotenv
from loguru import logger
from pydantic import BaseModel, Field, ValidationError

from src.errors import ConfigError

DEFAULT_LOG_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} - {name} - {level} - {message}"


class Settings(BaseModel):
    log_level: str = "INFO"
    log_format: str = DEFAULT_LOG_FORMAT
    t_2q: float = Field(1.0, gt=0)
    t_1q: float = Field(0.1, gt=0)
    tele_time_factor: float = Field(3.0, gt=0)
    p_2q: float = Field(0.01, ge=0, lt=1)
    tele_error_factor: float = Field(10.0, ge=0)
    workers: int = Field(1, ge=1)
    out_dir: str = "out"

    def timing_model(self):
        """Build the timing/error model, deriving teleport values from the factors."""
        from src.metrics import TimingErrorModel

        return TimingErrorModel.from_factors(
            t_2q=self.t_2q,
            t_1q=self.t_1q,
            tele_time_factor=self.tele_time_factor,
            p_2q=self.p_2q,
            tele_error_factor=self.tele_error_factor,
        )


_ENV_FIELDS = {
    "RTG_LOG_LEVEL": "log_level",
    "RTG_LOG_FORMAT": "log_format",
    "RTG_T_2Q": "t_2q",
    "RTG_T_1Q": "t_1q",
    "RTG_TELE_TIME_FACTOR": "tele_time_factor",
    "RTG_P_2Q": "p_2q",
    "RTG_TELE_ERROR_FACTOR": "tele_error_factor",
    "RTG_WORKERS": "workers",
    "RTG_OUT_DIR": "out_dir",
}


def load_settings() -> Settings:
    """Load settings from `.env` and the process environment.

    Unset variables keep the model defaults.
    """
    load_dotenv(override=False)
    values = {}
    for env_name, field in _ENV_FIELDS.items():
        raw = os.getenv(env_name, "").strip()
        if raw:
            values[field] = raw
    try:
        return Settings(**values)
    except ValidationError as e:
        raise ConfigError("Invalid environment settings", {"errors": e.errors(include_url=False)}) from e


def configure_logging(level: str = "INFO", fmt: str = DEFAULT_LOG_FORMAT) -> None:
    logger.remove()
    logger.add(sys.stderr, level=level.upper(), format=fmt)

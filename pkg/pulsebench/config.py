import json
import os
import logging
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Any, Mapping, Optional, Type, TypeVar, Union

from dotenv import load_dotenv
from pydantic import BaseModel, ValidationError

from pulsebench.exceptions import ConfigError

# Load environment variables
load_dotenv()

DEFAULT_SEED = 42

ConfigT = TypeVar("ConfigT", bound=BaseModel)


@dataclass(frozen=True)
class Settings:
    threads: int
    log_level: str
    database_url: str
    broker_url: Optional[str]
    result_backend: Optional[str]
    port: int


def _env_threads() -> int:
    raw = os.getenv("PULSEBENCH_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            logging.getLogger(__name__).warning(f"Ignoring non-integer PULSEBENCH_THREADS={raw!r}")
    return max(1, os.cpu_count() or 1)


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Process-wide settings read from the environment"""
    return Settings(
        threads=_env_threads(),
        log_level=os.getenv("PULSEBENCH_LOG_LEVEL", "INFO").upper(),
        database_url=os.getenv("PULSEBENCH_DATABASE_URL", "sqlite:///pulsebench.db"),
        broker_url=os.getenv("PULSEBENCH_BROKER_URL") or None,
        result_backend=os.getenv("PULSEBENCH_RESULT_BACKEND") or None,
        port=int(os.getenv("PORT", 8000)),
    )


def configure_logging(level: Optional[str] = None) -> None:
    """Route log records to stderr; stdout is reserved for JSON output"""
    logging.basicConfig(
        level=level or get_settings().log_level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def load_config(model: Type[ConfigT], raw: Union[str, Path, Mapping[str, Any]], **overrides: Any) -> ConfigT:
    """Validate a JSON file or mapping into ``model``; scalar overrides win over the file.

    Validation problems surface as ConfigError.
    """
    try:
        if isinstance(raw, Mapping):
            data = dict(raw)
        else:
            data = json.loads(Path(raw).read_text(encoding="utf-8"))
        data.update({k: v for k, v in overrides.items() if v is not None})
        return model.model_validate(data)
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {raw}") from e
    except (ValidationError, json.JSONDecodeError) as e:
        raise ConfigError(f"invalid {model.__name__}: {e}") from e

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import jsonschema
import yaml

from .errors import ConfigError
from .schema import load_schema

DEFAULT_MAX_QUBITS = 26

_TRUTHY = {"1", "true", "yes", "on"}
_FALSY = {"", "0", "false", "no", "off"}


@dataclass(frozen=True)
class Settings:
    max_qubits: int = DEFAULT_MAX_QUBITS
    debug: bool = False


def get_settings() -> Settings:
    """Build settings from the environment (QCORR_MAX_QUBITS, QCORR_DEBUG)."""
    raw_cap = os.environ.get("QCORR_MAX_QUBITS")
    max_qubits = DEFAULT_MAX_QUBITS
    if raw_cap is not None and raw_cap.strip():
        try:
            max_qubits = int(raw_cap)
        except ValueError as e:
            raise ConfigError(f"QCORR_MAX_QUBITS must be an integer, got '{raw_cap}'") from e
        if max_qubits < 1:
            raise ConfigError(f"QCORR_MAX_QUBITS must be at least 1, got {max_qubits}")

    raw_debug = os.environ.get("QCORR_DEBUG", "").strip().lower()
    if raw_debug in _TRUTHY:
        debug = True
    elif raw_debug in _FALSY:
        debug = False
    else:
        raise ConfigError(f"QCORR_DEBUG must be a boolean flag, got '{raw_debug}'")

    return Settings(max_qubits=max_qubits, debug=debug)


def load_run_config(path: str | Path) -> dict[str, Any]:
    """Load a YAML run configuration and validate it against the bundled schema.

    The result maps command names to option defaults and is meant to be used as a
    click ``default_map``.
    """
    try:
        with open(path, encoding="utf-8") as f:
            document = yaml.safe_load(f)
    except OSError as e:
        raise ConfigError(f"Could not read config file '{path}': {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"YAML parsing error in '{path}': {e}") from e

    if document is None:
        return {}

    try:
        jsonschema.validate(instance=document, schema=load_schema("run_config"))
    except jsonschema.ValidationError as e:
        where = ".".join(str(p) for p in e.path)
        prefix = f"Config error at '{where}'" if where else "Config error"
        raise ConfigError(f"{prefix} in '{path}': {e.message}") from e

    return document

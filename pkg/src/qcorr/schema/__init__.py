import json
import os
from functools import lru_cache
from typing import Any


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict[str, Any]:
    """Load a bundled JSON schema by name (without the .json suffix)."""
    schema_path = os.path.join(os.path.dirname(__file__), f"{name}.json")
    try:
        with open(schema_path, encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError as e:
        raise RuntimeError(f"Bundled schema not found at {schema_path}") from e

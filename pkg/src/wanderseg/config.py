"""Key-value config files and the global seed override.

Format: one ``key = value`` per line, ``#`` comments, values parsed as
JSON when possible (numbers, booleans, lists, quoted strings) and kept
as plain strings otherwise. Dotted keys group options, e.g.
``oracle.threshold = 0.7``.
"""

import json
import os

SEED_ENV_VAR = "WANDERSEG_SEED"


def parse_value(text: str):
    text = text.strip()
    try:
        return json.loads(text)
    except (json.JSONDecodeError, ValueError):
        return text


def load_config(path) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            out[key.strip()] = parse_value(value)
    return out


def seed_override(default: int) -> int:
    """Global seed, overridable through the environment."""
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}")

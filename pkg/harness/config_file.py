"""Flat ``key=value`` config files and sweep grid files."""

from typing import Dict, List

from models.errors import ConfigurationError


def normalize_key(key: str) -> str:
    """``--num-tasks`` / ``num-tasks`` / ``NUM_TASKS`` → ``num_tasks``."""
    return key.strip().lstrip("-").lower().replace("-", "_")


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, str]:
    """Parse ``key=value`` lines; ``#`` starts a comment, blank lines are skipped."""
    values: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = line.split("=", 1)
        key = normalize_key(key)
        if not key:
            raise ConfigurationError(f"{source}:{lineno}: empty key")
        values[key] = value.strip()
    return values


def load_config_file(path: str) -> Dict[str, str]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigurationError(f"cannot read config file {path}: {e}") from e
    return parse_config_text(text, path)


def load_grid_file(path: str) -> Dict[str, List[str]]:
    """Config-file syntax where every value is a comma-separated list."""
    grid = {}
    for key, value in load_config_file(path).items():
        items = [v.strip() for v in value.split(",") if v.strip()]
        if not items:
            raise ConfigurationError(f"{path}: grid key {key!r} has no values")
        grid[key] = items
    return grid

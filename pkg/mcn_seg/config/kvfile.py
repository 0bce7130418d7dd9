"""Flat ``key=value`` configuration files.

Files are UTF-8, one ``key=value`` pair per line. Blank lines and lines
starting with ``#`` are ignored, as is anything after an unquoted `` #``.
Lists are comma-separated and booleans are written ``true``/``false``.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from pathlib import Path

from mcn_seg.exceptions import ConfigError


def parse_kv(text: str, source: str = "<string>") -> dict[str, str]:
    """Parse ``key=value`` text into an ordered mapping."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split(" #", 1)[0].strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = value
    return values


def read_kv(path: str | Path) -> dict[str, str]:
    """Read a ``key=value`` file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Config file not found: {path}")
    return parse_kv(path.read_text(encoding="utf-8"), source=str(path))


def format_kv(values: Mapping[str, object], header: str | None = None) -> str:
    """Render a mapping as ``key=value`` text (values already formatted)."""
    lines = [f"# {line}" for line in header.splitlines()] if header else []
    lines.extend(f"{key}={format_value(value)}" for key, value in values.items())
    return "\n".join(lines) + "\n"


def write_kv(
    path: str | Path, values: Mapping[str, object], header: str | None = None
) -> Path:
    """Write a mapping as a ``key=value`` file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_kv(values, header), encoding="utf-8")
    return path


def format_value(value: object) -> str:
    """Format one value the way :func:`parse_kv` readers expect it."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, Iterable):
        return ",".join(format_value(item) for item in value)
    return str(value)


def split_list(value: str) -> list[str]:
    """Split a comma-separated value, dropping empty items."""
    return [item.strip() for item in value.split(",") if item.strip()]

"""Flat ``key = value`` text files used for model and experiment configs.

Blank lines and ``#`` comments are ignored. Keys are unique; values stay as
strings and are converted by the caller.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path


def parse(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ValueError(f"line {lineno}: empty key")
        if key in out:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def dump(items: dict) -> str:
    return "".join(f"{k} = {v}\n" for k, v in items.items())


def read(path) -> dict:
    return parse(Path(path).read_text(encoding="utf-8"))


def write_atomic(path, text: str) -> None:
    """Write via a temp file in the same directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write(path, items: dict) -> None:
    write_atomic(path, dump(items))


def float_list(items: dict, prefix: str) -> list:
    """Collect ``prefix.0``, ``prefix.1``, ... into a list of floats."""
    values = []
    while f"{prefix}.{len(values)}" in items:
        values.append(float(items[f"{prefix}.{len(values)}"]))
    return values

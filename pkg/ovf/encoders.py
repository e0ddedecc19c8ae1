"""
Deterministic JSON persistence.

Floats are written with 17 significant digits so that files compare byte-for-byte
across runs; complex numbers are expected as ``[re, im]`` pairs by the time data
reaches this module (serializers take care of that).
"""
import math
import os
import re
import tempfile
from pathlib import Path
from typing import Any

import numpy as np
from rest_framework.parsers import JSONParser
from rest_framework.renderers import JSONRenderer

_FLOAT_MARK = "\u0000f17:"
_FLOAT_PATTERN = re.compile(r'"\\u0000f17:([^"]+)"')


def _tag(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(key): _tag(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_tag(item) for item in value]
    if isinstance(value, np.ndarray):
        return _tag(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        number = float(value)
        if not math.isfinite(number):
            raise ValueError(f"Cannot serialize non-finite number {number!r}.")
        return _FLOAT_MARK + format(number, "#.17g")
    return value


def dumps(payload: Any) -> str:
    """Render ``payload`` as indented JSON with 17-digit floats."""
    rendered = JSONRenderer().render(
        _tag(payload),
        accepted_media_type="application/json; indent=2",
        renderer_context={"indent": 2},
    )
    return _FLOAT_PATTERN.sub(r"\1", rendered.decode("utf-8")) + "\n"


def write_json(path: str | os.PathLike[str], payload: Any) -> Path:
    """Write JSON atomically (temp file in the target directory, then rename)."""
    return write_text(path, dumps(payload))


def write_text(path: str | os.PathLike[str], text: str) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    handle, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        with os.fdopen(handle, "w", encoding="utf-8", newline="\n") as stream:
            stream.write(text)
        os.replace(tmp_name, target)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return target


def read_json(path: str | os.PathLike[str]) -> Any:
    """Parse a JSON file; malformed content raises ``rest_framework.exceptions.ParseError``."""
    with open(path, "rb") as stream:
        return JSONParser().parse(stream)

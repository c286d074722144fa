"""Canonical JSON serialization used for audit hashing and replay comparison.

Canonical form: sorted keys, no insignificant whitespace, ASCII escapes,
floats rendered with 12 significant digits. The encoding is idempotent
under parse/re-encode, which is what makes byte-level replay comparison
and hash chaining stable.
"""

from __future__ import annotations

import hashlib
import json
import math
from typing import Any

GENESIS_HASH = "0" * 64
HASH_ALGORITHM = "sha256"


def format_float(value: float) -> str:
    """Render a float with 12 significant digits, normalizing -0.0 and ints."""
    if math.isnan(value) or math.isinf(value):
        raise ValueError(f"non-finite float not representable in canonical JSON: {value!r}")
    if value == 0.0:
        value = 0.0
    return format(value, ".12g")


def dumps(value: Any) -> str:
    """Serialize a JSON-compatible value to its canonical string form."""
    if value is None:
        return "null"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(dumps(v) for v in value) + "]"
    if isinstance(value, dict):
        parts = []
        for key in sorted(value):
            if not isinstance(key, str):
                raise TypeError(f"canonical JSON object keys must be strings, got {key!r}")
            parts.append(f"{json.dumps(key)}:{dumps(value[key])}")
        return "{" + ",".join(parts) + "}"
    raise TypeError(f"value not representable in canonical JSON: {type(value).__name__}")


def digest(value: Any) -> str:
    """Hex sha256 digest of a value's canonical form."""
    return hashlib.sha256(dumps(value).encode("utf-8")).hexdigest()


def chain_hash(seq: int, prev_hash: str, payload: Any) -> str:
    """Hash of one audit event: digest over (seq || prev_hash || canonical payload)."""
    material = f"{seq}|{prev_hash}|{dumps(payload)}"
    return hashlib.sha256(material.encode("utf-8")).hexdigest()

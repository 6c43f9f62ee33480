from __future__ import annotations

import hashlib
import json
import math
from dataclasses import fields, is_dataclass
from enum import Enum
from typing import Any, Optional, Protocol

import numpy as np
from pydantic import BaseModel


class KeyBuilder(Protocol):
    """
    Interface for result-cache key builders.
    """

    def build(self, namespace: str, payload: Any) -> str:
        """
        Build a cache key for a fully resolved computation.

        :param namespace: Kind of result being cached (e.g. "curve").
        :param payload: Everything the result depends on.
        :return: A string representing the cache key.
        """
        ...


class ParameterKeyBuilder:
    """
    Default KeyBuilder.

    Keys are ``<prefix>:<namespace>:<sha256>`` where the hash covers a
    canonical JSON form of the payload. Floats are written with repr, so
    two payloads share a key only when every parameter is bit-identical.
    """

    def __init__(self, prefix: Optional[str] = None) -> None:
        self.prefix = prefix or "eit-bistability"

    def build(self, namespace: str, payload: Any) -> str:
        hashed = self._hash(self._make_json_safe(payload))
        return f"{self.prefix}:{namespace}:{hashed}"

    def _make_json_safe(self, obj: Any) -> Any:
        """
        Recursively convert an object into a canonical JSON structure.

        :param obj: The object to convert.
        :return: A JSON-serializable representation of the object.
        """
        if isinstance(obj, bool) or obj is None or isinstance(obj, (str, int)):
            return obj

        if isinstance(obj, float):
            # NaN/inf are not valid JSON; keep them distinguishable.
            return obj if math.isfinite(obj) else repr(obj)

        if isinstance(obj, (complex, np.complexfloating)):
            return {"re": self._make_json_safe(float(obj.real)),
                    "im": self._make_json_safe(float(obj.imag))}

        if isinstance(obj, np.integer):
            return int(obj)

        if isinstance(obj, np.floating):
            return self._make_json_safe(float(obj))

        if isinstance(obj, np.ndarray):
            return [self._make_json_safe(item) for item in obj.tolist()]

        if isinstance(obj, Enum):
            return obj.value

        if isinstance(obj, BaseModel):
            return self._make_json_safe(obj.model_dump(mode="python"))

        if is_dataclass(obj) and not isinstance(obj, type):
            return {
                f.name: self._make_json_safe(getattr(obj, f.name)) for f in fields(obj)
            }

        if isinstance(obj, (list, tuple)):
            return [self._make_json_safe(item) for item in obj]

        if isinstance(obj, dict):
            return {str(key): self._make_json_safe(value) for key, value in obj.items()}

        # Fallback to string representation for unsupported types
        return repr(obj)

    def _hash(self, data: Any) -> str:
        """
        Generate a SHA256 hash of the given data.

        :param data: Data to hash
        :return: Hexadecimal hash string
        """
        raw = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(raw.encode("utf-8")).hexdigest()


__all__ = ["KeyBuilder", "ParameterKeyBuilder"]

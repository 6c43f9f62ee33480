"""
Serialization of simulation results: states, curves, sweep records and the
resolved configuration that produced them.

JSON is the default (sidecar files, ``steady`` output, cache payloads);
MessagePack is available when the optional ``msgpack`` extra is installed.
"""

import json
from dataclasses import fields, is_dataclass
from datetime import datetime
from enum import Enum
from typing import Any, Callable, Optional, Union

import numpy as np

try:
    import msgpack
    MSGPACK_AVAILABLE = True
except ImportError:
    MSGPACK_AVAILABLE = False

from pydantic import BaseModel


class SerializationFormat(str, Enum):
    """Supported serialization formats."""
    JSON = "json"
    MSGPACK = "msgpack"


class ResultEncoder(json.JSONEncoder):
    """
    JSON encoder for the numeric types produced by the solvers.

    Supports:
    - complex numbers (tagged, so they decode back to complex)
    - numpy scalars and arrays
    - dataclasses (domain types), encoded as plain field dicts
    - pydantic models (RunConfig)
    - Enums and datetimes
    """

    def default(self, obj: Any) -> Any:
        if isinstance(obj, complex):
            return {"__type__": "complex", "re": obj.real, "im": obj.imag}

        if isinstance(obj, np.complexfloating):
            return {"__type__": "complex", "re": float(obj.real), "im": float(obj.imag)}

        if isinstance(obj, np.integer):
            return int(obj)

        if isinstance(obj, np.floating):
            return float(obj)

        if isinstance(obj, np.bool_):
            return bool(obj)

        if isinstance(obj, np.ndarray):
            return obj.tolist()

        if isinstance(obj, datetime):
            return {"__type__": "datetime", "value": obj.isoformat()}

        if isinstance(obj, Enum):
            return obj.value

        if isinstance(obj, BaseModel):
            return obj.model_dump(mode="python")

        # Shallow on purpose: nested values go back through default().
        if is_dataclass(obj) and not isinstance(obj, type):
            return {f.name: getattr(obj, f.name) for f in fields(obj)}

        if isinstance(obj, (set, frozenset)):
            return sorted(obj)

        return super().default(obj)


def _to_plain(obj: Any) -> Any:
    """Recursively replace complex values by encodable ones (tuples become lists)."""
    if isinstance(obj, (complex, np.complexfloating)):
        return {"__type__": "complex", "re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, dict):
        return {key: _to_plain(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_plain(item) for item in obj]
    return obj


def _json_object_hook(obj: dict[str, Any]) -> Any:
    """
    Decode the tagged types written by ResultEncoder.

    :param obj: Dictionary to decode
    :return: Decoded Python object
    """
    obj_type = obj.get("__type__")
    if obj_type is None:
        return obj

    if obj_type == "complex":
        return complex(obj["re"], obj["im"])

    if obj_type == "datetime":
        return datetime.fromisoformat(obj["value"])

    return obj


def serialize_json(data: Any) -> bytes:
    """
    Serialize data to compact JSON.

    :param data: Data to serialize
    :return: Serialized bytes
    """
    json_str = json.dumps(
        _to_plain(data), cls=ResultEncoder, separators=(",", ":"), ensure_ascii=False
    )
    return json_str.encode("utf-8")


def deserialize_json(data: bytes) -> Any:
    """
    Deserialize JSON written by serialize_json.

    :param data: Serialized bytes
    :return: Deserialized Python object
    """
    return json.loads(data.decode("utf-8"), object_hook=_json_object_hook)


def serialize_msgpack(data: Any) -> bytes:
    """
    Serialize data using MessagePack; falls back to JSON without msgpack.

    The payload goes through the JSON encoder first so both formats share
    one set of type tags.

    :param data: Data to serialize
    :return: Serialized bytes
    """
    if not MSGPACK_AVAILABLE:
        return serialize_json(data)

    json_compatible = json.loads(json.dumps(_to_plain(data), cls=ResultEncoder))
    return msgpack.packb(json_compatible, use_bin_type=True)


def deserialize_msgpack(data: bytes) -> Any:
    """
    Deserialize MessagePack data; falls back to JSON without msgpack.

    :param data: Serialized bytes
    :return: Deserialized Python object
    """
    if not MSGPACK_AVAILABLE:
        return deserialize_json(data)

    unpacked = msgpack.unpackb(data, raw=False)
    return json.loads(json.dumps(unpacked), object_hook=_json_object_hook)


def dumps_pretty(data: Any) -> str:
    """Human-readable JSON for files and stdout (sorted keys, indented)."""
    return json.dumps(_to_plain(data), cls=ResultEncoder, indent=2, sort_keys=True)


_DEFAULT_FORMAT = SerializationFormat.JSON

_SERIALIZERS: dict[SerializationFormat, Callable[[Any], bytes]] = {
    SerializationFormat.JSON: serialize_json,
    SerializationFormat.MSGPACK: serialize_msgpack,
}

_DESERIALIZERS: dict[SerializationFormat, Callable[[bytes], Any]] = {
    SerializationFormat.JSON: deserialize_json,
    SerializationFormat.MSGPACK: deserialize_msgpack,
}


def set_default_format(format: SerializationFormat) -> None:
    """
    Set the default serialization format.

    :param format: Serialization format to use
    """
    global _DEFAULT_FORMAT
    _DEFAULT_FORMAT = format


def get_default_format() -> SerializationFormat:
    """
    Get the current default serialization format.

    :return: Current default format
    """
    return _DEFAULT_FORMAT


def serialize(
    data: Any,
    format: Optional[Union[str, SerializationFormat]] = None
) -> bytes:
    """
    Serialize data to bytes using the specified or default format.

    :param data: Data to serialize
    :param format: Optional serialization format (uses default if not specified)
    :return: Serialized bytes
    :raises ValueError: If the format is not supported or encoding fails
    """
    if format is None:
        format = _DEFAULT_FORMAT
    format = SerializationFormat(format)

    try:
        return _SERIALIZERS[format](data)
    except Exception as e:
        raise ValueError(f"Failed to serialize data with format {format}: {str(e)}") from e


def deserialize(
    data: bytes,
    format: Optional[Union[str, SerializationFormat]] = None
) -> Any:
    """
    Deserialize bytes using the specified or default format.

    :param data: Serialized bytes
    :param format: Optional serialization format (uses default if not specified)
    :return: Deserialized Python object
    :raises ValueError: If the format is not supported or decoding fails
    """
    if format is None:
        format = _DEFAULT_FORMAT
    format = SerializationFormat(format)

    try:
        return _DESERIALIZERS[format](data)
    except Exception as e:
        raise ValueError(f"Failed to deserialize data with format {format}: {str(e)}") from e


__all__ = [
    "serialize",
    "deserialize",
    "dumps_pretty",
    "SerializationFormat",
    "set_default_format",
    "get_default_format",
    "ResultEncoder",
    "serialize_json",
    "deserialize_json",
    "serialize_msgpack",
    "deserialize_msgpack",
]

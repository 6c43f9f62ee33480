from datetime import datetime, timezone

import numpy as np
import pytest

from eit_bistability.bloch import DensityState
from eit_bistability.config import RunConfig
from eit_bistability.serializer import (
    MSGPACK_AVAILABLE,
    SerializationFormat,
    deserialize,
    dumps_pretty,
    get_default_format,
    serialize,
    set_default_format,
)


@pytest.fixture
def restore_default_format():
    previous = get_default_format()
    yield
    set_default_format(previous)


def test_complex_values_survive_nesting():
    payload = {"rho21": 0.1 - 0.2j, "trace": [1 + 1j, {"inner": np.complex128(3j)}]}
    assert deserialize(serialize(payload)) == {
        "rho21": 0.1 - 0.2j,
        "trace": [1 + 1j, {"inner": 3j}],
    }


def test_numpy_and_domain_types_are_encoded():
    state = DensityState(d21=-0.5, d23=0.1, rho21=0.2j)
    decoded = deserialize(
        serialize({"state": state, "x": np.linspace(0, 1, 3), "n": np.int64(4), "ok": np.bool_(True)})
    )
    assert decoded["state"]["rho21"] == 0.2j
    assert decoded["x"] == [0.0, 0.5, 1.0]
    assert decoded["n"] == 4 and decoded["ok"] is True


def test_datetimes_and_models():
    when = datetime(2024, 6, 11, tzinfo=timezone.utc)
    decoded = deserialize(serialize({"when": when, "config": RunConfig()}))
    assert decoded["when"] == when
    assert decoded["config"]["cavity"]["mode"] == "mean-field"


@pytest.mark.skipif(not MSGPACK_AVAILABLE, reason="msgpack not installed")
def test_msgpack_format(restore_default_format):
    set_default_format(SerializationFormat.MSGPACK)
    raw = serialize({"y": 1.5 + 0.5j})
    assert not raw.startswith(b"{")
    assert deserialize(raw) == {"y": 1.5 + 0.5j}


def test_explicit_format_overrides_default():
    raw = serialize([1, 2], format="json")
    assert raw == b"[1,2]"


def test_failures_raise_value_error():
    with pytest.raises(ValueError, match="serialize"):
        serialize({"bad": object()})
    with pytest.raises(ValueError, match="deserialize"):
        deserialize(b"\xff\x00not json", format="json")


def test_pretty_output_is_sorted():
    text = dumps_pretty({"b": 1, "a": 2j})
    assert text.index('"a"') < text.index('"b"')
    assert '"__type__": "complex"' in text

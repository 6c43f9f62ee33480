import math

import numpy as np

from eit_bistability.bloch import AtomParams
from eit_bistability.config import RunConfig
from eit_bistability.key_builder import ParameterKeyBuilder


def test_key_layout():
    key = ParameterKeyBuilder().build("sweep-point", {"C": 150.0})
    prefix, namespace, digest = key.split(":")
    assert (prefix, namespace) == ("eit-bistability", "sweep-point")
    assert len(digest) == 64


def test_custom_prefix():
    assert ParameterKeyBuilder("lab").build("curve", {}).startswith("lab:curve:")


def test_equal_configs_share_a_key():
    builder = ParameterKeyBuilder()
    a = builder.build("curve", {"config": RunConfig(), "values": (1.0, 2.0)})
    b = builder.build("curve", {"values": [1.0, 2.0], "config": RunConfig()})
    assert a == b


def test_any_parameter_change_changes_the_key():
    builder = ParameterKeyBuilder()
    base = RunConfig()
    keys = {
        builder.build("curve", cfg)
        for cfg in (
            base,
            base.with_parameter("omega_c", 1.0),
            base.with_parameter("omega_c", math.nextafter(1.0, 2.0)),
            base.with_parameter("eps", 0.1),
        )
    }
    assert len(keys) == 4


def test_numeric_types_are_canonical():
    builder = ParameterKeyBuilder()
    assert builder.build("n", np.float64(0.5)) == builder.build("n", 0.5)
    assert builder.build("n", np.array([1, 2])) == builder.build("n", [1, 2])
    assert builder.build("n", 1 + 2j) != builder.build("n", 1 - 2j)
    assert builder.build("n", math.inf) != builder.build("n", -math.inf)


def test_dataclasses_are_hashed_by_fields():
    builder = ParameterKeyBuilder()
    assert builder.build("atom", AtomParams(eps_p=1.0)) == builder.build("atom", AtomParams(eps_p=1.0))
    assert builder.build("atom", AtomParams(eps_p=1.0)) != builder.build("atom", AtomParams(eps_c=1.0))

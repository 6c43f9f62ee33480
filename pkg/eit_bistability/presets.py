"""
Figure-family presets.

Every preset uses C = 150, gamma21 = gamma23 = 1, a resonant cavity
(theta = 0), resonant probe, mean-field cavity and the x grid [0, 60] with
600 points. Presets record gamma31 = 0.1 explicitly: with gamma31 = 0 and
delta_p = delta_c the Lambda system sits in an exact dark state, rho21
vanishes for every probe strength and no curve shows hysteresis.

fig5a/fig5b use eps = 1.0 so they sit below the fig6 pair.
Override with the ``eps`` axis or ``--set atom.eps_p=...`` and ``--set atom.eps_c=...``.
"""

from __future__ import annotations

from typing import Any

from eit_bistability.config import RunConfig
from eit_bistability.exceptions import SweepSpecError
from eit_bistability.sweep import SweepSpec

OMEGA_C_WEAK = (0.05, 0.1, 0.2, 0.5, 1.0)
OMEGA_C_STRONG = (1.0, 3.0, 5.0, 7.0, 10.0)
EPS_VALUES = (0.1, 0.5, 1.0, 1.5, 2.0)

_BASE: dict[str, dict[str, Any]] = {
    "atom": {
        "gamma21": 1.0,
        "gamma23": 1.0,
        "gamma31": 0.1,
        "gammaD21": 0.0,
        "gammaD23": 0.0,
        "eps_p": 0.0,
        "eps_c": 0.0,
        "delta_p": 0.0,
        "delta_c": 0.0,
    },
    "cavity": {"C": 150.0, "theta": 0.0, "mode": "mean-field"},
    "grid": {"x_min": 0.0, "x_max": 60.0, "x_count": 600},
}


def _ndd(eps: float, gamma_d: float) -> dict[str, float]:
    return {"eps_p": eps, "eps_c": eps, "gammaD21": gamma_d, "gammaD23": gamma_d}


# name -> (description, atom overrides, drive overrides, axes)
_PRESETS: dict[str, tuple[str, dict[str, float], dict[str, float], dict[str, tuple[float, ...]]]] = {
    "fig3a": ("no NDD, resonant coupling; omega_c varied", {}, {}, {"omega_c": OMEGA_C_WEAK}),
    "fig3b": (
        "no NDD, coupling detuned delta_c = 1; omega_c varied",
        {"delta_c": 1.0},
        {},
        {"omega_c": OMEGA_C_STRONG},
    ),
    "fig4a": ("omega_c = 2, gamma_d = 0; eps varied", {}, {"omega_c": 2.0}, {"eps": EPS_VALUES}),
    "fig4b": ("omega_c = 3, gamma_d = 0; eps varied", {}, {"omega_c": 3.0}, {"eps": EPS_VALUES}),
    "fig5a": ("eps = 1, gamma_d = 0; omega_c varied", _ndd(1.0, 0.0), {}, {"omega_c": OMEGA_C_STRONG}),
    "fig5b": ("eps = 1, gamma_d = 1.5; omega_c varied", _ndd(1.0, 1.5), {}, {"omega_c": OMEGA_C_STRONG}),
    "fig6a": ("eps = 2, gamma_d = 0; omega_c varied", _ndd(2.0, 0.0), {}, {"omega_c": OMEGA_C_STRONG}),
    "fig6b": ("eps = 2, gamma_d = 3; omega_c varied", _ndd(2.0, 3.0), {}, {"omega_c": OMEGA_C_STRONG}),
}

PRESET_NAMES = tuple(_PRESETS)


def describe_presets() -> dict[str, str]:
    return {name: entry[0] for name, entry in _PRESETS.items()}


def preset_config(name: str) -> RunConfig:
    """
    RunConfig of a preset with its axes and every default written out.

    Raises:
        SweepSpecError: for an unknown name; the message lists valid names
    """
    try:
        _, atom, drive, axes = _PRESETS[name]
    except KeyError:
        raise SweepSpecError(
            f"unknown preset {name!r}; valid presets: {', '.join(PRESET_NAMES)}"
        ) from None
    return RunConfig.model_validate(
        {
            "atom": {**_BASE["atom"], **atom},
            "drive": {"omega_c": 0.0, "omega_c_phase": 0.0, "omega_p": 0.0, **drive},
            "cavity": dict(_BASE["cavity"]),
            "grid": dict(_BASE["grid"]),
            "sweep": {"preset": name},
            "axes": dict(axes),
        }
    )


def figure_preset(name: str) -> SweepSpec:
    """Resolved SweepSpec of a figure family."""
    return SweepSpec.from_config(preset_config(name), name=name)


__all__ = ["PRESET_NAMES", "describe_presets", "preset_config", "figure_preset"]

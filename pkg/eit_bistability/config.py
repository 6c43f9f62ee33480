# eit_bistability/config.py

"""
Run configuration.

A ``RunConfig`` is read from an INI-style file with one section per concern::

    [atom]        rates, NDD parameters, detunings
    [drive]       omega_c, omega_c_phase, omega_p
    [cavity]      C, T, theta, mode, alphaL, n_steps
    [grid]        x_min, x_max, x_count
    [spectrum]    delta_min, delta_max, delta_count
    [hysteresis]  y_max, y_step, damping, tol, max_iter
    [solver]      tol, max_iter, max_stages, physical_tol
    [sweep]       preset, outputs, parallelism, cap
    [axes]        <parameter path> = v1, v2, ...
    [output]      directory

Keys are case sensitive. Unknown sections or keys are errors.
"""

from __future__ import annotations

import configparser
import math
import os
from enum import Enum
from pathlib import Path
from typing import Any, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from eit_bistability.backend.base import BaseCacheBackend
from eit_bistability.bloch import AtomParams, Drive, SolverOptions
from eit_bistability.cavity import CavityMode, CavityParams
from eit_bistability.exceptions import CacheNotInitializedError
from eit_bistability.serializer import SerializationFormat, set_default_format

WORKERS_ENV = "EIT_BISTABILITY_WORKERS"

SWEEP_OUTPUTS = frozenset({"curve", "thresholds", "multiplicity"})


class ConfigError(RuntimeError):
    """
    Raised for invalid configuration files, values or overrides.
    """


def _default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None or raw.strip() == "":
        return 1
    try:
        workers = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    if workers < 1:
        raise ConfigError(f"{WORKERS_ENV} must be >= 1, got {workers}")
    return workers


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, allow_inf_nan=False)


class AtomConfig(_Section):
    gamma21: float = Field(1.0, ge=0)
    gamma23: float = Field(1.0, ge=0)
    # Matches the presets; AtomParams keeps gamma31 = 0.
    gamma31: float = Field(0.1, ge=0)
    gammaD21: float = Field(0.0, ge=0)
    gammaD23: float = Field(0.0, ge=0)
    eps_p: float = 0.0
    eps_c: float = 0.0
    delta_p: float = 0.0
    delta_c: float = 0.0


class DriveConfig(_Section):
    omega_c: float = 0.0
    omega_c_phase: float = 0.0
    omega_p: float = 0.0


class CavityConfig(_Section):
    C: float = Field(150.0, ge=0)
    T: float = Field(0.1, gt=0, le=1)
    theta: float = 0.0
    mode: CavityMode = CavityMode.MEAN_FIELD
    alphaL: float = Field(0.0, ge=0)
    n_steps: int = Field(64, ge=16)


class GridConfig(_Section):
    x_min: float = Field(0.0, ge=0)
    x_max: float = Field(60.0, gt=0)
    x_count: int = Field(600, ge=64)

    @model_validator(mode="after")
    def _ordered(self) -> GridConfig:
        if self.x_max <= self.x_min:
            raise ValueError("x_max must exceed x_min")
        return self


class SpectrumConfig(_Section):
    delta_min: float = -10.0
    delta_max: float = 10.0
    delta_count: int = Field(2001, ge=2)

    @model_validator(mode="after")
    def _ordered(self) -> SpectrumConfig:
        if self.delta_max <= self.delta_min:
            raise ValueError("delta_max must exceed delta_min")
        return self


class HysteresisConfig(_Section):
    y_max: float = Field(40.0, gt=0)
    y_step: float = Field(0.05, gt=0)
    damping: float = Field(0.5, gt=0, le=1)
    tol: float = Field(1e-9, gt=0)
    max_iter: int = Field(2000, ge=1)


class SolverConfig(_Section):
    tol: float = Field(1e-10, gt=0)
    max_iter: int = Field(60, ge=1)
    max_stages: int = Field(8, ge=1)
    physical_tol: float = Field(1e-8, gt=0)


class SweepConfig(_Section):
    preset: str = ""
    outputs: tuple[str, ...] = ("thresholds", "multiplicity")
    parallelism: int = Field(default_factory=_default_workers, ge=1)
    cap: int = Field(100_000, ge=1)

    @field_validator("outputs", mode="before")
    @classmethod
    def _split_outputs(cls, value: Any) -> Any:
        if isinstance(value, str):
            return tuple(item.strip() for item in value.split(",") if item.strip())
        return value

    @field_validator("outputs")
    @classmethod
    def _known_outputs(cls, value: tuple[str, ...]) -> tuple[str, ...]:
        unknown = set(value) - SWEEP_OUTPUTS
        if unknown:
            raise ValueError(
                f"unknown sweep outputs {sorted(unknown)}; valid: {sorted(SWEEP_OUTPUTS)}"
            )
        return value


class OutputConfig(_Section):
    directory: str = "."


# Sweepable parameter names and the fields each one sets.
PARAMETER_PATHS: dict[str, tuple[tuple[str, str], ...]] = {
    **{name: (("atom", name),) for name in AtomConfig.model_fields},
    **{name: (("drive", name),) for name in DriveConfig.model_fields},
    **{name: (("cavity", name),) for name in ("C", "T", "theta", "alphaL")},
    "eps": (("atom", "eps_p"), ("atom", "eps_c")),
    "gamma_d": (("atom", "gammaD21"), ("atom", "gammaD23")),
}


def resolve_parameter_path(path: str) -> tuple[tuple[str, str], ...]:
    """
    Map a sweep parameter path to the (section, field) pairs it sets.

    Accepts bare names (``omega_c``), the aliases ``eps`` and ``gamma_d``,
    and dotted ``section.field`` forms for the same fields.
    """
    if path in PARAMETER_PATHS:
        return PARAMETER_PATHS[path]
    section, _, name = path.partition(".")
    if name and PARAMETER_PATHS.get(name) == ((section, name),):
        return ((section, name),)
    raise ConfigError(
        f"unknown parameter path {path!r}; valid: {', '.join(sorted(PARAMETER_PATHS))}"
    )


class RunConfig(BaseModel):
    """Fully resolved parameters of one run."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    atom: AtomConfig = Field(default_factory=AtomConfig)
    drive: DriveConfig = Field(default_factory=DriveConfig)
    cavity: CavityConfig = Field(default_factory=CavityConfig)
    grid: GridConfig = Field(default_factory=GridConfig)
    spectrum: SpectrumConfig = Field(default_factory=SpectrumConfig)
    hysteresis: HysteresisConfig = Field(default_factory=HysteresisConfig)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    axes: dict[str, tuple[float, ...]] = Field(default_factory=dict)
    output: OutputConfig = Field(default_factory=OutputConfig)

    @field_validator("axes", mode="before")
    @classmethod
    def _split_axes(cls, value: Any) -> Any:
        if isinstance(value, dict):
            return {
                key: (
                    tuple(item.strip() for item in raw.split(",") if item.strip())
                    if isinstance(raw, str)
                    else raw
                )
                for key, raw in value.items()
            }
        return value

    @field_validator("axes")
    @classmethod
    def _known_axes(cls, value: dict[str, tuple[float, ...]]) -> dict[str, tuple[float, ...]]:
        for path, values in value.items():
            try:
                resolve_parameter_path(path)
            except ConfigError as exc:
                raise ValueError(str(exc)) from None
            if not values:
                raise ValueError(f"axis {path!r} has no values")
            if not all(math.isfinite(v) for v in values):
                raise ValueError(f"axis {path!r} has non-finite values")
        return value

    @property
    def omega_c(self) -> complex:
        return complex(self.drive.omega_c * np.exp(1j * self.drive.omega_c_phase))

    def atom_params(self) -> AtomParams:
        return AtomParams(**self.atom.model_dump())

    def drive_params(self, omega_p: Optional[complex] = None) -> Drive:
        return Drive(
            omega_p=self.drive.omega_p if omega_p is None else omega_p,
            omega_c=self.omega_c,
        )

    def cavity_params(self) -> CavityParams:
        return CavityParams(**self.cavity.model_dump())

    def solver_options(self) -> SolverOptions:
        return SolverOptions(**self.solver.model_dump())

    def x_grid(self) -> np.ndarray:
        return np.linspace(self.grid.x_min, self.grid.x_max, self.grid.x_count)

    def delta_grid(self) -> np.ndarray:
        s = self.spectrum
        return np.linspace(s.delta_min, s.delta_max, s.delta_count)

    def y_ramp(self) -> np.ndarray:
        h = self.hysteresis
        n = int(math.floor(h.y_max / h.y_step + 1e-9))
        return h.y_step * np.arange(n + 1)

    def with_parameter(self, path: str, value: float) -> RunConfig:
        """Copy with one sweep parameter (or alias) set to ``value``."""
        data = self.model_dump()
        for section, name in resolve_parameter_path(path):
            data[section][name] = value
        return _validate(data)

    def without_axes(self) -> RunConfig:
        data = self.model_dump()
        data["axes"] = {}
        return _validate(data)


def _validate(data: dict[str, Any]) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


_SECTIONS = tuple(RunConfig.model_fields)


def _new_parser() -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # type: ignore[assignment,method-assign]
    return parser


def parse_config(text: str) -> RunConfig:
    """
    Parse INI text into a RunConfig.

    Raises:
        ConfigError: on syntax errors, unknown sections/keys or invalid values
    """
    parser = _new_parser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    if parser.defaults():
        raise ConfigError("[DEFAULT] section is not supported")
    unknown = [name for name in parser.sections() if name not in _SECTIONS]
    if unknown:
        raise ConfigError(
            f"unknown config section(s) {unknown}; valid: {', '.join(_SECTIONS)}"
        )
    return _validate({name: dict(parser[name]) for name in parser.sections()})


def load_config(path: Union[str, Path]) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def _format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, (tuple, list)):
        return ", ".join(_format_value(item) for item in value)
    return str(value)


def dump_config(cfg: RunConfig) -> str:
    """INI text with every field written out; parse_config inverts it exactly."""
    parser = _new_parser()
    for section in _SECTIONS:
        parser.add_section(section)
        if section == "axes":
            for path, values in cfg.axes.items():
                parser.set(section, path, _format_value(tuple(float(v) for v in values)))
            continue
        model = getattr(cfg, section)
        for name in type(model).model_fields:
            parser.set(section, name, _format_value(getattr(model, name)))

    lines: list[str] = []
    for section in parser.sections():
        lines.append(f"[{section}]")
        lines.extend(f"{key} = {value}" for key, value in parser[section].items())
        lines.append("")
    return "\n".join(lines)


def apply_overrides(cfg: RunConfig, overrides: Sequence[str]) -> RunConfig:
    """
    Apply ``section.key=value`` overrides (CLI ``--set``) on top of ``cfg``.

    Raises:
        ConfigError: on malformed overrides or invalid resulting values
    """
    if not overrides:
        return cfg
    data = cfg.model_dump()
    for item in overrides:
        target, sep, value = item.partition("=")
        section, dot, key = target.strip().partition(".")
        if not sep or not dot or not key:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section {section!r} in override {item!r}")
        data[section][key] = value.strip()
    return _validate(data)


class ResultCacheConfig:
    """
    Global result-cache holder.

    Sweeps consult the configured backend when no backend is passed to
    them explicitly.
    """

    _backend: Optional[BaseCacheBackend] = None
    _initialized: bool = False

    @classmethod
    def init(
        cls,
        backend: BaseCacheBackend,
        *,
        default_serialization_format: Optional[SerializationFormat] = None,
    ) -> None:
        """
        Initialize the cache configuration; call once at startup.

        Raises:
            ConfigError: If backend is invalid or config already initialized
        """
        if cls._initialized:
            raise ConfigError("ResultCacheConfig is already initialized.")

        if not isinstance(backend, BaseCacheBackend):
            raise ConfigError("Provided backend does not implement BaseCacheBackend.")

        cls._backend = backend
        if default_serialization_format is not None:
            set_default_format(default_serialization_format)
        cls._initialized = True

    @classmethod
    def is_initialized(cls) -> bool:
        return cls._initialized

    @classmethod
    def get_backend(cls) -> BaseCacheBackend:
        """
        Raises:
            CacheNotInitializedError: If config is not initialized
        """
        if not cls._initialized or cls._backend is None:
            raise CacheNotInitializedError(
                "ResultCacheConfig is not initialized. Call ResultCacheConfig.init() first."
            )
        return cls._backend

    @classmethod
    def reset(cls) -> None:
        """
        Reset cache configuration.

        Intended for testing ONLY.
        """
        cls._backend = None
        cls._initialized = False


__all__ = [
    "ConfigError",
    "RunConfig",
    "AtomConfig",
    "DriveConfig",
    "CavityConfig",
    "GridConfig",
    "SpectrumConfig",
    "HysteresisConfig",
    "SolverConfig",
    "SweepConfig",
    "OutputConfig",
    "PARAMETER_PATHS",
    "WORKERS_ENV",
    "resolve_parameter_path",
    "parse_config",
    "load_config",
    "dump_config",
    "apply_overrides",
    "ResultCacheConfig",
]

"""
Parameter sweeps over the curve tracer.

One work unit is one grid point (one full curve trace). Points run in a
process pool; records are placed by their precomputed row-major index, so
the result does not depend on the degree of parallelism. A per-point
solver failure is recorded, not raised.
"""

from __future__ import annotations

import asyncio
import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import metadata
from typing import Any, Iterator, Optional

from eit_bistability.backend.base import BaseCacheBackend
from eit_bistability.config import (
    SWEEP_OUTPUTS,
    ConfigError,
    ResultCacheConfig,
    RunConfig,
    resolve_parameter_path,
)
from eit_bistability.curves import OBCurve, trace_ob_curve
from eit_bistability.exceptions import SimulationError, SweepSpecError
from eit_bistability.key_builder import KeyBuilder, ParameterKeyBuilder

logger = logging.getLogger(__name__)

CACHE_NAMESPACE = "sweep-point"


def _package_version() -> str:
    try:
        return metadata.version("eit-bistability")
    except metadata.PackageNotFoundError:
        return "unknown"


@dataclass(frozen=True)
class SweepSpec:
    """
    Base configuration plus a Cartesian product of parameter axes.

    Axis order defines the row-major record order.
    """

    base: RunConfig
    axes: tuple[tuple[str, tuple[float, ...]], ...] = ()
    outputs: frozenset[str] = frozenset({"thresholds", "multiplicity"})
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "axes", tuple((path, tuple(float(v) for v in values)) for path, values in self.axes)
        )
        object.__setattr__(self, "outputs", frozenset(self.outputs))
        unknown = self.outputs - SWEEP_OUTPUTS
        if unknown:
            raise SweepSpecError(f"unknown sweep outputs: {sorted(unknown)}")
        seen: set[str] = set()
        for path, values in self.axes:
            try:
                targets = resolve_parameter_path(path)
            except ConfigError as exc:
                raise SweepSpecError(str(exc)) from None
            overlap = seen & {f"{s}.{f}" for s, f in targets}
            if overlap:
                raise SweepSpecError(f"axis {path!r} sets {sorted(overlap)} twice")
            seen |= {f"{s}.{f}" for s, f in targets}
            if not values:
                raise SweepSpecError(f"axis {path!r} has no values")
        if self.size > self.base.sweep.cap:
            raise SweepSpecError(
                f"sweep has {self.size} points, above the cap of {self.base.sweep.cap}"
            )

    @classmethod
    def from_config(cls, cfg: RunConfig, name: str = "") -> SweepSpec:
        return cls(
            base=cfg.without_axes(),
            axes=tuple(cfg.axes.items()),
            outputs=frozenset(cfg.sweep.outputs),
            name=name or cfg.sweep.preset,
        )

    def to_config(self) -> RunConfig:
        """Single RunConfig carrying the axes (inverse of from_config)."""
        data = self.base.model_dump()
        data["axes"] = {path: values for path, values in self.axes}
        data["sweep"]["outputs"] = tuple(sorted(self.outputs))
        data["sweep"]["preset"] = self.name
        return RunConfig.model_validate(data)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(values) for _, values in self.axes)

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    def points(self) -> Iterator[tuple[tuple[int, ...], tuple[float, ...], RunConfig]]:
        """Yield (axis indices, values, config) in row-major order."""
        for indices in itertools.product(*(range(n) for n in self.shape)):
            values = tuple(self.axes[a][1][i] for a, i in enumerate(indices))
            cfg = self.base
            for (path, _), value in zip(self.axes, values):
                try:
                    cfg = cfg.with_parameter(path, value)
                except ConfigError as exc:
                    raise SweepSpecError(f"{path}={value!r}: {exc}") from exc
            yield indices, values, cfg


@dataclass(frozen=True, eq=False)
class SweepRecord:
    index: int
    axis_indices: tuple[int, ...]
    values: tuple[float, ...]
    n_turning_points: Optional[int] = None
    thresholds: tuple[tuple[float, float], ...] = ()
    max_multiplicity: Optional[int] = None
    curve: Optional[OBCurve] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_dict(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "axis_indices": list(self.axis_indices),
            "values": list(self.values),
            "n_turning_points": self.n_turning_points,
            "thresholds": [list(t) for t in self.thresholds],
            "max_multiplicity": self.max_multiplicity,
            "curve": self.curve.to_dict() if self.curve is not None else None,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> SweepRecord:
        curve = data.get("curve")
        return cls(
            index=int(data["index"]),
            axis_indices=tuple(int(i) for i in data["axis_indices"]),
            values=tuple(float(v) for v in data["values"]),
            n_turning_points=data.get("n_turning_points"),
            thresholds=tuple((float(a), float(b)) for a, b in data.get("thresholds", ())),
            max_multiplicity=data.get("max_multiplicity"),
            curve=OBCurve.from_dict(curve) if curve is not None else None,
            error=data.get("error"),
        )


@dataclass(frozen=True, eq=False)
class SweepResult:
    spec: SweepSpec
    records: tuple[SweepRecord, ...]
    provenance: dict[str, Any] = field(default_factory=dict)

    @property
    def failures(self) -> list[SweepRecord]:
        return [r for r in self.records if not r.ok]


def evaluate_point(
    index: int,
    axis_indices: tuple[int, ...],
    values: tuple[float, ...],
    cfg: RunConfig,
    outputs: frozenset[str],
) -> SweepRecord:
    """Trace one curve and summarize it; failures become the record's error."""
    try:
        curve = trace_ob_curve(
            cfg.atom_params(),
            cfg.omega_c,
            cfg.cavity_params(),
            cfg.x_grid(),
            options=cfg.solver_options(),
        )
    except (SimulationError, ValueError) as exc:
        return SweepRecord(
            index, axis_indices, values, error=f"{type(exc).__name__}: {exc}"
        )

    return SweepRecord(
        index,
        axis_indices,
        values,
        n_turning_points=curve.n_turning_points,
        thresholds=tuple((t.y_up, t.y_down) for t in curve.thresholds),
        max_multiplicity=curve.max_multiplicity if "multiplicity" in outputs else None,
        curve=curve if "curve" in outputs else None,
    )


async def _cache_lookup(
    cache: BaseCacheBackend, keys: list[str]
) -> list[Optional[SweepRecord]]:
    try:
        cached = await cache.get_many(keys)
    except Exception:
        logger.exception("sweep: cache lookup failed; evaluating every point")
        return [None] * len(keys)
    records: list[Optional[SweepRecord]] = []
    for key, value in zip(keys, cached):
        if value is None:
            records.append(None)
            continue
        try:
            records.append(SweepRecord.from_dict(value))
        except (KeyError, TypeError, ValueError):
            logger.warning("sweep: ignoring malformed cache entry %s", key)
            records.append(None)
    return records


async def _cache_set(
    cache: BaseCacheBackend, key: str, record: SweepRecord, ttl: Optional[int]
) -> None:
    try:
        await cache.set(key, record.to_dict(), ttl=ttl)
    except Exception:
        logger.exception("sweep: cache set failed for %s", key)


async def arun_sweep(
    spec: SweepSpec,
    parallelism: int = 1,
    *,
    cache: Optional[BaseCacheBackend] = None,
    key_builder: Optional[KeyBuilder] = None,
    ttl: Optional[int] = None,
) -> SweepResult:
    """
    Evaluate every grid point of ``spec`` exactly once.

    ``parallelism`` bounds the worker-process pool (1 runs in-process).
    When a cache is given, or ResultCacheConfig is initialized, points are
    looked up by parameter hash first and stored after evaluation.

    Raises:
        ValueError: if parallelism < 1
        SweepSpecError: if a point configuration is invalid
    """
    if parallelism < 1:
        raise ValueError(f"parallelism must be >= 1, got {parallelism}")
    if cache is None and ResultCacheConfig.is_initialized():
        cache = ResultCacheConfig.get_backend()
    builder = key_builder or ParameterKeyBuilder()

    points = list(spec.points())
    records: list[Optional[SweepRecord]] = [None] * len(points)
    keys = [
        builder.build(CACHE_NAMESPACE, {"config": cfg, "outputs": sorted(spec.outputs),
                                        "axis_indices": indices, "values": values})
        for indices, values, cfg in points
    ]

    if cache is not None:
        records = await _cache_lookup(cache, keys)
        hits = sum(r is not None for r in records)
        logger.debug("sweep: %d/%d cache hit(s)", hits, len(points))

    pending = [k for k, record in enumerate(records) if record is None]
    logger.info(
        "sweep %s: %d point(s), %d to evaluate, parallelism %d",
        spec.name or "<ad hoc>", len(points), len(pending), parallelism,
    )

    if parallelism == 1 or len(pending) <= 1:
        for k in pending:
            indices, values, cfg = points[k]
            records[k] = evaluate_point(k, indices, values, cfg, spec.outputs)
    else:
        loop = asyncio.get_running_loop()
        with ProcessPoolExecutor(max_workers=min(parallelism, len(pending))) as pool:
            futures = [
                loop.run_in_executor(
                    pool, evaluate_point, k, points[k][0], points[k][1], points[k][2],
                    spec.outputs,
                )
                for k in pending
            ]
            for k, record in zip(pending, await asyncio.gather(*futures)):
                records[k] = record

    for k in pending:
        record = records[k]
        assert record is not None
        if not record.ok:
            logger.warning("sweep point %d %s failed: %s", k, record.values, record.error)
        if cache is not None:
            await _cache_set(cache, keys[k], record, ttl)

    provenance = {
        "config": spec.to_config().model_dump(mode="json"),
        "name": spec.name,
        "version": _package_version(),
        "created_at": datetime.now(timezone.utc).isoformat(),
    }
    return SweepResult(
        spec=spec,
        records=tuple(r for r in records if r is not None),
        provenance=provenance,
    )


def run_sweep(
    spec: SweepSpec,
    parallelism: int = 1,
    *,
    cache: Optional[BaseCacheBackend] = None,
    key_builder: Optional[KeyBuilder] = None,
    ttl: Optional[int] = None,
) -> SweepResult:
    """Synchronous wrapper around arun_sweep."""
    return asyncio.run(
        arun_sweep(spec, parallelism, cache=cache, key_builder=key_builder, ttl=ttl)
    )


__all__ = [
    "SweepSpec",
    "SweepRecord",
    "SweepResult",
    "evaluate_point",
    "arun_sweep",
    "run_sweep",
]

"""
Input-output curves of the cavity: tracing, turning points and the
hysteresis structure derived from them.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Callable, Optional, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import minimize_scalar

from eit_bistability.bloch import AtomParams, SolverOptions
from eit_bistability.cavity import CavityParams, PointSeed, evaluate_curve_point
from eit_bistability.exceptions import CurveRangeError, SimulationError, TracingError

logger = logging.getLogger(__name__)

MIN_GRID_POINTS = 64

# Candidate tangencies: discrete slope minima below this are refined.
_TANGENCY_CANDIDATE = 0.05


@dataclass(frozen=True)
class TurningPoint:
    x: float
    y_mag: float
    kind: str  # "max" or "min" of |y|
    index: int  # grid point nearest the extremum


@dataclass(frozen=True)
class MergedPoint:
    """Tangential zero of d|y|/dx: two turning points that have merged."""

    x: float
    y_mag: float
    slope: float


@dataclass(frozen=True)
class Branch:
    start: int
    stop: int
    x_start: float
    x_stop: float
    stable: bool


@dataclass(frozen=True)
class Threshold:
    y_up: float
    y_down: float
    x_up: float
    x_down: float


@dataclass(frozen=True, eq=False)
class OBCurve:
    """
    Traced input-output curve, ordered by intracavity field x.

    Branch stability uses the mean-field slope criterion (|y| increasing
    with x) and is advisory.
    """

    x: NDArray[np.float64]
    y: NDArray[np.complex128]
    turning_points: tuple[TurningPoint, ...] = ()
    merged_points: tuple[MergedPoint, ...] = ()
    branches: tuple[Branch, ...] = ()
    thresholds: tuple[Threshold, ...] = ()

    @property
    def y_mag(self) -> NDArray[np.float64]:
        return np.abs(self.y)

    @property
    def points(self) -> list[tuple[float, complex, float]]:
        return [(float(x), complex(y), float(abs(y))) for x, y in zip(self.x, self.y)]

    @property
    def n_turning_points(self) -> int:
        return len(self.turning_points)

    @property
    def is_bistable(self) -> bool:
        return self.n_turning_points == 2

    @property
    def is_multistable(self) -> bool:
        return self.n_turning_points >= 4

    @property
    def switch_up(self) -> Optional[float]:
        """Lowest-x switch-up threshold, or None for a curve without hysteresis."""
        return self.thresholds[0].y_up if self.thresholds else None

    @property
    def branch_ids(self) -> NDArray[np.int64]:
        ids = np.zeros(self.x.shape[0], dtype=np.int64)
        for k, branch in enumerate(self.branches):
            ids[branch.start : branch.stop + 1] = k
        return ids

    @property
    def stable_mask(self) -> NDArray[np.bool_]:
        mask = np.ones(self.x.shape[0], dtype=bool)
        for branch in self.branches:
            mask[branch.start : branch.stop + 1] = branch.stable
        return mask

    @property
    def max_multiplicity(self) -> int:
        """Largest number of x sharing one input level."""
        if not self.turning_points:
            return 1 if self.x.size else 0
        levels = sorted({tp.y_mag for tp in self.turning_points})
        probes = [0.5 * (a + b) for a, b in zip(levels, levels[1:])]
        probes.append(levels[0])
        return max(_crossings(self.y_mag, level) for level in probes)

    def to_dict(self) -> dict[str, Any]:
        return {
            "x": self.x.tolist(),
            "y_re": self.y.real.tolist(),
            "y_im": self.y.imag.tolist(),
            "turning_points": [tp.__dict__ for tp in self.turning_points],
            "merged_points": [mp.__dict__ for mp in self.merged_points],
            "branches": [b.__dict__ for b in self.branches],
            "thresholds": [t.__dict__ for t in self.thresholds],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> OBCurve:
        return cls(
            x=np.asarray(data["x"], dtype=np.float64),
            y=np.asarray(data["y_re"], dtype=np.float64)
            + 1j * np.asarray(data["y_im"], dtype=np.float64),
            turning_points=tuple(TurningPoint(**d) for d in data["turning_points"]),
            merged_points=tuple(MergedPoint(**d) for d in data["merged_points"]),
            branches=tuple(Branch(**d) for d in data["branches"]),
            thresholds=tuple(Threshold(**d) for d in data["thresholds"]),
        )


def _crossings(s: NDArray[np.float64], level: float) -> int:
    f = s - level
    count = int(np.count_nonzero(f == 0))
    count += int(np.count_nonzero(f[:-1] * f[1:] < 0))
    return count


def _check_grid(x_grid: Sequence[float]) -> NDArray[np.float64]:
    grid = np.asarray(x_grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size < MIN_GRID_POINTS:
        raise ValueError(f"x_grid needs at least {MIN_GRID_POINTS} points")
    if grid[0] < 0 or not np.all(np.isfinite(grid)):
        raise ValueError("x_grid must be finite and start at x >= 0")
    if not np.all(np.diff(grid) > 0):
        raise ValueError("x_grid must be strictly increasing")
    return grid


Evaluator = Callable[[float, PointSeed], tuple[complex, PointSeed]]


def _refine_extremum(
    magnitude: Callable[[float], float],
    lo: float,
    hi: float,
    kind: str,
    xatol: float,
) -> tuple[float, float]:
    sign = -1.0 if kind == "max" else 1.0
    res = minimize_scalar(
        lambda x: sign * magnitude(x),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": xatol},
    )
    return float(res.x), float(sign * res.fun)


def _trace(
    evaluate: Evaluator,
    x_grid: NDArray[np.float64],
    *,
    tangency_tol: float,
) -> OBCurve:
    n = x_grid.size
    y = np.empty(n, dtype=np.complex128)
    seeds: list[PointSeed] = []
    seed: PointSeed = None
    for k, x in enumerate(x_grid):
        try:
            y[k], seed = evaluate(float(x), seed)
        except SimulationError as exc:
            raise TracingError(float(x), exc) from exc
        seeds.append(seed)

    s = np.abs(y)
    step = float(np.min(np.diff(x_grid)))
    xatol = step / 100.0

    def magnitude_near(k: int) -> Callable[[float], float]:
        def magnitude(x: float) -> float:
            return abs(evaluate(x, seeds[k])[0])

        return magnitude

    # Turning points: sign changes of the interval slopes.
    slopes = np.diff(s) / np.diff(x_grid)
    signs = [(k, np.sign(v)) for k, v in enumerate(slopes) if v != 0]
    turning: list[TurningPoint] = []
    for (k0, s0), (k1, s1) in zip(signs, signs[1:]):
        if s0 == s1:
            continue
        k = k0 + 1  # grid point between the two intervals
        kind = "max" if s0 > 0 else "min"
        lo, hi = x_grid[max(k - 1, 0)], x_grid[min(k1 + 1, n - 1)]
        try:
            x_tp, y_tp = _refine_extremum(magnitude_near(k), lo, hi, kind, xatol)
        except SimulationError as exc:
            raise TracingError(float(x_grid[k]), exc) from exc
        turning.append(TurningPoint(x_tp, y_tp, kind, k))
        logger.debug("turning point (%s) at x=%.6g |y|=%.6g", kind, x_tp, y_tp)

    # Tangencies: positive local minima of the slope that touch zero.
    merged: list[MergedPoint] = []
    turning_idx = {tp.index for tp in turning}
    for k in range(1, slopes.size - 1):
        v = slopes[k]
        if not (0 < v < _TANGENCY_CANDIDATE):
            continue
        if v > slopes[k - 1] or v > slopes[k + 1]:
            continue
        if slopes[k - 1] <= 0 or slopes[k + 1] <= 0:
            continue
        if turning_idx & {k, k + 1}:
            continue
        magnitude = magnitude_near(k)

        def slope_at(x: float) -> float:
            h = 1e-4 * max(1.0, x)
            return (magnitude(x + h) - magnitude(max(x - h, 0.0))) / (x + h - max(x - h, 0.0))

        lo, hi = x_grid[k - 1], x_grid[min(k + 2, n - 1)]
        res = minimize_scalar(
            slope_at, bounds=(lo, hi), method="bounded",
            options={"xatol": min(xatol, 1e-6)},
        )
        if res.fun <= tangency_tol:
            x_m = float(res.x)
            merged.append(MergedPoint(x_m, magnitude(x_m), float(res.fun)))
            logger.debug("merged turning points at x=%.6g", x_m)

    bounds = [0] + [tp.index for tp in turning] + [n - 1]
    branches = tuple(
        Branch(
            start=a,
            stop=b,
            x_start=float(x_grid[a]),
            x_stop=float(x_grid[b]),
            stable=bool(s[b] >= s[a]),
        )
        for a, b in zip(bounds, bounds[1:])
        if b > a
    )

    thresholds = []
    for first, second in zip(turning, turning[1:]):
        if first.kind == "max" and second.kind == "min" and first.y_mag > second.y_mag:
            thresholds.append(Threshold(first.y_mag, second.y_mag, first.x, second.x))

    return OBCurve(
        x=x_grid.copy(),
        y=y,
        turning_points=tuple(turning),
        merged_points=tuple(merged),
        branches=branches,
        thresholds=tuple(thresholds),
    )


def trace_ob_curve(
    atom: AtomParams,
    omega_c: complex,
    cav: CavityParams,
    x_grid: Sequence[float],
    *,
    tangency_tol: float = 1e-6,
    options: Optional[SolverOptions] = None,
) -> OBCurve:
    """
    Trace |y| against x with warm-started continuation along ``x_grid``.

    Turning points are located on the grid and refined to a fraction
    1/100 of the grid step.

    Raises:
        ValueError: on a malformed grid
        TracingError: when an atomic solve fails; carries the x reached
    """
    grid = _check_grid(x_grid)

    def evaluate(x: float, seed: PointSeed) -> tuple[complex, PointSeed]:
        return evaluate_curve_point(x, atom, omega_c, cav, seed, options)

    curve = _trace(evaluate, grid, tangency_tol=tangency_tol)
    logger.info(
        "traced %d points: %d turning point(s), %d threshold pair(s)",
        grid.size, curve.n_turning_points, len(curve.thresholds),
    )
    return curve


def count_solutions(curve: OBCurve, y_in: float) -> int:
    """
    Number of traced x with |y| = y_in, each crossing counted once.

    Raises:
        CurveRangeError: if y_in lies outside the traced |y| range
    """
    s = curve.y_mag
    y_min, y_max = float(np.min(s)), float(np.max(s))
    if y_in < 0 or not y_min <= y_in <= y_max:
        raise CurveRangeError(y_in, y_min, y_max)
    return _crossings(s, y_in)


__all__ = [
    "OBCurve",
    "TurningPoint",
    "MergedPoint",
    "Branch",
    "Threshold",
    "trace_ob_curve",
    "count_solutions",
]

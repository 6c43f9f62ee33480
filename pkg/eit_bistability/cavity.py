"""
Ring-cavity feedback on the probe field.

Two descriptions of the cavity are available:

* mean-field: the medium is thin and the intracavity field uniform, so the
  cavity reduces to one algebraic state equation
  ``y = x (1 + i theta/T) + 4 i gamma C rho21(x)``;
* z-resolved: the probe is propagated through the medium in the local
  adiabatic steady state and closed on itself by the ring boundary
  condition ``E(0) = sqrt(T) y_in + R exp(-i theta) E(L)`` with R = 1 - T.

x is the transmitted-side intracavity Rabi frequency (real and non-negative
along traced curves); y is the input field normalized so that an empty,
resonant cavity gives y = x. The raw ring-map input is y_in = sqrt(T) y.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np
from scipy import optimize

from eit_bistability.bloch import (
    AtomParams,
    DensityState,
    Drive,
    SolverOptions,
    steady_state,
)
from eit_bistability.exceptions import ConvergenceError, PropagationError

logger = logging.getLogger(__name__)

MIN_PROPAGATION_STEPS = 16

# Fields below this are evaluated here when a ratio y/x is needed.
_X_FLOOR = 1e-6

_DAMPING_FLOOR = 1.0 / 64.0

# Iterates kept for Anderson mixing of the ring map.
_ANDERSON_DEPTH = 3

PointSeed = Union[None, DensityState, Sequence[DensityState]]


class CavityMode(str, Enum):
    MEAN_FIELD = "mean-field"
    Z_RESOLVED = "z-resolved"


@dataclass(frozen=True)
class CavityParams:
    """
    Ring-cavity parameters.

    ``C`` is used in mean-field mode only; a z-resolved cavity takes its
    cooperativity from ``alphaL / (2 T)`` (see ``effective_C``).
    """

    C: float = 0.0
    T: float = 0.1
    theta: float = 0.0
    mode: CavityMode = CavityMode.MEAN_FIELD
    alphaL: float = 0.0
    n_steps: int = 64

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", CavityMode(self.mode))
        if not math.isfinite(self.C) or self.C < 0:
            raise ValueError(f"C must be finite and >= 0, got {self.C!r}")
        if not 0 < self.T <= 1:
            raise ValueError(f"T must lie in (0, 1], got {self.T!r}")
        if not math.isfinite(self.theta):
            raise ValueError("theta must be finite")
        if self.mode is CavityMode.Z_RESOLVED:
            if not math.isfinite(self.alphaL) or self.alphaL < 0:
                raise ValueError(f"alphaL must be finite and >= 0, got {self.alphaL!r}")
            if self.n_steps < MIN_PROPAGATION_STEPS:
                raise ValueError(
                    f"n_steps must be >= {MIN_PROPAGATION_STEPS}, got {self.n_steps}"
                )

    @property
    def R(self) -> float:
        return 1.0 - self.T

    @property
    def theta_mf(self) -> float:
        return self.theta / self.T

    @property
    def effective_C(self) -> float:
        if self.mode is CavityMode.MEAN_FIELD:
            return self.C
        return self.alphaL / (2.0 * self.T)

    @classmethod
    def mean_field_limit(
        cls,
        C: float,
        alphaL: float,
        *,
        theta_mf: float = 0.0,
        n_steps: int = 64,
    ) -> CavityParams:
        """
        z-resolved cavity whose alphaL -> 0 limit is the mean-field cavity
        with cooperativity ``C`` and detuning ``theta_mf``.
        """
        if C <= 0 or alphaL <= 0:
            raise ValueError("mean_field_limit needs C > 0 and alphaL > 0")
        T = alphaL / (2.0 * C)
        if T > 1:
            raise ValueError(f"alphaL={alphaL} too large for C={C} (T would exceed 1)")
        return cls(
            C=C,
            T=T,
            theta=theta_mf * T,
            mode=CavityMode.Z_RESOLVED,
            alphaL=alphaL,
            n_steps=n_steps,
        )


def _seed_state(seed: PointSeed) -> Optional[DensityState]:
    if seed is None or isinstance(seed, DensityState):
        return seed
    return seed[-1] if len(seed) else None


def _mean_field_point(
    x: float,
    atom: AtomParams,
    omega_c: complex,
    cav: CavityParams,
    init: Optional[DensityState],
    options: Optional[SolverOptions],
) -> tuple[complex, DensityState]:
    state = steady_state(atom, Drive(omega_p=x, omega_c=omega_c), init, options)
    y = x * (1.0 + 1j * cav.theta_mf) + 4j * atom.gamma * cav.C * state.rho21
    return complex(y), state


def state_equation(
    x: float,
    atom: AtomParams,
    omega_c: complex,
    cav: CavityParams,
    *,
    init: Optional[DensityState] = None,
    options: Optional[SolverOptions] = None,
) -> complex:
    """
    Mean-field input field y for the intracavity field x.

    Raises:
        ValueError: if x < 0 or the cavity is not in mean-field mode
        ConvergenceError: propagated from steady_state
    """
    if x < 0:
        raise ValueError(f"x must be >= 0, got {x!r}")
    if cav.mode is not CavityMode.MEAN_FIELD:
        raise ValueError("state_equation needs a mean-field cavity; use input_from_output")
    y, _ = _mean_field_point(x, atom, omega_c, cav, init, options)
    return y


def _propagate(
    e_start: complex,
    atom: AtomParams,
    omega_c: complex,
    alphaL: float,
    n_steps: int,
    *,
    backward: bool = False,
    seeds: Optional[Sequence[DensityState]] = None,
    options: Optional[SolverOptions] = None,
) -> tuple[complex, list[DensityState]]:
    """
    RK4 integration of dE/dzeta = -i alphaL 2 gamma rho21(E) across the cell.

    Returns the field at the far end and the atomic state at the start of
    every step (in stepping order), for warm-starting the next call.
    """
    e = complex(e_start)
    if alphaL == 0:
        return e, list(seeds or [])

    h = (-1.0 if backward else 1.0) / n_steps
    coef = -2j * alphaL * atom.gamma
    states: list[DensityState] = []
    state: Optional[DensityState] = None

    def deriv(field: complex, init: Optional[DensityState]) -> tuple[complex, DensityState]:
        s = steady_state(atom, Drive(omega_p=field, omega_c=omega_c), init, options)
        return coef * s.rho21, s

    for k in range(n_steps):
        zeta = 1.0 - k / n_steps if backward else k / n_steps
        init = seeds[k] if seeds is not None and k < len(seeds) else state
        try:
            k1, s1 = deriv(e, init)
            k2, s2 = deriv(e + 0.5 * h * k1, s1)
            k3, s3 = deriv(e + 0.5 * h * k2, s2)
            k4, s4 = deriv(e + h * k3, s3)
        except ConvergenceError as exc:
            raise PropagationError(zeta, exc) from exc
        e = e + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        states.append(s1)
        state = s4

    return e, states


def propagate_medium(
    e_in: complex,
    atom: AtomParams,
    omega_c: complex,
    alphaL: float,
    n_steps: int = 64,
    *,
    options: Optional[SolverOptions] = None,
) -> complex:
    """
    Steady-state probe field at the exit of the medium.

    Raises:
        ValueError: on alphaL < 0 or n_steps below the minimum
        PropagationError: when a local steady state fails; carries zeta
    """
    if alphaL < 0:
        raise ValueError(f"alphaL must be >= 0, got {alphaL!r}")
    if n_steps < MIN_PROPAGATION_STEPS:
        raise ValueError(f"n_steps must be >= {MIN_PROPAGATION_STEPS}, got {n_steps}")
    e_out, _ = _propagate(e_in, atom, omega_c, alphaL, n_steps, options=options)
    return e_out


def _require_z_resolved(cav: CavityParams, name: str) -> None:
    if cav.mode is not CavityMode.Z_RESOLVED:
        raise ValueError(f"{name} needs a z-resolved cavity")


def _input_from_output(
    x: complex,
    atom: AtomParams,
    omega_c: complex,
    cav: CavityParams,
    seeds: Optional[Sequence[DensityState]],
    options: Optional[SolverOptions],
) -> tuple[complex, list[DensityState]]:
    e0, states = _propagate(
        x, atom, omega_c, cav.alphaL, cav.n_steps,
        backward=True, seeds=seeds, options=options,
    )
    y = (e0 - cav.R * cmath.exp(-1j * cav.theta) * x) / cav.T
    return complex(y), states


def input_from_output(
    x: complex,
    atom: AtomParams,
    omega_c: complex,
    cav: CavityParams,
    *,
    options: Optional[SolverOptions] = None,
) -> complex:
    """
    Normalized input field that sustains transmitted-side field ``x``.

    The medium is integrated backward from E(L) = x; ring_map at the
    resulting input then has E(0) as an exact fixed point.
    """
    _require_z_resolved(cav, "input_from_output")
    y, _ = _input_from_output(x, atom, omega_c, cav, None, options)
    return y


def evaluate_curve_point(
    x: float,
    atom: AtomParams,
    omega_c: complex,
    cav: CavityParams,
    seed: PointSeed = None,
    options: Optional[SolverOptions] = None,
) -> tuple[complex, PointSeed]:
    """
    Normalized input y for intracavity field x in either cavity mode.

    ``seed`` is whatever the previous call returned; it warm-starts the
    atomic solves so neighbouring x follow the same branch.
    """
    if cav.mode is CavityMode.MEAN_FIELD:
        return _mean_field_point(x, atom, omega_c, cav, _seed_state(seed), options)
    seeds = None if seed is None or isinstance(seed, DensityState) else seed
    return _input_from_output(x, atom, omega_c, cav, seeds, options)


def _ring_map(
    e0: complex,
    y_in: complex,
    atom: AtomParams,
    omega_c: complex,
    cav: CavityParams,
    seeds: Optional[Sequence[DensityState]],
    options: Optional[SolverOptions],
) -> tuple[complex, complex, list[DensityState]]:
    e_out, states = _propagate(
        e0, atom, omega_c, cav.alphaL, cav.n_steps, seeds=seeds, options=options
    )
    e_next = math.sqrt(cav.T) * y_in + cav.R * cmath.exp(-1j * cav.theta) * e_out
    return complex(e_next), e_out, states


def ring_map(
    e0: complex,
    y_in: complex,
    atom: AtomParams,
    omega_c: complex,
    cav: CavityParams,
    *,
    options: Optional[SolverOptions] = None,
) -> complex:
    """One round trip: sqrt(T) y_in + R exp(-i theta) E(L) for E(0) = e0."""
    _require_z_resolved(cav, "ring_map")
    e_next, _, _ = _ring_map(e0, y_in, atom, omega_c, cav, None, options)
    return e_next


def ring_fixed_point(
    y_in: complex,
    atom: AtomParams,
    omega_c: complex,
    cav: CavityParams,
    e0_guess: Optional[complex] = None,
    *,
    options: Optional[SolverOptions] = None,
    tol: float = 1e-10,
) -> complex:
    """
    Root of e0 - ring_map(e0) for the raw input ``y_in``.

    Starts from the empty-cavity buildup field unless a guess is given.

    Raises:
        ConvergenceError: when the root finder does not reach ``tol``
    """
    _require_z_resolved(cav, "ring_fixed_point")
    if e0_guess is None:
        e0_guess = math.sqrt(cav.T) * y_in / (1.0 - cav.R * cmath.exp(-1j * cav.theta))

    seeds: list[Optional[list[DensityState]]] = [None]

    def residual(v: np.ndarray) -> np.ndarray:
        e0 = complex(v[0], v[1])
        e_next, _, states = _ring_map(e0, y_in, atom, omega_c, cav, seeds[0], options)
        seeds[0] = states
        r = e0 - e_next
        return np.array([r.real, r.imag])

    sol = optimize.root(
        residual,
        np.array([complex(e0_guess).real, complex(e0_guess).imag]),
        method="hybr",
        options={"xtol": 1e-13},
    )
    e0 = complex(sol.x[0], sol.x[1])
    res = float(np.max(np.abs(residual(sol.x))))
    if res > tol * max(1.0, abs(e0)):
        raise ConvergenceError(
            f"ring fixed point not found: {sol.message}",
            best_residual=res,
            stage="ring",
        )
    return e0


@dataclass(frozen=True)
class ScanPoint:
    direction: str
    y: float
    x: float
    converged: bool
    iterations: int = 0


@dataclass(frozen=True)
class Jump:
    """A discontinuity between two consecutive converged scan points."""

    direction: str
    y_before: float
    y_after: float
    x_before: float
    x_after: float


def _check_ramp(y_ramp: Sequence[float]) -> np.ndarray:
    ramp = np.asarray(y_ramp, dtype=np.float64)
    if ramp.ndim != 1 or ramp.size == 0:
        raise ValueError("y_ramp must be a non-empty 1-d sequence")
    if np.any(ramp < 0) or not np.all(np.isfinite(ramp)):
        raise ValueError("y_ramp values must be finite and >= 0")
    steps = np.diff(ramp)
    if ramp.size > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
        raise ValueError("y_ramp must be strictly monotone")
    return ramp


def _anderson_step(qs: Sequence[complex], gs: Sequence[complex], beta: float) -> complex:
    """
    Type-II Anderson update from iterates ``qs`` and residuals ``gs``.

    Complex fields are treated as real 2-vectors, so the mixing weights are
    real and the update works for maps that are not holomorphic.
    """
    q_k, g_k = qs[-1], gs[-1]
    if len(qs) == 1:
        return q_k + beta * g_k
    dq = np.diff(np.asarray(qs, dtype=np.complex128))
    dg = np.diff(np.asarray(gs, dtype=np.complex128))
    a = np.vstack([dg.real, dg.imag])
    weights = np.linalg.lstsq(a, np.array([g_k.real, g_k.imag]), rcond=None)[0]
    step = complex(q_k + beta * g_k - np.dot(weights, dq + beta * dg))
    if not (math.isfinite(step.real) and math.isfinite(step.imag)):
        return q_k + beta * g_k
    return step


class _FixedPointScanner:
    """
    Fixed-point iteration of q = Phi(q, y), warm-started from the last point.

    Mean-field: q = x and Phi(x, y) = y / |g(x)|, g(x) = y(x)/x; damped
    iteration q <- q + lam (Phi - q) with oscillation control contracts on
    branches where |y| increases with x.
    z-resolved: q = E(0) and Phi is the ring map at raw input sqrt(T) y;
    iterates are Anderson-mixed with weight lam and restarted whenever the
    residual more than doubles.
    """

    def __init__(
        self,
        atom: AtomParams,
        omega_c: complex,
        cav: CavityParams,
        *,
        damping: float,
        tol: float,
        max_iter: int,
        options: Optional[SolverOptions],
    ) -> None:
        self.atom = atom
        self.omega_c = omega_c
        self.cav = cav
        self.damping = damping
        self.tol = tol
        self.max_iter = max_iter
        self.options = options
        self.q: complex = 0j
        self.seed: PointSeed = None

    def _phi(self, q: complex, y: float, seed: PointSeed) -> tuple[complex, complex, PointSeed]:
        """Returns (Phi(q), transmitted field x, new seed)."""
        if self.cav.mode is CavityMode.MEAN_FIELD:
            x_eval = max(q.real, _X_FLOOR)
            y_x, state = _mean_field_point(
                x_eval, self.atom, self.omega_c, self.cav, _seed_state(seed), self.options
            )
            target = y / (abs(y_x) / x_eval)
            return complex(target), q, state
        seeds = None if seed is None or isinstance(seed, DensityState) else seed
        e_next, e_out, states = _ring_map(
            q, math.sqrt(self.cav.T) * y, self.atom, self.omega_c, self.cav,
            seeds, self.options,
        )
        return e_next, e_out, states

    def _evaluate(
        self, q: complex, y: float, seed: PointSeed
    ) -> Optional[tuple[complex, complex, PointSeed]]:
        try:
            return self._phi(q, y, seed)
        except (ConvergenceError, PropagationError):
            logger.warning("hysteresis_scan: atomic solve failed at y=%.6g", y)
            return None

    def _settled(self, delta: complex, q: complex) -> bool:
        return abs(delta) <= self.tol * max(1.0, abs(q))

    def solve(self, y: float) -> tuple[float, bool, int]:
        if self.cav.mode is CavityMode.MEAN_FIELD:
            return self._solve_damped(y)
        return self._solve_mixed(y)

    def _solve_damped(self, y: float) -> tuple[float, bool, int]:
        q, seed = self.q, self.seed
        lam = self.damping
        prev_delta: Optional[complex] = None
        x = q
        for iteration in range(1, self.max_iter + 1):
            result = self._evaluate(q, y, seed)
            if result is None:
                return abs(x), False, iteration
            target, x, seed = result
            delta = target - q
            if self._settled(delta, q):
                self.q, self.seed = q, seed
                return abs(x), True, iteration
            if prev_delta is not None and (delta * prev_delta.conjugate()).real < 0:
                if abs(delta) > 0.5 * abs(prev_delta) and lam > _DAMPING_FLOOR:
                    lam = max(0.5 * lam, _DAMPING_FLOOR)
                    logger.debug("hysteresis_scan: damping -> %.4g at y=%.6g", lam, y)
            q = complex(max((q + lam * delta).real, 0.0), 0.0)
            prev_delta = delta
        return abs(x), False, self.max_iter

    def _solve_mixed(self, y: float) -> tuple[float, bool, int]:
        # The ring map contracts by only about R per round trip.
        q, seed = self.q, self.seed
        qs: list[complex] = []
        gs: list[complex] = []
        x = q
        for iteration in range(1, self.max_iter + 1):
            result = self._evaluate(q, y, seed)
            if result is None:
                return abs(x), False, iteration
            target, x, seed = result
            delta = target - q
            if self._settled(delta, q):
                self.q, self.seed = q, seed
                return abs(x), True, iteration
            if gs and abs(delta) > 2.0 * abs(gs[-1]):
                logger.debug("hysteresis_scan: anderson restart at y=%.6g", y)
                qs.clear()
                gs.clear()
            qs.append(q)
            gs.append(delta)
            del qs[:-_ANDERSON_DEPTH], gs[:-_ANDERSON_DEPTH]
            q = _anderson_step(qs, gs, self.damping)
        return abs(x), False, self.max_iter


def hysteresis_scan(
    atom: AtomParams,
    omega_c: complex,
    cav: CavityParams,
    y_ramp: Sequence[float],
    up_then_down: bool = True,
    *,
    damping: float = 0.5,
    tol: float = 1e-9,
    max_iter: int = 2000,
    options: Optional[SolverOptions] = None,
) -> list[ScanPoint]:
    """
    Adiabatic input-field scan following whichever branch the cavity is on.

    With ``up_then_down`` the ramp is traversed in increasing order and then
    back in decreasing order; otherwise once, in the given order. A point
    whose iteration does not settle (possible self-pulsing) is flagged and
    the scan resumes from the last converged field.
    """
    if not 0 < damping <= 1:
        raise ValueError(f"damping must lie in (0, 1], got {damping!r}")
    ramp = _check_ramp(y_ramp)
    if up_then_down:
        ramp = np.sort(ramp)
        passes = [("up", ramp), ("down", ramp[::-1])]
    else:
        increasing = ramp.size < 2 or ramp[-1] > ramp[0]
        passes = [("up" if increasing else "down", ramp)]

    scanner = _FixedPointScanner(
        atom, omega_c, cav,
        damping=damping, tol=tol, max_iter=max_iter, options=options,
    )
    points: list[ScanPoint] = []
    n_flagged = 0
    for direction, values in passes:
        for y in values:
            x, converged, iterations = scanner.solve(float(y))
            if not converged:
                n_flagged += 1
            points.append(ScanPoint(direction, float(y), float(x), converged, iterations))
    if n_flagged:
        logger.warning("hysteresis_scan: %d point(s) did not converge", n_flagged)
    return points


def detect_jumps(scan: Sequence[ScanPoint]) -> list[Jump]:
    """
    Jumps between consecutive converged points of each scan direction.

    A step counts as a jump when |dx| exceeds both a tenth of the largest x
    in that direction and 50 times the ramp step.
    """
    jumps: list[Jump] = []
    for direction in ("up", "down"):
        pts = [p for p in scan if p.direction == direction and p.converged]
        if len(pts) < 2:
            continue
        x_scale = max(p.x for p in pts)
        for prev, cur in zip(pts, pts[1:]):
            dx = abs(cur.x - prev.x)
            if dx > max(0.1 * x_scale, 50.0 * abs(cur.y - prev.y)):
                jumps.append(Jump(direction, prev.y, cur.y, prev.x, cur.x))
    return jumps


__all__ = [
    "CavityMode",
    "CavityParams",
    "ScanPoint",
    "Jump",
    "state_equation",
    "propagate_medium",
    "input_from_output",
    "evaluate_curve_point",
    "ring_map",
    "ring_fixed_point",
    "hysteresis_scan",
    "detect_jumps",
]

"""
Atomic dynamics of a three-level Lambda medium with near dipole-dipole (NDD)
local-field corrections.

The density matrix is stored as two population differences and the three
upper coherences; the trace is eliminated, so trace conservation and
hermiticity hold by construction. All rates, detunings and Rabi frequencies
are dimensionless, in units of gamma21.

Real vector ordering used by the solvers::

    (d21, d23, Re rho21, Im rho21, Re rho23, Im rho23, Re rho31, Im rho31)
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, replace
from typing import Any, Iterator, Optional

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import solve_ivp

from eit_bistability.exceptions import (
    ConvergenceError,
    DegenerateSteadyStateWarning,
    IntegrationError,
)

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

PHYSICAL_TOL = 1e-8

_IMPLICIT_METHODS = frozenset({"Radau", "BDF", "LSODA"})


@dataclass(frozen=True)
class AtomParams:
    """Atomic rates, NDD parameters and laser detunings."""

    gamma21: float = 1.0
    gamma23: float = 1.0
    gamma31: float = 0.0
    gammaD21: float = 0.0
    gammaD23: float = 0.0
    eps_p: float = 0.0
    eps_c: float = 0.0
    delta_p: float = 0.0
    delta_c: float = 0.0

    def __post_init__(self) -> None:
        for name in ("gamma21", "gamma23", "gamma31", "gammaD21", "gammaD23"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")
        for name in ("eps_p", "eps_c", "delta_p", "delta_c"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def gamma(self) -> float:
        """Coherence damping 1/2 (gamma21 + gamma23 + gamma31)."""
        return 0.5 * (self.gamma21 + self.gamma23 + self.gamma31)

    @property
    def has_ndd(self) -> bool:
        return any((self.gammaD21, self.gammaD23, self.eps_p, self.eps_c))

    def without_ndd(self) -> AtomParams:
        return replace(self, gammaD21=0.0, gammaD23=0.0, eps_p=0.0, eps_c=0.0)

    def scaled_ndd(self, lam: float) -> AtomParams:
        """NDD parameters scaled by ``lam`` (continuation parameter)."""
        return replace(
            self,
            gammaD21=lam * self.gammaD21,
            gammaD23=lam * self.gammaD23,
            eps_p=lam * self.eps_p,
            eps_c=lam * self.eps_c,
        )


@dataclass(frozen=True)
class Drive:
    """Complex probe and coupling Rabi frequencies (full-Rabi convention)."""

    omega_p: complex = 0j
    omega_c: complex = 0j

    def __post_init__(self) -> None:
        for name in ("omega_p", "omega_c"):
            value = complex(getattr(self, name))
            if not (math.isfinite(value.real) and math.isfinite(value.imag)):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)


@dataclass(frozen=True)
class DensityState:
    """Trace-closed representation of the 3x3 density matrix."""

    d21: float
    d23: float
    rho21: complex = 0j
    rho23: complex = 0j
    rho31: complex = 0j

    @classmethod
    def ground(cls) -> DensityState:
        return cls(d21=-1.0, d23=0.0)

    @classmethod
    def excited(cls) -> DensityState:
        """All population in |2>."""
        return cls(d21=1.0, d23=1.0)

    @classmethod
    def from_populations(
        cls,
        rho11: float,
        rho22: float,
        rho33: float,
        rho21: complex = 0j,
        rho23: complex = 0j,
        rho31: complex = 0j,
    ) -> DensityState:
        return cls(rho22 - rho11, rho22 - rho33, rho21, rho23, rho31)

    @property
    def rho22(self) -> float:
        return (1.0 + self.d21 + self.d23) / 3.0

    @property
    def rho11(self) -> float:
        return self.rho22 - self.d21

    @property
    def rho33(self) -> float:
        return self.rho22 - self.d23

    @property
    def populations(self) -> tuple[float, float, float]:
        return self.rho11, self.rho22, self.rho33

    def to_vector(self) -> FloatArray:
        return np.array(
            [
                self.d21,
                self.d23,
                self.rho21.real,
                self.rho21.imag,
                self.rho23.real,
                self.rho23.imag,
                self.rho31.real,
                self.rho31.imag,
            ],
            dtype=np.float64,
        )

    @classmethod
    def from_vector(cls, y: FloatArray) -> DensityState:
        return cls(
            d21=float(y[0]),
            d23=float(y[1]),
            rho21=complex(y[2], y[3]),
            rho23=complex(y[4], y[5]),
            rho31=complex(y[6], y[7]),
        )

    def to_matrix(self) -> NDArray[np.complex128]:
        """Full Hermitian density matrix, basis order |1>, |2>, |3>."""
        rho = np.diag(np.array(self.populations, dtype=np.complex128))
        rho[1, 0] = self.rho21
        rho[0, 1] = self.rho21.conjugate()
        rho[1, 2] = self.rho23
        rho[2, 1] = self.rho23.conjugate()
        rho[2, 0] = self.rho31
        rho[0, 2] = self.rho31.conjugate()
        return rho

    def is_physical(self, tol: float = PHYSICAL_TOL) -> bool:
        if not all(-tol <= p <= 1.0 + tol for p in self.populations):
            return False
        bound = 0.5 + tol
        return all(abs(r) <= bound for r in (self.rho21, self.rho23, self.rho31))

    def max_abs_diff(self, other: DensityState) -> float:
        return float(np.max(np.abs(self.to_vector() - other.to_vector())))


def _rhs(y: FloatArray, atom: AtomParams, p: complex, c: complex) -> FloatArray:
    # p = Omega_P / 2, c = Omega_C / 2
    a, b = y[0], y[1]
    u = complex(y[2], y[3])
    v = complex(y[4], y[5])
    w = complex(y[6], y[7])
    rho22 = (1.0 + a + b) / 3.0
    g = atom.gamma

    im_pu = (p.conjugate() * u).imag
    im_cv = (c.conjugate() * v).imag

    da = (
        -(atom.gamma23 + 2.0 * atom.gamma21) * rho22
        - 4.0 * im_pu
        - 2.0 * im_cv
        - atom.gamma31 * (a - b)
        - atom.gammaD21 * abs(u) ** 2
    )
    db = (
        -(2.0 * atom.gamma23 + atom.gamma21) * rho22
        - 2.0 * im_pu
        - 4.0 * im_cv
        - atom.gamma31 * (b - a)
        - atom.gammaD23 * abs(v) ** 2
    )
    du = (
        -1j * (atom.delta_p - atom.eps_p * a) * u
        - (g - 0.5 * atom.gammaD21 * a) * u
        + 1j * p * a
        - 1j * c * w
    )
    dv = (
        -1j * (atom.delta_c - atom.eps_c * b) * v
        - (g - 0.5 * atom.gammaD23 * b) * v
        + 1j * c * b
        - 1j * p * w.conjugate()
    )
    dw = (
        -(atom.gamma31 + 1j * (atom.delta_p - atom.delta_c)) * w
        - 1j * (atom.eps_p * a - atom.eps_c * b) * w
        - 1j * c.conjugate() * u
        + 1j * p * v.conjugate()
    )
    return np.array(
        [da, db, du.real, du.imag, dv.real, dv.imag, dw.real, dw.imag],
        dtype=np.float64,
    )


def _jacobian(y: FloatArray, atom: AtomParams, p: complex, c: complex) -> FloatArray:
    a, b = y[0], y[1]
    u = complex(y[2], y[3])
    v = complex(y[4], y[5])
    w = complex(y[6], y[7])
    g = atom.gamma
    pc, cc = p.conjugate(), c.conjugate()
    zero = (0j, 0j)

    # Each complex unknown z enters through Wirtinger pairs (dF/dz, dF/dz*).
    cols = np.zeros((5, 8), dtype=np.complex128)

    def put(
        k: int,
        da: complex,
        db: complex,
        du: tuple[complex, complex],
        dv: tuple[complex, complex],
        dw: tuple[complex, complex],
    ) -> None:
        cols[k, 0] = da
        cols[k, 1] = db
        for idx, (dz, dzc) in ((2, du), (4, dv), (6, dw)):
            cols[k, idx] = dz + dzc
            cols[k, idx + 1] = 1j * (dz - dzc)

    s21 = (atom.gamma23 + 2.0 * atom.gamma21) / 3.0
    s23 = (2.0 * atom.gamma23 + atom.gamma21) / 3.0
    put(
        0,
        -s21 - atom.gamma31,
        -s21 + atom.gamma31,
        (2j * pc - atom.gammaD21 * u.conjugate(), -2j * p - atom.gammaD21 * u),
        (1j * cc, -1j * c),
        zero,
    )
    put(
        1,
        -s23 + atom.gamma31,
        -s23 - atom.gamma31,
        (1j * pc, -1j * p),
        (2j * cc - atom.gammaD23 * v.conjugate(), -2j * c - atom.gammaD23 * v),
        zero,
    )
    put(
        2,
        (1j * atom.eps_p + 0.5 * atom.gammaD21) * u + 1j * p,
        0j,
        (-1j * (atom.delta_p - atom.eps_p * a) - (g - 0.5 * atom.gammaD21 * a), 0j),
        zero,
        (-1j * c, 0j),
    )
    put(
        3,
        0j,
        (1j * atom.eps_c + 0.5 * atom.gammaD23) * v + 1j * c,
        zero,
        (-1j * (atom.delta_c - atom.eps_c * b) - (g - 0.5 * atom.gammaD23 * b), 0j),
        (0j, -1j * p),
    )
    put(
        4,
        -1j * atom.eps_p * w,
        1j * atom.eps_c * w,
        (-1j * cc, 0j),
        (0j, 1j * p),
        (
            -(atom.gamma31 + 1j * (atom.delta_p - atom.delta_c))
            - 1j * (atom.eps_p * a - atom.eps_c * b),
            0j,
        ),
    )

    jac = np.empty((8, 8), dtype=np.float64)
    jac[0] = cols[0].real
    jac[1] = cols[1].real
    for k in (2, 3, 4):
        jac[2 * k - 2] = cols[k].real
        jac[2 * k - 1] = cols[k].imag
    return jac


def bloch_rhs(state: DensityState, atom: AtomParams, drive: Drive) -> DensityState:
    """
    Instantaneous time derivative of every stored component.

    The returned DensityState holds derivatives (d/dt d21, d/dt d23, ...),
    not a physical state.
    """
    y = _rhs(state.to_vector(), atom, drive.omega_p / 2, drive.omega_c / 2)
    return DensityState.from_vector(y)


def bloch_jacobian(state: DensityState, atom: AtomParams, drive: Drive) -> FloatArray:
    """Analytic 8x8 Jacobian of bloch_rhs in the real vector ordering."""
    return _jacobian(state.to_vector(), atom, drive.omega_p / 2, drive.omega_c / 2)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-ordered integration output; iterates as (t, DensityState) pairs."""

    t: FloatArray
    y: FloatArray

    def __len__(self) -> int:
        return int(self.t.shape[0])

    def __getitem__(self, index: int) -> tuple[float, DensityState]:
        return float(self.t[index]), DensityState.from_vector(self.y[index])

    def __iter__(self) -> Iterator[tuple[float, DensityState]]:
        for k in range(len(self)):
            yield self[k]

    @property
    def final(self) -> DensityState:
        return DensityState.from_vector(self.y[-1])


def integrate(
    state0: DensityState,
    atom: AtomParams,
    drive: Drive,
    t_end: float,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    *,
    method: str = "DOP853",
    t_eval: Optional[FloatArray] = None,
) -> Trajectory:
    """
    Adaptive-step integration of the Bloch equations from ``state0``.

    Raises:
        ValueError: on a non-positive horizon or out-of-range tolerances
        IntegrationError: when the integrator fails; carries the failure time
    """
    if not t_end > 0:
        raise ValueError(f"t_end must be > 0, got {t_end!r}")
    for name, tol in (("rtol", rtol), ("atol", atol)):
        if not 0 < tol <= 1e-2:
            raise ValueError(f"{name} must lie in (0, 1e-2], got {tol!r}")

    p, c = drive.omega_p / 2, drive.omega_c / 2

    def fun(_t: float, y: FloatArray) -> FloatArray:
        return _rhs(y, atom, p, c)

    kwargs: dict[str, Any] = {}
    if method in _IMPLICIT_METHODS:
        kwargs["jac"] = lambda _t, y: _jacobian(y, atom, p, c)

    sol = solve_ivp(
        fun,
        (0.0, float(t_end)),
        state0.to_vector(),
        method=method,
        rtol=rtol,
        atol=atol,
        t_eval=t_eval,
        **kwargs,
    )
    if sol.status < 0:
        t_fail = float(sol.t[-1]) if sol.t.size else 0.0
        raise IntegrationError(f"integration failed: {sol.message}", t_fail=t_fail)

    trajectory = Trajectory(t=np.asarray(sol.t), y=np.asarray(sol.y).T.copy())
    if not trajectory.final.is_physical():
        logger.warning(
            "integrate: final state leaves the physical region (populations %s)",
            trajectory.final.populations,
        )
    return trajectory


@dataclass(frozen=True)
class SolverOptions:
    """Newton / continuation settings for steady_state."""

    tol: float = 1e-10
    max_iter: int = 60
    max_stages: int = 8
    physical_tol: float = PHYSICAL_TOL
    min_damping: float = 1.0 / 1024.0


DEFAULT_SOLVER_OPTIONS = SolverOptions()


@dataclass(frozen=True)
class _Pins:
    """Rows replaced by conservation constraints when a level is isolated."""

    rho11: Optional[float] = None
    rho33: Optional[float] = None
    rho31_zero: bool = False

    @property
    def active(self) -> bool:
        return self.rho11 is not None or self.rho33 is not None or self.rho31_zero


def _structural_pins(atom: AtomParams, drive: Drive, reference: DensityState) -> _Pins:
    level3_isolated = drive.omega_c == 0 and atom.gamma23 == 0 and atom.gamma31 == 0
    level1_isolated = drive.omega_p == 0 and atom.gamma21 == 0 and atom.gamma31 == 0
    if level3_isolated:
        return _Pins(rho33=reference.rho33, rho31_zero=True)
    if level1_isolated:
        return _Pins(rho11=reference.rho11, rho31_zero=True)
    return _Pins()


def _pinned_system(
    y: FloatArray, atom: AtomParams, p: complex, c: complex, pins: _Pins
) -> tuple[FloatArray, FloatArray]:
    f = _rhs(y, atom, p, c)
    jac = _jacobian(y, atom, p, c)
    if pins.rho11 is not None:
        f[0] = (1.0 - 2.0 * y[0] + y[1]) / 3.0 - pins.rho11
        jac[0] = 0.0
        jac[0, 0], jac[0, 1] = -2.0 / 3.0, 1.0 / 3.0
    if pins.rho33 is not None:
        f[1] = (1.0 + y[0] - 2.0 * y[1]) / 3.0 - pins.rho33
        jac[1] = 0.0
        jac[1, 0], jac[1, 1] = 1.0 / 3.0, -2.0 / 3.0
    if pins.rho31_zero:
        f[6], f[7] = y[6], y[7]
        jac[6:8] = 0.0
        jac[6, 6] = jac[7, 7] = 1.0
    return f, jac


def _newton(
    y0: FloatArray,
    atom: AtomParams,
    p: complex,
    c: complex,
    pins: _Pins,
    opts: SolverOptions,
) -> tuple[FloatArray, float, bool]:
    """Damped Newton with backtracking; returns (y, residual, converged)."""
    y = np.array(y0, dtype=np.float64)
    f, jac = _pinned_system(y, atom, p, c, pins)
    res = float(np.max(np.abs(f)))

    for iteration in range(opts.max_iter):
        if res <= opts.tol:
            # One polishing step; kept only if it helps.
            step = np.linalg.lstsq(jac, -f, rcond=1e-12)[0]
            y_try = y + step
            f_try, jac_try = _pinned_system(y_try, atom, p, c, pins)
            res_try = float(np.max(np.abs(f_try)))
            if np.isfinite(res_try) and res_try < res:
                y, res = y_try, res_try
            logger.debug("newton converged in %d iterations (res %.2e)", iteration, res)
            return y, res, True

        step = np.linalg.lstsq(jac, -f, rcond=1e-12)[0]
        lam = 1.0
        while lam >= opts.min_damping:
            y_try = y + lam * step
            f_try, jac_try = _pinned_system(y_try, atom, p, c, pins)
            res_try = float(np.max(np.abs(f_try)))
            if np.isfinite(res_try) and res_try < (1.0 - 1e-4 * lam) * res:
                break
            lam *= 0.5
        else:
            logger.debug("newton stalled at iteration %d (res %.2e)", iteration, res)
            return y, res, False
        y, f, jac, res = y_try, f_try, jac_try, res_try

    return y, res, res <= opts.tol


def _accept(
    y: FloatArray, atom: AtomParams, p: complex, c: complex, opts: SolverOptions
) -> bool:
    if float(np.max(np.abs(_rhs(y, atom, p, c)))) > opts.tol:
        return False
    return DensityState.from_vector(y).is_physical(opts.physical_tol)


def _solve_stage(
    y0: FloatArray,
    atom: AtomParams,
    p: complex,
    c: complex,
    pins: _Pins,
    opts: SolverOptions,
) -> tuple[FloatArray, float, bool]:
    y, res, ok = _newton(y0, atom, p, c, pins, opts)
    if ok and not _accept(y, atom, p, c, opts):
        logger.debug("newton root rejected (unphysical or residual above tol)")
        ok = False
    return y, res, ok


def steady_state(
    atom: AtomParams,
    drive: Drive,
    init: Optional[DensityState] = None,
    options: Optional[SolverOptions] = None,
) -> DensityState:
    """
    Solve bloch_rhs(state) = 0.

    A supplied ``init`` is tried first (warm start along a sweep). Otherwise,
    or when the warm start fails, the NDD-free system (linear in the density
    matrix) is solved and the NDD parameters are ramped to their targets in
    1, 2, 4, ... up to ``options.max_stages`` continuation steps.

    Where the nonlinear system has several roots, the one reached from the
    starting point is returned.

    Raises:
        ConvergenceError: when every continuation schedule fails
    """
    opts = options or DEFAULT_SOLVER_OPTIONS
    p, c = drive.omega_p / 2, drive.omega_c / 2
    reference = init if init is not None else DensityState.ground()
    pins = _structural_pins(atom, drive, reference)

    if (
        not pins.active
        and drive.omega_p == 0
        and drive.omega_c == 0
        and atom.gamma31 == 0
    ):
        logger.warning("steady_state: no fields and gamma31=0; returning ground state")
        warnings.warn(
            "steady state is any mixture of |1> and |3>; ground state returned",
            DegenerateSteadyStateWarning,
            stacklevel=2,
        )
        return DensityState.ground()

    best = math.inf
    if init is not None:
        y, res, ok = _solve_stage(init.to_vector(), atom, p, c, pins, opts)
        if ok:
            return DensityState.from_vector(y)
        best = min(best, res)
        logger.debug("steady_state: warm start failed (res %.2e); continuing", res)

    y_lin, res, ok = _solve_stage(
        reference.to_vector(), atom.without_ndd(), p, c, pins, opts
    )
    if not ok:
        raise ConvergenceError(
            "NDD-free steady state did not converge",
            best_residual=min(best, res),
            stage="linear",
        )
    if not atom.has_ndd:
        return DensityState.from_vector(y_lin)

    n_stages = 1
    while n_stages <= opts.max_stages:
        y = y_lin
        for k in range(1, n_stages + 1):
            y, res, ok = _solve_stage(
                y, atom.scaled_ndd(k / n_stages), p, c, pins, opts
            )
            if not ok:
                best = min(best, res)
                break
        else:
            logger.debug("steady_state: NDD continuation done in %d stages", n_stages)
            return DensityState.from_vector(y)
        n_stages *= 2

    raise ConvergenceError(
        "steady state did not converge after NDD continuation",
        best_residual=best,
        stage=f"continuation/{opts.max_stages}",
    )


def weak_probe_coherence(atom: AtomParams, omega_c: complex) -> complex:
    """
    Linear probe response r = lim rho21 / (Omega_P / 2) about rho11 = 1.

    Absorption is -Im(r); dispersion is Re(r). At two-photon resonance with
    no ground relaxation (and Omega_C != 0) the two-photon pole makes the
    response vanish exactly.
    """
    one_photon = (atom.gamma + 0.5 * atom.gammaD21) + 1j * (atom.delta_p + atom.eps_p)
    omega_c = complex(omega_c)
    if omega_c == 0:
        return -1j / one_photon

    two_photon = atom.gamma31 + 1j * (atom.delta_p - atom.delta_c - atom.eps_p)
    if two_photon == 0:
        return 0j
    return -1j / (one_photon + (abs(omega_c) ** 2 / 4.0) / two_photon)


def weak_probe_spectrum(
    atom: AtomParams, omega_c: complex, delta_p: FloatArray
) -> NDArray[np.complex128]:
    """weak_probe_coherence evaluated over a probe-detuning grid."""
    return np.array(
        [weak_probe_coherence(replace(atom, delta_p=float(d)), omega_c) for d in delta_p],
        dtype=np.complex128,
    )


__all__ = [
    "AtomParams",
    "Drive",
    "DensityState",
    "Trajectory",
    "SolverOptions",
    "DEFAULT_SOLVER_OPTIONS",
    "bloch_rhs",
    "bloch_jacobian",
    "integrate",
    "steady_state",
    "weak_probe_coherence",
    "weak_probe_spectrum",
]

import math
from types import SimpleNamespace
from typing import Optional

import numpy as np
import pytest

from analytic import commutator_rhs
from eit_bistability import bloch
from eit_bistability.bloch import (
    AtomParams,
    DensityState,
    Drive,
    SolverOptions,
    bloch_jacobian,
    bloch_rhs,
    integrate,
    steady_state,
    weak_probe_coherence,
    weak_probe_spectrum,
)
from eit_bistability.exceptions import (
    ConvergenceError,
    DegenerateSteadyStateWarning,
    IntegrationError,
)

NDD = dict(eps_p=0.2, eps_c=0.1, gammaD21=0.3, gammaD23=0.2)


def test_density_state_populations_close_the_trace():
    state = DensityState.from_populations(0.5, 0.2, 0.3, rho21=0.1j, rho23=0.05, rho31=0.02 - 0.01j)
    assert state.populations == pytest.approx((0.5, 0.2, 0.3))
    rho = state.to_matrix()
    assert np.trace(rho).real == pytest.approx(1.0)
    assert np.allclose(rho, rho.conj().T)
    assert rho[1, 0] == 0.1j
    assert state.is_physical()
    assert DensityState.from_vector(state.to_vector()) == state


def test_density_state_detects_unphysical_values():
    assert DensityState.ground().is_physical()
    assert DensityState.excited().rho22 == pytest.approx(1.0)
    assert not DensityState(d21=-1.5, d23=0.0).is_physical()
    assert not DensityState(d21=0.0, d23=0.0, rho21=0.8).is_physical()


def test_parameters_reject_negative_rates():
    with pytest.raises(ValueError, match="gamma31"):
        AtomParams(gamma31=-0.1)
    with pytest.raises(ValueError, match="omega_p"):
        Drive(omega_p=complex(math.inf, 0))


def test_rhs_vanishes_for_ground_state_without_fields():
    rhs = bloch_rhs(DensityState.ground(), AtomParams(), Drive())
    assert np.allclose(rhs.to_vector(), 0.0)


def test_jacobian_matches_finite_differences(rng):
    atom = AtomParams(gamma21=1.0, gamma23=0.8, gamma31=0.15, **NDD, delta_p=0.5, delta_c=-0.2)
    drive = Drive(omega_p=0.9 - 0.4j, omega_c=1.7 + 0.2j)
    y = rng.uniform(-0.4, 0.4, 8)
    state = DensityState.from_vector(y)
    jac = bloch_jacobian(state, atom, drive)

    h = 1e-6
    numeric = np.empty((8, 8))
    for k in range(8):
        dy = np.zeros(8)
        dy[k] = h
        plus = bloch_rhs(DensityState.from_vector(y + dy), atom, drive).to_vector()
        minus = bloch_rhs(DensityState.from_vector(y - dy), atom, drive).to_vector()
        numeric[:, k] = (plus - minus) / (2 * h)
    assert np.allclose(jac, numeric, atol=1e-7)


@pytest.mark.parametrize("x", [0.0, 0.3, 1.0, 4.0])
def test_two_level_steady_state(two_level_atom, x):
    state = steady_state(two_level_atom, Drive(omega_p=x))
    assert state.d21 == pytest.approx(-1.0 / (1.0 + 2 * x * x), abs=1e-10)
    assert state.rho21 == pytest.approx(-1j * x / (1.0 + 2 * x * x), abs=1e-10)
    assert state.rho33 == pytest.approx(0.0, abs=1e-12)
    assert state.rho31 == 0


@pytest.mark.parametrize("omega_c", [0.5, 2.0, 10.0])
def test_dark_state_at_two_photon_resonance(omega_c):
    atom = AtomParams(gamma31=0.0)
    assert weak_probe_coherence(atom, omega_c) == 0
    state = steady_state(atom, Drive(omega_p=1e-4, omega_c=omega_c))
    assert abs(state.rho21) <= 1e-6
    assert state.is_physical()


def test_weak_probe_two_level_limit():
    atom = AtomParams(gamma21=1.0, gamma23=1.0, gamma31=0.0)
    assert weak_probe_coherence(atom, 0.0) == pytest.approx(-1j / atom.gamma)


def test_ndd_shifts_the_absorption_line():
    atom = AtomParams(eps_p=0.5)
    delta = np.linspace(-3.0, 3.0, 6001)
    absorption = -weak_probe_spectrum(atom, 0.0, delta).imag
    assert delta[int(np.argmax(absorption))] == pytest.approx(-0.5, abs=2e-3)


@pytest.mark.parametrize("with_ndd", [False, True])
@pytest.mark.parametrize("omega_c", [0.5, 1.3, 5.0])
def test_linear_response_matches_full_solution(omega_c, with_ndd):
    atom = AtomParams(gamma31=0.0, delta_p=0.7, delta_c=0.3, **(NDD if with_ndd else {}))
    omega_p = 1e-5
    state = steady_state(atom, Drive(omega_p=omega_p, omega_c=omega_c))
    expected = weak_probe_coherence(atom, omega_c)
    assert abs(state.rho21 / (omega_p / 2) - expected) <= 1e-4 * max(1.0, abs(expected))


def test_rabi_oscillation_without_decay():
    atom = AtomParams(gamma21=0.0, gamma23=0.0, gamma31=0.0)
    t = np.linspace(0.0, 10.0, 101)
    traj = integrate(DensityState.ground(), atom, Drive(omega_p=1.0), 10.0, rtol=1e-10, atol=1e-12, t_eval=t)
    assert len(traj) == t.size
    d21 = np.array([state.d21 for _, state in traj])
    assert np.allclose(d21, -np.cos(t), atol=1e-7)


def test_implicit_method_uses_the_analytic_jacobian(two_level_atom):
    drive = Drive(omega_p=1.5)
    explicit = integrate(DensityState.ground(), two_level_atom, drive, 5.0, rtol=1e-10, atol=1e-12).final
    implicit = integrate(
        DensityState.ground(), two_level_atom, drive, 5.0, rtol=1e-10, atol=1e-12, method="Radau"
    ).final
    assert implicit.max_abs_diff(explicit) <= 1e-7


def _random_atom(rng, *, ndd: bool = True, gamma31: Optional[float] = None) -> AtomParams:
    params = dict(
        gamma21=rng.uniform(0.1, 2.0),
        gamma23=rng.uniform(0.0, 2.0),
        gamma31=rng.uniform(0.0, 2.0) if gamma31 is None else gamma31,
        delta_p=rng.uniform(-5.0, 5.0),
        delta_c=rng.uniform(-5.0, 5.0),
    )
    if ndd:
        params.update(
            eps_p=rng.uniform(0.0, 2.0),
            eps_c=rng.uniform(0.0, 2.0),
            gammaD21=rng.uniform(0.0, 2.0),
            gammaD23=rng.uniform(0.0, 2.0),
        )
    return AtomParams(**params)


def test_rhs_matches_commutator_form_without_ndd(rng):
    for _ in range(25):
        atom = _random_atom(rng, ndd=False)
        drive = Drive(
            omega_p=complex(*rng.uniform(-2.5, 2.5, 2)),
            omega_c=complex(*rng.uniform(-2.5, 2.5, 2)),
        )
        state = DensityState.from_vector(rng.uniform(-0.5, 0.5, 8))
        d = commutator_rhs(state.to_matrix(), atom, drive.omega_p, drive.omega_c)
        expected = np.array(
            [
                (d[1, 1] - d[0, 0]).real,
                (d[1, 1] - d[2, 2]).real,
                d[1, 0].real,
                d[1, 0].imag,
                d[1, 2].real,
                d[1, 2].imag,
                d[2, 0].real,
                d[2, 0].imag,
            ]
        )
        assert np.allclose(bloch_rhs(state, atom, drive).to_vector(), expected, atol=1e-12)
        assert abs(np.trace(d)) <= 1e-12


def test_ndd_damping_drains_the_upper_population():
    atom = AtomParams(gammaD21=0.5)
    state = DensityState.from_populations(0.5, 0.5, 0.0, rho21=0.2)
    without = bloch_rhs(state, AtomParams(), Drive())
    with_ndd = bloch_rhs(state, atom, Drive())
    assert with_ndd.d21 - without.d21 == pytest.approx(-0.5 * 0.2**2)
    assert with_ndd.d23 == without.d23


def test_excited_state_decays_at_the_total_rate():
    atom = AtomParams(gamma21=1.0, gamma23=0.5, gamma31=0.0)
    t = 1.0 / (atom.gamma21 + atom.gamma23)
    final = integrate(DensityState.excited(), atom, Drive(), t, rtol=1e-10, atol=1e-12).final
    assert final.rho22 == pytest.approx(math.exp(-1.0), rel=1e-7)
    lost = 1.0 - math.exp(-1.0)
    assert final.rho11 == pytest.approx(lost * 2.0 / 3.0, rel=1e-7)
    assert final.rho33 == pytest.approx(lost / 3.0, rel=1e-7)


def test_coupling_field_pumps_population_into_the_ground_state():
    atom = AtomParams(gamma31=0.0)
    start = DensityState.from_populations(0.0, 0.0, 1.0)
    final = integrate(start, atom, Drive(omega_c=2.0), 150.0, rtol=1e-10, atol=1e-12).final
    assert final.rho11 == pytest.approx(1.0, abs=1e-8)
    assert abs(final.rho21) <= 1e-8


def test_trajectories_stay_physical_without_ndd(rng):
    t = np.linspace(0.0, 30.0, 301)
    for _ in range(10):
        atom = _random_atom(rng, ndd=False)
        drive = Drive(omega_p=rng.uniform(0.0, 5.0), omega_c=rng.uniform(0.0, 5.0))
        start = DensityState.from_populations(*rng.dirichlet(np.ones(3)))
        traj = integrate(start, atom, drive, 30.0, rtol=1e-10, atol=1e-12, t_eval=t)
        assert len(traj) == t.size
        for _, state in traj:
            assert state.is_physical(tol=1e-8)
            assert abs(state.rho21) <= 0.5 + 1e-8


def test_integrator_failure_reports_the_time_reached(monkeypatch):
    def failing_solver(fun, t_span, y0, **kwargs):
        return SimpleNamespace(
            status=-1,
            message="Required step size is less than spacing between numbers.",
            t=np.array([0.0, 2.5]),
            y=np.tile(np.asarray(y0)[:, None], 2),
        )

    monkeypatch.setattr(bloch, "solve_ivp", failing_solver)
    with pytest.raises(IntegrationError, match="step size") as info:
        integrate(DensityState.ground(), AtomParams(), Drive(omega_p=1.0), 10.0)
    assert info.value.t_fail == 2.5


def test_linear_response_over_random_parameters(rng):
    omega_p = 1e-4
    for _ in range(50):
        atom = _random_atom(rng, gamma31=0.0)
        omega_c = rng.uniform(0.5, 5.0)
        state = steady_state(atom, Drive(omega_p=omega_p, omega_c=omega_c))
        expected = weak_probe_coherence(atom, omega_c)
        assert abs(state.rho21 / (omega_p / 2) - expected) <= 1e-3


@pytest.mark.slow
def test_integration_settles_on_the_steady_state(rng):
    compared = agreed = 0
    for _ in range(200):
        atom = _random_atom(rng)
        drive = Drive(omega_p=rng.uniform(0.0, 5.0), omega_c=rng.uniform(0.0, 5.0))
        try:
            state = steady_state(atom, drive)
        except ConvergenceError:
            continue
        t_end = 200.0 / atom.gamma21
        final = integrate(DensityState.ground(), atom, drive, t_end, rtol=1e-10, atol=1e-12).final
        # Still moving: oscillatory or slowly pumped.
        if np.max(np.abs(bloch_rhs(final, atom, drive).to_vector())) > 1e-9:
            continue
        compared += 1
        agreed += state.max_abs_diff(final) <= 1e-6
    assert compared >= 100
    # The few misses settle on a second stationary root.
    assert agreed >= 0.95 * compared


def test_degenerate_system_warns_and_returns_ground():
    with pytest.warns(DegenerateSteadyStateWarning):
        state = steady_state(AtomParams(gamma31=0.0), Drive())
    assert state == DensityState.ground()


def test_warm_start_reaches_the_same_root(two_level_atom):
    cold = steady_state(two_level_atom, Drive(omega_p=2.0))
    warm = steady_state(two_level_atom, Drive(omega_p=2.0), init=steady_state(two_level_atom, Drive(omega_p=1.9)))
    assert warm.max_abs_diff(cold) <= 1e-10


def test_convergence_error_carries_residual():
    atom = AtomParams(gamma31=0.1)
    with pytest.raises(ConvergenceError) as info:
        steady_state(atom, Drive(omega_p=1.0, omega_c=1.0), options=SolverOptions(max_iter=0))
    assert info.value.stage == "linear"
    assert info.value.best_residual > 0


def test_integrate_validates_arguments():
    atom, drive = AtomParams(), Drive(omega_p=1.0)
    with pytest.raises(ValueError, match="t_end"):
        integrate(DensityState.ground(), atom, drive, 0.0)
    with pytest.raises(ValueError, match="rtol"):
        integrate(DensityState.ground(), atom, drive, 1.0, rtol=0.1)

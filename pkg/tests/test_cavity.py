import cmath
import math

import numpy as np
import pytest

from analytic import mean_field, two_level_turning_points, two_level_y
from eit_bistability.bloch import AtomParams, weak_probe_coherence
from eit_bistability.cavity import (
    CavityMode,
    CavityParams,
    ScanPoint,
    detect_jumps,
    hysteresis_scan,
    input_from_output,
    propagate_medium,
    ring_fixed_point,
    ring_map,
    state_equation,
)


def test_empty_cavity_transmits_input(two_level_atom):
    for x in (0.0, 0.5, 3.0):
        assert state_equation(x, two_level_atom, 0.0, mean_field(0.0)) == pytest.approx(x)


@pytest.mark.parametrize("x", [0.1, 0.79, 2.0, 8.0])
def test_two_level_state_equation(two_level_atom, x):
    y = state_equation(x, two_level_atom, 0.0, mean_field(10.0))
    assert y.real == pytest.approx(two_level_y(x, 10.0), rel=1e-9)
    assert abs(y.imag) <= 1e-9


def test_cavity_detuning_adds_imaginary_part(two_level_atom):
    cav = CavityParams(C=0.0, T=0.1, theta=0.05)
    assert state_equation(2.0, two_level_atom, 0.0, cav) == pytest.approx(2.0 * (1 + 0.5j))


@pytest.mark.parametrize("omega_c", [1.0, 3.0])
def test_weak_field_slope(omega_c):
    atom = AtomParams(gamma31=0.0, delta_p=0.2)
    x, C = 1e-5, 150.0
    slope = state_equation(x, atom, omega_c, mean_field(C)) / x
    expected = 1 + 2j * atom.gamma * C * weak_probe_coherence(atom, omega_c)
    assert slope == pytest.approx(expected, rel=1e-6)


def test_state_equation_rejects_bad_input(two_level_atom):
    with pytest.raises(ValueError, match="x must be"):
        state_equation(-1.0, two_level_atom, 0.0, mean_field(1.0))
    with pytest.raises(ValueError, match="mean-field"):
        state_equation(1.0, two_level_atom, 0.0, CavityParams.mean_field_limit(1.0, 0.1))


def test_propagation_without_medium_is_identity(two_level_atom):
    assert propagate_medium(0.7 + 0.2j, two_level_atom, 0.0, 0.0) == 0.7 + 0.2j


def test_weak_field_propagation_follows_beer_law(two_level_atom):
    e_out = propagate_medium(1e-5, two_level_atom, 0.0, 0.5, n_steps=32)
    assert e_out / 1e-5 == pytest.approx(math.exp(-0.5), rel=1e-7)


def test_dark_medium_is_transparent():
    e_out = propagate_medium(0.01, AtomParams(gamma31=0.0), 1.0, 2.0)
    assert e_out / 0.01 == pytest.approx(1.0, abs=1e-6)


def test_propagation_validates_arguments(two_level_atom):
    with pytest.raises(ValueError, match="alphaL"):
        propagate_medium(1.0, two_level_atom, 0.0, -0.1)
    with pytest.raises(ValueError, match="n_steps"):
        propagate_medium(1.0, two_level_atom, 0.0, 0.1, n_steps=8)


def test_fully_transmitting_mirror_returns_input(two_level_atom):
    cav = CavityParams(T=1.0, mode=CavityMode.Z_RESOLVED, alphaL=0.3)
    assert ring_map(0.4, 1.3 + 0.1j, two_level_atom, 0.0, cav) == pytest.approx(1.3 + 0.1j)


def test_empty_ring_fixed_point(two_level_atom):
    cav = CavityParams(T=0.2, theta=0.3, mode=CavityMode.Z_RESOLVED, alphaL=0.0)
    y_in = 0.8
    expected = math.sqrt(cav.T) * y_in / (1 - cav.R * cmath.exp(-1j * cav.theta))
    assert ring_fixed_point(y_in, two_level_atom, 0.0, cav) == pytest.approx(expected, abs=1e-10)


def test_input_from_output_is_a_ring_fixed_point(two_level_atom):
    cav = CavityParams.mean_field_limit(10.0, 0.1, n_steps=16)
    x = 0.3
    y = input_from_output(x, two_level_atom, 0.0, cav)
    e0 = ring_fixed_point(math.sqrt(cav.T) * y, two_level_atom, 0.0, cav, e0_guess=x)
    assert ring_map(e0, math.sqrt(cav.T) * y, two_level_atom, 0.0, cav) == pytest.approx(e0, abs=1e-9)
    assert propagate_medium(e0, two_level_atom, 0.0, cav.alphaL, cav.n_steps) == pytest.approx(x, abs=1e-6)


def test_z_resolved_cavity_approaches_mean_field(two_level_atom):
    x, C = 0.3, 10.0
    reference = two_level_y(x, C)
    errors = []
    for alphaL in (0.1, 0.01, 0.001):
        cav = CavityParams.mean_field_limit(C, alphaL, n_steps=16)
        assert cav.effective_C == pytest.approx(C)
        errors.append(abs(input_from_output(x, two_level_atom, 0.0, cav) - reference))
    for coarse, fine in zip(errors, errors[1:]):
        assert 0.05 <= fine / coarse <= 0.2


def test_mean_field_limit_rejects_large_absorption():
    with pytest.raises(ValueError, match="T would exceed 1"):
        CavityParams.mean_field_limit(0.1, 1.0)


@pytest.mark.parametrize(
    "kwargs, match",
    [
        (dict(C=-1.0), "C must"),
        (dict(T=0.0), "T must"),
        (dict(T=1.5), "T must"),
        (dict(mode="z-resolved", alphaL=-1.0), "alphaL"),
        (dict(mode="z-resolved", n_steps=4), "n_steps"),
    ],
)
def test_cavity_parameter_validation(kwargs, match):
    with pytest.raises(ValueError, match=match):
        CavityParams(**kwargs)


def test_hysteresis_scan_switches_at_turning_points(two_level_atom):
    (x_up, y_up), (x_down, y_down) = two_level_turning_points(10.0)
    step = 0.01
    ramp = np.round(np.arange(5.5, 8.5 + step / 2, step), 10)
    scan = hysteresis_scan(two_level_atom, 0.0, mean_field(10.0), ramp)

    assert [p.direction for p in scan] == ["up"] * ramp.size + ["down"] * ramp.size
    jumps = detect_jumps(scan)
    assert [j.direction for j in jumps] == ["up", "down"]

    up, down = jumps
    assert up.y_before - step <= y_up <= up.y_after + step
    assert up.x_before < x_up < up.x_after
    assert down.y_after - step <= y_down <= down.y_before + step
    assert down.x_after < x_down < down.x_before


def test_scan_without_bistability_is_reversible(two_level_atom):
    ramp = np.linspace(0.5, 6.0, 12)
    scan = hysteresis_scan(two_level_atom, 0.0, mean_field(2.0), ramp, tol=1e-11)
    up = {p.y: p.x for p in scan if p.direction == "up"}
    down = {p.y: p.x for p in scan if p.direction == "down"}
    assert all(p.converged for p in scan)
    for y, x in up.items():
        assert down[y] == pytest.approx(x, abs=1e-8)
        assert two_level_y(x, 2.0) == pytest.approx(y, abs=1e-7)
    assert detect_jumps(scan) == []


def test_one_way_scan_keeps_ramp_order(two_level_atom):
    scan = hysteresis_scan(two_level_atom, 0.0, mean_field(1.0), [3.0, 2.0, 1.0], up_then_down=False)
    assert [(p.direction, p.y) for p in scan] == [("down", 3.0), ("down", 2.0), ("down", 1.0)]


def test_z_resolved_scan_settles_within_a_few_round_trips(two_level_atom):
    cav = CavityParams.mean_field_limit(10.0, 0.05, n_steps=16)
    ramp = [1.0, 2.0, 3.0]
    scan = hysteresis_scan(two_level_atom, 0.0, cav, ramp, up_then_down=False, max_iter=200)
    assert [p.y for p in scan] == ramp
    assert all(p.converged for p in scan)
    # Plain round trips would need several hundred passes at T = 0.0025.
    assert max(p.iterations for p in scan) < 100
    for p in scan:
        assert abs(input_from_output(p.x, two_level_atom, 0.0, cav)) == pytest.approx(p.y, rel=1e-5)


@pytest.mark.parametrize("ramp", [[1.0, 1.0, 2.0], [1.0, 2.0, 1.5], [-1.0, 0.0], []])
def test_scan_rejects_bad_ramps(two_level_atom, ramp):
    with pytest.raises(ValueError, match="y_ramp"):
        hysteresis_scan(two_level_atom, 0.0, mean_field(1.0), ramp)


def test_detect_jumps_ignores_unconverged_points():
    scan = [
        ScanPoint("up", 1.0, 0.1, True),
        ScanPoint("up", 1.01, 0.12, True),
        ScanPoint("up", 1.02, 5.0, False),
        ScanPoint("up", 1.03, 4.0, True),
        ScanPoint("down", 1.03, 4.0, True),
        ScanPoint("down", 1.02, 3.9, True),
    ]
    jumps = detect_jumps(scan)
    assert len(jumps) == 1
    assert (jumps[0].y_before, jumps[0].y_after) == (1.01, 1.03)

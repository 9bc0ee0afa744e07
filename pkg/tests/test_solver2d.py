import math

import numpy as np
import pytest

from fbns.solver2d import (VorticityState, advance_velocity, advance_vorticity,
                           biot_savart, coriolis_projection_identity,
                           czero_constant, frame_rotation, gaussian_vortex,
                           gradient_lp, gronwall_diagnostic, lp_physical,
                           rotating_frame_residual, rotating_frame_transform,
                           rotation_generator, run_vorticity)
from fbns.spectral import (Grid, SpectralField, curl, dealias,
                           divergence_defect, forward_transform, gradient,
                           physical, random_divfree_field,
                           random_scalar_field, taylor_green_2d)

GRID = Grid(dim=2, n=32, period_l=1.0)


def scalar_mode_cos_x1(grid):
    coeffs = np.zeros((1,) + grid.shape, dtype=np.complex128)
    coeffs[0, 1, 0] = coeffs[0, -1, 0] = 0.5
    return SpectralField(grid, coeffs)


# ---------------------------------------------------------------------------
# Biot-Savart

def test_biot_savart_hand_oracle():
    w = scalar_mode_cos_x1(GRID)  # w = cos x1
    v = biot_savart(w)
    x1 = GRID.x_axis(0) + np.zeros(GRID.shape)
    vp = physical(v)
    assert np.max(np.abs(vp[0])) < 1e-14
    assert np.max(np.abs(vp[1] - np.sin(x1))) < 1e-13


def test_biot_savart_inverts_curl():
    w = random_scalar_field(GRID, seed=70)
    v = biot_savart(w)
    assert divergence_defect(v) < 1e-14
    back = curl(v)
    assert np.max(np.abs(back.coeffs - w.coeffs)) < 1e-13
    with pytest.raises(ValueError):
        biot_savart(v)  # vector input


def test_frame_rotation_matches_generator():
    omega, t = 7.0, 0.3
    m = rotation_generator(omega)
    assert np.allclose(m, -0.5 * omega * np.array([[0.0, -1.0], [1.0, 0.0]]))
    # exp(tM) for the 2x2 generator, via its series on the rotation plane
    angle = -0.5 * omega * t
    expected = np.array([[math.cos(angle), -math.sin(angle)],
                         [math.sin(angle), math.cos(angle)]])
    assert np.max(np.abs(frame_rotation(omega, t) - expected)) < 1e-15
    assert np.max(np.abs(frame_rotation(omega, t) @ frame_rotation(omega, -t)
                         - np.eye(2))) < 1e-15


# ---------------------------------------------------------------------------
# time stepping

def test_taylor_green_vorticity_decays_exactly():
    w0 = curl(taylor_green_2d(GRID))
    state = advance_vorticity(VorticityState(w0), dt=1e-3, steps=100)
    expected = w0.coeffs * math.exp(-2.0 * 0.1)
    assert np.max(np.abs(state.w.coeffs - expected)) < 1e-12
    assert math.isclose(state.t, 0.1)


def test_run_vorticity_sampling_layout():
    w0 = gaussian_vortex(GRID, width_sq=0.3)
    times, states = run_vorticity(w0, dt=1e-3, n_steps=10, sample_every=4)
    assert times.tolist() == pytest.approx([0.0, 4e-3, 8e-3, 10e-3])
    assert [st.t for st in states] == pytest.approx(times.tolist())
    assert np.array_equal(states[0].w.coeffs, dealias(w0).coeffs)
    with pytest.raises(ValueError):
        run_vorticity(w0, dt=1e-3, n_steps=5, sample_every=0)
    with pytest.raises(ValueError):
        advance_vorticity(VorticityState(w0), dt=-1e-3, steps=2)


def test_cfl_warning():
    w0 = gaussian_vortex(GRID, width_sq=0.3, amplitude=50.0)
    with pytest.warns(RuntimeWarning, match="CFL"):
        advance_vorticity(VorticityState(w0), dt=0.5, steps=1)


def test_velocity_and_vorticity_steppers_agree_on_taylor_green():
    u0 = taylor_green_2d(GRID)
    w0 = curl(u0)
    u1 = advance_velocity(u0, dt=1e-3, steps=50, omega=10.0, coriolis=True)
    state = advance_vorticity(VorticityState(w0), dt=1e-3, steps=50)
    assert np.max(np.abs(curl(u1).coeffs - state.w.coeffs)) < 1e-13


def test_coriolis_term_is_invisible_after_projection():
    grid = Grid(dim=2, n=32, period_l=1.0)
    u0 = random_divfree_field(grid, seed=71)
    assert coriolis_projection_identity(u0) < 1e-13
    grad = gradient(random_scalar_field(grid, seed=72))
    assert coriolis_projection_identity(grad) > 0.1
    with_rot = advance_velocity(u0, dt=1e-3, steps=40, omega=10.0, coriolis=True)
    without = advance_velocity(u0, dt=1e-3, steps=40, omega=10.0, coriolis=False)
    assert np.max(np.abs(with_rot.coeffs - without.coeffs)) < 1e-10


def test_vorticity_state_validation():
    with pytest.raises(ValueError):
        VorticityState(taylor_green_2d(GRID))  # vector field
    grid3 = Grid(dim=3, n=8, period_l=1.0)
    w3 = random_scalar_field(grid3, seed=1)
    with pytest.raises(ValueError):
        VorticityState(w3)


# ---------------------------------------------------------------------------
# rotating frame

def test_transform_identity_at_time_zero():
    w = gaussian_vortex(GRID, width_sq=0.4)
    got = rotating_frame_transform(w, 0.0, omega=9.0)
    assert np.max(np.abs(got - physical(w)[0])) < 1e-11
    v = biot_savart(w)
    got_v = rotating_frame_transform(v, 0.0, omega=9.0)
    assert np.max(np.abs(got_v - physical(v))) < 1e-11


def test_transform_matches_closed_form_gaussian():
    # width wide enough that the n = 64 band resolves the profile to
    # rounding, narrow enough that periodic images stay negligible
    grid = Grid(dim=2, n=64, period_l=1.0)
    c = np.array([math.pi, math.pi])
    c0 = c + np.array([0.9, 0.0])
    width_sq = 0.15
    w = gaussian_vortex(grid, width_sq=width_sq, center=c0)
    mean = float(forward_transform(
        np.exp(-(((grid.x_axis(0) + np.zeros(grid.shape)) - c0[0])**2
                 + ((grid.x_axis(1) + np.zeros(grid.shape)) - c0[1])**2)
               / width_sq), grid).coeffs[0, 0, 0].real)
    t, omega = 0.4, 5.0
    angles = np.linspace(0.0, 2.0 * math.pi, 17)
    pts = np.stack([c[0] + 0.9 * np.cos(angles), c[1] + 0.9 * np.sin(angles)],
                   axis=1)
    got = rotating_frame_transform(w, t, omega, center=c, points=pts)
    rot = frame_rotation(omega, t)
    moved = (pts - c) @ rot.T + c
    expected = np.exp(-np.sum((moved - c0)**2, axis=1) / width_sq) - mean
    assert np.max(np.abs(got - expected)) < 1e-11


def interior_disk(grid, radius=3.0):
    # rotation invariance of a periodized profile only survives where the
    # rotated points stay clear of the tails of the periodic images
    x1 = grid.x_axis(0) + np.zeros(grid.shape)
    x2 = grid.x_axis(1) + np.zeros(grid.shape)
    half = grid.box_length / 2.0
    return (x1 - half)**2 + (x2 - half)**2 <= radius**2


def test_transform_radial_scalar_is_invariant():
    grid = Grid(dim=2, n=64, period_l=1.0)
    w = dealias(gaussian_vortex(grid, width_sq=0.3))
    base = physical(w)[0]
    disk = interior_disk(grid)
    for t in (0.2, 1.1):
        got = rotating_frame_transform(w, t, omega=6.0)
        assert np.max(np.abs((got - base)[disk])) < 1e-12


def test_transform_component_rotation_composes():
    # vector output is exp(-tM) applied to the point-moved samples
    grid = Grid(dim=2, n=64, period_l=1.0)
    v = biot_savart(dealias(gaussian_vortex(grid, width_sq=0.3)))
    t, omega = 0.7, 4.0
    moved_only = rotating_frame_transform(v, t, omega, rotate_components=False)
    assert moved_only.shape == (2,) + grid.shape
    back = frame_rotation(omega, -t)
    expected = np.stack([back[0, 0] * moved_only[0] + back[0, 1] * moved_only[1],
                         back[1, 0] * moved_only[0] + back[1, 1] * moved_only[1]])
    got = rotating_frame_transform(v, t, omega)  # vector default rotates
    assert np.max(np.abs(got - expected)) < 1e-12


def test_transform_point_mode_and_validation():
    w = gaussian_vortex(GRID, width_sq=0.3)
    pts = np.array([[math.pi, math.pi], [1.0, 2.0]])
    vals = rotating_frame_transform(w, 0.3, omega=2.0, points=pts)
    assert vals.shape == (2,)
    with pytest.raises(ValueError, match="shape"):
        rotating_frame_transform(w, 0.3, omega=2.0, points=np.zeros((3,)))
    grid3 = Grid(dim=3, n=8, period_l=1.0)
    with pytest.raises(ValueError, match="two-dimensional"):
        rotating_frame_transform(random_scalar_field(grid3, seed=0), 0.1, 1.0)


def offcenter_fixture(n=64, dt=5e-4):
    grid = Grid(dim=2, n=n, period_l=2.0)
    center = np.array([2.0 * math.pi, 2.0 * math.pi])
    w0 = gaussian_vortex(grid, width_sq=0.1, center=center + np.array([0.8, 0.0]))
    h = 1e-3
    sub = int(round(h / dt))
    state = advance_vorticity(VorticityState(w0), dt, int(round(0.149 / dt)))
    samples = [state]
    for _ in range(2):
        samples.append(advance_vorticity(samples[-1], dt, sub, check_cfl=False))
    times = np.array([st.t for st in samples])
    fields = [st.w for st in samples]
    return times, fields, center


def test_rotating_residual_positive_and_negative_control():
    times, fields, center = offcenter_fixture()
    good = rotating_frame_residual(times, fields, 5.0, mask_radius=1.5,
                                   center=center)
    assert good["max_residual"] < 1e-4
    assert good["mask_points"] > 100
    assert len(good["per_time"]) == 1
    # the identity also holds in the inertial frame (omega = 0 reduces it
    # to the plain vorticity equation)
    inertial = rotating_frame_residual(times, fields, 0.0, mask_radius=1.5,
                                       center=center)
    assert inertial["max_residual"] < 1e-4
    # a frozen trajectory solves nothing: the diffusion term survives
    # the diffusion term of the spread gaussian is about 0.8 in size
    frozen = rotating_frame_residual(times, [fields[0]] * 3, 5.0,
                                     mask_radius=1.5, center=center)
    assert frozen["max_residual"] > 0.5


def test_rotating_residual_validation():
    times, fields, center = offcenter_fixture(n=32, dt=1e-3)
    with pytest.raises(ValueError, match="three aligned samples"):
        rotating_frame_residual(times[:2], fields[:2], 1.0, 1.5, center=center)
    with pytest.raises(ValueError, match="uniform"):
        rotating_frame_residual(np.array([0.0, 1e-3, 3e-3]), fields, 1.0, 1.5,
                                center=center)
    with pytest.raises(ValueError, match="interior mask is empty"):
        rotating_frame_residual(times, fields, 1.0, mask_radius=1e-6,
                                center=center + 0.123)
    wide = gaussian_vortex(Grid(dim=2, n=32, period_l=1.0), width_sq=8.0)
    with pytest.raises(ValueError, match="boundary annulus"):
        rotating_frame_residual(np.array([0.0, 1e-3, 2e-3]), [wide] * 3, 1.0, 1.5)


# ---------------------------------------------------------------------------
# Lebesgue diagnostics

def test_lp_physical_hand_values():
    w = scalar_mode_cos_x1(GRID)  # cos x1 on the 2 pi square
    assert abs(lp_physical(w, 2.0) - math.pi * math.sqrt(2.0)) < 1e-13
    assert abs(lp_physical(w, float("inf")) - 1.0) < 1e-14
    v = biot_savart(w)  # (0, sin x1)
    assert abs(lp_physical(v, 2.0) - math.pi * math.sqrt(2.0)) < 1e-13
    with pytest.raises(ValueError):
        lp_physical(w, 0.5)


def test_gradient_l2_equals_vorticity_l2():
    w = random_scalar_field(GRID, seed=73)
    v = biot_savart(w)
    assert abs(gradient_lp(v, 2.0) - lp_physical(w, 2.0)) < 1e-12


def test_czero_constant_values_and_range():
    assert czero_constant(2.0) == 4.0
    assert abs(czero_constant(4.0) - 16.0 / 3.0) < 1e-15
    for bad in (1.5, float("inf")):
        with pytest.raises(ValueError):
            czero_constant(bad)


def test_gronwall_on_taylor_green():
    w0 = curl(taylor_green_2d(GRID))
    times, states = run_vorticity(w0, dt=1e-3, n_steps=200, sample_every=50)
    out = gronwall_diagnostic(times, states, p_values=(2.0, 4.0))
    for p in (2.0, 4.0):
        summary = out["summary"][p]
        # the velocity only decays, so C = 1 closes the bound at t = t1
        assert abs(summary["gronwall_constant"] - 1.0) < 1e-9
        assert summary["vorticity_margin"] >= 0.0
        assert summary["cz_margin"] > 0.0
    p2 = out["summary"][2.0]
    assert abs(p2["cz_ratio_t1"] - 1.0) < 1e-12
    rows = [r for r in out["rows"] if r.p == 2.0]
    assert len(rows) == len(times)
    assert all(r.gronwall_margin >= -1e-10 for r in rows)
    assert all(r.cz_margin >= 0.0 for r in rows)


def test_gronwall_validation():
    w0 = curl(taylor_green_2d(GRID))
    times, states = run_vorticity(w0, dt=1e-3, n_steps=4, sample_every=2)
    with pytest.raises(ValueError, match="aligned"):
        gronwall_diagnostic(times[:-1], states, (2.0,))
    with pytest.raises(ValueError, match="t1_index"):
        gronwall_diagnostic(times, states, (2.0,), t1_index=len(times) - 1)

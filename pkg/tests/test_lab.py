import math

import numpy as np
import pytest

from fbns.lab import (STABILITY_LIMIT, constant_trajectory,
                      decaying_trajectory, default_lab_grid, lab_times,
                      member_seed, omega_independence_scan,
                      pointwise_product_trajectory, product_y_norm,
                      sweep_product_estimate, verify_duhamel_smoothing,
                      verify_product_estimate, verify_semigroup_bounds)
from fbns.lp import INF, chemin_lerner_norm, critical_index, shell_profile
from fbns.semigroup import duhamel_sweep
from fbns.spectral import Grid, SpectralField

GRID = default_lab_grid()  # 16^3, period 4


def transverse_mode(grid, k=(4, 0, 0), a=(0.0, 1.0, 0.0)):
    coeffs = np.zeros((3,) + grid.shape, dtype=np.complex128)
    for comp in range(3):
        coeffs[(comp,) + tuple(k)] = a[comp] / 2.0
        coeffs[(comp,) + tuple(-ki for ki in k)] = a[comp] / 2.0
    return SpectralField(grid, coeffs)


def test_member_seed_flattens():
    assert member_seed(7, 3) == (7, 3)
    assert member_seed((7, 1), 3) == (7, 1, 3)
    a = decaying_trajectory(GRID, lab_times(), seed=7, index=3)
    b = decaying_trajectory(GRID, lab_times(), seed=7, index=3)
    c = decaying_trajectory(GRID, lab_times(), seed=7, index=4)
    assert np.array_equal(a.coeffs, b.coeffs)
    assert not np.array_equal(a.coeffs, c.coeffs)


def test_lab_times_validation():
    times = lab_times(0.5, 9)
    assert times[0] == 0.0 and times[-1] == 0.5 and times.size == 9
    with pytest.raises(ValueError):
        lab_times(0.0, 9)
    with pytest.raises(ValueError):
        lab_times(1.0, 1)


# ---------------------------------------------------------------------------
# Duhamel smoothing

def test_duhamel_ratio_closed_form_single_mode():
    # constant forcing in a single transverse mode at |xi| = 1, no rotation:
    # the integral is (1 - e^{-t}) g per mode, so the ratio of the two
    # Chemin-Lerner norms (q = a = 1) reduces to the shell-weight quotient
    # times int_0^1 (1 - e^{-t}) dt = 1/e
    g = transverse_mode(GRID)
    times = np.linspace(0.0, 1.0, 257)
    forcing = constant_trajectory(g, times)
    integral = duhamel_sweep(forcing, omega=0.0)
    s, p, r, q, a = 0.5, 2.0, 2.0, 1.0, 1.0
    rhs_index = s - 2.0 - 2.0 / q + 2.0 / a
    lhs = chemin_lerner_norm(integral, s, p, r, q).total
    rhs = chemin_lerner_norm(forcing, rhs_index, p, r, a).total

    def weight(sigma):
        vals = [2.0 ** (j * sigma) * shell_profile(np.array([1.0]), j)[0]
                for j in (-1, 0)]
        return math.sqrt(sum(v * v for v in vals))

    expected = math.exp(-1.0) * weight(s) / weight(rhs_index)
    assert abs(lhs / rhs - expected) < 1e-4 * expected


def test_verify_duhamel_smoothing_report():
    rep = verify_duhamel_smoothing(q=1.0, a=1.0, ensemble=6, seed=11)
    assert rep.name == "duhamel_smoothing"
    assert rep.params["s"] == critical_index(2.0)
    assert rep.params["rhs_index"] == critical_index(2.0) - 2.0
    assert len(rep.ratios) == 12 and rep.discarded == 0
    assert all(math.isfinite(x) for x in rep.ratios)
    assert 0.0 < rep.median_ratio <= rep.max_ratio
    assert rep.stability < STABILITY_LIMIT and rep.passed
    sup = verify_duhamel_smoothing(q=INF, a=1.0, ensemble=4, seed=11)
    assert sup.params["rhs_index"] == critical_index(2.0)
    assert sup.passed


def test_verify_duhamel_smoothing_validation():
    with pytest.raises(ValueError, match="a <= q"):
        verify_duhamel_smoothing(q=1.0, a=2.0)
    with pytest.raises(ValueError, match=">= 1"):
        verify_duhamel_smoothing(q=1.0, a=0.5)


def test_duhamel_reports_are_reproducible():
    one = verify_duhamel_smoothing(ensemble=3, seed=5)
    two = verify_duhamel_smoothing(ensemble=3, seed=5)
    assert one.ratios == two.ratios
    assert one.as_dict() == two.as_dict()


# ---------------------------------------------------------------------------
# product estimate

def test_pointwise_product_single_modes():
    grid = Grid(dim=3, n=16, period_l=1.0)
    times = np.linspace(0.0, 1.0, 3)
    cu = np.zeros((1,) + grid.shape, dtype=np.complex128)
    cu[0, 1, 0, 0] = cu[0, -1, 0, 0] = 0.5
    cv = np.zeros((1,) + grid.shape, dtype=np.complex128)
    cv[0, 0, 1, 0] = cv[0, 0, -1, 0] = 0.5
    u = constant_trajectory(SpectralField(grid, cu), times)
    v = constant_trajectory(SpectralField(grid, cv), times)
    w = pointwise_product_trajectory(u, v)
    expected = np.zeros(grid.shape, dtype=np.complex128)
    for k1 in (1, -1):
        for k2 in (1, -1):
            expected[k1, k2, 0] = 0.25
    assert np.max(np.abs(w.coeffs[0, 0] - expected)) < 1e-15
    assert np.max(np.abs(w.coeffs[2, 0] - expected)) < 1e-15
    shifted = constant_trajectory(SpectralField(grid, cv), times + 0.5)
    with pytest.raises(ValueError, match="different times"):
        pointwise_product_trajectory(u, shifted)


def test_verify_product_estimate_report_and_range():
    rep = verify_product_estimate(s=0.5, ensemble=5, seed=3)
    assert rep.name == "product_estimate"
    assert rep.passed and rep.discarded == 0
    assert rep.max_ratio > 0
    with pytest.raises(ValueError, match="admissible open interval"):
        verify_product_estimate(s=-1.0)
    with pytest.raises(ValueError, match="admissible open interval"):
        verify_product_estimate(s=1.5, p=2.0)  # upper endpoint 3 - 3/p
    with pytest.raises(ValueError, match="must exceed 1"):
        verify_product_estimate(p=1.0)


def test_sweep_product_estimate():
    reports = sweep_product_estimate([-0.5, 0.0, 0.5], ensemble=2, seed=4)
    assert [rep.params["s"] for rep in reports] == [-0.5, 0.0, 0.5]
    assert all(rep.passed for rep in reports)


def test_product_y_norm_is_sum_of_parts():
    traj = decaying_trajectory(GRID, lab_times(), seed=2, index=0, scalar=True)
    y = product_y_norm(traj, 0.5, 2.0, 2.0)
    parts = (chemin_lerner_norm(traj, 0.5, 2.0, 2.0, INF).total
             + chemin_lerner_norm(traj, 4.0 - 1.5, 2.0, 2.0, 1.0).total)
    assert math.isclose(y, parts, rel_tol=1e-14)


# ---------------------------------------------------------------------------
# semigroup bounds and rotation independence

def test_semigroup_bounds_sup_ratio_is_one():
    rep = verify_semigroup_bounds(ensemble=5, seed=6)
    assert rep.max_ratio == pytest.approx(1.0, abs=1e-13)
    assert rep.passed
    assert rep.details["smoothing_max"] > 0
    assert rep.details["smoothing_stability"] < STABILITY_LIMIT


def test_semigroup_bounds_rotation_invariant_norms():
    base = verify_semigroup_bounds(ensemble=4, seed=8, omega=0.0)
    fast = verify_semigroup_bounds(ensemble=4, seed=8, omega=50.0)
    assert np.allclose(base.ratios, fast.ratios, rtol=1e-10, atol=1e-13)
    got = fast.details["smoothing_ratios"]
    want = base.details["smoothing_ratios"]
    assert np.allclose(got, want, rtol=1e-10)


def test_omega_scan_linear():
    out = omega_independence_scan("linear", [0.0, 10.0], seed=9, ensemble=2)
    assert out["experiment"] == "linear"
    assert out["omegas"] == [0.0, 10.0]
    assert len(out["constants"]) == 2
    assert out["variation"] < 1e-10
    assert not out["flagged"]
    assert all("max_ratio" in entry for entry in out["per_omega"])


def test_omega_scan_contraction():
    out = omega_independence_scan("contraction", [0.0, 10.0], seed=1)
    assert len(out["constants"]) == 2
    assert all(c > 0 for c in out["constants"])
    assert all(entry["converged"] for entry in out["per_omega"])
    # rotation only helps: no growth over the omega = 0 baseline
    assert out["variation"] == 0.0
    assert not out["flagged"]


def test_omega_scan_empty_and_unknown():
    out = omega_independence_scan("linear", [], ensemble=2)
    assert out["constants"] == [] and out["variation"] == 0.0
    assert not out["flagged"]
    with pytest.raises(ValueError, match="unknown experiment"):
        omega_independence_scan("bilinear", [0.0])

"""Small-data mild solver for the 3d rotating Navier-Stokes equations.

The fixed point of

    u(t) = T(t) u0 - integral_0^t T(t - tau) P div(u (x) u)(tau) dtau

is computed by Picard iteration on trajectories sampled on a uniform time
grid, with the Duhamel integral advanced by exact multiplier composition
per interval.  The contraction metric is the mild norm: sup-in-time
critical Fourier-Besov norm plus the time-integrated smoothing norm.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from . import lp
from .semigroup import _local_integrals, _apply_multiplier, _quarter_turn, _symbols
from .spectral import (Grid, SpectralField, dealias, divergence_defect,
                       forward_transform, helmholtz_project, inverse_transform)
from .trajectory import Trajectory

INF = float("inf")

# Empirical bound on the constants entering the fixed-point argument at
# desk scale: mild-norm ratios of linear trajectories (max observed 1.50
# at 32^3) and of the bilinear Duhamel term against products of factor
# norms (max observed 1.33, decreasing with rotation rate), both measured
# over seeded 40-member ensembles at p = r = 2, horizon 1.  Rounded up;
# with C = 2 the worst-case contraction factor 4 C eps at gate-passing
# data is exactly 1/2.
DEFAULT_GATE_CONSTANT = 2.0


@dataclass
class SolverConfig3D:
    grid: Grid
    omega: float = 0.0
    p: float = 2.0
    r: float = 2.0
    horizon: float = 1.0
    dt: float = 1.0 / 64.0
    max_iterations: int = 25
    tolerance: float = 1e-9
    dealias: bool = True
    nonlinearity: bool = True
    scheme: str = "exponential-midpoint"
    gate_constant: float = DEFAULT_GATE_CONSTANT

    def __post_init__(self):
        if self.grid.dim != 3:
            raise ValueError("the 3d solver needs a 3d grid")
        if not self.p > 1:
            raise ValueError(
                f"integrability index p must lie in (1, inf], got {self.p}; "
                "the critical-space contraction argument fails at p = 1"
            )
        if not self.r >= 1:
            raise ValueError(f"summation index r must lie in [1, inf], got {self.r}")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if not 0 < self.dt <= self.horizon:
            raise ValueError("need 0 < dt <= horizon")
        steps = self.horizon / self.dt
        if abs(steps - round(steps)) > 1e-9:
            raise ValueError("horizon must be an integer multiple of dt")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.scheme not in ("exponential-midpoint", "trapezoid"):
            raise ValueError(f"unknown scheme {self.scheme!r}")

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt


@dataclass
class GateReport:
    norm: float
    constant: float
    epsilon: float
    threshold: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            "norm": float(self.norm),
            "constant": float(self.constant),
            "epsilon": float(self.epsilon),
            "threshold": float(self.threshold),
            "passed": bool(self.passed),
        }


@dataclass
class IterationDiagnostics:
    iterate_norms: list = dataclass_field(default_factory=list)
    diff_norms: list = dataclass_field(default_factory=list)
    ratios: list = dataclass_field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    aborted: bool = False
    residual_estimate: float = math.nan
    linear_norm: float = math.nan
    gate: GateReport | None = None
    message: str = ""

    def as_dict(self) -> dict:
        return {
            "iterate_norms": [float(v) for v in self.iterate_norms],
            "diff_norms": [float(v) for v in self.diff_norms],
            "ratios": [float(v) for v in self.ratios],
            "iterations": self.iterations,
            "converged": self.converged,
            "aborted": self.aborted,
            "residual_estimate": float(self.residual_estimate),
            "linear_norm": float(self.linear_norm),
            "gate": self.gate.as_dict() if self.gate else None,
            "message": self.message,
        }


def smallness_gate(u0: SpectralField, p: float, r: float,
                   constant: float | None = None) -> GateReport:
    """Advisory check that the critical norm of the data is small enough for
    the contraction argument: with empirical constant C the iteration
    contracts once eps <= 1/(8C) and ||u0|| <= eps/C, so the threshold on
    the data norm is 1/(8 C^2).  Boundary values pass (<= convention)."""
    c = DEFAULT_GATE_CONSTANT if constant is None else float(constant)
    if not c > 0:
        raise ValueError("gate constant must be positive")
    norm = lp.fb_norm_value(u0, lp.critical_index(p), p, r)
    epsilon = 1.0 / (8.0 * c)
    threshold = epsilon / c
    passed = norm <= threshold * (1.0 + 1e-12)
    return GateReport(norm=norm, constant=c, epsilon=epsilon,
                      threshold=threshold, passed=passed)


def _physical_components(field: SpectralField) -> np.ndarray:
    # real parts only: solver states are Hermitian-symmetric by construction
    return inverse_transform(field).real


def pair_forcing(u: SpectralField, v: SpectralField,
                 apply_dealias: bool = True) -> SpectralField:
    """P div(u (x) v): component i is P applied to sum_j d_j (u_i v_j),
    computed pseudo-spectrally with the 2/3-band product rule."""
    if u.grid != v.grid:
        raise ValueError("fields live on different grids")
    grid = u.grid
    if u.ncomp != 3 or v.ncomp != 3 or grid.dim != 3:
        raise ValueError("pair forcing expects 3-component fields on a 3d grid")
    up = _physical_components(u)
    vp = _physical_components(v)
    div = np.zeros((3,) + grid.shape, dtype=np.complex128)
    for jax in range(3):
        xi_j = grid.xi_axis(jax)
        for iax in range(3):
            prod_hat = forward_transform(up[iax] * vp[jax], grid).coeffs[0]
            div[iax] += 1j * xi_j * prod_hat
    out = SpectralField(grid, div)
    if apply_dealias:
        out = dealias(out)
    return helmholtz_project(out)


def nonlinear_term(u: SpectralField, apply_dealias: bool = True) -> SpectralField:
    """P div(u (x) u), the quadratic forcing of the mild formulation."""
    if u.grid.dim != 3 or u.ncomp != 3:
        raise ValueError("nonlinear term expects a 3-component field on a 3d grid")
    return pair_forcing(u, u, apply_dealias)


def _advect_check(u0: SpectralField, dt: float):
    umax = float(np.max(np.abs(_physical_components(u0))))
    dx = u0.grid.dx
    if umax * dt / dx > 1.0:
        warnings.warn(
            f"advective CFL ratio {umax * dt / dx:.2f} > 1 for the forcing "
            "sampling; consider a smaller dt", RuntimeWarning)


def picard_map(traj: Trajectory, u0: SpectralField, omega: float,
               scheme: str = "exponential-midpoint",
               nonlinearity: bool = True,
               forcing_fn=None) -> Trajectory:
    """One application of the mild-formulation map
    u -> T(t) u0 - integral_0^t T(t - tau) P div(u (x) u) dtau,
    evaluated at every sample time by interval-exact multiplier recursion."""
    grid = traj.grid
    if u0.grid != grid or u0.ncomp != traj.ncomp:
        raise ValueError("initial data does not match trajectory layout")
    sym = _symbols(grid)
    dt = traj.dt
    consts = _local_integrals(sym, dt, omega)
    fn = forcing_fn or nonlinear_term
    n = traj.n_samples

    out = np.empty_like(traj.coeffs)
    out[0] = u0.coeffs
    linear = u0.coeffs.copy()
    integral = np.zeros_like(u0.coeffs)
    g_lo = fn(traj.field(0)).coeffs if nonlinearity else None
    for k in range(n - 1):
        linear = _apply_multiplier(sym, linear, dt, omega)
        if nonlinearity:
            g_hi = fn(traj.field(k + 1)).coeffs
            if scheme == "exponential-midpoint":
                g_mid = 0.5 * (g_lo + g_hi)
                local = consts[0] * g_mid + consts[1] * _quarter_turn(sym, g_mid)
                integral = _apply_multiplier(sym, integral, dt, omega) + local
            elif scheme == "trapezoid":
                integral = _apply_multiplier(sym, integral + 0.5 * dt * g_lo, dt, omega) \
                    + 0.5 * dt * g_hi
            else:
                raise ValueError(f"unknown scheme {scheme!r}")
            g_lo = g_hi
            out[k + 1] = linear - integral
        else:
            out[k + 1] = linear
    return Trajectory(grid, traj.times.copy(), out)


def duhamel_bilinear(u_traj: Trajectory, v_traj: Trajectory, omega: float,
                     scheme: str = "exponential-midpoint") -> Trajectory:
    """B(u, v)(t) = integral_0^t T(t - tau) P div(u (x) v)(tau) dtau on the
    shared time grid of the two trajectories."""
    if u_traj.grid != v_traj.grid or not np.array_equal(u_traj.times, v_traj.times):
        raise ValueError("trajectories must share grid and time samples")
    grid = u_traj.grid
    sym = _symbols(grid)
    dt = u_traj.dt
    consts = _local_integrals(sym, dt, omega)
    out = np.zeros_like(u_traj.coeffs)
    integral = np.zeros_like(u_traj.coeffs[0])
    g_lo = pair_forcing(u_traj.field(0), v_traj.field(0)).coeffs
    for k in range(u_traj.n_samples - 1):
        g_hi = pair_forcing(u_traj.field(k + 1), v_traj.field(k + 1)).coeffs
        if scheme == "exponential-midpoint":
            g_mid = 0.5 * (g_lo + g_hi)
            local = consts[0] * g_mid + consts[1] * _quarter_turn(sym, g_mid)
            integral = _apply_multiplier(sym, integral, dt, omega) + local
        elif scheme == "trapezoid":
            integral = _apply_multiplier(sym, integral + 0.5 * dt * g_lo, dt, omega) \
                + 0.5 * dt * g_hi
        else:
            raise ValueError(f"unknown scheme {scheme!r}")
        g_lo = g_hi
        out[k + 1] = integral
    return Trajectory(grid, u_traj.times.copy(), out)


def linear_picard_trajectory(u0: SpectralField, config: SolverConfig3D) -> Trajectory:
    coeffs = np.empty((config.n_steps + 1,) + u0.coeffs.shape, dtype=np.complex128)
    sym = _symbols(u0.grid)
    coeffs[0] = u0.coeffs
    for k in range(config.n_steps):
        coeffs[k + 1] = _apply_multiplier(sym, coeffs[k], config.dt, config.omega)
    return Trajectory(u0.grid, config.times, coeffs)


def picard_solve(u0: SpectralField, config: SolverConfig3D,
                 initial_iterate: str = "linear"):
    """Iterate the mild map to its fixed point.

    Returns (trajectory, diagnostics).  Divergence or non-finite norms stop
    the iteration with converged=False / aborted=True; the ratio sequence is
    reported either way.
    """
    grid = config.grid
    if u0.grid != grid:
        raise ValueError("initial data grid does not match solver config")
    if u0.ncomp != 3:
        raise ValueError("initial data must have 3 components")
    defect = divergence_defect(u0)
    if defect > 1e-10:
        raise ValueError(f"initial data is not divergence-free (defect {defect:.3e})")

    u0 = dealias(u0) if config.dealias else u0
    part = lp.get_partition(grid)
    diag = IterationDiagnostics()
    diag.gate = smallness_gate(u0, config.p, config.r, config.gate_constant)
    if config.nonlinearity:
        _advect_check(u0, config.dt)

    linear = linear_picard_trajectory(u0, config)
    diag.linear_norm = lp.mild_norm(linear, config.p, config.r, part)

    if initial_iterate == "linear":
        current = linear
    elif initial_iterate == "zero":
        zero_coeffs = np.zeros_like(linear.coeffs)
        zero_coeffs[0] = u0.coeffs
        current = Trajectory(grid, config.times, zero_coeffs)
    else:
        raise ValueError(f"unknown initial iterate {initial_iterate!r}")
    diag.iterate_norms.append(lp.mild_norm(current, config.p, config.r, part))

    if not config.nonlinearity:
        diag.converged = True
        diag.iterations = 0
        diag.residual_estimate = 0.0
        diag.message = "nonlinearity disabled; linear trajectory is exact"
        linear.fb_norms = _sample_norms(linear, config, part)
        return linear, diag

    for m in range(1, config.max_iterations + 1):
        nxt = picard_map(current, u0, config.omega, config.scheme)
        diff = lp.mild_norm(nxt.difference(current), config.p, config.r, part)
        norm = lp.mild_norm(nxt, config.p, config.r, part)
        diag.diff_norms.append(diff)
        diag.iterate_norms.append(norm)
        if len(diag.diff_norms) >= 2 and diag.diff_norms[-2] > 0:
            diag.ratios.append(diff / diag.diff_norms[-2])
        diag.iterations = m
        if not (math.isfinite(diff) and math.isfinite(norm)):
            diag.aborted = True
            diag.message = f"non-finite mild norm at iteration {m}"
            diag.residual_estimate = diff
            nxt.fb_norms = None
            return nxt, diag
        current = nxt
        if diff <= config.tolerance:
            diag.converged = True
            diag.residual_estimate = diff
            diag.message = f"contraction reached tolerance at iteration {m}"
            break
    else:
        diag.residual_estimate = diag.diff_norms[-1]
        diag.message = "maximum iterations reached without convergence"

    current.fb_norms = _sample_norms(current, config, part)
    return current, diag


def _sample_norms(traj: Trajectory, config: SolverConfig3D, part) -> list:
    s = lp.critical_index(config.p)
    return [lp.fb_norm_value(traj.field(k), s, config.p, config.r, part)
            for k in range(traj.n_samples)]

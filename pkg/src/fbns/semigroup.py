"""Heat semigroup twisted by rotation: the solution operator of the
linearized rotating Stokes problem, and its Duhamel integrals.

Per wavevector the multiplier acts on divergence-free amplitudes as

    m(xi, t) a = exp(-|xi|^2 t) [cos(theta) a + sin(theta) R(xi) a],
    theta = Omega (xi_3 / |xi|) t,

where R(xi) a = (a x xi)/|xi| rotates the plane orthogonal to xi by a
quarter turn.  On that plane R^2 = -Id, so m is a damped rotation and the
composition law m(t) m(s) = m(t + s) holds exactly for divergence-free
input.  The xi = 0 amplitude is mapped to zero (zero-mean convention).
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .spectral import Grid, SpectralField, coriolis_matrix, divergence_defect
from .trajectory import Trajectory

DIVFREE_TOL = 1e-10


class _SymbolArrays:
    """Per-grid arrays entering the multiplier."""

    def __init__(self, grid: Grid):
        if grid.dim != 3:
            raise ValueError("the rotating semigroup is three-dimensional")
        self.grid = grid
        safe = grid.xi_abs.copy()
        origin = (0,) * grid.dim
        safe[origin] = 1.0
        self.unit = [np.asarray(grid.xi_axis(ax) / safe) for ax in range(3)]
        for u in self.unit:
            u[origin] = 0.0
        self.rot_rate = self.unit[2].copy()  # xi_3 / |xi|
        self.kappa = grid.xi_sq
        self.origin = origin


@lru_cache(maxsize=16)
def _symbols(grid: Grid) -> _SymbolArrays:
    return _SymbolArrays(grid)


def _quarter_turn(sym: _SymbolArrays, coeffs: np.ndarray) -> np.ndarray:
    """R(xi) f_hat = (f_hat x xi) / |xi| applied modewise."""
    u1, u2, u3 = sym.unit
    f1, f2, f3 = coeffs
    return np.stack([
        f2 * u3 - f3 * u2,
        f3 * u1 - f1 * u3,
        f1 * u2 - f2 * u1,
    ])


def _apply_multiplier(sym: _SymbolArrays, coeffs: np.ndarray, t: float, omega: float) -> np.ndarray:
    theta = (omega * t) * sym.rot_rate
    decay = np.exp(-sym.kappa * t)
    out = decay * (np.cos(theta) * coeffs + np.sin(theta) * _quarter_turn(sym, coeffs))
    out[(slice(None),) + sym.origin] = 0.0
    return out


def semigroup_matrix(xi, t: float, omega: float) -> np.ndarray:
    """Dense 3x3 multiplier at a single wavevector, for oracle comparisons."""
    v = np.asarray(xi, dtype=float)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        return np.zeros((3, 3))
    theta = omega * (v[2] / norm) * t
    decay = math.exp(-norm**2 * t)
    return decay * (math.cos(theta) * np.eye(3) + math.sin(theta) * coriolis_matrix(v))


def apply_semigroup(field: SpectralField, t: float, omega: float,
                    require_divergence_free: bool = True) -> SpectralField:
    """Propagate a divergence-free field by time t.

    Input that is measurably not divergence-free is rejected rather than
    silently projected; pass require_divergence_free=False for symbol-level
    experiments on arbitrary fields.
    """
    if t < 0:
        raise ValueError(f"time must be non-negative, got {t}")
    if field.ncomp != 3 or field.grid.dim != 3:
        raise ValueError("semigroup expects a 3-component field on a 3d grid")
    if require_divergence_free:
        defect = divergence_defect(field)
        if defect > DIVFREE_TOL:
            raise ValueError(
                f"input is not divergence-free (defect {defect:.3e} > {DIVFREE_TOL:g})"
            )
    sym = _symbols(field.grid)
    return SpectralField(field.grid, _apply_multiplier(sym, field.coeffs, t, omega))


def _local_integrals(sym: _SymbolArrays, dt: float, omega: float):
    """(C, S) with C + iS = integral_0^dt exp(-(kappa - i rho) s) ds per mode,
    where rho = Omega xi_3/|xi|; the zero mode integrates to zero."""
    z = sym.kappa - 1j * omega * sym.rot_rate
    z_safe = z.copy()
    z_safe[sym.origin] = 1.0
    g = (1.0 - np.exp(-z * dt)) / z_safe
    g[sym.origin] = 0.0
    return g.real, g.imag


def _step(sym: _SymbolArrays, integral: np.ndarray, g_lo: np.ndarray, g_hi: np.ndarray,
          dt: float, omega: float, scheme: str, consts) -> np.ndarray:
    """One interval of the Duhamel recursion
    I(t+dt) = m(dt) I(t) + integral_0^dt m(s) g(t+dt-s) ds."""
    if scheme == "exponential-midpoint":
        c_loc, s_loc = consts
        g_mid = 0.5 * (g_lo + g_hi)
        local = c_loc * g_mid + s_loc * _quarter_turn(sym, g_mid)
        return _apply_multiplier(sym, integral, dt, omega) + local
    if scheme == "trapezoid":
        half = 0.5 * dt
        carried = _apply_multiplier(sym, integral + half * g_lo, dt, omega)
        return carried + half * g_hi
    raise ValueError(f"unknown scheme {scheme!r}")


def duhamel(forcing: Trajectory, t: float, omega: float,
            scheme: str = "exponential-midpoint",
            require_divergence_free: bool = True) -> SpectralField:
    """integral_0^t T(t - tau) g(tau) dtau from uniform samples of g on [0, t].

    exponential-midpoint samples the forcing at interval midpoints (nodal
    average) and propagates each interval exactly with the multiplier;
    trapezoid uses endpoint weights.  Both are second order in dt and both
    compose exactly across intervals through the semigroup law.
    """
    traj = duhamel_sweep(forcing, omega, scheme, require_divergence_free)
    if not math.isclose(traj.times[-1], t, rel_tol=1e-9, abs_tol=1e-12):
        raise ValueError(f"forcing samples cover [0, {traj.times[-1]}], not [0, {t}]")
    return traj.field(traj.n_samples - 1)


def duhamel_sweep(forcing: Trajectory, omega: float,
                  scheme: str = "exponential-midpoint",
                  require_divergence_free: bool = True) -> Trajectory:
    """Duhamel integrals at every sample time of the forcing trajectory."""
    if forcing.n_samples < 2:
        raise ValueError("need at least two forcing samples")
    if forcing.ncomp != 3 or forcing.grid.dim != 3:
        raise ValueError("semigroup forcing must have 3 components on a 3d grid")
    if abs(forcing.times[0]) > 1e-12:
        raise ValueError("forcing samples must start at time 0")
    if require_divergence_free:
        defect = divergence_defect(forcing.field(0))
        if defect > DIVFREE_TOL:
            raise ValueError(
                f"forcing is not divergence-free (defect {defect:.3e} > {DIVFREE_TOL:g})"
            )
    sym = _symbols(forcing.grid)
    dt = forcing.dt
    consts = _local_integrals(sym, dt, omega) if scheme == "exponential-midpoint" else None
    out = np.zeros_like(forcing.coeffs)
    integral = np.zeros_like(forcing.coeffs[0])
    for k in range(forcing.n_samples - 1):
        integral = _step(sym, integral, forcing.coeffs[k], forcing.coeffs[k + 1],
                         dt, omega, scheme, consts)
        out[k + 1] = integral
    return Trajectory(forcing.grid, forcing.times.copy(), out)


def linear_trajectory(u0: SpectralField, times, omega: float) -> Trajectory:
    """T(t_k) u0 on a uniform time grid, built by exact stepwise composition."""
    times = np.asarray(times, dtype=float)
    sym = _symbols(u0.grid)
    out = np.empty((times.size,) + u0.coeffs.shape, dtype=np.complex128)
    current = u0.coeffs.copy()
    if abs(times[0]) > 0:
        current = _apply_multiplier(sym, current, float(times[0]), omega)
    out[0] = current
    for k in range(1, times.size):
        current = _apply_multiplier(sym, current, float(times[k] - times[k - 1]), omega)
        out[k] = current
    return Trajectory(u0.grid, times, out)

"""Empirical verification of the linear, smoothing, and product estimates.

Each verifier draws a deterministic ensemble of random fields or
trajectories, evaluates both sides of one inequality, and reports the
per-sample LHS/RHS ratios.  "There exists a constant" is operationalized
as stability of the ensemble maximum under doubling rather than as a
hardcoded number: the verifier always computes 2n samples and passes when
the max over all 2n exceeds the max over the first n by less than 20%.

Ensemble members are seeded per index, so member i is the same object in
every run and in both ensemble sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .lp import INF, chemin_lerner_norm, critical_index, fb_norm_value
from .semigroup import duhamel_sweep, linear_trajectory
from .solver3d import SolverConfig3D, picard_solve, smallness_gate
from .spectral import (Grid, SpectralField, dealias, forward_transform,
                       inverse_transform, random_divfree_field,
                       random_scalar_field)
from .trajectory import Trajectory

STABILITY_LIMIT = 0.2
_TINY_RHS = 1e-300


@dataclass
class EstimateReport:
    name: str
    params: dict
    ensemble: int
    ratios: list  # length 2 * ensemble, nan where the sample was discarded
    max_ratio: float
    median_ratio: float
    prefix_max: float
    stability: float
    discarded: int
    passed: bool
    details: dict = dataclass_field(default_factory=dict)

    def as_dict(self) -> dict:
        def clean(x):
            if isinstance(x, float) and not math.isfinite(x):
                return None
            return x
        return {
            "name": self.name,
            "params": self.params,
            "ensemble": self.ensemble,
            "ratios": [clean(float(r)) for r in self.ratios],
            "max_ratio": clean(self.max_ratio),
            "median_ratio": clean(self.median_ratio),
            "prefix_max": clean(self.prefix_max),
            "stability": clean(self.stability),
            "discarded": self.discarded,
            "passed": bool(self.passed),
            "details": self.details,
        }


def _finalize(name: str, params: dict, ensemble: int, ratios: list,
              details: dict | None = None,
              extra_ok: bool = True) -> EstimateReport:
    arr = np.asarray(ratios, dtype=float)
    valid = np.isfinite(arr)
    discarded = int((~valid).sum())
    if valid.any():
        max_all = float(arr[valid].max())
        median = float(np.median(arr[valid]))
    else:
        max_all = 0.0
        median = 0.0
    head = arr[:ensemble]
    head_valid = np.isfinite(head)
    prefix_max = float(head[head_valid].max()) if head_valid.any() else 0.0
    if prefix_max > 0:
        stability = (max_all - prefix_max) / prefix_max
    else:
        stability = 0.0 if max_all == 0.0 else math.inf
    passed = bool(math.isfinite(max_all) and stability < STABILITY_LIMIT
                  and extra_ok)
    return EstimateReport(name, params, ensemble, list(arr), max_all, median,
                          prefix_max, stability, discarded, passed,
                          details or {})


def default_lab_grid(dim: int = 3, n: int = 16, period_l: float = 4.0) -> Grid:
    return Grid(dim=dim, n=n, period_l=period_l)


def lab_times(horizon: float = 1.0, n_samples: int = 17) -> np.ndarray:
    if n_samples < 2 or horizon <= 0:
        raise ValueError("need n_samples >= 2 and horizon > 0")
    return np.linspace(0.0, horizon, n_samples)


def member_seed(seed, index: int) -> tuple:
    """Flat integer tuple seeding ensemble member `index`; nested tuples are
    flattened because the generator wants a 1d entropy sequence."""
    if isinstance(seed, (tuple, list)):
        return tuple(int(x) for x in seed) + (int(index),)
    return (int(seed), int(index))


def decaying_trajectory(grid: Grid, times: np.ndarray, seed, index: int,
                        scalar: bool = False,
                        oscillation: bool = False) -> Trajectory:
    """e^{-t} times a fixed random field; odd members can get an extra
    bounded oscillation so both time exponents a in {1, inf} see
    non-monotone inputs."""
    if scalar:
        base = random_scalar_field(grid, seed=member_seed(seed, index))
    else:
        base = random_divfree_field(grid, seed=member_seed(seed, index))
    env = np.exp(-np.asarray(times, dtype=float))
    if oscillation:
        env = env * (1.0 + 0.5 * np.sin(5.0 * np.asarray(times)))
    coeffs = env[(slice(None),) + (np.newaxis,) * (base.coeffs.ndim)] * base.coeffs[np.newaxis]
    return Trajectory(grid, np.asarray(times, dtype=float), coeffs)


def constant_trajectory(field: SpectralField, times) -> Trajectory:
    times = np.asarray(times, dtype=float)
    coeffs = np.repeat(field.coeffs[np.newaxis], times.size, axis=0)
    return Trajectory(field.grid, times, coeffs)


def verify_duhamel_smoothing(s: float = None, p: float = 2.0, r: float = 2.0,
                             q: float = 1.0, a: float = 1.0,
                             omega: float = 0.0, ensemble: int = 20,
                             grid: Grid | None = None, horizon: float = 1.0,
                             n_samples: int = 17, seed: int = 0,
                             scheme: str = "exponential-midpoint") -> EstimateReport:
    """Smoothing of the Duhamel integral: the time-q Chemin-Lerner norm at
    regularity s is controlled by the time-a norm of the forcing at
    regularity s - 2 - 2/q + 2/a, for 1 <= a <= q."""
    if not 1 <= a:
        raise ValueError(f"time exponent a must be >= 1, got {a}")
    if a > q:
        raise ValueError(
            f"need a <= q (got a={a}, q={q}) so the Young exponent "
            "1 + 1/q = 1/q~ + 1/a stays admissible")
    if grid is None:
        grid = default_lab_grid()
    if s is None:
        s = critical_index(p)
    rhs_index = s - 2.0 - (0.0 if q == INF else 2.0 / q) \
        + (0.0 if a == INF else 2.0 / a)
    times = lab_times(horizon, n_samples)
    ratios = []
    for i in range(2 * ensemble):
        f = decaying_trajectory(grid, times, seed, i, oscillation=(i % 2 == 1))
        integral = duhamel_sweep(f, omega, scheme=scheme)
        lhs = chemin_lerner_norm(integral, s, p, r, q).total
        rhs = chemin_lerner_norm(f, rhs_index, p, r, a).total
        ratios.append(lhs / rhs if rhs > _TINY_RHS else math.nan)
    params = {"s": s, "p": p, "r": r, "q": q, "a": a, "omega": omega,
              "rhs_index": rhs_index, "horizon": horizon,
              "n_samples": n_samples, "seed": seed, "grid_n": grid.n,
              "grid_l": grid.period_l}
    return _finalize("duhamel_smoothing", params, ensemble, ratios)


def product_y_norm(traj: Trajectory, s: float, p: float, r: float) -> float:
    """Norm of the persistence-plus-smoothing space entering the product
    estimate: sup-in-time at regularity s plus time-integrated at 4 - 3/p."""
    return (chemin_lerner_norm(traj, s, p, r, INF).total
            + chemin_lerner_norm(traj, 4.0 - 3.0 / p, p, r, 1.0).total)


def pointwise_product_trajectory(u: Trajectory, v: Trajectory) -> Trajectory:
    """Sample-by-sample pointwise product, restricted to the resolved band."""
    if u.grid is not v.grid and u.grid != v.grid:
        raise ValueError("trajectories live on different grids")
    if not np.array_equal(u.times, v.times):
        raise ValueError("trajectories are sampled at different times")
    out = np.empty((u.n_samples, 1) + u.grid.shape, dtype=np.complex128)
    for k in range(u.n_samples):
        up = inverse_transform(u.field(k)).real
        vp = inverse_transform(v.field(k)).real
        prod = np.sum(up * vp, axis=0) if u.ncomp == v.ncomp else None
        if prod is None:
            raise ValueError("component counts differ")
        out[k] = dealias(forward_transform(prod, u.grid)).coeffs
    return Trajectory(u.grid, u.times, out)


def verify_product_estimate(s: float = 0.5, p: float = 2.0, r: float = 2.0,
                            ensemble: int = 20, grid: Grid | None = None,
                            horizon: float = 1.0, n_samples: int = 17,
                            seed: int = 0) -> EstimateReport:
    """Bilinear product estimate: the time-integrated norm of uv at
    regularity s + 1 against the product of the mixed-space norms of the
    factors, valid for -1 < s < 3 - 3/p."""
    if not p > 1:
        raise ValueError(f"integrability index p must exceed 1, got {p}")
    upper = 3.0 - (0.0 if p == INF else 3.0 / p)
    if not -1.0 < s < upper:
        raise ValueError(
            f"regularity s={s} outside the admissible open interval "
            f"(-1, {upper}); the paraproduct sums diverge at the endpoints")
    if grid is None:
        grid = default_lab_grid()
    times = lab_times(horizon, n_samples)
    ratios = []
    for i in range(2 * ensemble):
        u = decaying_trajectory(grid, times, (seed, 0), i, scalar=True,
                                oscillation=(i % 2 == 1))
        v = decaying_trajectory(grid, times, (seed, 1), i, scalar=True)
        w = pointwise_product_trajectory(u, v)
        lhs = chemin_lerner_norm(w, s + 1.0, p, r, 1.0).total
        rhs = product_y_norm(u, s, p, r) * product_y_norm(v, s, p, r)
        ratios.append(lhs / rhs if rhs > _TINY_RHS else math.nan)
    params = {"s": s, "p": p, "r": r, "horizon": horizon,
              "n_samples": n_samples, "seed": seed, "grid_n": grid.n,
              "grid_l": grid.period_l}
    return _finalize("product_estimate", params, ensemble, ratios)


def sweep_product_estimate(s_values, **kwargs) -> list:
    return [verify_product_estimate(s=s, **kwargs) for s in s_values]


def verify_semigroup_bounds(p: float = 2.0, r: float = 2.0, omega: float = 0.0,
                            ensemble: int = 20, grid: Grid | None = None,
                            horizon: float = 1.0, n_samples: int = 17,
                            seed: int = 0) -> EstimateReport:
    """Linear semigroup bounds at the critical regularity s = 2 - 3/p: the
    sup-in-time norm against the data norm (empirical constant 1: shell
    profiles decay from their initial values), and the time-integrated norm
    two derivatives up (smoothing), reported in details."""
    if grid is None:
        grid = default_lab_grid()
    s = critical_index(p)
    times = lab_times(horizon, n_samples)
    sup_ratios = []
    smoothing_ratios = []
    for i in range(2 * ensemble):
        u0 = random_divfree_field(grid, seed=member_seed(seed, i))
        traj = linear_trajectory(u0, times, omega)
        data_norm = fb_norm_value(u0, s, p, r)
        if data_norm <= _TINY_RHS:
            sup_ratios.append(math.nan)
            smoothing_ratios.append(math.nan)
            continue
        sup_ratios.append(chemin_lerner_norm(traj, s, p, r, INF).total / data_norm)
        smoothing_ratios.append(
            chemin_lerner_norm(traj, s + 2.0, p, r, 1.0).total / data_norm)
    smooth_arr = np.asarray(smoothing_ratios, dtype=float)
    smooth_valid = np.isfinite(smooth_arr)
    smooth_max = float(smooth_arr[smooth_valid].max()) if smooth_valid.any() else 0.0
    head = smooth_arr[:ensemble]
    head_max = float(head[np.isfinite(head)].max()) if np.isfinite(head).any() else 0.0
    smooth_stab = ((smooth_max - head_max) / head_max) if head_max > 0 else 0.0
    params = {"s": s, "p": p, "r": r, "omega": omega, "horizon": horizon,
              "n_samples": n_samples, "seed": seed, "grid_n": grid.n,
              "grid_l": grid.period_l}
    details = {
        "smoothing_ratios": [float(x) if math.isfinite(x) else None
                             for x in smoothing_ratios],
        "smoothing_max": smooth_max,
        "smoothing_stability": smooth_stab,
    }
    return _finalize("semigroup_bounds", params, ensemble, sup_ratios,
                     details=details,
                     extra_ok=smooth_stab < STABILITY_LIMIT)


# ---------------------------------------------------------------------------
# rotation-rate independence

def _contraction_constant(grid: Grid, omega: float, seed: int,
                          target_fraction: float = 0.5) -> dict:
    s = critical_index(2.0)
    u0 = random_divfree_field(grid, seed=member_seed(seed, 0))
    gate = smallness_gate(u0, 2.0, 2.0)
    norm0 = fb_norm_value(u0, s, 2.0, 2.0)
    u0 = SpectralField(grid, u0.coeffs * (target_fraction * gate.threshold / norm0))
    config = SolverConfig3D(grid=grid, omega=omega, horizon=0.5, dt=1.0 / 16.0)
    traj, diag = picard_solve(u0, config)
    late = diag.ratios[1:] if len(diag.ratios) > 1 else diag.ratios
    constant = max(late) if late else 0.0
    return {
        "omega": omega,
        "constant": float(constant),
        "converged": diag.converged,
        "iterations": diag.iterations,
        "mild_norm": (diag.iterate_norms[-1] if diag.iterate_norms else 0.0),
    }


def omega_independence_scan(experiment: str, omegas, grid: Grid | None = None,
                            seed: int = 0, **kwargs) -> dict:
    """Tabulate an empirical constant against the rotation rate.

    Experiments: 'linear' (semigroup-bound max ratio) and 'contraction'
    (late Picard contraction ratio for fixed small data).  Independence is
    operationalized as uniform boundedness: the scan flags growth of the
    constant above 50% of its value at the first (baseline) rotation rate.
    Rotation often shrinks the measured constant, because oscillation
    cancels inside time integrals before any norm is taken; that only makes
    the estimates less sharp and is reported via 'spread' without flagging.
    """
    if experiment not in ("linear", "contraction"):
        raise ValueError(f"unknown experiment {experiment!r}")
    omegas = [float(w) for w in omegas]
    if grid is None:
        grid = default_lab_grid()
    constants = []
    per_omega = []
    for w in omegas:
        if experiment == "linear":
            rep = verify_semigroup_bounds(omega=w, grid=grid, seed=seed, **kwargs)
            constants.append(rep.max_ratio)
            per_omega.append({"omega": w, "max_ratio": rep.max_ratio,
                              "smoothing_max": rep.details["smoothing_max"],
                              "ratios": [None if not math.isfinite(x) else float(x)
                                         for x in rep.ratios]})
        else:
            entry = _contraction_constant(grid, w, seed, **kwargs)
            constants.append(entry["constant"])
            per_omega.append(entry)
    if constants:
        lo, hi = min(constants), max(constants)
        spread = (hi - lo) / lo if lo > 0 else (0.0 if hi == 0.0 else math.inf)
        base = constants[0]
        growth = max(0.0, (hi - base) / base) if base > 0 \
            else (0.0 if hi == 0.0 else math.inf)
    else:
        spread = 0.0
        growth = 0.0
    return {
        "experiment": experiment,
        "omegas": omegas,
        "constants": constants,
        "variation": growth,
        "spread": spread,
        "flagged": bool(growth > 0.5),
        "per_omega": per_omega,
        "seed": seed,
        "grid_n": grid.n,
        "grid_l": grid.period_l,
    }

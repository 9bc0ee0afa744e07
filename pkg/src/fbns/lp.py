"""Dyadic frequency decomposition, Fourier-Besov and Chemin-Lerner norms,
paraproduct splitting, and Bernstein-inequality checks.

The dyadic partition is built from a smooth radial cutoff chi with
chi(xi) = 1 for |xi| <= 3/4 and chi(xi) = 0 for |xi| >= 4/3; the shell
function phi(xi) = chi(xi/2) - chi(xi) is supported on 3/4 <= |xi| <= 8/3
and the dilates phi_j(xi) = phi(xi / 2^j) sum to 1 away from xi = 0.

Norms use frequency-side Lebesgue quadrature on the wavenumber lattice:
||g||_{L^p} ~ (dxi)^(dim/p) (sum |g|^p)^(1/p), with the lattice max for
p = infinity.  Vector-valued spectra enter through their pointwise
Euclidean magnitude over components, which makes L^2-based quantities
agree with Plancherel and makes rotation multipliers isometries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field
from functools import lru_cache

import numpy as np

from .spectral import (Grid, SpectralField, forward_transform,
                       inverse_transform)
from .trajectory import Trajectory

INF = float("inf")

SHELL_INNER = 0.75      # support of phi starts at 3/4 * 2^j
SHELL_OUTER = 8.0 / 3.0  # and ends at 8/3 * 2^j


def _bump(t: np.ndarray) -> np.ndarray:
    # exp(-1/t) for t > 0, extended by 0; smooth on the real line
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    with np.errstate(divide="ignore", over="ignore"):
        out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_cutoff(s) -> np.ndarray:
    """chi(s): 1 for s <= 3/4, 0 for s >= 4/3, smooth monotone in between."""
    s = np.asarray(s, dtype=float)
    t = (4.0 / 3.0 - s) / (4.0 / 3.0 - 0.75)
    a = _bump(t)
    b = _bump(1.0 - t)
    out = np.empty_like(t)
    lower = t <= 0.0
    upper = t >= 1.0
    mid = ~(lower | upper)
    out[lower] = 0.0
    out[upper] = 1.0
    out[mid] = a[mid] / (a[mid] + b[mid])
    return out


def shell_profile(s, j: int) -> np.ndarray:
    """phi_j(s) = chi(s / 2^(j+1)) - chi(s / 2^j) evaluated at radii s."""
    s = np.asarray(s, dtype=float)
    return smooth_cutoff(s * 2.0 ** (-(j + 1))) - smooth_cutoff(s * 2.0 ** (-j))


@dataclass(frozen=True)
class ShellRange:
    """Dyadic indices whose shells meet the resolved band [xi_min, xi_max].

    partial lists the shells whose support sticks out of the band on either
    side; their lattice quadrature is truncated.
    """

    j_min: int
    j_max: int
    partial: tuple = ()

    @property
    def indices(self) -> range:
        return range(self.j_min, self.j_max + 1)

    def __contains__(self, j) -> bool:
        return self.j_min <= j <= self.j_max


def shell_range_for(xi_min: float, xi_max: float) -> ShellRange:
    if not (0 < xi_min <= xi_max):
        raise ValueError("need 0 < xi_min <= xi_max")
    j_min = math.ceil(math.log2(xi_min * 3.0 / 8.0))
    j_max = math.floor(math.log2(xi_max * 4.0 / 3.0))
    partial = tuple(
        j for j in range(j_min, j_max + 1)
        if SHELL_INNER * 2.0 ** j < xi_min or SHELL_OUTER * 2.0 ** j > xi_max
    )
    return ShellRange(j_min, j_max, partial)


class DyadicPartition:
    """Shell multipliers of a grid, cached as lattice arrays."""

    def __init__(self, grid: Grid):
        self.grid = grid
        self.shell_range = shell_range_for(grid.dxi, grid.band_max)
        js = list(self.shell_range.indices)
        self.masks = np.stack([shell_profile(grid.xi_abs, j) for j in js])
        self._low = np.cumsum(self.masks, axis=0)

    @property
    def js(self) -> list:
        return list(self.shell_range.indices)

    def _offset(self, j: int) -> int:
        return j - self.shell_range.j_min

    def shell_mask(self, j: int) -> np.ndarray:
        if j not in self.shell_range:
            return np.zeros(self.grid.shape)
        return self.masks[self._offset(j)]

    def low_mask(self, j: int) -> np.ndarray:
        """Sum of shell masks with index <= j (low-pass multiplier)."""
        if j < self.shell_range.j_min:
            return np.zeros(self.grid.shape)
        j = min(j, self.shell_range.j_max)
        return self._low[self._offset(j)]

    def unity_defect(self) -> float:
        """max |sum_j phi_j - 1| over the dealiased band, excluding xi = 0."""
        total = self.masks.sum(axis=0)
        band = self.grid.dealias_mask.copy()
        band[(0,) * self.grid.dim] = False
        return float(np.max(np.abs(total[band] - 1.0)))


@lru_cache(maxsize=32)
def _partition_cached(grid: Grid) -> DyadicPartition:
    return DyadicPartition(grid)


def get_partition(grid: Grid) -> DyadicPartition:
    return _partition_cached(grid)


def dyadic_block(field: SpectralField, j: int, partition: DyadicPartition | None = None) -> SpectralField:
    """Frequency localization to shell j; zero field if j is out of range."""
    part = partition or get_partition(field.grid)
    return SpectralField(field.grid, field.coeffs * part.shell_mask(j))


def low_pass(field: SpectralField, j: int, partition: DyadicPartition | None = None) -> SpectralField:
    part = partition or get_partition(field.grid)
    return SpectralField(field.grid, field.coeffs * part.low_mask(j))


# ---------------------------------------------------------------------------
# norms

def _validate_lebesgue(name: str, value: float, minimum: float = 1.0):
    if not (value >= minimum):
        raise ValueError(f"{name} must satisfy {name} >= {minimum}, got {value}")


def _magnitude(coeffs: np.ndarray) -> np.ndarray:
    # pointwise Euclidean norm over the component axis
    return np.sqrt(np.sum(np.abs(coeffs) ** 2, axis=0))


def _freq_lp(mag: np.ndarray, p: float, dxi: float, dim: int) -> float:
    if p == INF:
        return float(np.max(mag)) if mag.size else 0.0
    return float(dxi ** (dim / p) * np.sum(mag ** p) ** (1.0 / p))


def _sequence_lr(values: np.ndarray, r: float) -> float:
    if values.size == 0:
        return 0.0
    if r == INF:
        return float(np.max(values))
    return float(np.sum(values ** r) ** (1.0 / r))


@dataclass
class NormReport:
    """Per-shell breakdown of a Fourier-Besov type norm."""

    params: dict
    shells: list
    total: float
    truncation_flags: list = dataclass_field(default_factory=list)
    tail_bound: float | None = None

    def as_dict(self) -> dict:
        out = {
            "params": self.params,
            "shells": [[int(j), float(v)] for j, v in self.shells],
            "total": float(self.total),
            "truncation_flags": [int(j) for j in self.truncation_flags],
        }
        if self.tail_bound is not None:
            out["tail_bound"] = float(self.tail_bound)
        return out


def fb_norm(field: SpectralField, s: float, p: float, r: float,
            partition: DyadicPartition | None = None) -> NormReport:
    """Fourier-Besov norm: l^r over shells of 2^(j s) ||phi_j f_hat||_{L^p}."""
    _validate_lebesgue("p", p)
    _validate_lebesgue("r", r)
    part = partition or get_partition(field.grid)
    grid = field.grid
    mag = _magnitude(field.coeffs)
    shells = []
    for j in part.js:
        value = _freq_lp(part.shell_mask(j) * mag, p, grid.dxi, grid.dim)
        shells.append((j, 2.0 ** (j * s) * value))
    total = _sequence_lr(np.array([v for _, v in shells]), r)
    return NormReport(
        params={"s": s, "p": p, "r": r},
        shells=shells,
        total=total,
        truncation_flags=list(part.shell_range.partial),
    )


def fb_norm_value(field: SpectralField, s: float, p: float, r: float,
                  partition: DyadicPartition | None = None) -> float:
    return fb_norm(field, s, p, r, partition).total


def chemin_lerner_norm(traj: Trajectory, s: float, p: float, r: float, q: float,
                       partition: DyadicPartition | None = None) -> NormReport:
    """Time-inside-shell norm: l^r over shells of
    2^(j s) || ||phi_j u_hat(t)||_{L^p} ||_{L^q([0, T])}.

    q = inf takes the max over samples; finite q uses composite trapezoid
    quadrature on the uniform sample grid.  For finite q a tail bound for
    the truncated [T, inf) part is reported, assuming decay no slower than
    the slowest resolved heat mode exp(-dxi^2 t) past the horizon.
    """
    _validate_lebesgue("p", p)
    _validate_lebesgue("r", r)
    _validate_lebesgue("q", q)
    part = partition or get_partition(traj.grid)
    grid = traj.grid
    if traj.n_samples < 2 and q != INF:
        raise ValueError("time quadrature needs at least two samples")

    series = np.empty((len(part.js), traj.n_samples))
    for k in range(traj.n_samples):
        mag = _magnitude(traj.coeffs[k])
        for row, j in enumerate(part.js):
            series[row, k] = _freq_lp(part.shell_mask(j) * mag, p, grid.dxi, grid.dim)

    shells = []
    for row, j in enumerate(part.js):
        if q == INF:
            time_norm = float(np.max(series[row]))
        else:
            time_norm = float(np.trapezoid(series[row] ** q, traj.times) ** (1.0 / q))
        shells.append((j, 2.0 ** (j * s) * time_norm))
    total = _sequence_lr(np.array([v for _, v in shells]), r)

    tail = None
    if q != INF:
        last = fb_norm_value(traj.field(traj.n_samples - 1), s, p, r, part)
        tail = last * (1.0 / (q * grid.dxi ** 2)) ** (1.0 / q)
    return NormReport(
        params={"s": s, "p": p, "r": r, "q": q, "horizon": traj.horizon},
        shells=shells,
        total=total,
        truncation_flags=list(part.shell_range.partial),
        tail_bound=tail,
    )


def critical_index(p: float) -> float:
    """Scaling-critical regularity 2 - 3/p of the 3d problem."""
    return 2.0 - 3.0 / p


def mild_norm_reports(traj: Trajectory, p: float, r: float,
                      partition: DyadicPartition | None = None):
    """The two halves of the contraction metric: sup-in-time critical norm
    and time-integrated smoothing norm (regularity gain 2)."""
    part = partition or get_partition(traj.grid)
    sup_part = chemin_lerner_norm(traj, critical_index(p), p, r, INF, part)
    smooth_part = chemin_lerner_norm(traj, critical_index(p) + 2.0, p, r, 1.0, part)
    return sup_part, smooth_part


def mild_norm(traj: Trajectory, p: float, r: float,
              partition: DyadicPartition | None = None) -> float:
    """Contraction metric of the small-data solver: the sum of the
    sup-in-time critical norm and the time-integrated smoothing norm."""
    sup_part, smooth_part = mild_norm_reports(traj, p, r, partition)
    return sup_part.total + smooth_part.total


# ---------------------------------------------------------------------------
# rescaling

def dyadic_rescale(field: SpectralField, lam: float) -> SpectralField:
    """Critical rescale g_hat(xi) = lam^(-2) f_hat(xi / lam).

    The rescaled field lives on the torus with period L / lam: the same
    coefficient array is reinterpreted on the dilated frequency lattice,
    which is exactly the continuum change of variables restricted to
    lattice points (the quadrature weight follows the new dxi).
    """
    if not lam > 0:
        raise ValueError("rescale factor must be positive")
    grid = field.grid
    new_grid = Grid(grid.dim, grid.n, grid.period_l / lam)
    return SpectralField(new_grid, field.coeffs * lam ** (-2.0))


# ---------------------------------------------------------------------------
# paraproduct

def bony_decompose(u: SpectralField, v: SpectralField, j: int,
                   partition: DyadicPartition | None = None):
    """Split the shell-j localization of a pointwise product u v into
    (low u)(high v), (low v)(high u) and the diagonal remainder.

    Pairs (a, b) of shell indices are grouped disjointly: term one takes
    a <= b - 2, term two b <= a - 2, and the remainder |a - b| <= 1 with
    the width-one fattened block on the second factor.  Because the
    grouping is a complete disjoint partition of the double shell sum, the
    three terms reconstruct the shell-j part of the product exactly (to
    rounding), whether or not the product aliases on the lattice.
    """
    if u.grid != v.grid:
        raise ValueError("fields live on different grids")
    if not (u.is_scalar and v.is_scalar):
        raise ValueError("paraproduct split expects scalar fields; apply componentwise")
    part = partition or get_partition(u.grid)
    grid = u.grid
    js = part.js

    u_blocks = {k: inverse_transform(dyadic_block(u, k, part))[0] for k in js}
    v_blocks = {k: inverse_transform(dyadic_block(v, k, part))[0] for k in js}
    u_low = {}
    v_low = {}
    acc_u = np.zeros(grid.shape, dtype=np.complex128)
    acc_v = np.zeros(grid.shape, dtype=np.complex128)
    for k in js:
        acc_u = acc_u + u_blocks[k]
        acc_v = acc_v + v_blocks[k]
        u_low[k] = acc_u
        v_low[k] = acc_v

    def low(blocks_low, k):
        if k < js[0]:
            return None
        return blocks_low[min(k, js[-1])]

    prod_one = np.zeros(grid.shape, dtype=np.complex128)
    prod_two = np.zeros(grid.shape, dtype=np.complex128)
    prod_rem = np.zeros(grid.shape, dtype=np.complex128)
    for k in js:
        lu = low(u_low, k - 2)
        if lu is not None:
            prod_one = prod_one + lu * v_blocks[k]
        lv = low(v_low, k - 2)
        if lv is not None:
            prod_two = prod_two + lv * u_blocks[k]
        fat = np.zeros(grid.shape, dtype=np.complex128)
        for kk in (k - 1, k, k + 1):
            if kk in v_blocks:
                fat = fat + v_blocks[kk]
        prod_rem = prod_rem + u_blocks[k] * fat

    def localize(phys):
        hat = forward_transform(phys, grid)
        return dyadic_block(hat, j, part)

    return localize(prod_one), localize(prod_two), localize(prod_rem)


def shell_product(u: SpectralField, v: SpectralField, j: int,
                  partition: DyadicPartition | None = None) -> SpectralField:
    """Shell-j localization of the plain pointwise product, for comparing
    against the paraproduct split."""
    part = partition or get_partition(u.grid)
    phys = inverse_transform(u)[0] * inverse_transform(v)[0]
    return dyadic_block(forward_transform(phys, u.grid), j, part)


# ---------------------------------------------------------------------------
# Bernstein inequalities

def _monomial(grid: Grid, gamma) -> np.ndarray:
    out = np.ones(grid.shape)
    for ax, g in enumerate(gamma):
        if g:
            out = out * grid.xi_axis(ax) ** g
    return out


def bernstein_ratio(field: SpectralField, j: int, gamma, p: float, q: float,
                    support: str = "ball") -> float:
    """Ratio of ||(i xi)^gamma f_hat||_{L^q} to the dyadic bound
    2^(j |gamma| + dim j (1/q - 1/p)) ||f_hat||_{L^p}.

    support = "ball" expects the spectrum inside |xi| <= (8/3) 2^j,
    "annulus" inside (3/4) 2^j <= |xi| <= (8/3) 2^j.
    """
    grid = field.grid
    gamma = tuple(int(g) for g in gamma)
    if len(gamma) != grid.dim or any(g < 0 for g in gamma):
        raise ValueError("gamma must be a tuple of dim non-negative integers")
    _validate_lebesgue("p", p)
    _validate_lebesgue("q", q)
    mag = _magnitude(field.coeffs)
    top = np.max(mag)
    if top == 0.0:
        return 0.0
    outer = SHELL_OUTER * 2.0 ** j
    outside = grid.xi_abs > outer * (1.0 + 1e-12)
    if support == "annulus":
        outside |= grid.xi_abs < SHELL_INNER * 2.0 ** j * (1.0 - 1e-12)
    if np.max(mag[outside], initial=0.0) > 1e-13 * top:
        raise ValueError("spectrum is not supported at the stated dyadic scale")
    order = sum(gamma)
    lhs = _freq_lp(np.abs(_monomial(grid, gamma)) * mag, q, grid.dxi, grid.dim)
    rhs = _freq_lp(mag, p, grid.dxi, grid.dim)
    scale = 2.0 ** (j * order + grid.dim * j * (1.0 / q - 1.0 / p))
    return lhs / (scale * rhs)


def bernstein_slope(gamma, p: float, q: float, js, dim: int = 3,
                    dxi: float = 1.0) -> dict:
    """Least-squares slope of log2 of the normalized derivative norm
    ||xi^gamma phi_j||_{L^q} / ||phi_j||_{L^p} against the shell index.

    The shell profiles are evaluated on a dedicated frequency lattice with
    spacing dxi, large enough to hold the top shell; norms are accumulated
    slab by slab so the lattice is never materialized whole.
    """
    gamma = tuple(int(g) for g in gamma)
    if len(gamma) != dim:
        raise ValueError("gamma length must match dim")
    js = sorted(int(j) for j in js)
    extent = SHELL_OUTER * 2.0 ** js[-1]
    kmax = int(math.ceil(extent / dxi)) + 1
    axis = np.arange(-kmax, kmax + 1) * dxi

    logs = []
    for j in js:
        lhs_pow = 0.0
        lhs_max = 0.0
        rhs_pow = 0.0
        rhs_max = 0.0
        if dim == 3:
            x2 = axis[:, None]
            x3 = axis[None, :]
            plane_sq = x2**2 + x3**2
            plane_mono = np.abs(x2**gamma[1] * x3**gamma[2]) if (gamma[1] or gamma[2]) else 1.0
            for x1 in axis:
                rad = np.sqrt(x1**2 + plane_sq)
                prof = shell_profile(rad, j)
                mono = np.abs(x1) ** gamma[0] * plane_mono if gamma[0] else plane_mono
                weighted = mono * prof if gamma != (0, 0, 0) else prof
                if q == INF:
                    lhs_max = max(lhs_max, float(np.max(weighted)))
                else:
                    lhs_pow += float(np.sum(weighted ** q))
                if p == INF:
                    rhs_max = max(rhs_max, float(np.max(prof)))
                else:
                    rhs_pow += float(np.sum(prof ** p))
        else:
            x2 = axis[None, :]
            for x1 in axis:
                rad = np.sqrt(x1**2 + x2**2)
                prof = shell_profile(rad, j)
                mono = np.abs(x1) ** gamma[0] * np.abs(x2) ** gamma[1]
                weighted = mono * prof
                if q == INF:
                    lhs_max = max(lhs_max, float(np.max(weighted)))
                else:
                    lhs_pow += float(np.sum(weighted ** q))
                if p == INF:
                    rhs_max = max(rhs_max, float(np.max(prof)))
                else:
                    rhs_pow += float(np.sum(prof ** p))
        lhs = lhs_max if q == INF else dxi ** (dim / q) * lhs_pow ** (1.0 / q)
        rhs = rhs_max if p == INF else dxi ** (dim / p) * rhs_pow ** (1.0 / p)
        logs.append(math.log2(lhs / rhs))

    slope = float(np.polyfit(js, logs, 1)[0])
    target = sum(gamma) + dim * (1.0 / q - 1.0 / p)
    return {"slope": slope, "target": target, "js": js, "log2_values": logs}

"""Periodic spectral fields and Fourier-symbol operators.

Fields live on a uniform lattice over the torus [0, 2*pi*L)^dim and are
stored as complex coefficients c_k of the expansion

    f(x) = sum_k c_k exp(i k.x / L),

with integer wavevectors k in FFT order.  The continuous wavenumber of
index k is xi = k / L, so the frequency lattice has spacing 1/L per axis.
Real-valued fields satisfy the Hermitian symmetry c_{-k} = conj(c_k).

The torus with large period stands in for the whole space: norms carry the
frequency quadrature weight (1/L)^(dim/p) so that lattice sums approximate
integrals over R^dim, and refining 1/L tightens the approximation.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft

TWO_PI = 2.0 * np.pi


def fft_workers() -> int:
    """Worker count for FFT calls, capped by the FBNS_THREADS variable."""
    try:
        return max(1, int(os.environ.get("FBNS_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class Grid:
    """Uniform periodic lattice on [0, 2*pi*period_l)^dim.

    n must be even (FFT layout with an explicit Nyquist index, which is
    excluded from the dealiased band).  The dealiased band keeps integer
    wavenumbers with |k_i| <= kcut = (n-1)//3 on every axis; with that cutoff
    triple products of band-limited fields are alias-free on the lattice.
    """

    dim: int
    n: int
    period_l: float = 4.0

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if self.n < 8 or self.n % 2 != 0:
            raise ValueError(f"n must be even and >= 8, got {self.n}")
        if not self.period_l > 0:
            raise ValueError(f"period_l must be positive, got {self.period_l}")

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def dxi(self) -> float:
        """Frequency lattice spacing 1/L."""
        return 1.0 / self.period_l

    @property
    def box_length(self) -> float:
        return TWO_PI * self.period_l

    @property
    def dx(self) -> float:
        return self.box_length / self.n

    @property
    def kcut(self) -> int:
        return (self.n - 1) // 3

    @cached_property
    def k1(self) -> np.ndarray:
        # integer wavenumbers in FFT order: 0, 1, ..., n/2-1, -n/2, ..., -1
        return np.fft.fftfreq(self.n, d=1.0 / self.n)

    def xi_axis(self, axis: int) -> np.ndarray:
        """1d wavenumber array for one axis, shaped for broadcasting."""
        shape = [1] * self.dim
        shape[axis] = self.n
        return (self.k1 * self.dxi).reshape(shape)

    @cached_property
    def xi_sq(self) -> np.ndarray:
        out = np.zeros(self.shape)
        for ax in range(self.dim):
            out = out + self.xi_axis(ax) ** 2
        return out

    @cached_property
    def xi_abs(self) -> np.ndarray:
        return np.sqrt(self.xi_sq)

    @cached_property
    def inv_xi_sq(self) -> np.ndarray:
        """1/|xi|^2 with the zero mode mapped to 0 (zero-mean convention)."""
        safe = self.xi_sq.copy()
        safe[(0,) * self.dim] = 1.0
        out = 1.0 / safe
        out[(0,) * self.dim] = 0.0
        return out

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        mask = np.ones(self.shape, dtype=bool)
        keep1 = np.abs(self.k1) <= self.kcut
        for ax in range(self.dim):
            shape = [1] * self.dim
            shape[ax] = self.n
            mask &= keep1.reshape(shape)
        return mask

    @cached_property
    def band_max(self) -> float:
        """Largest |xi| inside the dealiased band."""
        return float(np.sqrt(self.dim) * self.kcut * self.dxi)

    def x_axis(self, axis: int) -> np.ndarray:
        shape = [1] * self.dim
        shape[axis] = self.n
        return (np.arange(self.n) * self.dx).reshape(shape)

    @cached_property
    def _reflect_index(self) -> np.ndarray:
        return (-np.arange(self.n)) % self.n


@dataclass(frozen=True)
class SpectralField:
    """Fourier coefficients of a (possibly vector-valued) field.

    coeffs has shape (ncomp,) + grid.shape, complex128.  Scalars use
    ncomp = 1.  Instances are treated as immutable; operators return new
    fields.
    """

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        c = self.coeffs
        if c.shape == self.grid.shape:
            # accept a bare lattice array for scalars
            c = c[np.newaxis]
        if c.ndim != self.grid.dim + 1 or c.shape[1:] != self.grid.shape:
            raise ValueError(
                f"coefficient shape {self.coeffs.shape} does not match grid {self.grid.shape}"
            )
        if c.dtype != np.complex128:
            c = c.astype(np.complex128)
        object.__setattr__(self, "coeffs", c)

    @property
    def ncomp(self) -> int:
        return self.coeffs.shape[0]

    @property
    def is_scalar(self) -> bool:
        return self.ncomp == 1

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy())

    def l2(self) -> float:
        """Coefficient 2-norm (physical L2 up to the fixed volume factor)."""
        return float(np.linalg.norm(self.coeffs))

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_same_layout(self, other)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_same_layout(self, other)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, alpha) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * alpha)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.grid, -self.coeffs)


def _check_same_layout(a: SpectralField, b: SpectralField):
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    if a.ncomp != b.ncomp:
        raise ValueError(f"component mismatch: {a.ncomp} vs {b.ncomp}")


def zeros(grid: Grid, ncomp: int = 1) -> SpectralField:
    return SpectralField(grid, np.zeros((ncomp,) + grid.shape, dtype=np.complex128))


def forward_transform(samples: np.ndarray, grid: Grid) -> SpectralField:
    """Physical samples -> coefficients.  A single mode exp(i k.x/L) maps to
    a single unit coefficient at index k."""
    arr = np.asarray(samples)
    if arr.shape == grid.shape:
        arr = arr[np.newaxis]
    if arr.shape[1:] != grid.shape:
        raise ValueError(f"sample shape {samples.shape} does not match grid {grid.shape}")
    axes = tuple(range(1, grid.dim + 1))
    coeffs = scipy.fft.fftn(arr, axes=axes, norm="forward", workers=fft_workers())
    return SpectralField(grid, coeffs)


def inverse_transform(field: SpectralField) -> np.ndarray:
    """Coefficients -> complex physical samples, exact inverse of
    forward_transform."""
    axes = tuple(range(1, field.grid.dim + 1))
    return scipy.fft.ifftn(field.coeffs, axes=axes, norm="forward", workers=fft_workers())


def hermitian_defect(field: SpectralField) -> float:
    """Relative deviation from c_{-k} = conj(c_k); zero for real fields."""
    c = field.coeffs
    idx = field.grid._reflect_index
    neg = c
    for ax in range(1, field.grid.dim + 1):
        neg = np.take(neg, idx, axis=ax)
    scale = np.max(np.abs(c))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(c - np.conj(neg))) / scale)


def physical(field: SpectralField, tol: float = 1e-10) -> np.ndarray:
    """Real physical samples of a Hermitian-symmetric field."""
    defect = hermitian_defect(field)
    if defect > tol:
        raise ValueError(f"field is not Hermitian-symmetric (defect {defect:.3e})")
    return inverse_transform(field).real


def dealias(field: SpectralField) -> SpectralField:
    return SpectralField(field.grid, field.coeffs * field.grid.dealias_mask)


def zero_mean(field: SpectralField) -> SpectralField:
    c = field.coeffs.copy()
    c[(slice(None),) + (0,) * field.grid.dim] = 0.0
    return SpectralField(field.grid, c)


def mean_coefficient(field: SpectralField) -> np.ndarray:
    return field.coeffs[(slice(None),) + (0,) * field.grid.dim]


# ---------------------------------------------------------------------------
# differential operators (exact Fourier symbols)

def derivative(field: SpectralField, axis: int) -> SpectralField:
    if not 0 <= axis < field.grid.dim:
        raise ValueError(f"axis {axis} out of range for dim {field.grid.dim}")
    return SpectralField(field.grid, 1j * field.grid.xi_axis(axis) * field.coeffs)


def gradient(field: SpectralField) -> SpectralField:
    if not field.is_scalar:
        raise ValueError("gradient expects a scalar field")
    grid = field.grid
    comps = [1j * grid.xi_axis(ax) * field.coeffs[0] for ax in range(grid.dim)]
    return SpectralField(grid, np.stack(comps))


def divergence(field: SpectralField) -> SpectralField:
    grid = field.grid
    if field.ncomp != grid.dim:
        raise ValueError(f"divergence expects {grid.dim} components, got {field.ncomp}")
    out = np.zeros(grid.shape, dtype=np.complex128)
    for ax in range(grid.dim):
        out += 1j * grid.xi_axis(ax) * field.coeffs[ax]
    return SpectralField(grid, out[np.newaxis])


def curl(field: SpectralField) -> SpectralField:
    """3d vector -> 3d vector; 2d vector -> scalar rotation d1 f2 - d2 f1."""
    grid = field.grid
    if field.ncomp != grid.dim:
        raise ValueError(f"curl expects {grid.dim} components, got {field.ncomp}")
    c = field.coeffs
    if grid.dim == 2:
        xi1, xi2 = grid.xi_axis(0), grid.xi_axis(1)
        rot = 1j * xi1 * c[1] - 1j * xi2 * c[0]
        return SpectralField(grid, rot[np.newaxis])
    xi = [grid.xi_axis(ax) for ax in range(3)]
    out = np.stack([
        1j * xi[1] * c[2] - 1j * xi[2] * c[1],
        1j * xi[2] * c[0] - 1j * xi[0] * c[2],
        1j * xi[0] * c[1] - 1j * xi[1] * c[0],
    ])
    return SpectralField(grid, out)


def laplacian(field: SpectralField) -> SpectralField:
    return SpectralField(field.grid, -field.grid.xi_sq * field.coeffs)


def divergence_defect(field: SpectralField) -> float:
    """max |xi . f_hat| / max |f_hat|, zero for divergence-free fields."""
    scale = np.max(np.abs(field.coeffs))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(divergence(field).coeffs)) / scale)


def helmholtz_project(field: SpectralField) -> SpectralField:
    """Leray projection onto divergence-free fields: symbol
    delta_ij - xi_i xi_j / |xi|^2, with the xi = 0 mode set to zero."""
    grid = field.grid
    if field.ncomp != grid.dim:
        raise ValueError(f"projection expects {grid.dim} components, got {field.ncomp}")
    dot = np.zeros(grid.shape, dtype=np.complex128)
    for ax in range(grid.dim):
        dot += grid.xi_axis(ax) * field.coeffs[ax]
    dot *= grid.inv_xi_sq
    out = np.stack([field.coeffs[ax] - grid.xi_axis(ax) * dot for ax in range(grid.dim)])
    out[(slice(None),) + (0,) * grid.dim] = 0.0
    return SpectralField(grid, out)


def riesz_transform(field: SpectralField, axis: int) -> SpectralField:
    """Riesz symbol -i xi_axis / |xi| applied componentwise."""
    grid = field.grid
    safe = grid.xi_abs.copy()
    safe[(0,) * grid.dim] = 1.0
    sym = -1j * grid.xi_axis(axis) / safe
    out = field.coeffs * sym
    out[(slice(None),) + (0,) * grid.dim] = 0.0
    return SpectralField(grid, out)


def coriolis_matrix(xi) -> np.ndarray:
    """Skew matrix R(xi) with R(xi) a = (a x xi)/|xi|.

    Rows: [0, xi3, -xi2; -xi3, 0, xi1; xi2, -xi1, 0] / |xi|.  On the plane
    orthogonal to xi it is a rotation by a quarter turn (R^2 = -Id there).
    """
    v = np.asarray(xi, dtype=float)
    if v.shape != (3,):
        raise ValueError("coriolis_matrix expects a single 3-vector")
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ValueError("coriolis_matrix is undefined at xi = 0")
    x1, x2, x3 = v / norm
    return np.array([
        [0.0, x3, -x2],
        [-x3, 0.0, x1],
        [x2, -x1, 0.0],
    ])


# ---------------------------------------------------------------------------
# random fields

def _hermitianize(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    idx = grid._reflect_index
    neg = coeffs
    for ax in range(1, grid.dim + 1):
        neg = np.take(neg, idx, axis=ax)
    return 0.5 * (coeffs + np.conj(neg))


def _random_coeffs(grid: Grid, seed, ncomp: int, cutoff: float | None) -> np.ndarray:
    if cutoff is None:
        cutoff = 0.4 * grid.band_max
    rng = np.random.default_rng(seed)
    shape = (ncomp,) + grid.shape
    raw = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    envelope = np.exp(-grid.xi_sq / cutoff**2)
    coeffs = raw * envelope * grid.dealias_mask
    coeffs = _hermitianize(coeffs, grid)
    coeffs[(slice(None),) + (0,) * grid.dim] = 0.0
    return coeffs


def random_scalar_field(grid: Grid, seed, cutoff: float | None = None,
                        amplitude: float = 1.0) -> SpectralField:
    """Zero-mean real random scalar with a smooth decaying spectrum,
    bit-reproducible for a given seed."""
    coeffs = _random_coeffs(grid, seed, 1, cutoff)
    norm = np.linalg.norm(coeffs)
    if norm > 0:
        coeffs *= amplitude / norm
    return SpectralField(grid, coeffs)


def random_divfree_field(grid: Grid, seed, cutoff: float | None = None,
                         amplitude: float = 1.0) -> SpectralField:
    """Zero-mean real divergence-free random vector field (dim components),
    bit-reproducible for a given seed."""
    coeffs = _random_coeffs(grid, seed, grid.dim, cutoff)
    field = helmholtz_project(SpectralField(grid, coeffs))
    norm = field.l2()
    if norm > 0:
        field = field * (amplitude / norm)
    return field


def taylor_green_2d(grid: Grid, amplitude: float = 1.0) -> SpectralField:
    """Velocity (cos x1 sin x2, -sin x1 cos x2); needs integer period_l so
    the unit wavenumber sits on the lattice."""
    if grid.dim != 2:
        raise ValueError("taylor_green_2d expects a 2d grid")
    x1, x2 = grid.x_axis(0), grid.x_axis(1)
    u1 = amplitude * np.cos(x1) * np.sin(x2)
    u2 = -amplitude * np.sin(x1) * np.cos(x2)
    return forward_transform(np.stack([np.broadcast_to(u1, grid.shape),
                                       np.broadcast_to(u2, grid.shape)]), grid)


def taylor_green_3d(grid: Grid, amplitude: float = 1.0) -> SpectralField:
    """The 2d Taylor-Green cell embedded in 3d with zero third component."""
    if grid.dim != 3:
        raise ValueError("taylor_green_3d expects a 3d grid")
    x1, x2 = grid.x_axis(0), grid.x_axis(1)
    u1 = amplitude * np.cos(x1) * np.sin(x2)
    u2 = -amplitude * np.sin(x1) * np.cos(x2)
    zero = np.zeros(grid.shape)
    return forward_transform(np.stack([np.broadcast_to(u1, grid.shape),
                                       np.broadcast_to(u2, grid.shape), zero]), grid)

"""Radial grid, fields, transforms, and norms.

A radially symmetric complex function u on R^3 is stored through
w(r) = r*u(r) sampled at the interior nodes r_j = j*dr, dr = R/(N+1),
with implicit Dirichlet values w(0) = w(R) = 0.  In this representation
the 3-d Laplacian acts as Delta u = w''/r, so the discrete sine modes
sin(k_m r), k_m = pi*m/R, diagonalise it exactly.

Transform normalisation (fixed; every norm below depends on it):

    what_m = sqrt(dr) * DST1_ortho(w)_m

which makes sum_m |what_m|^2 == dr * sum_j |w_j|^2 (Parseval) and turns
what_m into the coefficient of the L^2([0,R])-orthonormal mode
sqrt(2/R)*sin(k_m r).  All radial integrals use the composite trapezoid
rule on the uniform grid; with the implicit zero endpoints that is
dr * sum over interior nodes.

Norm dictionary for a field u with w = r*u:

    mass      = ||u||_2^2        = 4*pi * int |w|^2 dr
    grad_sq   = ||grad u||_2^2   = 4*pi * sum k_m^2 |what_m|^2
    weight_sq = ||x u||_2^2      = 4*pi * int r^2 |w|^2 dr
    ||u||_p^p                    = 4*pi * int |w/r|^p r^2 dr

The grad_sq identity is exact for radial functions with w(0) = 0:
int_{R^3} |grad u|^2 dx = 4*pi * int |w'|^2 dr.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np
from scipy.fft import dst

from .errors import ConfigError, InputError, ShapeError, UnsupportedExponentError

AMBIENT_DIM = 3
NORMALIZATION_TAG = "dst1-ortho*sqrt(dr)"


@dataclass(frozen=True)
class Grid:
    """Uniform radial grid on [0, R] with N interior nodes.

    Attributes:
        R: radius cutoff (> 0).
        N: interior point count (>= 8).
        dr: spacing R/(N+1).
        r: interior radii j*dr, j = 1..N.
        k: sine wavenumbers pi*m/R, m = 1..N.
        n: ambient dimension, fixed at 3.
    """

    R: float
    N: int
    dr: float
    r: np.ndarray
    k: np.ndarray
    n: int = AMBIENT_DIM

    def __post_init__(self):
        self.r.flags.writeable = False
        self.k.flags.writeable = False

    def same_as(self, other: "Grid") -> bool:
        return self.N == other.N and self.R == other.R

    def __eq__(self, other):
        return isinstance(other, Grid) and self.same_as(other)

    def __hash__(self):
        return hash((self.R, self.N))


def make_grid(R: float, N: int) -> Grid:
    """Build a Grid; rejects nonpositive R and undersized N."""
    if not np.isfinite(R) or R <= 0:
        raise ConfigError(f"radius cutoff must be positive and finite, got R={R}")
    if N < 8:
        raise ConfigError(f"interior point count must be >= 8, got N={N}")
    N = int(N)
    dr = R / (N + 1)
    r = dr * np.arange(1, N + 1, dtype=float)
    k = (np.pi / R) * np.arange(1, N + 1, dtype=float)
    return Grid(R=float(R), N=N, dr=dr, r=r, k=k)


@dataclass(frozen=True)
class RadialField:
    """Snapshot of a radial field: w_j = r_j * u(r_j) at time t.

    Immutable after construction; operations return new fields.
    """

    grid: Grid
    w: np.ndarray
    t: float

    def __post_init__(self):
        if self.w.shape != (self.grid.N,):
            raise ShapeError(f"w has shape {self.w.shape}, grid expects ({self.grid.N},)")
        self.w.flags.writeable = False

    @property
    def u(self) -> np.ndarray:
        """Profile u(r_j) = w_j / r_j at the interior nodes."""
        return self.w / self.grid.r

    def with_w(self, w: np.ndarray, t: float | None = None) -> "RadialField":
        return RadialField(self.grid, np.ascontiguousarray(w, dtype=complex), self.t if t is None else float(t))

    def copy(self, t: float | None = None) -> "RadialField":
        return self.with_w(self.w.copy(), t)


def from_profile(grid: Grid, f: Callable[[np.ndarray], np.ndarray], t: float = 0.0) -> RadialField:
    """Sample u = f(r) on the interior nodes; w_j = r_j * f(r_j).

    Raises InputError naming the first offending radius if a sample is
    non-finite.
    """
    vals = np.asarray(f(grid.r), dtype=complex)
    if vals.shape != grid.r.shape:
        raise ShapeError(f"profile returned shape {vals.shape}, expected {grid.r.shape}")
    bad = ~np.isfinite(vals.real) | ~np.isfinite(vals.imag)
    if np.any(bad):
        j = int(np.argmax(bad))
        raise InputError(f"profile sample non-finite at r = {grid.r[j]:.6g}")
    return RadialField(grid, grid.r * vals, float(t))


def zero_field(grid: Grid, t: float = 0.0) -> RadialField:
    return RadialField(grid, np.zeros(grid.N, dtype=complex), float(t))


# -- transforms ---------------------------------------------------------------

def sine_forward(field: RadialField) -> np.ndarray:
    """Sine coefficients what_m = sqrt(dr) * DST1_ortho(w)."""
    return dst(field.w, type=1, norm="ortho") * np.sqrt(field.grid.dr)


def sine_coeffs(grid: Grid, w: np.ndarray) -> np.ndarray:
    if w.shape != (grid.N,):
        raise ShapeError(f"array has shape {w.shape}, grid expects ({grid.N},)")
    return dst(w, type=1, norm="ortho") * np.sqrt(grid.dr)


def sine_inverse(grid: Grid, coeffs: np.ndarray, t: float = 0.0) -> RadialField:
    """Inverse of sine_forward (DST-I ortho is an involution)."""
    if coeffs.shape != (grid.N,):
        raise ShapeError(f"coefficient array has shape {coeffs.shape}, grid expects ({grid.N},)")
    w = dst(coeffs, type=1, norm="ortho") / np.sqrt(grid.dr)
    return RadialField(grid, np.ascontiguousarray(w, dtype=complex), float(t))


def inverse_w(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    return dst(coeffs, type=1, norm="ortho") / np.sqrt(grid.dr)


# -- origin value and derivative ----------------------------------------------

def origin_value(field: RadialField) -> complex:
    """u(0) by quadratic extrapolation of w/r from the first three nodes.

    w/r has a removable singularity at the origin; Lagrange extrapolation
    from (r_1, r_2, r_3) to 0 gives 3*f1 - 3*f2 + f3, accurate to O(dr^3).
    """
    f = field.w[:3] / field.grid.r[:3]
    return complex(3.0 * f[0] - 3.0 * f[1] + f[2])


def w_derivative(grid: Grid, w: np.ndarray) -> np.ndarray:
    """Spectral w'(r_j) via the odd periodic extension of w on [0, 2R)."""
    M = grid.N + 1
    ext = np.zeros(2 * M, dtype=complex)
    ext[1:M] = w
    ext[M + 1:] = -w[::-1]
    kappa = 2.0 * np.pi * np.fft.fftfreq(2 * M, d=grid.dr)
    dext = np.fft.ifft(1j * kappa * np.fft.fft(ext))
    return dext[1:M]


def radial_derivative(field: RadialField) -> np.ndarray:
    """d_r u = (w' - w/r)/r with w' computed spectrally."""
    wp = w_derivative(field.grid, field.w)
    return (wp - field.w / field.grid.r) / field.grid.r


# -- norms ---------------------------------------------------------------------

@dataclass(frozen=True)
class NormReport:
    mass: float
    grad_sq: float
    weight_sq: float
    lp: Mapping[float, float] = field(default_factory=dict)

    @property
    def sigma_sq(self) -> float:
        return self.grad_sq + self.weight_sq


def mass(field: RadialField) -> float:
    """||u||_2^2 = 4*pi*int |w|^2 dr."""
    g = field.grid
    return 4.0 * np.pi * g.dr * float(np.sum(np.abs(field.w) ** 2))


def grad_sq(field: RadialField) -> float:
    """||grad u||_2^2 = 4*pi*sum k_m^2 |what_m|^2."""
    c = sine_forward(field)
    return 4.0 * np.pi * float(np.sum(field.grid.k ** 2 * np.abs(c) ** 2))


def weight_sq(field: RadialField) -> float:
    """||x u||_2^2 = 4*pi*int r^2 |w|^2 dr."""
    g = field.grid
    return 4.0 * np.pi * g.dr * float(np.sum(g.r ** 2 * np.abs(field.w) ** 2))


def lp_norm(field: RadialField, p: float) -> float:
    """||u||_p = (4*pi*int |u|^p r^2 dr)^(1/p) for p in [2, inf).

    The origin trapezoid cell contributes |u(0)|^p * 0^2 = 0, so only the
    interior nodes enter.
    """
    if p < 2 or not np.isfinite(p):
        raise UnsupportedExponentError(f"exponent p={p} not supported (need 2 <= p < inf)")
    g = field.grid
    absu = np.abs(field.w) / g.r
    val = 4.0 * np.pi * g.dr * float(np.sum(absu ** p * g.r ** 2))
    return val ** (1.0 / p)


def sup_norm(field: RadialField) -> float:
    """||u||_inf over the grid, including the extrapolated origin value."""
    absu = np.abs(field.w) / field.grid.r
    return max(float(np.max(absu, initial=0.0)), abs(origin_value(field)))


def norms(field: RadialField, p_list: Iterable[float] = ()) -> NormReport:
    return NormReport(
        mass=mass(field),
        grad_sq=grad_sq(field),
        weight_sq=weight_sq(field),
        lp={float(p): lp_norm(field, p) for p in p_list},
    )


def l2_norm(field: RadialField) -> float:
    return np.sqrt(mass(field))


def sigma_norm(field: RadialField) -> float:
    """||u||_Sigma = sqrt(||grad u||_2^2 + ||x u||_2^2)."""
    return np.sqrt(grad_sq(field) + weight_sq(field))


def field_sub(a: RadialField, b: RadialField) -> RadialField:
    if not a.grid.same_as(b.grid):
        raise ShapeError("fields live on different grids")
    return RadialField(a.grid, a.w - b.w, a.t)


def l2_distance(a: RadialField, b: RadialField) -> float:
    return l2_norm(field_sub(a, b))


def sigma_distance(a: RadialField, b: RadialField) -> float:
    return sigma_norm(field_sub(a, b))


def profile_l2(grid: Grid, profile: np.ndarray) -> float:
    """L^2 norm of a radial profile g: sqrt(4*pi*int |g|^2 r^2 dr)."""
    return float(np.sqrt(4.0 * np.pi * grid.dr * np.sum(np.abs(profile) ** 2 * grid.r ** 2)))


def boundary_mass_fraction(field: RadialField, inner: float = 0.9) -> float:
    """Fraction of the mass sitting in r in [inner*R, R].

    Watchdog input: Dirichlet-wall reflections show up here before they
    corrupt anything else.
    """
    g = field.grid
    sel = g.r >= inner * g.R
    total = float(np.sum(np.abs(field.w) ** 2))
    if total == 0.0:
        return 0.0
    return float(np.sum(np.abs(field.w[sel]) ** 2)) / total

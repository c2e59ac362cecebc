"""Exact linear propagators for V in {0, +r^2/2, -r^2/2} and Heisenberg operators.

The linear flow U(t) = exp(it(Delta/2 - V)) factorises as phase * free * phase
by completing the square in the oscillator kernels:

    confining:  U(t) = M_c(t) F(sin t)  M_c(t),   M_c(t) = exp(-i r^2 tan(t/2)/2)
    repulsive:  U(t) = M_r(t) F(sinh t) M_r(t),   M_r(t) = exp(+i r^2 tanh(t/2)/2)

where F(s) is the free flow, diagonal on the sine basis with multiplier
exp(-i k^2 s / 2).  Both factors are unitary on the grid, so the discrete
flow preserves mass to machine precision and the confining flow is exactly
2*pi-antiperiodic on radial data in three dimensions (spectrum 2j + 3/2).

Heisenberg operators, defined by conjugation with the flow:

    P(t) = U(-t) (i grad) U(t),   X(t) = U(-t) x U(t).

On radial data both reduce to scalar profiles a(t)*i*d_r u + b(t)*r*u with

    free:       P: (1, 0)            X: (-t, 1)
    confining:  P: (cos t,  sin t)   X: (-sin t, cos t)
    repulsive:  P: (cosh t, -sinh t) X: (-sinh t, cosh t)

These tables satisfy P(-t) U(t) = U(t) (i grad) and X(-t) U(t) = U(t) x
identically (checked to machine precision against the factored flow), and
invert as i grad = cosh(t) P(t) + sinh(t) X(t) in the repulsive case.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import grid as gridmod
from .errors import ConfigError, ResolutionError, SingularTimeError
from .grid import Grid, RadialField, inverse_w, profile_l2, radial_derivative, sine_coeffs, sup_norm


class PotentialKind(enum.Enum):
    """Which quadratic potential multiplies the field: 0, +r^2/2 or -r^2/2."""

    FREE = "free"
    CONFINING = "confining"
    REPULSIVE = "repulsive"

    @classmethod
    def parse(cls, name: str) -> "PotentialKind":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ConfigError(f"unknown potential kind {name!r}; expected free, confining or repulsive")


CONFINING_MAX_CHUNK = math.pi / 2


@dataclass
class PropagatorPlan:
    """Reusable linear-flow applicator with per-chunk phase/multiplier caches.

    Immutable configuration plus a workspace.  The cache is keyed by the
    exact chunk duration, so repeated fixed-step applications (the common
    case in time stepping) reuse one phase array and one sine multiplier.
    Distinct plans never share mutable state; use one plan per thread.
    """

    grid: Grid
    kind: PotentialKind
    _cache: dict = dc_field(default_factory=dict, repr=False)
    _CACHE_MAX: int = 64

    @property
    def max_chunk(self) -> float:
        return CONFINING_MAX_CHUNK if self.kind is PotentialKind.CONFINING else math.inf

    def _chunk_arrays(self, tau: float):
        """(phase multiplier or None, sine multiplier) for one chunk of duration tau."""
        hit = self._cache.get(tau)
        if hit is not None:
            return hit
        g = self.grid
        if self.kind is PotentialKind.FREE:
            ph = None
            s = tau
        elif self.kind is PotentialKind.CONFINING:
            half = math.tan(tau / 2.0)
            self._guard_phase(abs(half), tau)
            ph = np.exp(-0.5j * half * g.r ** 2)
            s = math.sin(tau)
        else:
            half = math.tanh(tau / 2.0)
            self._guard_phase(abs(half), tau)
            ph = np.exp(+0.5j * half * g.r ** 2)
            s = math.sinh(tau)
        kmul = np.exp(-0.5j * g.k ** 2 * s)
        if len(self._cache) >= self._CACHE_MAX:
            self._cache.clear()
        self._cache[tau] = (ph, kmul)
        return ph, kmul

    def _guard_phase(self, slope: float, tau: float) -> None:
        # Nyquist guard: per-cell increment of the r^2 phase at r = R is
        # R * slope * dr; beyond pi the multiplier is aliased.
        g = self.grid
        incr = g.R * slope * g.dr
        if incr > math.pi:
            needed = int(math.ceil(g.R ** 2 * slope / math.pi))
            raise ResolutionError(
                f"phase multiplier for chunk {tau:.6g} not resolved at r = R: "
                f"per-cell increment {incr:.3g} > pi; need N >= {needed}"
            )

    def apply_w(self, w: np.ndarray, t: float) -> np.ndarray:
        """Apply U(t) to a raw w array."""
        if t == 0.0:
            return w.copy()
        g = self.grid
        if self.kind is PotentialKind.CONFINING:
            nchunks = max(1, int(math.ceil(abs(t) / self.max_chunk)))
        else:
            nchunks = 1
        tau = t / nchunks
        ph, kmul = self._chunk_arrays(tau)
        out = w
        for _ in range(nchunks):
            if ph is not None:
                out = ph * out
            out = inverse_w(g, sine_coeffs(g, out) * kmul)
            if ph is not None:
                out = ph * out
        return out

    def propagate(self, field: RadialField, t: float) -> RadialField:
        return field.with_w(self.apply_w(field.w, t), field.t + t)


def free_propagate(field: RadialField, s: float) -> RadialField:
    """Free flow: sine coefficients multiplied by exp(-i k^2 s / 2)."""
    if s == 0.0:
        return field.copy()
    g = field.grid
    c = sine_coeffs(g, field.w) * np.exp(-0.5j * g.k ** 2 * s)
    return field.with_w(inverse_w(g, c), field.t + s)


def mehler_propagate(field: RadialField, t: float, kind: PotentialKind,
                     plan: PropagatorPlan | None = None) -> RadialField:
    """Apply U(t) for the given potential via the exact factorisation."""
    if plan is None:
        plan = PropagatorPlan(field.grid, kind)
    return plan.propagate(field, t)


# -- O(N^2) kernel-quadrature oracle -------------------------------------------

ORACLE_MAX_N = 4096
_ORACLE_BLOCK = 256


def _kernel_parameters(t: float, kind: PotentialKind):
    """(s, alpha) with kernel pref * exp(i alpha (r^2 + rho^2)) * sin(r rho / s)."""
    if kind is PotentialKind.FREE:
        if t == 0.0:
            raise SingularTimeError("free kernel undefined at t = 0")
        return t, 0.5 / t
    if kind is PotentialKind.CONFINING:
        s = math.sin(t)
        if s == 0.0:
            raise SingularTimeError(f"confining kernel singular at t = {t} (sin t = 0)")
        return s, 0.5 * math.cos(t) / s
    if t == 0.0:
        raise SingularTimeError("repulsive kernel undefined at t = 0")
    return math.sinh(t), 0.5 * math.cosh(t) / math.sinh(t)


def mehler_oracle(field: RadialField, t: float, kind: PotentialKind) -> RadialField:
    """Brute-force trapezoid quadrature of the radial oscillator kernel.

    Reference route, independent of the factored propagator:

        w_out(r) = (2 pi i s)^(-3/2) * 4 pi s * int_0^R
                   exp(i alpha (r^2 + rho^2)) sin(r rho / s) w(rho) drho

    with (s, alpha) = (t, 1/2t), (sin t, cot(t)/2), (sinh t, coth(t)/2) for
    the free, confining and repulsive kinds.  Cost O(N^2); meaningful only
    for fields that stay away from the Dirichlet wall over [0, t].
    """
    g = field.grid
    if g.N > ORACLE_MAX_N:
        raise ConfigError(f"oracle limited to N <= {ORACLE_MAX_N}, got N = {g.N}")
    s, alpha = _kernel_parameters(t, kind)
    # (2 pi i s)^(-3/2) on the branch continued from s > 0: i^(3/2) = e^{3 i pi/4}
    pref = (2.0 * np.pi * abs(s)) ** -1.5 * np.exp(-0.75j * np.pi * np.sign(s))
    pref *= 4.0 * np.pi * s * g.dr
    diag = np.exp(1j * alpha * g.r ** 2)
    src = diag * field.w
    out = np.empty(g.N, dtype=complex)
    inv_s = 1.0 / s
    for lo in range(0, g.N, _ORACLE_BLOCK):
        hi = min(lo + _ORACLE_BLOCK, g.N)
        block = np.sin(np.outer(g.r[lo:hi], g.r) * inv_s)
        out[lo:hi] = block @ src
    out *= pref * diag
    return field.with_w(out, field.t + t)


# -- Heisenberg operators -------------------------------------------------------

class HeisenbergWhich(enum.Enum):
    P = "P"
    X = "X"


@dataclass(frozen=True)
class HeisenbergProfile:
    """Radial profile of the x-hat component of P(t)u or X(t)u."""

    grid: Grid
    profile: np.ndarray
    t: float
    kind: PotentialKind
    which: HeisenbergWhich

    def l2(self) -> float:
        return profile_l2(self.grid, self.profile)


def heisenberg_coefficients(kind: PotentialKind, t: float, which: HeisenbergWhich) -> tuple[float, float]:
    """(a, b) such that the operator is a * (i grad) + b * x.

    Tables solve the conjugation P(t) = U(-t)(i grad)U(t), X(t) = U(-t) x U(t).
    """
    if kind is PotentialKind.FREE:
        return (1.0, 0.0) if which is HeisenbergWhich.P else (-t, 1.0)
    if kind is PotentialKind.CONFINING:
        if which is HeisenbergWhich.P:
            return (math.cos(t), math.sin(t))
        return (-math.sin(t), math.cos(t))
    if which is HeisenbergWhich.P:
        return (math.cosh(t), -math.sinh(t))
    return (-math.sinh(t), math.cosh(t))


def heisenberg_apply(field: RadialField, t: float, kind: PotentialKind,
                     which: HeisenbergWhich | str,
                     du: np.ndarray | None = None) -> HeisenbergProfile:
    """Profile a(t) * i * d_r u + b(t) * r * u of P(t)u or X(t)u.

    For radial u the vector operator is purely radial, so the scalar
    profile determines it; its L^2 norm is 4*pi*int |.|^2 r^2 dr.
    """
    which = HeisenbergWhich(which)
    a, b = heisenberg_coefficients(kind, t, which)
    if du is None:
        du = radial_derivative(field)
    prof = a * 1j * du + b * field.w
    return HeisenbergProfile(field.grid, prof, t, kind, which)


def h_half_norm(field: RadialField, t: float, kind: PotentialKind,
                du: np.ndarray | None = None) -> float:
    """sqrt(||P(-t)u||^2/2 + ||X(-t)u||^2/2).

    For the confining kind this collapses to (||grad u||^2/2 + ||x u||^2/2)^(1/2)
    independently of t; for the repulsive kind it is the L^2 functional-calculus
    square root of the conjugated oscillator at time t.
    """
    if du is None:
        du = radial_derivative(field)
    p = heisenberg_apply(field, -t, kind, HeisenbergWhich.P, du=du)
    x = heisenberg_apply(field, -t, kind, HeisenbergWhich.X, du=du)
    return math.sqrt(0.5 * p.l2() ** 2 + 0.5 * x.l2() ** 2)


# -- dispersive-estimate probe ---------------------------------------------------

def l1_norm(field: RadialField) -> float:
    """||u||_1 = 4*pi*int |w| r dr."""
    g = field.grid
    return 4.0 * np.pi * g.dr * float(np.sum(np.abs(field.w) * g.r))


def dispersive_ratio(field: RadialField, t: float, kind: PotentialKind,
                     plan: PropagatorPlan | None = None) -> float:
    """||U(t)f||_inf * |tau|^(3/2) / ||f||_1, tau = sin t for confining else t.

    Probes the decay rate of the flow; for the free Gaussian the ratio
    increases to (2 pi)^(-3/2) * ||f||_1 normalised limit.
    """
    if t == 0.0:
        raise SingularTimeError("dispersive ratio undefined at t = 0")
    if kind is PotentialKind.CONFINING:
        tau = math.sin(t)
        if tau == 0.0:
            raise SingularTimeError(f"dispersive ratio singular at t = {t} (sin t = 0)")
    else:
        tau = t
    l1 = l1_norm(field)
    if l1 == 0.0:
        return 0.0
    out = mehler_propagate(field, t, kind, plan)
    return sup_norm(out) * abs(tau) ** 1.5 / l1

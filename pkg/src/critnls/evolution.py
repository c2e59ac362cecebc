"""Nonlinear time integration and the Duhamel fixed-point solver.

The equation i u_t = -Delta u / 2 + V u + |u|^4 u splits into two exactly
solvable flows: the linear oscillator flow (propagators module) and the
pointwise gauge flow i u_t = |u|^4 u, whose solution is u -> exp(-i|u|^4 tau) u
since |u| is conserved.  One Strang step of length dt is

    N(dt/2) . L(dt) . N(dt/2)

with local error O(dt^3).  Both substeps are unitary, so mass is conserved
to roundoff; energy drifts at O(dt^2).  Consecutive nonlinear half-steps
between snapshots are fused into single full steps.

picard_solve runs the contraction iteration for the Duhamel map

    Phi(u)(t) = U(t) u0 - i int_0^t U(t - s) F(u(s)) ds,   F(u) = |u|^4 u,

with the time integral by trapezoid over the stored nodes and every
U(t - s) application exact, and reports the successive-difference norms
d_k = sup_t ||u^(k+1)(t) - u^(k)(t)||_2 together with their ratios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, WatchdogError
from .grid import (Grid, RadialField, boundary_mass_fraction, l2_distance, l2_norm, lp_norm)
from .propagators import PotentialKind, PropagatorPlan


@dataclass(frozen=True)
class StepPolicy:
    """Base step, snapshot stride, and watchdog thresholds for evolve()."""

    dt: float
    stride: int = 10
    boundary_mass_threshold: float = 1e-6
    blowup_factor: float = 1e6
    energy_drift_abort: float = 0.0  # <= 0 disables the energy watchdog

    def validate(self, kind: PotentialKind) -> None:
        if not (self.dt > 0.0 and np.isfinite(self.dt)):
            raise ConfigError(f"dt must be positive and finite, got {self.dt}")
        if kind is PotentialKind.CONFINING and self.dt >= math.pi:
            raise ConfigError(f"confining runs need dt < pi, got dt = {self.dt}")
        if self.stride < 1:
            raise ConfigError(f"stride must be >= 1, got {self.stride}")


@dataclass
class Trajectory:
    """Ordered snapshots (t_i, field) on one grid, plus per-snapshot records."""

    kind: PotentialKind
    grid: Grid
    times: list = dc_field(default_factory=list)
    fields: list = dc_field(default_factory=list)
    records: list = dc_field(default_factory=list)

    def append(self, field: RadialField, record=None) -> None:
        if not field.grid.same_as(self.grid):
            raise ConfigError("snapshot grid differs from trajectory grid")
        if self.times and not (
            (field.t > self.times[-1]) if self.forward else (field.t < self.times[-1])
        ):
            raise ConfigError("snapshot times must be strictly monotone")
        self.times.append(field.t)
        self.fields.append(field)
        self.records.append(record)

    @property
    def forward(self) -> bool:
        return len(self.times) < 2 or self.times[1] > self.times[0]

    def __len__(self) -> int:
        return len(self.times)

    @property
    def t0(self) -> float:
        return self.times[0]

    @property
    def t1(self) -> float:
        return self.times[-1]


def nonlinearity_w(field: RadialField) -> np.ndarray:
    """w-representation of F(u) = |u|^4 u, i.e. |u|^4 * w."""
    absu2 = np.abs(field.w / field.grid.r) ** 2
    return absu2 ** 2 * field.w


def nonlinear_phase_step(field: RadialField, tau: float) -> RadialField:
    """Exact gauge flow u -> exp(-i |u|^4 tau) u; |u| pointwise invariant."""
    if tau == 0.0:
        return field.copy()
    absu2 = np.abs(field.w / field.grid.r) ** 2
    return field.with_w(field.w * np.exp(-1j * absu2 ** 2 * tau))


def strang_step(field: RadialField, dt: float, kind: PotentialKind,
                plan: PropagatorPlan | None = None) -> RadialField:
    """One N(dt/2) L(dt) N(dt/2) step."""
    if plan is None:
        plan = PropagatorPlan(field.grid, kind)
    mid = plan.propagate(nonlinear_phase_step(field, dt / 2.0), dt)
    return nonlinear_phase_step(mid, dt / 2.0)


def _phase_step_w(grid: Grid, w: np.ndarray, tau: float) -> np.ndarray:
    absu2 = np.abs(w / grid.r) ** 2
    return w * np.exp(-1j * absu2 ** 2 * tau)


def evolve(field: RadialField, t0: float, t1: float, policy: StepPolicy,
           kind: PotentialKind,
           recorder: Callable[[RadialField], object] | None = None,
           callbacks: Sequence[Callable[[RadialField], dict]] = (),
           plan: PropagatorPlan | None = None,
           linear_only: bool = False) -> Trajectory:
    """Integrate from t0 = field.t to t1 with snapshots every `stride` steps.

    Uses n = ceil(|t1-t0|/dt) uniform steps of size (t1-t0)/n, so every step
    has |step| <= policy.dt.  Watchdogs run at each snapshot; a trip raises
    WatchdogError carrying the partial trajectory (last good snapshot
    included).  Backward integration (t1 < t0) is allowed.
    """
    if field.t != t0:
        raise ConfigError(f"field is stamped t = {field.t}, evolve called with t0 = {t0}")
    policy.validate(kind)
    if plan is None:
        plan = PropagatorPlan(field.grid, kind)
    traj = Trajectory(kind=kind, grid=field.grid)

    def snapshot(f: RadialField) -> None:
        rec = recorder(f) if recorder is not None else None
        extras = {}
        for cb in callbacks:
            extras.update(cb(f))
        if rec is not None and extras:
            rec.extras.update(extras)
        traj.append(f, rec)

    snapshot(field)
    if t1 == t0:
        return traj

    span = t1 - t0
    nsteps = max(1, int(math.ceil(abs(span) / policy.dt - 1e-12)))
    dt = span / nsteps
    grid = field.grid
    blowup_scale = lp_norm(field, 10.0) ** 10
    mass0 = l2_norm(field) ** 2
    e0 = None
    if policy.energy_drift_abort > 0.0:
        from .diagnostics import energy as _energy  # local import to avoid a cycle
        e0 = _energy(field, kind)

    w = field.w
    if not linear_only:
        w = _phase_step_w(grid, w, dt / 2.0)
    for i in range(1, nsteps + 1):
        w = plan.apply_w(w, dt)
        t = t0 + i * dt if i < nsteps else t1
        at_snapshot = (i == nsteps) or (i % policy.stride == 0)
        if at_snapshot:
            if not linear_only:
                w = _phase_step_w(grid, w, dt / 2.0)
            f = RadialField(grid, w, t)
            _watchdogs(f, traj, policy, kind, blowup_scale, mass0, e0)
            snapshot(f)
            if i < nsteps:
                w = f.w
                if not linear_only:
                    w = _phase_step_w(grid, w, dt / 2.0)
        elif not linear_only:
            w = _phase_step_w(grid, w, dt)
    return traj


def _watchdogs(f: RadialField, traj: Trajectory, policy: StepPolicy,
               kind: PotentialKind, blowup_scale: float, mass0: float, e0) -> None:
    if not np.all(np.isfinite(f.w.real)) or not np.all(np.isfinite(f.w.imag)):
        raise WatchdogError(f"non-finite field at t = {f.t:.6g}", trajectory=traj)
    bf = boundary_mass_fraction(f)
    if bf > policy.boundary_mass_threshold:
        raise WatchdogError(
            f"boundary mass fraction {bf:.3e} exceeds {policy.boundary_mass_threshold:.3e} "
            f"at t = {f.t:.6g} (Dirichlet wall reached)", trajectory=traj)
    l10 = lp_norm(f, 10.0) ** 10
    if l10 > policy.blowup_factor * max(blowup_scale, 1e-300):
        raise WatchdogError(
            f"Z-blowup suspected: ||u||_10^10 grew by more than {policy.blowup_factor:.1e} "
            f"at t = {f.t:.6g}", trajectory=traj)
    if e0 is not None:
        from .diagnostics import energy as _energy
        drift = abs(_energy(f, kind) - e0)
        if drift > policy.energy_drift_abort * max(abs(e0), 1.0):
            raise WatchdogError(
                f"energy drift {drift:.3e} beyond abort threshold at t = {f.t:.6g}",
                trajectory=traj)


# -- Picard / Duhamel -------------------------------------------------------------

@dataclass
class PicardReport:
    """Outcome of the contraction iteration for the Duhamel map."""

    iterations: int
    diffs: list
    ratios: list
    converged: bool
    diverged: bool
    trajectory: Trajectory
    message: str = ""

    @property
    def eventually_contracting(self) -> bool:
        return self.converged or (len(self.ratios) > 0 and self.ratios[-1] < 1.0)


def _duhamel_sweep(lin_w: list, F_w: list, dt_node: float, plan: PropagatorPlan,
                   sign: float) -> list:
    """u_new[i] = lin[i] + sign * i * trapz_{j<=i} U(t_i - s_j) F_j.

    Incremental forward propagation: each F_j is advanced node-by-node, so
    the whole sweep costs n(n-1)/2 cached propagator applications.
    """
    n = len(lin_w)
    out = [lin_w[0].copy()]
    prop = []  # prop[j] = U(t_i - s_j) F_j for the current i
    for i in range(1, n):
        prop = [plan.apply_w(p, dt_node) for p in prop]
        prop.append(plan.apply_w(F_w[i - 1], dt_node))
        acc = 0.5 * prop[0] + 0.5 * F_w[i]
        for j in range(1, i):
            acc = acc + prop[j]
        out.append(lin_w[i] + sign * 1j * dt_node * acc)
    return out


def picard_solve(u0: RadialField, T_loc: float, kind: PotentialKind,
                 n_nodes: int = 33, max_iter: int = 12, tol: float = 1e-12,
                 plan: PropagatorPlan | None = None) -> PicardReport:
    """Contraction iteration for Phi on [0, T_loc], trapezoid-in-time nodes.

    Starts from the linear flow u^(0)(t) = U(t)u0 and stops when
    d_k = sup_t ||u^(k+1) - u^(k)||_2 < tol or after max_iter sweeps.
    Three consecutive increases of d_k flag divergence (soft failure:
    the report is returned, not raised).
    """
    if n_nodes < 2:
        raise ConfigError(f"picard needs >= 2 time nodes, got {n_nodes}")
    if plan is None:
        plan = PropagatorPlan(u0.grid, kind)
    grid = u0.grid
    dt_node = T_loc / (n_nodes - 1)
    times = [u0.t + j * dt_node for j in range(n_nodes)]

    lin_w = [u0.w.copy()]
    for _ in range(n_nodes - 1):
        lin_w.append(plan.apply_w(lin_w[-1], dt_node))
    cur = [w.copy() for w in lin_w]

    diffs, ratios = [], []
    converged = diverged = False
    message = ""
    scale = max(l2_norm(u0), 1e-300)
    for k in range(max_iter):
        F_w = [nonlinearity_w(RadialField(grid, w, t)) for w, t in zip(cur, times)]
        new = _duhamel_sweep(lin_w, F_w, dt_node, plan, sign=-1.0)
        d = max(
            l2_distance(RadialField(grid, a, t), RadialField(grid, b, t))
            for a, b, t in zip(new, cur, times)
        )
        diffs.append(d)
        if len(diffs) >= 2 and diffs[-2] > 0:
            ratios.append(diffs[-1] / diffs[-2])
        cur = new
        if d < tol * scale or d < 1e-300:
            converged = True
            break
        if len(diffs) >= 4 and diffs[-1] > diffs[-2] > diffs[-3] > diffs[-4]:
            diverged = True
            message = "contraction failure: d_k increased for 3 consecutive iterations"
            break

    traj = Trajectory(kind=kind, grid=grid)
    for w, t in zip(cur, times):
        traj.append(RadialField(grid, w, t))
    return PicardReport(iterations=len(diffs), diffs=diffs, ratios=ratios,
                        converged=converged, diverged=diverged,
                        trajectory=traj, message=message)


def duhamel_residual(traj: Trajectory, kind: PotentialKind,
                     plan: PropagatorPlan | None = None,
                     nonlinearity: bool = True) -> float:
    """max_i || u(t_i) - U(t_i - t_0) u(t_0) + i int_{t_0}^{t_i} U(t_i - s) F(u(s)) ds ||_2.

    A-posteriori consistency of a stored trajectory with its own integral
    equation; the s-integral uses the trapezoid rule over the snapshots.
    With nonlinearity=False the integral term is dropped and the residual
    collapses to the linear group law.
    """
    if len(traj) < 3:
        raise ConfigError("duhamel residual needs >= 3 snapshots")
    if plan is None:
        plan = PropagatorPlan(traj.grid, kind)
    grid = traj.grid
    times = traj.times
    lin = traj.fields[0].w.copy()
    if nonlinearity:
        F_w = [nonlinearity_w(f) for f in traj.fields]
    prop: list = []
    worst = 0.0
    for i in range(1, len(traj)):
        h = times[i] - times[i - 1]
        lin = plan.apply_w(lin, h)
        rhs = lin
        if nonlinearity:
            prop = [plan.apply_w(p, h) for p in prop]
            prop.append(plan.apply_w(F_w[i - 1], h))
            acc = np.zeros(grid.N, dtype=complex)
            # trapezoid over the (possibly nonuniform) snapshot times
            for j in range(i):
                hj = times[j + 1] - times[j]
                acc = acc + 0.5 * hj * prop[j]
                acc = acc + 0.5 * hj * (prop[j + 1] if j + 1 < i else F_w[i])
            rhs = lin - 1j * acc
        res = l2_distance(traj.fields[i], RadialField(grid, rhs, times[i]))
        worst = max(worst, res)
    return worst

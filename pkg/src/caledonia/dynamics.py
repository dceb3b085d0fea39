"""Equations of motion, velocity initialization, and monitored integration.

Two integration modes share one loop: the reduced symmetric mode advances
only P1 and P2 (the mirror bodies are implied, so the symmetry is exact by
construction), and the general four-body mode advances all four bodies
independently so that symmetry breaking can actually happen. Both run under
an adaptive high-order stepper with per-step monitors for energy failure
(the close-encounter proxy), symmetry breaking, and hierarchy changes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import DOP853

from .core import (
    G,
    DomainError,
    ForbiddenError,
    FullState,
    MassRatios,
    PlanarState,
    energy_and_momentum,
    expand_state,
    symmetric_potential,
)

# mirror-sum squared norm beyond which the symmetry counts as broken
SYMMETRY_TOL = 1e-4

GENERAL_PAIRS = ("12", "13", "14", "23", "24", "34")

COLLISION = "Collision"
SYMMETRY_BROKEN = "SymmetryBroken"
COMPLETED = "Completed"


@dataclass(frozen=True)
class IntegratorConfig:
    """Step control and monitor settings.

    energy_tol is the relative energy-conservation threshold whose breach is
    treated as a close encounter (1e-9 by default; integrating through a near
    collision without regularization destroys the energy budget first).
    """

    rel_tol: float = 1e-12
    abs_tol: float = 1e-14
    max_steps: int = 10000
    min_step: float = 1e-12
    monitor_cadence: int = 1
    energy_tol: float = 1e-9

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise DomainError("tolerances must be positive")
        if self.max_steps < 1 or self.min_step <= 0 or self.monitor_cadence < 1:
            raise DomainError("max_steps, min_step, monitor_cadence must be positive")
        if self.energy_tol <= 0:
            raise DomainError("energy_tol must be positive")


@dataclass(frozen=True)
class OrbitOutcome:
    """What happened to one orbit.

    terminal is Collision (with the offending pair), SymmetryBroken, or
    Completed; t_terminal is the event time (None when Completed).
    hierarchy_changes lists (t, from, to) with from != to and increasing t.
    """

    terminal: str
    pair: str | None
    t_terminal: float | None
    t_end: float
    hierarchy_changes: tuple
    energy_drift: float
    steps_taken: int


def accel_general4(positions, masses):
    """Newtonian pairwise accelerations, no symmetry assumption (G = 1)."""
    pos = np.asarray(positions, dtype=float)
    mas = np.asarray(masses, dtype=float)
    if pos.shape != (4, 2) or mas.shape != (4,):
        raise DomainError("need (4, 2) positions and 4 masses")
    acc = np.zeros((4, 2))
    for i in range(4):
        for j in range(i + 1, 4):
            d = pos[j] - pos[i]
            r2 = float(d @ d)
            if r2 == 0.0:
                if mas[i] == 0.0 and mas[j] == 0.0:
                    continue
                raise DomainError(f"bodies {i + 1} and {j + 1} coincide")
            inv3 = G / (r2 * math.sqrt(r2))
            acc[i] += mas[j] * inv3 * d
            acc[j] -= mas[i] * inv3 * d
    return acc


def accel_cs5bp(r1, r2, ratios):
    """Reduced symmetric-mode accelerations of P1 and P2.

    Each pair body feels the central mass plus a quarter of its own mirror
    partner at twice its radius, and both bodies of the other pair.
    """
    x1, y1 = float(r1[0]), float(r1[1])
    x2, y2 = float(r2[0]), float(r2[1])
    m0, m1, m2 = ratios.mu0, ratios.mu1, ratios.mu2
    rho1sq = x1 * x1 + y1 * y1
    rho2sq = x2 * x2 + y2 * y2
    dx, dy = x1 - x2, y1 - y2
    sx, sy = x1 + x2, y1 + y2
    r12sq = dx * dx + dy * dy
    r14sq = sx * sx + sy * sy
    if rho1sq == 0.0 or rho2sq == 0.0 or r12sq == 0.0 or r14sq == 0.0:
        raise DomainError("coincident bodies in reduced state")
    inv1 = 1.0 / (rho1sq * math.sqrt(rho1sq))
    inv2 = 1.0 / (rho2sq * math.sqrt(rho2sq))
    inv12 = 1.0 / (r12sq * math.sqrt(r12sq))
    inv14 = 1.0 / (r14sq * math.sqrt(r14sq))
    c1 = -(m0 + 0.25 * m1) * inv1
    c2 = -(m0 + 0.25 * m2) * inv2
    a1x = c1 * x1 - m2 * (dx * inv12 + sx * inv14)
    a1y = c1 * y1 - m2 * (dy * inv12 + sy * inv14)
    a2x = c2 * x2 - m1 * (-dx * inv12 + sx * inv14)
    a2y = c2 * y2 - m1 * (-dy * inv12 + sy * inv14)
    return np.array([a1x, a1y]), np.array([a2x, a2y])


def init_velocities(r1x, r2x, c0, e0, ratios):
    """Perpendicular starting velocities realizing (C0, E0) on the x-axis.

    Solves the energy and angular-momentum constraints for y-velocities with
    c = sqrt(C0/E0); a negative radicand means no real motion exists at this
    geometry (Sundman-forbidden grid point) and raises ForbiddenError.
    """
    if r1x <= 0.0 or r2x <= 0.0:
        raise DomainError("pair radii must be positive")
    if e0 <= 0.0:
        raise DomainError("E0 must be positive (bound system)")
    if c0 < 0.0:
        raise DomainError("C0 must be nonnegative")
    m1, m2 = ratios.mu1, ratios.mu2
    if m1 <= 0.0 or m2 <= 0.0:
        raise DomainError("velocity init needs both pair masses positive")
    c = math.sqrt(c0 / e0)
    u = symmetric_potential([r1x, 0.0], [r2x, 0.0], ratios)
    inertia = m1 * r1x * r1x + m2 * r2x * r2x
    radicand = m1 * m2 * (-c * c + 4.0 * inertia * (u - e0))
    if radicand < 0.0:
        raise ForbiddenError(
            f"no real motion at (r1, r2) = ({r1x}, {r2x}) for C0 = {c0}, E0 = {e0}"
        )
    root = math.sqrt(radicand)
    v1y = (r1x * c * m1 - r2x * root) / (2.0 * m1 * inertia)
    v2y = (r2x * c * m2 + r1x * root) / (2.0 * m2 * inertia)
    return np.array([0.0, v1y]), np.array([0.0, v2y])


def initial_state(r1x, r2x, c0, e0, ratios, mode="cs5bp", perturbation=0.0):
    """Build the canonical mirror start on the x-axis for either mode.

    In general4 mode an optional x-offset is applied to P1 only (the mirror
    body stays put), seeding a symmetry perturbation; the reduced mode is
    symmetric by construction and rejects a nonzero perturbation.
    """
    v1, v2 = init_velocities(r1x, r2x, c0, e0, ratios)
    state = PlanarState(
        t=0.0, r1=np.array([r1x, 0.0]), r2=np.array([r2x, 0.0]), v1=v1, v2=v2
    )
    if mode == "cs5bp":
        if perturbation != 0.0:
            raise DomainError("the reduced mode cannot represent a perturbation")
        return state
    if mode == "general4":
        full, _ = expand_state(state, ratios)
        if perturbation != 0.0:
            positions = full.positions.copy()
            positions[0, 0] += perturbation
            full = FullState(t=full.t, positions=positions, velocities=full.velocities)
        return full
    raise DomainError(f"unknown mode {mode!r}")


def detect_hierarchy(state, partition):
    """Hierarchy label of a reduced state, or None when unrecognized.

    Pure function of the instantaneous geometry: the radius ratio picks the
    region, and inside the double-binary band the nearer neighbour pairing
    decides between 12 and 14.
    """
    rho1 = float(np.linalg.norm(state.r1))
    rho2 = float(np.linalg.norm(state.r2))
    r12 = float(np.linalg.norm(state.r1 - state.r2))
    r14 = float(np.linalg.norm(state.r1 + state.r2))
    return partition.classify(rho1, rho2, r12=r12, r14=r14)


def monitor_symmetry(state):
    """True when either pair's mirror-sum squared norm exceeds SYMMETRY_TOL."""
    if not isinstance(state, FullState):
        raise DomainError("symmetry monitoring needs a FullState")
    p = state.positions
    s13 = float(np.sum((p[0] + p[2]) ** 2))
    s24 = float(np.sum((p[1] + p[3]) ** 2))
    return s13 > SYMMETRY_TOL or s24 > SYMMETRY_TOL


def monitor_collision(e_now, e_initial, threshold=1e-9):
    """True when the relative energy drift exceeds the threshold."""
    scale = max(abs(e_initial), 1e-300)
    return abs(e_now - e_initial) / scale > threshold


def _reduced_energy(y, ratios):
    m1, m2 = ratios.mu1, ratios.mu2
    t_kin = m1 * (y[4] * y[4] + y[5] * y[5]) + m2 * (y[6] * y[6] + y[7] * y[7])
    u = symmetric_potential(y[0:2], y[2:4], ratios)
    return t_kin - u


def _general_energy(y, masses):
    pos = y[:8].reshape(4, 2)
    vel = y[8:].reshape(4, 2)
    t_kin = 0.5 * float(np.sum(masses * np.sum(vel**2, axis=1)))
    u = 0.0
    for i in range(4):
        for j in range(i + 1, 4):
            mm = masses[i] * masses[j]
            if mm == 0.0:
                continue
            d = pos[i] - pos[j]
            u += mm / math.sqrt(float(d @ d))
    return t_kin - G * u


def _nearest_pair_reduced(y):
    rho1 = math.hypot(y[0], y[1])
    rho2 = math.hypot(y[2], y[3])
    r12 = math.hypot(y[0] - y[2], y[1] - y[3])
    r14 = math.hypot(y[0] + y[2], y[1] + y[3])
    # mirror-degenerate ties resolve to the canonical pair (12 over 34 etc.)
    pairs = (("12", r12), ("13", 2.0 * rho1), ("14", r14), ("24", 2.0 * rho2))
    return min(pairs, key=lambda kv: kv[1])[0]


def _nearest_pair_general(y):
    pos = y[:8].reshape(4, 2)
    best, best_d = None, math.inf
    for k, (i, j) in enumerate(((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))):
        d = float(np.linalg.norm(pos[i] - pos[j]))
        if d < best_d:
            best, best_d = GENERAL_PAIRS[k], d
    return best


def _make_rhs_reduced(ratios):
    m0, m1, m2 = ratios.mu0, ratios.mu1, ratios.mu2

    def rhs(t, y):
        x1, y1, x2, y2 = y[0], y[1], y[2], y[3]
        rho1sq = x1 * x1 + y1 * y1
        rho2sq = x2 * x2 + y2 * y2
        dx, dy = x1 - x2, y1 - y2
        sx, sy = x1 + x2, y1 + y2
        r12sq = dx * dx + dy * dy
        r14sq = sx * sx + sy * sy
        inv1 = 1.0 / (rho1sq * math.sqrt(rho1sq))
        inv2 = 1.0 / (rho2sq * math.sqrt(rho2sq))
        inv12 = 1.0 / (r12sq * math.sqrt(r12sq))
        inv14 = 1.0 / (r14sq * math.sqrt(r14sq))
        c1 = -(m0 + 0.25 * m1) * inv1
        c2 = -(m0 + 0.25 * m2) * inv2
        return np.array(
            [
                y[4],
                y[5],
                y[6],
                y[7],
                c1 * x1 - m2 * (dx * inv12 + sx * inv14),
                c1 * y1 - m2 * (dy * inv12 + sy * inv14),
                c2 * x2 - m1 * (-dx * inv12 + sx * inv14),
                c2 * y2 - m1 * (-dy * inv12 + sy * inv14),
            ]
        )

    return rhs


def _make_rhs_general(masses):
    m = np.asarray(masses, dtype=float)

    def rhs(t, y):
        pos = y[:8].reshape(4, 2)
        acc = np.zeros((4, 2))
        for i in range(4):
            for j in range(i + 1, 4):
                dx = pos[j, 0] - pos[i, 0]
                dy = pos[j, 1] - pos[i, 1]
                r2 = dx * dx + dy * dy
                inv3 = 1.0 / (r2 * math.sqrt(r2))
                acc[i, 0] += m[j] * inv3 * dx
                acc[i, 1] += m[j] * inv3 * dy
                acc[j, 0] -= m[i] * inv3 * dx
                acc[j, 1] -= m[i] * inv3 * dy
        return np.concatenate([y[8:], acc.ravel()])

    return rhs


def _pack(state):
    if isinstance(state, PlanarState):
        return np.concatenate([state.r1, state.r2, state.v1, state.v2])
    return np.concatenate([state.positions.ravel(), state.velocities.ravel()])


def _unpack(t, y, reduced):
    if reduced:
        return PlanarState(t=t, r1=y[0:2], r2=y[2:4], v1=y[4:6], v2=y[6:8])
    return FullState(t=t, positions=y[:8].reshape(4, 2), velocities=y[8:].reshape(4, 2))


def _dump_row(writer, t, y, reduced, energy, c, label):
    if reduced:
        row = [t, y[0], y[1], y[2], y[3], y[4], y[5], y[6], y[7]]
    else:
        row = [t, y[0], y[1], y[2], y[3], y[8], y[9], y[10], y[11]]
    writer.writerow([f"{v:.9g}" for v in row] + [f"{energy:.9g}", f"{c:.9g}",
                                                 label if label else ""])


def integrate(state, ratios, config=None, partition=None, masses=None, dump=None):
    """Advance a state under monitors until an event or max_steps.

    state is a PlanarState (reduced symmetric mode) or FullState (general
    mode; pass the length-4 masses). Hierarchy changes are logged when a
    region partition is supplied (reduced mode only). An energy-conservation
    failure or step underflow terminates as a Collision with the nearest
    pair; in general mode a broken mirror terminates as SymmetryBroken.
    Collision wins when both fire on the same step.

    dump, when given, is a writable text file receiving per-step CSV rows
    (t, x1, y1, x2, y2, vx1, vy1, vx2, vy2, E, c, hierarchy).
    """
    config = config or IntegratorConfig()
    reduced = isinstance(state, PlanarState)
    if reduced:
        rhs = _make_rhs_reduced(ratios)
        energy_of = lambda y: _reduced_energy(y, ratios)
        nearest = _nearest_pair_reduced
        m1, m2 = ratios.mu1, ratios.mu2
        ang_of = lambda y: 2.0 * (
            m1 * (y[0] * y[5] - y[1] * y[4]) + m2 * (y[2] * y[7] - y[3] * y[6])
        )
    else:
        if masses is None:
            if ratios.mu0 != 0.0:
                raise DomainError("general mode with a central body needs masses")
            masses = np.array([ratios.mu1, ratios.mu2, ratios.mu1, ratios.mu2])
        masses = np.asarray(masses, dtype=float)
        rhs = _make_rhs_general(masses)
        energy_of = lambda y: _general_energy(y, masses)
        nearest = _nearest_pair_general
        ang_of = lambda y: float(
            np.sum(
                masses
                * (
                    y[:8].reshape(4, 2)[:, 0] * y[8:].reshape(4, 2)[:, 1]
                    - y[:8].reshape(4, 2)[:, 1] * y[8:].reshape(4, 2)[:, 0]
                )
            )
        )
        if partition is not None:
            raise DomainError("hierarchy monitoring runs in the reduced mode only")

    y0 = _pack(state)
    e_init = energy_of(y0)
    solver = DOP853(
        rhs, state.t, y0, t_bound=math.inf, rtol=config.rel_tol, atol=config.abs_tol
    )

    writer = csv.writer(dump) if dump is not None else None
    if writer is not None:
        writer.writerow(
            ["t", "x1", "y1", "x2", "y2", "vx1", "vy1", "vx2", "vy2", "E", "c",
             "hierarchy"]
        )

    current = detect_hierarchy(state, partition) if partition is not None else None
    changes = []
    drift_max = 0.0
    steps = 0

    if writer is not None:
        _dump_row(writer, solver.t, y0, reduced, e_init, ang_of(y0), current)

    def finish(terminal, pair, t_event):
        return OrbitOutcome(
            terminal=terminal,
            pair=pair,
            t_terminal=t_event,
            t_end=float(solver.t),
            hierarchy_changes=tuple(changes),
            energy_drift=drift_max,
            steps_taken=steps,
        )

    while steps < config.max_steps:
        solver.step()
        if solver.status == "failed":
            return finish(COLLISION, nearest(solver.y), float(solver.t))
        steps += 1
        y = solver.y
        t = float(solver.t)
        if steps % config.monitor_cadence != 0:
            continue
        e_now = energy_of(y)
        scale = max(abs(e_init), 1e-300)
        drift = abs(e_now - e_init) / scale
        drift_max = max(drift_max, drift)
        label = None
        if partition is not None:
            label = partition.classify(
                math.hypot(y[0], y[1]),
                math.hypot(y[2], y[3]),
                r12=math.hypot(y[0] - y[2], y[1] - y[3]),
                r14=math.hypot(y[0] + y[2], y[1] + y[3]),
            )
        if writer is not None:
            _dump_row(writer, t, y, reduced, e_now, ang_of(y), label)
        if drift > config.energy_tol:
            return finish(COLLISION, nearest(y), t)
        if solver.h_abs < config.min_step:
            return finish(COLLISION, nearest(y), t)
        if not reduced and monitor_symmetry(_unpack(t, y, reduced)):
            return finish(SYMMETRY_BROKEN, None, t)
        if label is not None:
            if current is not None and label != current:
                changes.append((t, current, label))
            current = label
    return finish(COMPLETED, None, None)


def propagate(state, ratios, t_end, config=None, masses=None):
    """Advance a state to exactly t_end (either direction), no monitors.

    Used for reversibility and cross-mode agreement checks; lands on t_end
    via the stepper's dense output.
    """
    config = config or IntegratorConfig()
    reduced = isinstance(state, PlanarState)
    if reduced:
        rhs = _make_rhs_reduced(ratios)
    else:
        if masses is None:
            masses = np.array([ratios.mu1, ratios.mu2, ratios.mu1, ratios.mu2])
        rhs = _make_rhs_general(np.asarray(masses, dtype=float))
    y0 = _pack(state)
    if t_end == state.t:
        return state
    solver = DOP853(
        rhs, state.t, y0, t_bound=t_end, rtol=config.rel_tol, atol=config.abs_tol
    )
    while solver.status == "running":
        solver.step()
    if solver.status == "failed":
        raise DomainError(f"integration failed at t = {solver.t}")
    return _unpack(float(solver.t), solver.y, reduced)

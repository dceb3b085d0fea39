"""Shared domain types and unit conventions for the symmetric few-body toolkit.

Everything runs in gravitational units G = 1. The five-body (and general N-body)
hierarchical-stability work additionally normalizes the total mass to 1, so the
Szebehely constant is simply C0 = c^2 * E0 there. The equilibrium and stability
modules use each configuration family's own normalization (typically the heavy
mass M = 1 and a unit reference length), stated per operation.

Symmetric states store only P1 and P2; the mirror bodies P3 = -P1 and P4 = -P2
(and the central body P0 at the origin) are implied and never stored.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

G = 1.0
MASS_SUM_TOL = 1e-12


class DomainError(ValueError):
    """An input violates a documented precondition."""


class ForbiddenError(DomainError):
    """No real motion exists at the requested configuration (Sundman-forbidden)."""


class NoSolutionError(DomainError):
    """A solver found no root in its search region."""

    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual


def _vec2(value, name):
    arr = np.asarray(value, dtype=float)
    if arr.shape != (2,):
        raise DomainError(f"{name} must be a planar 2-vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


def cross2(a, b):
    """z-component of the cross product of two planar vectors."""
    return a[0] * b[1] - a[1] * b[0]


@dataclass(frozen=True)
class MassRatios:
    """Normalized masses of the symmetric five-body problem.

    mu1 and mu2 are the ratios of each mirror pair's body, mu0 the central
    body's; the total mass is 1, i.e. 2(mu1 + mu2) + mu0 = 1. The four-body
    problem is the mu0 = 0 slice.
    """

    mu0: float
    mu1: float
    mu2: float

    def __post_init__(self):
        total = 2.0 * (self.mu1 + self.mu2) + self.mu0
        if abs(total - 1.0) > MASS_SUM_TOL:
            raise DomainError(
                f"mass ratios must satisfy 2(mu1+mu2)+mu0 = 1; got {total!r}"
            )
        if not (0.0 <= self.mu0 <= 1.0):
            raise DomainError(f"mu0 out of range [0, 1]: {self.mu0}")
        for name, mu in (("mu1", self.mu1), ("mu2", self.mu2)):
            if not (0.0 <= mu <= 0.5):
                raise DomainError(f"{name} out of range [0, 0.5]: {mu}")

    @classmethod
    def from_pair(cls, mu1, mu2):
        """Build ratios from the two pair masses, deriving mu0 from the sum rule."""
        return cls(1.0 - 2.0 * (mu1 + mu2), mu1, mu2)

    @classmethod
    def csfbp(cls, mu):
        """Normalized ratios for the four-body problem with pair masses m = mu, M = 1."""
        if mu < 0:
            raise DomainError(f"mass ratio must be nonnegative: {mu}")
        total = 2.0 * (1.0 + mu)
        return cls(0.0, mu / total, 1.0 / total)


@dataclass(frozen=True)
class MassVector:
    """Mass ratios of the symmetric (2n+1)-body problem: n pair ratios plus mu0.

    The constraint is sum(mu_i) + mu0/2 = 1/2 (each mu_i names one body of its
    mirror pair).
    """

    mu0: float
    mus: tuple

    def __post_init__(self):
        object.__setattr__(self, "mus", tuple(float(m) for m in self.mus))
        if len(self.mus) < 1:
            raise DomainError("MassVector needs at least one pair")
        if any(m < 0 for m in self.mus) or self.mu0 < 0:
            raise DomainError("mass ratios must be nonnegative")
        total = sum(self.mus) + self.mu0 / 2.0
        if abs(total - 0.5) > MASS_SUM_TOL:
            raise DomainError(
                f"mass vector must satisfy sum(mu_i) + mu0/2 = 1/2; got {total!r}"
            )

    @property
    def n_pairs(self):
        return len(self.mus)


@dataclass(frozen=True)
class PlanarState:
    """Symmetric-mode state: P1 and P2 only, mirrors implied."""

    t: float
    r1: np.ndarray
    r2: np.ndarray
    v1: np.ndarray
    v2: np.ndarray

    def __post_init__(self):
        for name in ("r1", "r2", "v1", "v2"):
            object.__setattr__(self, name, _vec2(getattr(self, name), name))
        for name in ("r1", "r2"):
            if np.linalg.norm(getattr(self, name)) == 0.0:
                raise DomainError(f"{name} coincides with the centre")
        if np.linalg.norm(self.r1 - self.r2) == 0.0:
            raise DomainError("P1 and P2 coincide")
        if np.linalg.norm(self.r1 + self.r2) == 0.0:
            raise DomainError("P1 and P4 coincide")


@dataclass(frozen=True)
class FullState:
    """General four-body state: all positions and velocities independent.

    The com/momentum zeroing is a property of properly initialized states (see
    dynamics.init_velocities), not a hard constructor constraint: deliberately
    perturbed sweep states shift the com by the perturbation times the mass
    fraction.
    """

    t: float
    positions: np.ndarray
    velocities: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        vel = np.asarray(self.velocities, dtype=float)
        if pos.shape != (4, 2) or vel.shape != (4, 2):
            raise DomainError("FullState needs (4, 2) position and velocity arrays")
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(vel))):
            raise DomainError("state must be finite")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "velocities", vel)


@dataclass(frozen=True)
class EnergyMomentum:
    """Energy magnitude E0 = -E, angular momentum c, and Szebehely constant C0.

    In the total-mass-1 normalization C0 = c^2 * E0; generally C0 =
    c^2 * E0 / (G^2 M^5) with M the total moving+central mass.
    """

    e0: float
    c: float
    c0: float


def potential(positions, masses):
    """Sum of m_i m_j / r_ij over all pairs (G = 1).

    Zero-mass pairs contribute nothing and may even coincide (massless limit
    bodies); any other coincident pair raises a DomainError naming it.
    """
    pos = np.asarray(positions, dtype=float)
    mas = np.asarray(masses, dtype=float)
    if pos.ndim != 2 or pos.shape[0] != mas.shape[0]:
        raise DomainError("positions and masses must have matching leading size")
    total = 0.0
    k = pos.shape[0]
    for i in range(k):
        for j in range(i + 1, k):
            mm = mas[i] * mas[j]
            r = float(np.linalg.norm(pos[i] - pos[j]))
            if r == 0.0:
                if mm == 0.0:
                    continue
                raise DomainError(f"bodies {i} and {j} coincide")
            total += mm / r
    return G * total


def symmetric_potential(r1, r2, ratios):
    """Force function of the symmetric five-body configuration (total mass 1).

    Pairs: the two mirror self-pairs, the four cross pairs (two distances, each
    doubled by symmetry), and the central-body terms.
    """
    rho1 = float(np.linalg.norm(r1))
    rho2 = float(np.linalg.norm(r2))
    r12 = float(np.linalg.norm(np.asarray(r1) - np.asarray(r2)))
    r14 = float(np.linalg.norm(np.asarray(r1) + np.asarray(r2)))
    for val, name in ((rho1, "P1-P3"), (rho2, "P2-P4"), (r12, "P1-P2"), (r14, "P1-P4")):
        if val == 0.0:
            raise DomainError(f"bodies {name} coincide")
    m0, m1, m2 = ratios.mu0, ratios.mu1, ratios.mu2
    return G * (
        m1 * m1 / (2.0 * rho1)
        + m2 * m2 / (2.0 * rho2)
        + 2.0 * m1 * m2 * (1.0 / r12 + 1.0 / r14)
        + 2.0 * m0 * (m1 / rho1 + m2 / rho2)
    )


def energy_and_momentum(state, masses):
    """EnergyMomentum of a state.

    For a PlanarState, masses must be a MassRatios (total mass 1; the central
    body contributes potential only). For a FullState, masses is a length-4
    array and C0 is normalized by the total mass to the fifth power.
    """
    if isinstance(state, PlanarState):
        if not isinstance(masses, MassRatios):
            raise DomainError("PlanarState needs MassRatios")
        m1, m2 = masses.mu1, masses.mu2
        t_kin = m1 * float(np.dot(state.v1, state.v1)) + m2 * float(
            np.dot(state.v2, state.v2)
        )
        u = symmetric_potential(state.r1, state.r2, masses)
        c = 2.0 * (m1 * cross2(state.r1, state.v1) + m2 * cross2(state.r2, state.v2))
        mass_total = 1.0
    elif isinstance(state, FullState):
        mas = np.asarray(masses, dtype=float)
        if mas.shape != (4,):
            raise DomainError("FullState needs a length-4 mass array")
        t_kin = 0.5 * float(np.sum(mas * np.sum(state.velocities**2, axis=1)))
        u = potential(state.positions, mas)
        c = float(
            np.sum(
                mas
                * (
                    state.positions[:, 0] * state.velocities[:, 1]
                    - state.positions[:, 1] * state.velocities[:, 0]
                )
            )
        )
        mass_total = float(np.sum(mas))
    else:
        raise DomainError(f"unsupported state type {type(state).__name__}")
    e = t_kin - u
    e0 = -e
    c0 = c * c * e0 / (G * G * mass_total**5)
    return EnergyMomentum(e0=e0, c=c, c0=c0)


def expand_state(state, ratios):
    """Expand a symmetric PlanarState into the equivalent four-body FullState.

    Requires mu0 = 0 (the general four-body mode has no central body). Returns
    (full_state, masses) with bodies ordered P1, P2, P3, P4.
    """
    if not isinstance(state, PlanarState):
        raise DomainError("expand_state needs a PlanarState")
    if ratios.mu0 != 0.0:
        raise DomainError("expand_state requires mu0 = 0 (no central body)")
    positions = np.array([state.r1, state.r2, -state.r1, -state.r2])
    velocities = np.array([state.v1, state.v2, -state.v1, -state.v2])
    masses = np.array([ratios.mu1, ratios.mu2, ratios.mu1, ratios.mu2])
    return FullState(t=state.t, positions=positions, velocities=velocities), masses

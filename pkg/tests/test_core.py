"""Shared types: mass budgets, states, potentials, integrals of motion."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from caledonia.core import (
    DomainError,
    FullState,
    MassRatios,
    MassVector,
    PlanarState,
    cross2,
    energy_and_momentum,
    expand_state,
    potential,
    symmetric_potential,
)

EQUAL5 = MassRatios(0.2, 0.2, 0.2)
EQUAL4 = MassRatios(0.0, 0.25, 0.25)


def test_mass_budget_enforced():
    with pytest.raises(DomainError):
        MassRatios(0.5, 0.3, 0.3)
    with pytest.raises(DomainError):
        MassRatios(-0.2, 0.3, 0.3)
    with pytest.raises(DomainError):
        MassRatios(0.2, 0.6, -0.2)


def test_mass_constructors():
    r = MassRatios.from_pair(0.1, 0.3)
    assert r.mu0 == pytest.approx(0.2)
    r = MassRatios.csfbp(1.0)
    assert r == EQUAL4
    r = MassRatios.csfbp(0.5)
    assert r.mu1 == pytest.approx(0.5 / 3.0)
    assert r.mu2 == pytest.approx(1.0 / 3.0)
    assert 2.0 * (r.mu1 + r.mu2) == pytest.approx(1.0)


def test_mass_vector_budget():
    mv = MassVector(0.2, (0.1, 0.1, 0.2))
    assert mv.n_pairs == 3
    with pytest.raises(DomainError):
        MassVector(0.2, (0.1, 0.1))
    with pytest.raises(DomainError):
        MassVector(0.0, ())


def test_state_validation():
    with pytest.raises(DomainError):
        PlanarState(0.0, [0.0, 0.0], [1.0, 0.0], [0.0, 0.0], [0.0, 0.0])
    with pytest.raises(DomainError):
        PlanarState(0.0, [1.0, 0.0], [1.0, 0.0], [0.0, 0.0], [0.0, 0.0])
    with pytest.raises(DomainError):
        PlanarState(0.0, [1.0, 0.0], [-1.0, 0.0], [0.0, 0.0], [0.0, 0.0])
    with pytest.raises(DomainError):
        FullState(0.0, np.zeros((3, 2)), np.zeros((3, 2)))


def test_cross2():
    assert cross2(np.array([1.0, 0.0]), np.array([0.0, 2.0])) == 2.0
    assert cross2(np.array([1.0, 1.0]), np.array([1.0, 1.0])) == 0.0


def test_potential_zero_mass_pairs_skipped():
    pos = [[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]
    assert potential(pos, [1.0, 0.0, 1.0]) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        potential(pos, [1.0, 1.0, 1.0])


def test_symmetric_potential_matches_expanded():
    state = PlanarState(0.0, [0.4, 0.1], [-0.2, 0.3], [0.0, 0.0], [0.0, 0.0])
    u_sym = symmetric_potential(state.r1, state.r2, EQUAL4)
    full, masses = expand_state(state, EQUAL4)
    assert u_sym == pytest.approx(potential(full.positions, masses), abs=1e-14)


@given(scale=st.floats(min_value=0.1, max_value=10.0))
def test_symmetric_potential_homogeneity(scale):
    r1 = np.array([0.4, 0.1])
    r2 = np.array([-0.2, 0.3])
    u1 = symmetric_potential(r1, r2, EQUAL5)
    u2 = symmetric_potential(scale * r1, scale * r2, EQUAL5)
    assert u2 == pytest.approx(u1 / scale, rel=1e-12)


def test_energy_and_momentum_conventions():
    # circular-ish bound state: e0 positive, c0 = c^2 e0 at total mass 1
    state = PlanarState(0.0, [0.3, 0.0], [0.2, 0.0], [0.0, 0.4], [0.0, -0.3])
    em = energy_and_momentum(state, EQUAL5)
    assert em.e0 > 0.0
    assert em.c0 == pytest.approx(em.c**2 * em.e0)


def test_energy_matches_expanded_state():
    state = PlanarState(0.0, [0.3, 0.0], [0.2, 0.1], [0.1, 0.4], [-0.2, -0.3])
    em_sym = energy_and_momentum(state, EQUAL4)
    full, masses = expand_state(state, EQUAL4)
    em_full = energy_and_momentum(full, masses)
    assert em_full.e0 == pytest.approx(em_sym.e0, abs=1e-14)
    assert em_full.c == pytest.approx(em_sym.c, abs=1e-14)
    assert em_full.c0 == pytest.approx(em_sym.c0, abs=1e-14)


def test_expand_state_requires_no_central_mass():
    state = PlanarState(0.0, [0.3, 0.0], [0.2, 0.1], [0.0, 0.0], [0.0, 0.0])
    with pytest.raises(DomainError):
        expand_state(state, EQUAL5)
    full, masses = expand_state(state, EQUAL4)
    assert np.allclose(full.positions[2], -full.positions[0])
    assert np.allclose(full.positions[3], -full.positions[1])
    assert masses.tolist() == [0.25, 0.25, 0.25, 0.25]

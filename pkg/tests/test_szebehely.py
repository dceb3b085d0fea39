"""Szebehely ladder, allowed-region geometry, and hierarchy regions.

Rung fixtures are published values where the source is consistent and
recomputed values where it is not (tolerance reflects which), frozen against
an independent dense-scan oracle.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from caledonia import equilibrium as eq
from caledonia import szebehely as sz
from caledonia.core import DomainError, MassRatios, MassVector, symmetric_potential

EQUAL4 = MassRatios(0.0, 0.25, 0.25)
EQUAL5 = MassRatios(0.2, 0.2, 0.2)

RUNG_FIXTURES = [
    # (ratios, (r1, r2, r3, r4), tol)
    (EQUAL4, (0.0286267, 0.0286267, 0.0457437, 0.0457437), 5e-8),
    (MassRatios.from_pair(0.05, 0.45), (0.012952, 0.0138015, 0.0159447, 0.0182837), 5e-7),
    (MassRatios.from_pair(0.00495, 0.49505),
     (0.00828195, 0.00838264, 0.00850907, 0.00869902), 5e-8),
    (MassRatios.from_pair(0.0004995, 0.4995005),
     (0.00785938, 0.00786963, 0.00788154, 0.00789903), 5e-9),
    (EQUAL5, (0.039222, 0.039222, 0.065551, 0.065551), 5e-7),
    (MassRatios(1.0 / 9.0, 2.0 / 9.0, 2.0 / 9.0),
     (0.0368188, 0.0368188, 0.062839, 0.062839), 5e-7),
    (MassRatios(0.96, 0.01, 0.01),
     (0.0000300822, 0.0000300822, 0.000032294, 0.000032294), 5e-10),
    (MassRatios(0.15, 0.15, 0.275), (0.0364159, 0.0365447, 0.0578382, 0.0622745), 5e-7),
    (MassRatios(0.01, 0.01, 0.485), (0.00968676, 0.00988033, 0.0102131, 0.0107386), 5e-7),
    (MassRatios(0.01, 0.195, 0.3), (0.0280812, 0.0283641, 0.0439109, 0.0469418), 5e-7),
    (MassRatios(0.2, 0.3, 0.1), (0.034775273, 0.034580379, 0.055277564, 0.050085470), 5e-9),
    (MassRatios(0.28, 0.35, 0.01),
     (0.026791043, 0.026744156, 0.029059789, 0.028214535), 5e-9),
    (MassRatios(0.01, 0.2475, 0.2475), (0.0295707, 0.0295707, 0.048036, 0.048036), 5e-7),
]

mass_pairs = st.tuples(
    st.floats(min_value=0.02, max_value=0.46),
    st.floats(min_value=0.02, max_value=0.46),
).filter(lambda p: p[0] + p[1] <= 0.49)


@pytest.mark.parametrize("ratios,expected,tol", RUNG_FIXTURES)
def test_ladder_rungs(ratios, expected, tol):
    lad = sz.ladder(ratios)
    for got, want in zip(lad.rungs, expected):
        assert got == pytest.approx(want, abs=tol)
    assert lad.c_crit == max(lad.rungs[2], lad.rungs[3])


def test_equal_mass_argmins():
    lad = sz.ladder(EQUAL5)
    assert lad.argmins[0] == pytest.approx(1.0, abs=1e-9)
    assert lad.argmins[1] == pytest.approx(1.0, abs=1e-9)
    assert lad.argmins[2] == pytest.approx(0.4716847, abs=5e-6)
    assert lad.argmins[3] == pytest.approx(0.4716847, abs=5e-6)


def test_csfbp_aligned_argmin_is_collinear_equilibrium():
    """The extension-arm critical shape is the collinear equal-mass
    equilibrium, so its radius ratio equals the septic root."""
    lad = sz.ladder(EQUAL4)
    alpha = eq.solve_collinear_equal().params["alpha"]
    assert lad.argmins[2] == pytest.approx(alpha, abs=1e-6)
    assert lad.argmins[3] == pytest.approx(alpha, abs=1e-6)


@given(pair=mass_pairs)
@settings(max_examples=25, deadline=None)
def test_extension_rungs_dominate_minima_rungs(pair):
    """C is pointwise larger on the aligned family, so R3 >= R1, R4 >= R2."""
    mu1, mu2 = pair
    ratios = MassRatios.from_pair(mu1, mu2)
    lad = sz.ladder(ratios)
    assert lad.rungs[2] >= lad.rungs[0] - 1e-12
    assert lad.rungs[3] >= lad.rungs[1] - 1e-12
    y = 0.37
    assert sz.c_e(y, ratios) >= sz.c_m(y, ratios)


def test_regime_names_across_rungs():
    lad = sz.ladder(EQUAL5)
    assert sz.regime(0.01, lad).name == sz.FULLY_CONNECTED
    assert sz.regime(0.05, lad).name == sz.CENTRAL_HOLE
    assert sz.regime(0.07, lad).name == sz.FULLY_DISCONNECTED
    asym = sz.ladder(MassRatios(0.15, 0.15, 0.275))
    mid = sz.regime(0.06, asym)
    assert mid.name == sz.ONE_HIERARCHY_STABLE
    assert mid.stable_hierarchy == "24"
    assert str(mid) == "OneHierarchyStable(24)"
    with pytest.raises(DomainError):
        sz.regime(-0.1, lad)


def shape_samples(seed, count):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        y = rng.uniform(0.02, 1.0)
        y1, y2 = (1.0, y) if rng.random() < 0.5 else (y, 1.0)
        lo, hi = abs(y1 - y2), y1 + y2
        x12 = rng.uniform(lo + 1e-3 * (hi - lo), hi - 1e-3 * (hi - lo))
        if 2.0 * (y1**2 + y2**2) - x12**2 > 1e-9:
            out.append((y1, y2, x12))
    return out


def sundman_residual(y1, y2, x12, c0, rho, ratios):
    """|2 I (U - e0) e0 - c0| at e0 = 1 for the configuration scaled to rho."""
    cos_t = (y1**2 + y2**2 - x12**2) / (2.0 * y1 * y2)
    r1 = rho * np.array([y1, 0.0])
    r2 = rho * y2 * np.array([cos_t, np.sqrt(max(1.0 - cos_t**2, 0.0))])
    u = symmetric_potential(r1, r2, ratios)
    inertia = 2.0 * (ratios.mu1 * float(r1 @ r1) + ratios.mu2 * float(r2 @ r2))
    return abs(2.0 * inertia * (u - 1.0) - c0)


@given(seed=st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_boundary_rho_satisfies_sundman_equality(seed):
    rng = np.random.default_rng(seed)
    mu1, mu2 = rng.uniform(0.02, 0.46, 2)
    while mu1 + mu2 > 0.49:
        mu1, mu2 = rng.uniform(0.02, 0.46, 2)
    ratios = MassRatios.from_pair(mu1, mu2)
    for y1, y2, x12 in shape_samples(seed, 5):
        c_val = sz.c_surface(y1, y2, x12, ratios)
        c0 = rng.uniform(0.0, 1.5) * c_val
        roots = sz.boundary_rho(y1, y2, x12, c0, ratios)
        if c0 > c_val:
            assert roots == ()
            continue
        assert 1 <= len(roots) <= 2
        for rho in roots:
            assert sundman_residual(y1, y2, x12, c0, rho, ratios) < 1e-9


def test_kinematic_extremes_equal():
    """Swapping the two cross distances (aligned vs anti-aligned) leaves C
    unchanged."""
    for y in (0.2, 0.5, 0.9):
        lo = sz.c_surface(1.0, y, 1.0 - y, EQUAL5)
        hi = sz.c_surface(1.0, y, 1.0 + y, EQUAL5)
        assert lo == pytest.approx(hi, rel=1e-12)


def test_c_surface_domain_checks():
    with pytest.raises(DomainError):
        sz.c_surface(1.0, 1.2, 0.5, EQUAL5)
    with pytest.raises(DomainError):
        sz.c_surface(0.5, 0.4, 0.05, EQUAL5)
    with pytest.raises(DomainError):
        sz.c_surface(0.5, 0.5, 0.2, EQUAL5)


def test_region_partition_structure():
    part = sz.region_partition(0.046, EQUAL4)
    assert part.t1 < part.t2 < 1.0 < part.t3 < part.t4
    assert part.t3 == pytest.approx(1.0 / part.t2, abs=1e-9)
    assert part.t4 == pytest.approx(1.0 / part.t1, abs=1e-9)
    assert part.classify(1.0, part.t1 * 0.5) == "24"
    assert part.classify(1.0, part.t4 * 2.0) == "13"
    assert part.classify(1.0, 1.0, r12=0.5, r14=1.5) == "12"
    assert part.classify(1.0, 1.0, r12=1.5, r14=0.5) == "14"
    assert part.classify(1.0, 0.5 * (part.t1 + part.t2)) is None
    with pytest.raises(DomainError):
        part.classify(0.0, 1.0)
    low = sz.region_partition(0.01, EQUAL4)
    assert low.t1 == low.t2 and low.t3 == low.t4


@given(pair=mass_pairs, y=st.floats(min_value=0.05, max_value=0.95))
@settings(max_examples=40, deadline=None)
def test_csnbp_two_pairs_reduces_to_aligned_functions(y, pair):
    mu1, mu2 = pair
    ratios = MassRatios.from_pair(mu1, mu2)
    masses = MassVector(ratios.mu0, (mu1, mu2))
    lo, hi = sz.csnbp_c_bounds(masses, (1.0, y))
    assert lo == pytest.approx(sz.c_m(y, ratios), rel=1e-12)
    assert hi == pytest.approx(sz.c_e(y, ratios), rel=1e-12)
    lo, hi = sz.csnbp_c_bounds(masses, (y, 1.0))
    assert lo == pytest.approx(sz.c_m_prime(y, ratios), rel=1e-12)
    assert hi == pytest.approx(sz.c_e_prime(y, ratios), rel=1e-12)


def test_csfbp_normalization_bridge():
    assert sz.csfbp_denormalize(0.0457437, 1.0) == pytest.approx(46.841, abs=5e-3)
    assert sz.csfbp_normalize(46.8415488, 1.0) == pytest.approx(0.0457437, abs=5e-7)
    assert sz.csfbp_normalize(sz.csfbp_denormalize(0.03, 0.4), 0.4) == pytest.approx(0.03)


def test_projection_rows_lie_on_boundary():
    c0 = 0.05
    rows = sz.project_max_extensions(EQUAL5, c0, samples=64)
    assert rows, "allowed region should be nonempty at this C0"
    branches = {b for b, _, _, _ in rows}
    assert branches <= {"half1-lower", "half1-upper", "half2-lower", "half2-upper"}
    for branch, y, rho1, rho2 in rows:
        if y < 0.01 or y > 0.99:
            continue  # the clipped near-degenerate shapes are ill-conditioned
        if branch.startswith("half1"):
            assert rho2 == pytest.approx(y * rho1, rel=1e-12)
            assert sundman_residual(1.0, y, 1.0 - y, c0, rho1, EQUAL5) < 1e-9
        else:
            assert rho1 == pytest.approx(y * rho2, rel=1e-12)
            assert sundman_residual(y, 1.0, 1.0 - y, c0, rho2, EQUAL5) < 1e-9


def test_projection_pinch_sits_at_extension_argmin():
    lad = sz.ladder(EQUAL5)
    rows = sz.project_max_extensions(EQUAL5, lad.rungs[3], samples=1001)
    half1 = {}
    for branch, y, rho1, _ in rows:
        if branch.startswith("half1"):
            half1.setdefault(round(y, 12), {})[branch] = rho1
    gaps = {
        y: v["half1-upper"] - v["half1-lower"] for y, v in half1.items() if len(v) == 2
    }
    y_pinch = min(gaps, key=gaps.get)
    assert y_pinch == pytest.approx(lad.argmins[2], abs=1e-3)

"""Equilibrium (central) configurations of the symmetric four-body families.

Each solver returns an EquilibriumSolution holding the family's shape
parameters, the body placements in the family's reference length unit, and the
rotation rate n at which the configuration rotates rigidly (G = 1, heavy mass
M = 1 unless stated). The rotation rate is always recomputed from force balance
at the bodies, which doubles as an equilibrium self-check; the `residuals`
operation exposes the defining equations themselves.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.optimize import brentq

from .core import DomainError, NoSolutionError

SQUARE = "square"
TRIANGLE_EQUAL = "triangle-equal"
COLLINEAR_EQUAL = "collinear-equal"
TRAPEZOID = "trapezoid"
DIAMOND = "diamond"
TRIANGULAR_I = "triangular-i"
TRIANGULAR_II = "triangular-ii"
COLLINEAR_PAIRS_I = "collinear-pairs-i"
COLLINEAR_PAIRS_II = "collinear-pairs-ii"
COLLINEAR_PAIRS_III = "collinear-pairs-iii"
COLLINEAR_PAIRS_IV = "collinear-pairs-iv"

FAMILIES = (
    SQUARE,
    TRIANGLE_EQUAL,
    COLLINEAR_EQUAL,
    TRAPEZOID,
    DIAMOND,
    TRIANGULAR_I,
    TRIANGULAR_II,
    COLLINEAR_PAIRS_I,
    COLLINEAR_PAIRS_II,
    COLLINEAR_PAIRS_III,
    COLLINEAR_PAIRS_IV,
)

RESIDUAL_TOL = 1e-10
_FD_STEP = 1e-6
_DEDUPE = 1e-6
_MARGIN = 1e-4


@dataclass(frozen=True)
class EquilibriumSolution:
    """A solved configuration: shape parameters plus body placements."""

    family: str
    mu: float
    params: dict
    scale: float
    n: float
    positions: np.ndarray
    masses: np.ndarray
    test_index: int
    residual_norm: float
    gradient_residual: float
    branch: int = 0

    @property
    def bodies(self):
        """(position, mass) tuples in the family's reference units."""
        return tuple(
            (self.positions[i].copy(), float(self.masses[i]))
            for i in range(len(self.masses))
        )


def accelerations(positions, masses):
    """Gravitational accelerations, skipping zero-mass sources.

    Massless bodies feel forces (test particles) but exert none, so degenerate
    limits with coincident massless bodies stay computable.
    """
    pos = np.asarray(positions, dtype=float)
    mas = np.asarray(masses, dtype=float)
    k = pos.shape[0]
    acc = np.zeros_like(pos)
    for i in range(k):
        for j in range(k):
            if i == j or mas[j] == 0.0:
                continue
            d = pos[j] - pos[i]
            r = math.hypot(d[0], d[1])
            if r == 0.0:
                raise DomainError(f"bodies {i} and {j} coincide")
            acc[i] += mas[j] * d / r**3
    return acc


def spin_rate(positions, masses):
    """(n^2, residual) from force balance: acc_i = -n^2 r_i for all bodies.

    n^2 is taken at the body farthest from the origin; the residual is the
    worst per-unit-mass force imbalance |acc_i + n^2 r_i| over all bodies.
    """
    pos = np.asarray(positions, dtype=float)
    acc = accelerations(pos, masses)
    radii = np.linalg.norm(pos, axis=1)
    ref = int(np.argmax(radii))
    if radii[ref] == 0.0:
        raise DomainError("all bodies at the origin")
    n2 = -float(np.dot(acc[ref], pos[ref])) / float(radii[ref] ** 2)
    resid = float(np.max(np.linalg.norm(acc + n2 * pos, axis=1)))
    return n2, resid


def _finish(family, mu, params, scale, positions, masses, test_index, resid, branch=0):
    n2, grad = spin_rate(positions, masses)
    if n2 <= 0.0:
        raise NoSolutionError(f"{family}: nonpositive spin rate {n2}", resid)
    return EquilibriumSolution(
        family=family,
        mu=mu,
        params=dict(params),
        scale=scale,
        n=math.sqrt(n2),
        positions=np.asarray(positions, dtype=float),
        masses=np.asarray(masses, dtype=float),
        test_index=test_index,
        residual_norm=resid,
        gradient_residual=grad,
        branch=branch,
    )


# ---------------------------------------------------------------------------
# defining equations (vectorized over numpy arrays where useful)

def septic(alpha):
    a = np.asarray(alpha, dtype=float)
    return a**7 + 6 * a**5 - a**4 + 25 * a**3 + 2 * a**2 - 1


def _trapezoid_sides(alpha, beta):
    a = np.sqrt(beta**2 + (1 - alpha) ** 2 / 4.0)
    b = np.sqrt(beta**2 + (1 + alpha) ** 2 / 4.0)
    return a, b


def trapezoid_residuals(mu, alpha, beta):
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    a, b = _trapezoid_sides(alpha, beta)
    f1 = (1 + mu * alpha) / a**3 + (1 - mu * alpha) / b**3 - 2.0
    # 2*alpha*(1 - mu/alpha^3) expanded so alpha = 0 is regular when mu = 0
    with np.errstate(divide="ignore", invalid="ignore"):
        sing = np.where(alpha == 0.0, 0.0 if mu == 0.0 else np.inf, 2 * mu / np.where(alpha == 0.0, 1.0, alpha) ** 2)
    f2 = (
        (1 - alpha * mu) * (alpha + 1) / b**3
        + (1 + alpha * mu) * (alpha - 1) / a**3
        - 2 * alpha
        + sing
    )
    return f1, f2


def diamond_residual(mu, alpha):
    a = np.asarray(alpha, dtype=float)
    common = (1 + a**2) ** 1.5
    return 0.25 + 2 * mu / common - mu / (4 * a**3) - 2.0 / common


def collinear_h1(mu, alpha):
    a = np.asarray(alpha, dtype=float)
    return (2 * (1 + a**2) + 4 * mu) / (1 - a**2) ** 2 + 0.25 * (mu - 1.0 / a**3)


def collinear_h2(mu, alpha):
    a = np.asarray(alpha, dtype=float)
    return 0.25 * (1 - mu / a**3) + 2 * (2 + mu * (1 + a**2)) / (1 - a**2) ** 2


def _triangular1_layout(mu, alpha, beta):
    """Kite positions from the two side lengths.

    The heavy pair sits at (xm, -1/2) and (xm, 1/2); the light bodies sit on
    the x axis at distances alpha and beta from each heavy body, to the right
    of the heavy pair's line, with the centre of mass pinned at the origin.
    """
    # sides shorter than the half-base have no kite; NaN marks out-of-domain
    with np.errstate(invalid="ignore"):
        sa = np.sqrt(alpha**2 - 0.25)
        sb = np.sqrt(beta**2 - 0.25)
    xm = -mu * (sa + sb) / (2.0 * (1.0 + mu))
    return xm, xm + sa, xm + sb


def triangular1_residuals(mu, alpha, beta):
    """Force-balance residuals at the two light bodies of the kite.

    The spin rate comes from the heavy body's own balance, so a zero pair
    means every body rotates rigidly. Swapping alpha and beta relabels the
    light bodies; alpha >= beta is the canonical branch.
    """
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    with np.errstate(invalid="ignore"):
        sa = np.sqrt(alpha**2 - 0.25)
        sb = np.sqrt(beta**2 - 0.25)
    xm, x2, x4 = _triangular1_layout(mu, alpha, beta)
    n2 = 2.0 * (1.0 + 0.5 * mu / alpha**3 + 0.5 * mu / beta**3)
    d24 = x2 - x4
    a2x = -2.0 * sa / alpha**3 - mu / d24**2 * np.sign(d24)
    a4x = -2.0 * sb / beta**3 + mu / d24**2 * np.sign(d24)
    return a2x + n2 * x2, a4x + n2 * x4


def triangular2_residuals(mu, alpha, beta):
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    a = ((0.5 + alpha * (1 + mu)) ** 2 + beta**2) ** 1.5
    b = ((-0.5 + alpha * (1 + mu)) ** 2 + beta**2) ** 1.5
    g1 = (mu * alpha + 0.5) / a + (mu * alpha - 0.5) / b - mu * alpha / (4 * beta**3)
    g2 = (
        (0.5 - mu * alpha) * (alpha * (1 + mu) + 0.5) / a
        + (0.5 + mu * alpha) * (alpha * (1 + mu) - 0.5) / b
        - alpha
    )
    return g1, g2


def _collinear_pairs_layout(case, mu, alpha, beta=None, gamma=None):
    if case == "i":
        xs = [1.0, alpha, -1.0, -alpha]
        masses = [mu, 1.0, mu, 1.0]
    elif case == "ii":
        xs = [1.0, alpha, -1.0, -alpha]
        masses = [1.0, mu, 1.0, mu]
    elif case == "iii":
        xs = [1.0, alpha, -beta, -gamma]
        masses = [mu, 1.0, mu, 1.0]
    elif case == "iv":
        xs = [1.0, alpha, -beta, -gamma]
        masses = [1.0, 1.0, mu, mu]
    else:
        raise DomainError(f"unknown collinear-pairs case {case!r}")
    positions = np.array([[x, 0.0] for x in xs])
    return positions, np.array(masses)


def _collinear_balance(case, mu, alpha, beta, gamma, indices):
    """Force-balance residuals a_i + n^2 x_i for the requested bodies.

    n^2 comes from body P1 at x = 1, so the residuals stay regular even when a
    body sits at the origin (where the n^2-per-body form is 0/0).
    """
    positions, masses = _collinear_pairs_layout(case, mu, alpha, beta, gamma)
    acc = accelerations(positions, masses)
    n2 = -acc[0, 0] / positions[0, 0]
    return [float(acc[i, 0] + n2 * positions[i, 0]) for i in indices]


def collinear3_residuals(mu, alpha, beta, gamma=None):
    if gamma is None:
        gamma = alpha + mu * (1 - beta)
    return _collinear_balance("iii", mu, alpha, beta, gamma, (1, 2))


def collinear4_residuals(mu, beta, gamma, alpha=None):
    if alpha is None:
        alpha = mu * (beta + gamma) - 1.0
    return _collinear_balance("iv", mu, alpha, beta, gamma, (2, 3))


# ---------------------------------------------------------------------------
# root-finding helpers

def _root_1d(fn, lo, hi, samples=2000):
    """Bracket by dense scan, then brentq + one Newton polish."""
    xs = np.linspace(lo, hi, samples)
    with np.errstate(all="ignore"):
        vals = fn(xs)
    roots = []
    for i in range(len(xs) - 1):
        v0, v1 = vals[i], vals[i + 1]
        if not (np.isfinite(v0) and np.isfinite(v1)):
            continue
        if v0 == 0.0:
            roots.append(xs[i])
        elif v0 * v1 < 0.0:
            roots.append(brentq(lambda x: float(fn(x)), xs[i], xs[i + 1], xtol=1e-15))
    polished = []
    for r in roots:
        f = float(fn(r))
        df = (float(fn(r + _FD_STEP)) - float(fn(r - _FD_STEP))) / (2 * _FD_STEP)
        if df != 0.0:
            step = f / df
            if abs(step) < 1e-6:
                r = r - step
        polished.append(r)
    out = []
    for r in polished:
        if not any(abs(r - q) < _DEDUPE for q in out):
            out.append(r)
    return out


def _newton_2d(fn, x0, tol=1e-13, max_iter=80):
    """Damped Newton with finite-difference Jacobian (step 1e-6)."""

    def safe(x):
        try:
            f = fn(x[0], x[1])
        except (FloatingPointError, ZeroDivisionError):
            return None
        f = np.asarray(f, dtype=float)
        if not np.all(np.isfinite(f)):
            return None
        return f

    x = np.array(x0, dtype=float)
    f = safe(x)
    if f is None:
        return None
    for _ in range(max_iter):
        norm = float(np.max(np.abs(f)))
        if norm < tol:
            return x
        jac = np.empty((2, 2))
        ok = True
        for k in range(2):
            xp = x.copy()
            xp[k] += _FD_STEP
            fp = safe(xp)
            if fp is None:
                ok = False
                break
            jac[:, k] = (fp - f) / _FD_STEP
        if not ok:
            return None
        try:
            delta = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            return None
        step = 1.0
        accepted = False
        while step > 1e-8:
            xt = x + step * delta
            ft = safe(xt)
            if ft is not None and float(np.max(np.abs(ft))) < norm:
                x, f = xt, ft
                accepted = True
                break
            step *= 0.5
        if not accepted:
            return None
    return x if float(np.max(np.abs(f))) < tol else None


def _grid_roots(fn_vec, fn_scalar, box, shape, bvals=None):
    """Vectorized grid scan for seeds, then damped Newton; dedupe and sort by beta."""
    (alo, ahi), (blo, bhi) = box
    avals = np.linspace(alo, ahi, shape[0])
    if bvals is None:
        bvals = np.linspace(blo, bhi, shape[1])
    aa, bb = np.meshgrid(avals, bvals, indexing="ij")
    with np.errstate(all="ignore"):
        f1, f2 = fn_vec(aa, bb)
    f1 = np.where(np.isfinite(f1), f1, np.nan)
    f2 = np.where(np.isfinite(f2), f2, np.nan)
    seeds = []
    s1 = np.sign(f1)
    s2 = np.sign(f2)
    for i in range(shape[0] - 1):
        c1 = s1[i : i + 2, :-1], s1[i : i + 2, 1:]
        c2 = s2[i : i + 2, :-1], s2[i : i + 2, 1:]
        block1 = np.stack([c1[0], c1[1]])
        block2 = np.stack([c2[0], c2[1]])
        change1 = (np.nanmin(block1, axis=0) < 0) & (np.nanmax(block1, axis=0) > 0)
        change2 = (np.nanmin(block2, axis=0) < 0) & (np.nanmax(block2, axis=0) > 0)
        for j in np.nonzero(change1.any(axis=0) & change2.any(axis=0))[0]:
            seeds.append((0.5 * (avals[i] + avals[i + 1]), 0.5 * (bvals[j] + bvals[j + 1])))
    norm = np.abs(f1) + np.abs(f2)
    flat = np.argsort(np.where(np.isfinite(norm), norm, np.inf), axis=None)[:25]
    for idx in flat:
        i, j = np.unravel_index(idx, norm.shape)
        seeds.append((avals[i], bvals[j]))
    roots = []
    for seed in seeds:
        sol = _newton_2d(fn_scalar, seed)
        if sol is None:
            continue
        a, b = float(sol[0]), float(sol[1])
        if not (alo - 1e-3 <= a <= ahi + 1e-3 and blo - 1e-3 <= b <= bhi + 1e-3):
            continue
        if not any(abs(a - ra) < _DEDUPE and abs(b - rb) < _DEDUPE for ra, rb in roots):
            roots.append((a, b))
    roots.sort(key=lambda ab: ab[1])
    return roots


# ---------------------------------------------------------------------------
# family solvers

def solve_square(n=1.0, big_m=1.0):
    """Four equal masses at square corners: a^3 = M(2 + 1/sqrt(2))/n^2."""
    if n <= 0 or big_m <= 0:
        raise DomainError("n and M must be positive")
    a = (big_m * (2.0 + 2.0**-0.5) / n**2) ** (1.0 / 3.0)
    h = a / 2.0
    positions = np.array([[h, h], [-h, h], [-h, -h], [h, -h]])
    masses = np.full(4, big_m)
    return _finish(
        SQUARE, 1.0, {"a": a}, a, positions, masses, test_index=0, resid=0.0
    )


def solve_triangle_equal(n=1.0, big_m=1.0):
    """Equilateral triangle of side a plus a body at the centroid."""
    if n <= 0 or big_m <= 0:
        raise DomainError("n and M must be positive")
    a = (big_m * (3.0 + 3.0**1.5) / n**2) ** (1.0 / 3.0)
    r = a / math.sqrt(3.0)
    positions = np.array(
        [[0.0, r], [-a / 2.0, -r / 2.0], [a / 2.0, -r / 2.0], [0.0, 0.0]]
    )
    masses = np.full(4, big_m)
    return _finish(
        TRIANGLE_EQUAL, 1.0, {"a": a}, a, positions, masses, test_index=3, resid=0.0
    )


def solve_collinear_equal(n=1.0, big_m=1.0):
    """Four equal masses on a line at +-r1 and +-alpha r1 (septic root)."""
    roots = _root_1d(septic, 1e-3, 1 - 1e-3)
    if len(roots) != 1:
        raise NoSolutionError(f"expected one septic root in (0,1), found {len(roots)}")
    alpha = roots[0]
    resid = abs(float(septic(alpha)))
    r_coeff = 0.25 + 2 * (1 + alpha**2) / (1 - alpha**2) ** 2
    r1 = (big_m * r_coeff / n**2) ** (1.0 / 3.0)
    positions = np.array(
        [[r1, 0.0], [alpha * r1, 0.0], [-r1, 0.0], [-alpha * r1, 0.0]]
    )
    masses = np.full(4, big_m)
    return _finish(
        COLLINEAR_EQUAL,
        1.0,
        {"alpha": alpha, "r_coeff": r_coeff},
        r1,
        positions,
        masses,
        test_index=0,
        resid=resid,
    )


def _trapezoid_positions(mu, alpha, beta):
    yb = -mu * beta / (1.0 + mu)
    yt = beta / (1.0 + mu)
    positions = np.array(
        [[0.5, yb], [alpha / 2.0, yt], [-alpha / 2.0, yt], [-0.5, yb]]
    )
    masses = np.array([1.0, mu, mu, 1.0])
    return positions, masses


def solve_trapezoid(mu):
    """Isosceles trapezoid: M pair on the long base, m pair on the short one."""
    if not (0.0 <= mu <= 1.0):
        raise DomainError(f"mu out of range [0, 1]: {mu}")

    def vec(a, b):
        return trapezoid_residuals(mu, a, b)

    roots = _grid_roots(vec, vec, ((_MARGIN, 1.2), (_MARGIN, 1.2)), (140, 140))
    if mu == 0.0:
        # the mu = 0 root sits on the box edge at alpha = 0 (the L4 geometry)
        sol = _newton_2d(vec, (_MARGIN / 2, math.sqrt(3) / 2))
        if sol is not None:
            a = 0.0 if abs(sol[0]) < 1e-9 else float(sol[0])
            roots = [(a, float(sol[1]))] + roots
    if not roots:
        raise NoSolutionError(f"trapezoid: no root for mu={mu}")
    alpha, beta = roots[0]
    if alpha < 0.0 and alpha > -1e-9:
        alpha = 0.0
    resid = float(np.max(np.abs(trapezoid_residuals(mu, alpha, beta))))
    positions, masses = _trapezoid_positions(mu, alpha, beta)
    return _finish(
        TRAPEZOID,
        mu,
        {"alpha": alpha, "beta": beta},
        1.0,
        positions,
        masses,
        test_index=0,
        resid=resid,
    )


def solve_diamond(mu):
    """Rhombus: M pair at (+-1, 0), m pair at (0, +-alpha)."""
    if not (0.0 <= mu <= 1.0):
        raise DomainError(f"mu out of range [0, 1]: {mu}")
    roots = _root_1d(lambda a: diamond_residual(mu, a), 1e-3, 4.0)
    if not roots:
        raise NoSolutionError(f"diamond: no root for mu={mu}")
    alpha = roots[0]
    resid = abs(float(diamond_residual(mu, alpha)))
    positions = np.array([[1.0, 0.0], [0.0, alpha], [-1.0, 0.0], [0.0, -alpha]])
    masses = np.array([1.0, mu, 1.0, mu])
    return _finish(
        DIAMOND,
        mu,
        {"alpha": alpha},
        1.0,
        positions,
        masses,
        test_index=3,
        resid=resid,
    )


def _triangular1_solution(mu, alpha, beta, branch):
    xm, x2, x4 = _triangular1_layout(mu, alpha, beta)
    positions = np.array([[xm, -0.5], [x2, 0.0], [xm, 0.5], [x4, 0.0]])
    masses = np.array([1.0, mu, 1.0, mu])
    resid = float(np.max(np.abs(triangular1_residuals(mu, alpha, beta))))
    return _finish(
        TRIANGULAR_I,
        mu,
        {"alpha": alpha, "beta": beta},
        1.0,
        positions,
        masses,
        test_index=3,
        resid=resid,
        branch=branch,
    )


def solve_triangular_case1(mu):
    """Triangular case 1: M pair as a vertical base, both m bodies on the axis.

    Returns up to two kite solutions ordered by beta ascending, one body
    between the heavy pair's line and the other beyond it (the square-like
    alpha = beta root belongs to its own family and is excluded).
    """
    if not (0.0 < mu <= 1.0):
        raise DomainError(f"mu out of range (0, 1]: {mu}")

    def vec(a, b):
        return triangular1_residuals(mu, a, b)

    # roots crowd the beta = 1/2 edge at small mu, hence the dense low band
    bvals = np.concatenate(
        [np.linspace(0.5 + _MARGIN, 0.53, 60), np.linspace(0.531, 1.5, 160)]
    )
    box = ((0.5 + _MARGIN, 2.0), (0.5 + _MARGIN, 1.5))
    roots = _grid_roots(vec, vec, box, (160, 220), bvals=bvals)
    roots = [(a, b) for a, b in roots if a - b > _MARGIN]
    return [
        _triangular1_solution(mu, a, b, branch=i) for i, (a, b) in enumerate(roots)
    ]


def solve_triangular_case2(mu):
    """Triangular case 2: m pair off-axis, M pair on the axis; empty below mu=0.9972."""
    if not (0.0 < mu <= 1.0):
        raise DomainError(f"mu out of range (0, 1]: {mu}")

    def vec(a, b):
        return triangular2_residuals(mu, a, b)

    # the published pair of roots can be ~1.5e-3 apart, hence the fine scan
    box = ((0.45, 0.62), (0.78, 0.95))
    roots = _grid_roots(vec, vec, box, (220, 220))
    solutions = []
    for i, (alpha, beta) in enumerate(roots):
        resid = float(np.max(np.abs(triangular2_residuals(mu, alpha, beta))))
        positions = np.array(
            [
                [alpha, beta],
                [-0.5 - mu * alpha, 0.0],
                [alpha, -beta],
                [0.5 - mu * alpha, 0.0],
            ]
        )
        masses = np.array([mu, 1.0, mu, 1.0])
        solutions.append(
            _finish(
                TRIANGULAR_II,
                mu,
                {"alpha": alpha, "beta": beta},
                1.0,
                positions,
                masses,
                test_index=3,
                resid=resid,
                branch=i,
            )
        )
    return solutions


def _continue_2d(fn_factory, mu_target, mu_start, seed, steps=40):
    """Track a root from mu_start to mu_target by stepwise Newton continuation."""
    mus = np.linspace(mu_start, mu_target, steps + 1)
    x = np.array(seed, dtype=float)
    for mu in mus[1:]:
        nxt = _newton_2d(fn_factory(mu), x)
        if nxt is None:
            raise NoSolutionError(f"continuation lost the root near mu={mu}")
        x = nxt
    final = _newton_2d(fn_factory(mu_target), x)
    if final is None:
        raise NoSolutionError(f"continuation failed to converge at mu={mu_target}")
    return final


def solve_collinear_pairs(case, mu):
    """Collinear two-pair configurations, cases i..iv.

    Cases i/ii are one-parameter (alpha); iii/iv carry (alpha, beta, gamma)
    linked by the centre-of-mass constraint. Note the equations' own equal-mass
    root is the septic value alpha = 0.3162 for cases i and ii (see docs for
    the discrepancy with the published endpoint values).
    """
    case = str(case).lower().replace("case", "").strip()
    case = {"1": "i", "2": "ii", "3": "iii", "4": "iv"}.get(case, case)
    if case not in ("i", "ii", "iii", "iv"):
        raise DomainError(f"unknown collinear-pairs case {case!r}")
    if not (0.0 <= mu <= 1.0):
        raise DomainError(f"mu out of range [0, 1]: {mu}")
    if case == "ii" and mu == 0.0:
        raise DomainError("collinear-pairs case ii excludes mu = 0")
    family = {
        "i": COLLINEAR_PAIRS_I,
        "ii": COLLINEAR_PAIRS_II,
        "iii": COLLINEAR_PAIRS_III,
        "iv": COLLINEAR_PAIRS_IV,
    }[case]

    if case in ("i", "ii"):
        fn = collinear_h1 if case == "i" else collinear_h2
        roots = _root_1d(lambda a: fn(mu, a), 1e-3, 1 - 1e-3)
        if not roots:
            raise NoSolutionError(f"{family}: no root for mu={mu}")
        alpha = roots[0]
        resid = abs(float(fn(mu, alpha)))
        positions, masses = _collinear_pairs_layout(case, mu, alpha)
        return _finish(
            family,
            mu,
            {"alpha": alpha},
            1.0,
            positions,
            masses,
            test_index=0,
            resid=resid,
        )

    if case == "iii":
        def factory(m):
            return lambda a, b: collinear3_residuals(m, a, b)

        # at mu = 1 the asymmetric branch passes through the equal-mass root
        # with the third body at -beta = -alpha (not the mirror layout beta=1)
        sol = _continue_2d(factory, mu, 1.0, (0.316243493007107, 0.316243493007107))
        alpha, beta = float(sol[0]), float(sol[1])
        if abs(beta) < 1e-10:
            beta = 0.0
        gamma = alpha + mu * (1 - beta)
        resid = float(np.max(np.abs(collinear3_residuals(mu, alpha, beta))))
    else:
        def factory(m):
            return lambda b, g: collinear4_residuals(m, b, g)

        sol = _continue_2d(factory, mu, 1.0, (0.316243493007107, 1.0))
        beta, gamma = float(sol[0]), float(sol[1])
        alpha = mu * (beta + gamma) - 1.0
        resid = float(np.max(np.abs(collinear4_residuals(mu, beta, gamma))))

    positions, masses = _collinear_pairs_layout(case, mu, alpha, beta, gamma)
    return _finish(
        family,
        mu,
        {"alpha": alpha, "beta": beta, "gamma": gamma},
        1.0,
        positions,
        masses,
        test_index=3,
        resid=resid,
    )


# ---------------------------------------------------------------------------
# residual dispatch (CLI `check` mode and tests)

def _params_get(params, names):
    if isinstance(params, dict):
        try:
            return [float(params[n]) for n in names]
        except KeyError as exc:
            raise DomainError(f"missing parameter {exc.args[0]!r}") from exc
    seq = list(params) if not np.isscalar(params) else [params]
    if len(seq) < len(names):
        raise DomainError(f"expected parameters {names}, got {len(seq)} values")
    return [float(v) for v in seq[: len(names)]]


def residuals(family, mu, params):
    """Defining-equation residuals of a family at the given parameters."""
    family = str(family).lower()
    if family == SQUARE or family == TRIANGLE_EQUAL:
        values = _params_get(params, ("a",))
        a = values[0]
        n = float(params.get("n", 1.0)) if isinstance(params, dict) else 1.0
        big_m = float(params.get("m", 1.0)) if isinstance(params, dict) else 1.0
        coeff = 2.0 + 2.0**-0.5 if family == SQUARE else 3.0 + 3.0**1.5
        return np.array([n**2 * a**3 - big_m * coeff])
    if family == COLLINEAR_EQUAL:
        (alpha,) = _params_get(params, ("alpha",))
        return np.array([float(septic(alpha))])
    if family == TRAPEZOID:
        alpha, beta = _params_get(params, ("alpha", "beta"))
        return np.array(trapezoid_residuals(mu, alpha, beta), dtype=float)
    if family == DIAMOND:
        (alpha,) = _params_get(params, ("alpha",))
        if alpha <= 0:
            raise DomainError("diamond residual needs alpha > 0")
        return np.array([float(diamond_residual(mu, alpha))])
    if family == TRIANGULAR_I:
        alpha, beta = _params_get(params, ("alpha", "beta"))
        if beta <= 0.5 or alpha <= 0.5 or abs(alpha - beta) < 1e-12:
            raise DomainError("triangular-i residual undefined at this point")
        return np.array(triangular1_residuals(mu, alpha, beta), dtype=float)
    if family == TRIANGULAR_II:
        alpha, beta = _params_get(params, ("alpha", "beta"))
        if beta <= 0:
            raise DomainError("triangular-ii residual needs beta > 0")
        return np.array(triangular2_residuals(mu, alpha, beta), dtype=float)
    if family in (COLLINEAR_PAIRS_I, COLLINEAR_PAIRS_II):
        (alpha,) = _params_get(params, ("alpha",))
        if alpha <= 0 or alpha >= 1:
            raise DomainError("collinear-pairs residual needs 0 < alpha < 1")
        fn = collinear_h1 if family == COLLINEAR_PAIRS_I else collinear_h2
        return np.array([float(fn(mu, alpha))])
    if family == COLLINEAR_PAIRS_III:
        alpha, beta, gamma = _params_get(params, ("alpha", "beta", "gamma"))
        return np.array(collinear3_residuals(mu, alpha, beta, gamma), dtype=float)
    if family == COLLINEAR_PAIRS_IV:
        alpha, beta, gamma = _params_get(params, ("alpha", "beta", "gamma"))
        return np.array(collinear4_residuals(mu, beta, gamma, alpha), dtype=float)
    raise DomainError(f"unknown family {family!r}")


def solve_grid(family, mus, **kwargs):
    """Solve a family over a mu grid, labeling branches by nearest-neighbor
    continuation from the previous grid point (multi-root families)."""
    rows = []
    previous = []
    for mu in mus:
        if family == TRIANGULAR_I:
            sols = solve_triangular_case1(mu)
        elif family == TRIANGULAR_II:
            sols = solve_triangular_case2(mu)
        elif family == TRAPEZOID:
            sols = [solve_trapezoid(mu)]
        elif family == DIAMOND:
            sols = [solve_diamond(mu)]
        elif family in (
            COLLINEAR_PAIRS_I,
            COLLINEAR_PAIRS_II,
            COLLINEAR_PAIRS_III,
            COLLINEAR_PAIRS_IV,
        ):
            case = family.rsplit("-", 1)[1]
            sols = [solve_collinear_pairs(case, mu)]
        else:
            raise DomainError(f"solve_grid does not support family {family!r}")
        if previous and sols:
            order = []
            used = set()
            for prev in previous:
                best, best_d = None, None
                for k, s in enumerate(sols):
                    if k in used:
                        continue
                    d = abs(s.params.get("alpha", 0) - prev.params.get("alpha", 0)) + abs(
                        s.params.get("beta", 0) - prev.params.get("beta", 0)
                    )
                    if best_d is None or d < best_d:
                        best, best_d = k, d
                if best is not None:
                    used.add(best)
                    order.append(best)
            order += [k for k in range(len(sols)) if k not in used]
            sols = [
                EquilibriumSolution(
                    family=s.family,
                    mu=s.mu,
                    params=s.params,
                    scale=s.scale,
                    n=s.n,
                    positions=s.positions,
                    masses=s.masses,
                    test_index=s.test_index,
                    residual_norm=s.residual_norm,
                    gradient_residual=s.gradient_residual,
                    branch=i,
                )
                for i, s in enumerate(sols[k] for k in order)
            ]
        previous = sols
        rows.append((mu, sols))
    return rows

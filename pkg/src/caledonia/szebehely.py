"""Analytical hierarchical-stability criterion for the symmetric problems.

For the symmetric five-body problem (two mirror pairs of mass ratios mu1, mu2
plus an optional central mass mu0) the constant C0 = c^2 E0 / (G^2 M^5)
bounds the system's shape through a Sundman inequality. Evaluating the
bounding function C on one-parameter families of critical shapes yields four
rungs R1 <= .. <= R4 (the Szebehely ladder); comparing C0 against the rungs
tells which hierarchy arrangements can still exchange into which, without
integrating anything.

Shapes are described by the pair radii y1, y2 (normalized so the larger one
is 1) and the cross separation x12 between neighbouring bodies. C is
scale-free, so each critical family is a curve in the radius ratio alone:
the "m" functions follow the perpendicular shape x12^2 = y1^2 + y2^2 that
minimizes C, the "e" functions follow the aligned shape (x12 at either
kinematic extreme) that bounds the maximum extension of the allowed region.
Primed variants cover the rho2 > rho1 half-space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .core import DomainError, MassRatios, MassVector

FULLY_CONNECTED = "FullyConnected"
CENTRAL_HOLE = "CentralHole"
ONE_HIERARCHY_STABLE = "OneHierarchyStable"
FULLY_DISCONNECTED = "FullyDisconnected"

# guard band against classifying on the wrong side of a rung through
# floating-point noise; exact ties report the more connected regime
RUNG_GUARD = 1e-12

# clip distance from the singular endpoints of the C-function domains
DOMAIN_CLIP = 1e-6

_SCAN_SAMPLES = 1024
_REFINE_XATOL = 1e-12


def _check_shape(y1, y2, x12):
    if not (0.0 < y1 <= 1.0 and 0.0 < y2 <= 1.0):
        raise DomainError(f"pair radii must lie in (0, 1], got y1={y1}, y2={y2}")
    if abs(max(y1, y2) - 1.0) > 1e-9:
        raise DomainError("shape must be normalized so max(y1, y2) = 1")
    # rounding slack so exactly-aligned shapes pass the kinematic bounds
    slack = 1e-12 * (y1 + y2)
    if (
        not (abs(y1 - y2) - slack <= x12 <= y1 + y2 + slack)
        or 2 * (y1**2 + y2**2) - x12**2 <= 0
    ):
        raise DomainError(
            f"x12={x12} violates the kinematic constraints for y1={y1}, y2={y2}"
        )


def c_surface(y1, y2, x12, ratios):
    """Stability function C of a normalized symmetric shape (y1, y2, x12).

    The shape is allowed at a given C0 iff C0 <= C. Both kinematic extremes
    of x12 give the same value; the minimum over x12 sits at
    x12 = sqrt(y1^2 + y2^2).
    """
    _check_shape(y1, y2, x12)
    mu0, mu1, mu2 = ratios.mu0, ratios.mu1, ratios.mu2
    a = (
        0.5 * (mu1**2 / y1 + mu2**2 / y2)
        + 2 * mu1 * mu2 * (1.0 / x12 + 1.0 / np.sqrt(2 * (y1**2 + y2**2) - x12**2))
        + 2 * mu0 * (mu1 / y1 + mu2 / y2)
    )
    return float(a**2 * (mu1 * y1**2 + mu2 * y2**2))


def _c_aligned(t, ratios):
    """Scale-free C along the aligned family, t = y2/y1 on either side of 1.

    The coefficient 4 mu1 mu2 max(1, t)/|1 - t^2| is the form valid on both
    sides of the pole at t = 1 (it is what scale invariance of C demands).
    """
    t = np.asarray(t, dtype=float)
    mu0, mu1, mu2 = ratios.mu0, ratios.mu1, ratios.mu2
    pair = 4 * mu1 * mu2 * np.maximum(1.0, t) / np.abs(1.0 - t**2)
    a = 0.5 * (mu1**2 + mu2**2 / t) + 2 * mu0 * (mu1 + mu2 / t) + pair
    return a**2 * (mu1 + mu2 * t**2)


def _c_perpendicular(t, ratios):
    """Scale-free C along the perpendicular family (x12^2 = y1^2 + y2^2)."""
    t = np.asarray(t, dtype=float)
    mu0, mu1, mu2 = ratios.mu0, ratios.mu1, ratios.mu2
    pair = 4 * mu1 * mu2 / np.sqrt(1.0 + t**2)
    a = 0.5 * (mu1**2 + mu2**2 / t) + 2 * mu0 * (mu1 + mu2 / t) + pair
    return a**2 * (mu1 + mu2 * t**2)


def _check_y(y, closed):
    hi_ok = y <= 1.0 if closed else y < 1.0
    if not (0.0 < y and hi_ok):
        end = "(0, 1]" if closed else "(0, 1)"
        raise DomainError(f"y must lie in {end}, got {y}")


def c_e(y, ratios):
    """Maximum-extension C-function of the rho1 >= rho2 half-space, y = y2."""
    _check_y(y, closed=False)
    return float(_c_aligned(y, ratios))


def c_e_prime(y, ratios):
    """Maximum-extension C-function of the rho2 >= rho1 half-space, y = y1."""
    _check_y(y, closed=False)
    return float(_c_aligned(1.0 / y, ratios))


def c_m(y, ratios):
    """Minima-curve C-function of the rho1 >= rho2 half-space, y = y2."""
    _check_y(y, closed=True)
    return float(_c_perpendicular(y, ratios))


def c_m_prime(y, ratios):
    """Minima-curve C-function of the rho2 >= rho1 half-space, y = y1."""
    _check_y(y, closed=True)
    return float(_c_perpendicular(1.0 / y, ratios))


def _merge_close(values, tol=1e-9):
    values = np.sort(np.asarray(values, dtype=float))
    keep = np.concatenate(([True], np.diff(values) > tol))
    return values[keep]


def _min_scan(fn, include_one):
    """Global minimum of a C-function over y in (clip, 1] or (clip, 1 - clip].

    Log-dense bracketing grid from both endpoints (the functions can blow up
    at either end), then a bounded refine; the grid guards against multiple
    basins even though all published cases are unimodal. Near-duplicate grid
    points (the two halves meet in the middle) are merged so the refine
    bracket always spans a real interval.
    """
    lo = DOMAIN_CLIP
    hi = 1.0 if include_one else 1.0 - DOMAIN_CLIP
    u = np.geomspace(1e-9, 0.5 * (hi - lo), _SCAN_SAMPLES // 2)
    ys = _merge_close(np.concatenate([lo + u, hi - u, [hi]]))
    with np.errstate(all="ignore"):
        vals = np.asarray([fn(float(y)) for y in ys])
    vals = np.where(np.isfinite(vals), vals, np.inf)
    i = int(np.argmin(vals))
    if i == len(ys) - 1 and include_one:
        # boundary minimum (equal-mass minima curves bottom out at y = 1)
        if vals[i] <= vals[i - 1]:
            return float(ys[i]), float(vals[i])
    blo = float(ys[max(i - 1, 0)])
    bhi = float(ys[min(i + 1, len(ys) - 1)])
    res = minimize_scalar(
        fn, bounds=(blo, bhi), method="bounded", options={"xatol": _REFINE_XATOL}
    )
    y_best, f_best = float(res.x), float(res.fun)
    if include_one and fn(hi) <= f_best:
        return hi, float(fn(hi))
    return y_best, f_best


@dataclass(frozen=True)
class SzebehelyLadder:
    """The four rungs and their critical shape ratios for one mass set.

    r1/r2 are the minima of the minima-curve functions c_m/c_m_prime, r3/r4
    of the maximum-extension functions c_e/c_e_prime; argmins are in each
    function's own y variable. Hierarchy changes through an arm are blocked
    once C0 exceeds its rung; c_crit = max(r3, r4) is the value above which
    no hierarchy change is possible at all.
    """

    ratios: MassRatios
    r1: float
    r2: float
    r3: float
    r4: float
    argmins: tuple

    @property
    def c_crit(self):
        return max(self.r3, self.r4)

    @property
    def rungs(self):
        return (self.r1, self.r2, self.r3, self.r4)

    @property
    def t_lower(self):
        """Critical ratio rho2/rho1 of the rho1 >= rho2 aligned arm (< 1)."""
        return self.argmins[2]

    @property
    def t_upper(self):
        """Critical ratio rho2/rho1 of the rho2 >= rho1 aligned arm (> 1)."""
        return 1.0 / self.argmins[3]


def ladder(ratios):
    """Compute the Szebehely ladder for one mass set."""
    if ratios.mu1 <= 0.0 or ratios.mu2 <= 0.0:
        raise DomainError("ladder needs both pair masses positive")
    y1, r1 = _min_scan(lambda y: c_m(y, ratios), include_one=True)
    y2, r2 = _min_scan(lambda y: c_m_prime(y, ratios), include_one=True)
    y3, r3 = _min_scan(lambda y: c_e(y, ratios), include_one=False)
    y4, r4 = _min_scan(lambda y: c_e_prime(y, ratios), include_one=False)
    return SzebehelyLadder(
        ratios=ratios, r1=r1, r2=r2, r3=r3, r4=r4, argmins=(y1, y2, y3, y4)
    )


@dataclass(frozen=True)
class Regime:
    """Connectivity verdict of the allowed region at a given C0."""

    name: str
    c0: float
    ladder: SzebehelyLadder
    stable_hierarchy: str | None = None

    def __str__(self):
        if self.stable_hierarchy is not None:
            return f"{self.name}({self.stable_hierarchy})"
        return self.name


def regime(c0, ratios_or_ladder):
    """Classify the allowed-region connectivity at C0.

    Below every rung all hierarchy exchanges are open. Above both minima-curve
    rungs but below the extension rungs only the central passage is pinched
    off (a hole of forbidden motion). Between the extension rungs exactly one
    single-binary hierarchy can no longer exchange: '24' when the rho1 >= rho2
    arm closes first (r3 < r4, i.e. mu2 > mu1), else '13'. Above every rung no
    hierarchy change is possible. Exact ties report the more connected regime.
    """
    if c0 < 0.0:
        raise DomainError(f"C0 must be nonnegative, got {c0}")
    lad = ratios_or_ladder
    if not isinstance(lad, SzebehelyLadder):
        lad = ladder(lad)
    if c0 <= min(lad.r1, lad.r2) + RUNG_GUARD:
        return Regime(FULLY_CONNECTED, c0, lad)
    if c0 <= min(lad.r3, lad.r4) + RUNG_GUARD:
        return Regime(CENTRAL_HOLE, c0, lad)
    if c0 <= lad.c_crit + RUNG_GUARD:
        which = "24" if lad.r3 < lad.r4 else "13"
        return Regime(ONE_HIERARCHY_STABLE, c0, lad, stable_hierarchy=which)
    return Regime(FULLY_DISCONNECTED, c0, lad)


def boundary_rho(y1, y2, x12, c0, ratios):
    """Roots of the Sundman boundary for a shape: the allowed rho interval.

    rho here is the normalized size of the configuration (the larger pair
    radius times E0 at G = M = 1). Returns two roots when C > C0, one double
    root when C = C0, and an empty tuple when C < C0 (forbidden shape).
    """
    c = c_surface(y1, y2, x12, ratios)
    if c0 < 0.0:
        raise DomainError(f"C0 must be nonnegative, got {c0}")
    a = np.sqrt(c / (ratios.mu1 * y1**2 + ratios.mu2 * y2**2))
    if c0 > c:
        return ()
    if c0 == c:
        return (0.5 * a,)
    root = np.sqrt(1.0 - c0 / c)
    return (float(0.5 * a * (1.0 - root)), float(0.5 * a * (1.0 + root)))


def project_max_extensions(ratios, c0, samples=512):
    """Projection of the allowed region's maximum extensions onto (rho1, rho2).

    Sweeps the radius ratio of each half-space along the aligned (maximum
    extension) family and emits (y, rho1, rho2) points for the lower and
    upper boundary branches; ratios where the shape is forbidden (C < C0)
    are skipped, which splits the branches into visible segments. Rows are
    (branch, y, rho1, rho2).
    """
    if samples < 2:
        raise DomainError("need at least 2 samples")
    ys = np.linspace(DOMAIN_CLIP, 1.0 - DOMAIN_CLIP, samples)
    rows = []
    for y in ys:
        y = float(y)
        roots = boundary_rho(1.0, y, 1.0 + y, c0, ratios)
        for rho, branch in zip(roots, ("half1-lower", "half1-upper")[: len(roots)]):
            rows.append((branch, y, rho, y * rho))
        roots = boundary_rho(y, 1.0, 1.0 + y, c0, ratios)
        for rho, branch in zip(roots, ("half2-lower", "half2-upper")[: len(roots)]):
            rows.append((branch, y, y * rho, rho))
    return rows


def _ratio_grid(t_samples):
    u = np.geomspace(1e-7, 0.5, t_samples // 2)
    return _merge_close(np.concatenate([u, 1.0 - u]))


def _fast_c_crit(ratios, ts):
    """max(r3, r4) by vectorized scan plus a parabolic refine (~1e-8)."""
    arm_minima = []
    for arm in (ts, 1.0 / ts):
        with np.errstate(all="ignore"):
            vals = np.asarray(_c_aligned(arm, ratios), dtype=float)
        vals = np.where(np.isfinite(vals), vals, np.inf)
        k = int(np.argmin(vals))
        refined = vals[k]
        if 0 < k < len(arm) - 1:
            x0, x1, x2 = arm[k - 1], arm[k], arm[k + 1]
            f0, f1, f2 = vals[k - 1], vals[k], vals[k + 1]
            denom = (x1 - x0) * (f1 - f2) - (x1 - x2) * (f1 - f0)
            if denom != 0.0 and np.isfinite(f0) and np.isfinite(f2):
                xv = x1 - 0.5 * (
                    (x1 - x0) ** 2 * (f1 - f2) - (x1 - x2) ** 2 * (f1 - f0)
                ) / denom
                lo, hi = min(x0, x2), max(x0, x2)
                if lo < xv < hi:
                    refined = min(refined, float(_c_aligned(xv, ratios)))
        arm_minima.append(refined)
    return max(arm_minima)


def c_crit_surface(mu0_values, mu1_values, t_samples=1024):
    """max(r3, r4) over a (mu0, mu1) grid; mu2 follows from the mass budget.

    Grid cells with an invalid mass set come back as NaN. Vectorized scan
    over log-dense shape ratios with a parabolic refine, accurate to ~1e-8;
    use `ladder` for full precision at single points. Returns (surface,
    argmax) with argmax = (mu0, mu1, c_crit) at the grid maximum.
    """
    mu0s = np.asarray(mu0_values, dtype=float)
    mu1s = np.asarray(mu1_values, dtype=float)
    ts = _ratio_grid(t_samples)
    surface = np.full((len(mu0s), len(mu1s)), np.nan)
    for i, mu0 in enumerate(mu0s):
        for j, mu1 in enumerate(mu1s):
            mu2 = (1.0 - mu0 - 2.0 * mu1) / 2.0
            if mu1 <= 0.0 or mu2 <= 0.0 or mu0 < 0.0:
                continue
            ratios = MassRatios(mu0=mu0, mu1=mu1, mu2=mu2)
            surface[i, j] = _fast_c_crit(ratios, ts)
    if np.all(np.isnan(surface)):
        raise DomainError("no grid point satisfies the mass constraints")
    flat = np.nanargmax(surface)
    i, j = np.unravel_index(flat, surface.shape)
    argmax = (float(mu0s[i]), float(mu1s[j]), float(surface[i, j]))
    return surface, argmax


def c_crit_slice(mu0_values, t_samples=1024):
    """c_crit along the equal-pair-mass slice mu1 = mu2 = (1 - mu0)/4.

    Returns (values, argmax) with argmax = (mu0, c_crit) at the grid maximum.
    """
    mu0s = np.asarray(mu0_values, dtype=float)
    ts = _ratio_grid(t_samples)
    values = np.full(len(mu0s), np.nan)
    for i, mu0 in enumerate(mu0s):
        mu1 = (1.0 - mu0) / 4.0
        if mu1 <= 0.0 or mu0 < 0.0:
            continue
        values[i] = _fast_c_crit(MassRatios(mu0=mu0, mu1=mu1, mu2=mu1), ts)
    if np.all(np.isnan(values)):
        raise DomainError("no slice point satisfies the mass constraints")
    i = int(np.nanargmax(values))
    return values, (float(mu0s[i]), float(values[i]))


@dataclass(frozen=True)
class RegionPartition:
    """Shape-ratio thresholds carving t = rho2/rho1 into hierarchy regions.

    Bands [0, t1] / [t2, t3] / [t4, inf) are the recognized single-binary-24,
    double-binary, and single-binary-13 regions; the gaps between them are
    unclassified transition zones. When C0 is below an extension rung the two
    thresholds around that arm's critical ratio collapse onto it.
    """

    c0: float
    t1: float
    t2: float
    t3: float
    t4: float

    def classify(self, rho1, rho2, r12=None, r14=None):
        """Hierarchy label for a shape, or None inside a transition zone.

        In the double-binary band the label follows the nearer neighbour
        pairing when the cross distances are supplied ('14' if r14 < r12).
        """
        if rho1 <= 0.0 or rho2 <= 0.0:
            raise DomainError("pair radii must be positive")
        t = rho2 / rho1
        if t <= self.t1:
            return "24"
        if t >= self.t4:
            return "13"
        if self.t2 <= t <= self.t3:
            if r12 is not None and r14 is not None and r14 < r12:
                return "14"
            return "12"
        return None


def region_partition(c0, ratios_or_ladder):
    """Build the hierarchy-region thresholds for one (mass set, C0)."""
    lad = ratios_or_ladder
    if not isinstance(lad, SzebehelyLadder):
        lad = ladder(lad)
    ratios = lad.ratios
    y_e, y_ep = lad.argmins[2], lad.argmins[3]
    if c0 > lad.r3:
        t1 = brentq(lambda y: c_e(y, ratios) - c0, DOMAIN_CLIP, y_e, xtol=1e-14)
        t2 = brentq(
            lambda y: c_e(y, ratios) - c0, y_e, 1.0 - DOMAIN_CLIP, xtol=1e-14
        )
    else:
        t1 = t2 = y_e
    if c0 > lad.r4:
        # the primed arm lives in its own y = rho1/rho2 variable on (0, 1)
        s_hi = brentq(
            lambda y: c_e_prime(y, ratios) - c0, y_ep, 1.0 - DOMAIN_CLIP, xtol=1e-14
        )
        s_lo = brentq(lambda y: c_e_prime(y, ratios) - c0, DOMAIN_CLIP, y_ep, xtol=1e-14)
        t3, t4 = 1.0 / s_hi, 1.0 / s_lo
    else:
        t3 = t4 = 1.0 / y_ep
    return RegionPartition(c0=c0, t1=t1, t2=t2, t3=t3, t4=t4)


# ---------------------------------------------------------------------------
# general symmetric (2n+1)-body bounds

def csnbp_c_bounds(masses, ys):
    """Lower and upper bounding C for the symmetric (2n+1)-body problem.

    ys are the n pair radii in (0, 1]. The lower bound takes every cross term
    at its perpendicular-shape minimum, the upper bound at its aligned-shape
    extreme; coincident pair radii make the upper bound blow up and raise a
    domain error. At n = 2 both reduce exactly to the five-body C-functions.
    """
    ys = np.asarray(ys, dtype=float)
    mus = np.asarray(masses.mus, dtype=float)
    if ys.shape != mus.shape:
        raise DomainError("need one radius per mirror pair")
    if np.any(ys <= 0.0) or np.any(ys > 1.0):
        raise DomainError("pair radii must lie in (0, 1]")
    moment = float(np.sum(mus * ys**2))
    base = 0.5 * np.sum(mus**2 / ys) + 2.0 * masses.mu0 * np.sum(mus / ys)
    lo_sum = base
    hi_sum = base
    for i in range(len(ys)):
        for j in range(i):
            lo_sum += 4.0 * mus[i] * mus[j] / np.sqrt(ys[i] ** 2 + ys[j] ** 2)
            gap = abs(ys[i] ** 2 - ys[j] ** 2)
            if gap == 0.0 and mus[i] * mus[j] > 0.0:
                raise DomainError(
                    f"pair radii {i} and {j} coincide; the upper bound has a pole"
                )
            if mus[i] * mus[j] > 0.0:
                hi_sum += 4.0 * mus[i] * mus[j] * max(ys[i], ys[j]) / gap
    return float(moment * lo_sum**2), float(moment * hi_sum**2)


# ---------------------------------------------------------------------------
# equal-mass four-body normalization bridge

def csfbp_normalize(c, mu):
    """Map a C value from pair-mass units (G = m = 1) to the mass-budget units.

    The four-body literature often fixes the heavier pair mass to 1, making
    the total mass 2(1 + mu); this package fixes total mass 1 instead, which
    rescales the stability constant by the fifth power of the mass ratio.
    The conversion is explicit and never applied implicitly.
    """
    return c / (2.0 * (1.0 + mu)) ** 5


def csfbp_denormalize(c0, mu):
    """Inverse of `csfbp_normalize`."""
    return c0 * (2.0 * (1.0 + mu)) ** 5

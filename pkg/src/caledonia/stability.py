"""Linear stability of rigidly rotating planar equilibrium configurations.

The motion of a body about its equilibrium point, viewed in the frame rotating
with a configuration of spin rate 1, linearizes to a quartic characteristic
equation built from the second derivatives of the effective potential
U = (x^2 + y^2)/2 + sum_i m_i/d_i. A configuration solved at some other spin
rate n is first rescaled to unit spin (lengths scale with n^(2/3) at G = 1).
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
import math

import numpy as np

from .core import DomainError

STABLE = "stable"
UNSTABLE = "unstable"
INDETERMINATE = "indeterminate"

REAL_PART_TOL = 1e-8
_DEGENERACY_TOL = 1e-12


@dataclass(frozen=True)
class PotentialHessian:
    """Second derivatives of the effective potential at a test point.

    The mass-field sums (a_sum .. d_sum) are attached when the Hessian was
    built from a geometry; they satisfy b_sum + d_sum = 3 a_sum.
    """

    uxx: float
    uyy: float
    uxy: float
    a_sum: float | None = None
    b_sum: float | None = None
    c_sum: float | None = None
    d_sum: float | None = None

    def quartic_coefficients(self):
        """(p, q) of the characteristic quartic l^4 + p l^2 + q = 0."""
        p = 4.0 - self.uxx - self.uyy
        q = self.uxx * self.uyy - self.uxy**2
        return p, q


def hessian_at(point, positions, masses, n=1.0):
    """Effective-potential Hessian at `point` due to the given sources.

    Rescales the whole geometry to unit spin rate first. Zero-mass sources are
    skipped; a nonzero-mass source coinciding with the point is an error.
    """
    if n <= 0.0:
        raise DomainError(f"spin rate must be positive, got {n}")
    scale = n ** (2.0 / 3.0)
    p = np.asarray(point, dtype=float) * scale
    pos = np.asarray(positions, dtype=float) * scale
    mas = np.asarray(masses, dtype=float)
    a = b = c = d = 0.0
    for i in range(pos.shape[0]):
        if mas[i] == 0.0:
            continue
        dx = p[0] - pos[i, 0]
        dy = p[1] - pos[i, 1]
        r = math.hypot(dx, dy)
        if r == 0.0:
            raise DomainError(f"source {i} coincides with the test point")
        a += mas[i] / r**3
        b += 3.0 * mas[i] * dy**2 / r**5
        c += 3.0 * mas[i] * dx * dy / r**5
        d += 3.0 * mas[i] * dx**2 / r**5
    return PotentialHessian(
        uxx=1.0 - a + d,
        uyy=1.0 - a + b,
        uxy=c,
        a_sum=a,
        b_sum=b,
        c_sum=c,
        d_sum=d,
    )


def _sorted_roots(roots):
    return np.array(
        sorted(roots, key=lambda z: (round(z.real, 12), round(z.imag, 12))),
        dtype=complex,
    )


def characteristic_roots(hessian):
    """The four roots of l^4 + (4 - Uxx - Uyy) l^2 + (Uxx Uyy - Uxy^2) = 0."""
    p, q = hessian.quartic_coefficients()
    disc = cmath.sqrt(p * p - 4.0 * q)
    roots = []
    for lam2 in ((-p + disc) / 2.0, (-p - disc) / 2.0):
        r = cmath.sqrt(lam2)
        roots.extend((r, -r))
    return _sorted_roots(roots)


def collinear_pair_roots(a_sum):
    """Closed-form eigenvalues for the collinear pair-symmetric case.

    Returns +-i sqrt(2(1 + A)) and +-sqrt(2(2A - 1)) as functions of the
    mass-field constant A, in the form in which they are usually quoted. Note
    this closed form does not satisfy the quartic of the Hessian triple
    (Uxx, Uyy, Uxy) = (1 + 2A, 1 - A, 0) that accompanies it; prefer `analyze`
    for a geometry-consistent answer.
    """
    r1 = 1j * cmath.sqrt(2.0 * (1.0 + a_sum))
    r2 = cmath.sqrt(2.0 * (2.0 * a_sum - 1.0))
    return _sorted_roots([r1, -r1, r2, -r2])


def classify(roots, tol=REAL_PART_TOL):
    """Stable when every root stays on the imaginary axis (|Re| <= tol).

    Returns `indeterminate` when no root has a real part beyond tol but the
    spectrum is degenerate (a zero or repeated root, which always appear
    together in a quartic with +- pairing), where linear analysis cannot
    decide.
    """
    roots = np.asarray(roots, dtype=complex)
    if np.max(np.abs(roots.real)) > tol:
        return UNSTABLE
    values = sorted(roots, key=lambda z: (z.real, z.imag))
    repeated = any(
        abs(values[i] - values[i + 1]) < _DEGENERACY_TOL
        for i in range(len(values) - 1)
    )
    if repeated:
        return INDETERMINATE
    return STABLE


@dataclass(frozen=True)
class StabilityResult:
    """Verdict and supporting data for one equilibrium configuration."""

    family: str
    mu: float
    branch: int
    test_index: int
    hessian: PotentialHessian
    roots: np.ndarray
    verdict: str
    equilibrium_ok: bool
    gradient_residual: float


def analyze(solution, test_index=None, tol=REAL_PART_TOL):
    """Classify the motion of one body of a solved configuration.

    The body defaults to the configuration's designated test body. The
    gradient of the effective potential at the test point is checked at 1e-6;
    a failing check flags the result rather than raising, since some families
    are analyzed at points that are equilibria only in a limiting sense.
    """
    idx = solution.test_index if test_index is None else int(test_index)
    k = solution.positions.shape[0]
    if not (0 <= idx < k):
        raise DomainError(f"test body index {idx} out of range")
    others = [i for i in range(k) if i != idx]
    point = solution.positions[idx]
    positions = solution.positions[others]
    masses = solution.masses[others]
    hess = hessian_at(point, positions, masses, n=solution.n)

    scale = solution.n ** (2.0 / 3.0)
    p = point * scale
    grad = np.array(p, dtype=float)
    for i in range(len(others)):
        if masses[i] == 0.0:
            continue
        dvec = positions[i] * scale - p
        r = math.hypot(dvec[0], dvec[1])
        grad += masses[i] * dvec / r**3
    gradient_residual = float(math.hypot(grad[0], grad[1]))

    roots = characteristic_roots(hess)
    return StabilityResult(
        family=solution.family,
        mu=solution.mu,
        branch=solution.branch,
        test_index=idx,
        hessian=hess,
        roots=roots,
        verdict=classify(roots, tol=tol),
        equilibrium_ok=gradient_residual < 1e-6,
        gradient_residual=gradient_residual,
    )


# ---------------------------------------------------------------------------
# tabulated reference forms, kept for cross-checking and the self-check CLI

def square_reference_roots(a):
    """Eigenvalue quartet for the equal-mass square at side a, radical form.

    l = +-(1/2) sqrt(-4 + 1.136/a^3 -+ 2 sqrt(1.003/a^6 - 4.544/a^3)),
    the form in which the quartet is usually quoted (a = 1.3937 gives the
    tabulated values).
    """
    inner = cmath.sqrt(1.003 / a**6 - 4.544 / a**3)
    roots = []
    for sign in (1.0, -1.0):
        r = 0.5 * cmath.sqrt(-4.0 + 1.136 / a**3 + sign * 2.0 * inner)
        roots.extend((r, -r))
    return _sorted_roots(roots)


def square_reference_hessian(a):
    """Hessian triple usually quoted alongside the square quartet.

    As tabulated: Uxx = 1 + 0.0159/a^3, Uxy = 1 + 0.5519/a^3,
    Uyy = 0.422/a^3. This triple is not consistent with
    `square_reference_roots` (its own quartic has a different quartet); both
    forms are kept verbatim for cross-checking.
    """
    return PotentialHessian(
        uxx=1.0 + 0.0159 / a**3,
        uyy=0.422 / a**3,
        uxy=1.0 + 0.5519 / a**3,
    )


def triangle_reference_hessian(a):
    """Hessian triple usually quoted for the triangle-plus-centroid case.

    Uxx = 1 - 5.84/a^2 - 3.897/a^3, Uxy = 0, Uyy = 1 + 7.79/a^3 at side a
    (a = 2.016 reproduces the tabulated quartet).
    """
    return PotentialHessian(
        uxx=1.0 - 5.84 / a**2 - 3.897 / a**3,
        uyy=1.0 + 7.79 / a**3,
        uxy=0.0,
    )

"""Double-well free energies and the Maxwell (equal-area) construction.

A potential is a real polynomial F with a spinodal interval: F'' has exactly
two simple roots alpha_bar < beta_bar in the working window, is positive
outside and negative inside.  The tilted Gibbs function

    Phi_sigma(z) = F(z) - sigma * z

then has three critical points alpha_sigma < zeta_sigma < beta_sigma for
every sigma strictly between the spinodal slopes, and a unique sigma0 where
the two wells of Phi_sigma have equal depth.  That equal-depth point is what
everything downstream (admissible pairs, transition layers, energies) is
anchored to.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .numerics import find_root

__all__ = [
    "PotentialError",
    "DomainError",
    "PotentialSpec",
    "SpinodalData",
    "MaxwellPoint",
    "CriticalTriple",
    "tilted_quartic",
    "evaluate",
    "validate",
    "spinodal",
    "gibbs",
    "shifted_coeffs",
    "eval_shifted",
    "critical_points",
    "well_gap",
    "maxwell_point",
]

N_PROBES = 1024          # hypothesis-check sampling density
ROOT_TOL = 1e-12


class PotentialError(ValueError):
    """The polynomial does not satisfy the double-well hypotheses."""


class DomainError(ValueError):
    """A parameter is outside the range where the operation is defined."""


@dataclass(frozen=True)
class PotentialSpec:
    """Polynomial free energy F, coefficients in ascending degree.

    ``domain_floor`` is the left end of the working window (the model lives
    on u > 0); ``window_max`` its right end.  Hypothesis checks sample this
    window only.
    """
    coeffs: tuple
    domain_floor: float = 1e-6
    window_max: float = 6.0

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not self.domain_floor > 0.0:
            raise PotentialError("domain_floor must be positive")
        if len(self.coeffs) < 5:
            raise PotentialError("degree must be at least 4")


@dataclass(frozen=True)
class SpinodalData:
    alpha_bar: float   # left root of F''
    beta_bar: float    # right root of F''
    sigma_lo: float    # F'(beta_bar), lower slope bound
    sigma_hi: float    # F'(alpha_bar), upper slope bound


@dataclass(frozen=True)
class MaxwellPoint:
    sigma0: float
    b0: float
    alpha0: float
    beta0: float
    zeta0: float


@dataclass(frozen=True)
class CriticalTriple:
    alpha_sigma: float
    zeta_sigma: float
    beta_sigma: float


def tilted_quartic(tilt: float = 0.0) -> PotentialSpec:
    """The shipped family F(u) = ((u-2)^2 - 1)^2 / 4 + tilt * u.

    Wells at u = 1 and u = 3; the equal-depth construction gives
    (sigma0, b0, alpha0, beta0, zeta0) = (tilt, 0, 1, 3, 2) in closed form,
    which is the backbone of the oracle tests.
    """
    # ((u-2)^2 - 1)^2 = u^4 - 8u^3 + 22u^2 - 24u + 9
    return PotentialSpec(coeffs=(2.25 + 0.0, -6.0 + tilt, 5.5, -2.0, 0.25))


@lru_cache(maxsize=128)
def _deriv_coeffs(coeffs: tuple) -> tuple:
    """Coefficient arrays of F, F', F'', F'''."""
    out = [np.asarray(coeffs, dtype=float)]
    for _ in range(3):
        out.append(P.polyder(out[-1]))
    return tuple(out)


def evaluate(p: PotentialSpec, u, order: int = 0):
    """Evaluate F or one of its first three derivatives (Horner)."""
    if not 0 <= order <= 3:
        raise ValueError("order must be in 0..3")
    return P.polyval(u, _deriv_coeffs(p.coeffs)[order])


def validate(p: PotentialSpec) -> list:
    """Check the double-well hypotheses on the working window.

    Returns a list of warning strings (empty when everything holds).
    Operations that genuinely need the structure (the equal-area rule)
    re-run this and hard-fail on any finding.
    """
    problems = []
    grid = np.linspace(p.domain_floor, p.window_max, N_PROBES)
    d2 = evaluate(p, grid, 2)
    flips = np.nonzero(np.diff(np.sign(d2)) != 0)[0]
    if len(flips) != 2:
        problems.append(
            f"F'' changes sign {len(flips)} times on the window, expected 2")
        return problems
    if not (d2[0] > 0 and d2[-1] > 0):
        problems.append("F'' must be positive at both window ends")
    sp = spinodal(p)
    if not evaluate(p, p.domain_floor, 1) < sp.sigma_lo:
        problems.append("F'(domain_floor) must lie below the lower spinodal slope")
    if not evaluate(p, p.window_max, 1) > sp.sigma_hi:
        problems.append("window_max too small: F' must exceed the upper "
                        "spinodal slope at the right end")
    return problems


def spinodal(p: PotentialSpec) -> SpinodalData:
    """Roots of F'' bracketing the concave region, and the slope bounds."""
    grid = np.linspace(p.domain_floor, p.window_max, N_PROBES)
    d2 = evaluate(p, grid, 2)
    flips = np.nonzero(np.diff(np.sign(d2)) != 0)[0]
    if len(flips) != 2:
        raise PotentialError(
            f"F'' changes sign {len(flips)} times on the window, expected 2")
    roots = [find_root(lambda z: evaluate(p, z, 2), grid[i], grid[i + 1],
                       tol=ROOT_TOL) for i in flips]
    a, b = sorted(roots)
    return SpinodalData(alpha_bar=a, beta_bar=b,
                       sigma_lo=float(evaluate(p, b, 1)),
                       sigma_hi=float(evaluate(p, a, 1)))


def gibbs(p: PotentialSpec, sigma: float, z, order: int = 0):
    """Phi_sigma(z) = F(z) - sigma*z, or its first/second derivative."""
    if not 0 <= order <= 2:
        raise ValueError("order must be in 0..2")
    z = np.asarray(z, dtype=float) if np.ndim(z) else float(z)
    v = evaluate(p, z, order)
    if order == 0:
        return v - sigma * z
    if order == 1:
        return v - sigma
    return v


@lru_cache(maxsize=512)
def _shifted(coeffs: tuple, sigma: float, center: float) -> tuple:
    """Taylor coefficients c_j of Phi_sigma about ``center``, j = 1..deg.

    The constant term is dropped on purpose: the caller wants the exact
    increment Phi_sigma(center + dz) - Phi_sigma(center), which for a
    polynomial is a finite Taylor sum with no subtraction of nearly equal
    quantities.  This is the cancellation-control device used everywhere a
    well value and the first-integral constant agree to dozens of digits.
    """
    deg = len(coeffs) - 1
    base = np.asarray(coeffs, dtype=float)
    cs = []
    fact = 1.0
    for j in range(1, deg + 1):
        fact *= j
        cs.append(float(P.polyval(center, P.polyder(base, j))) / fact)
    cs[0] -= sigma
    return tuple(cs)


def shifted_coeffs(p: PotentialSpec, sigma: float, center: float) -> tuple:
    return _shifted(p.coeffs, float(sigma), float(center))


def taylor_shift(asc: Sequence[float], t: float) -> tuple:
    """Recenter a polynomial: coefficients about 0 -> coefficients about t.

    Classic repeated synthetic division; stable, and exact in the sense that
    no nearly-equal quantities are subtracted when t is small against the
    coefficient scale.  Input and output are ascending-degree, constant
    included.
    """
    d = list(reversed([float(c) for c in asc]))
    n = len(d)
    out = []
    for k in range(n):
        for j in range(1, n - k):
            d[j] += t * d[j - 1]
        out.append(d[n - 1 - k])
    return tuple(out)


def eval_shifted(cs: Sequence[float], dz):
    """Horner evaluation of sum_j cs[j-1] * dz^j (no constant term)."""
    dz = np.asarray(dz, dtype=float)
    acc = np.zeros_like(dz) + cs[-1]
    for c in cs[-2::-1]:
        acc = acc * dz + c
    return acc * dz


def critical_points(p: PotentialSpec, sigma: float,
                    tol: float = ROOT_TOL) -> CriticalTriple:
    """The three simple roots of F'(z) = sigma, bracketed by the spinodal."""
    sp = spinodal(p)
    if not sp.sigma_lo < sigma < sp.sigma_hi:
        raise DomainError(
            f"sigma={sigma} outside the spinodal slope range "
            f"({sp.sigma_lo}, {sp.sigma_hi})")

    def g(z):
        return evaluate(p, z, 1) - sigma

    def polish(z):
        # a couple of Newton steps push the root to ~1 ulp; the phase-plane
        # layer below needs the residual derivative F'(root) - sigma at full
        # relative precision, which the bracketing tolerance alone can't give
        for _ in range(3):
            z = z - g(z) / evaluate(p, z, 2)
        return float(z)

    alpha = polish(find_root(g, p.domain_floor, sp.alpha_bar, tol=tol))
    zeta = polish(find_root(g, sp.alpha_bar, sp.beta_bar, tol=tol))
    beta = polish(find_root(g, sp.beta_bar, p.window_max, tol=tol))
    return CriticalTriple(alpha_sigma=alpha, zeta_sigma=zeta, beta_sigma=beta)


def well_gap(p: PotentialSpec, sigma: float) -> float:
    """Phi_sigma(beta_sigma) - Phi_sigma(alpha_sigma).

    Strictly decreasing in sigma (its derivative is alpha_sigma - beta_sigma
    by the envelope identity d/dsigma Phi_sigma(xi_sigma) = -xi_sigma), so it
    crosses zero exactly once: at the Maxwell point.
    """
    tr = critical_points(p, sigma)
    return float(gibbs(p, sigma, tr.beta_sigma) - gibbs(p, sigma, tr.alpha_sigma))


def maxwell_point(p: PotentialSpec, tol: float = 1e-12) -> MaxwellPoint:
    """Equal-depth construction: the sigma where the two wells of Phi_sigma
    coincide, plus the well/saddle locations there.

    Bisection/Brent on the strictly decreasing well gap; the hypothesis
    check is enforced (not advisory) here because the bracketing argument
    depends on it.
    """
    problems = validate(p)
    if problems:
        raise PotentialError("; ".join(problems))
    sp = spinodal(p)
    width = sp.sigma_hi - sp.sigma_lo
    margin = 1e-6 * width
    lo, hi = sp.sigma_lo + margin, sp.sigma_hi - margin
    # the gap is +inf-signed at lo, -inf-signed at hi; locate a sign change
    # on a coarse grid first in case the margins clipped it
    grid = np.linspace(lo, hi, 65)
    vals = [well_gap(p, s) for s in grid]
    idx = next((i for i in range(len(grid) - 1)
                if vals[i] * vals[i + 1] <= 0.0), None)
    if idx is None:
        raise PotentialError("equal-area construction failed: the well gap "
                             "does not change sign (degenerate potential)")
    sigma0 = find_root(lambda s: well_gap(p, s), grid[idx], grid[idx + 1],
                       tol=tol)
    tr = critical_points(p, sigma0, tol=tol)
    b0 = 0.5 * (gibbs(p, sigma0, tr.alpha_sigma) +
                gibbs(p, sigma0, tr.beta_sigma))
    return MaxwellPoint(sigma0=float(sigma0), b0=float(b0),
                        alpha0=tr.alpha_sigma, beta0=tr.beta_sigma,
                        zeta0=tr.zeta_sigma)

"""First-integral machinery for the stationary problem.

A stationary profile with Lagrange multiplier sigma satisfies the first
integral P_eps(eps * u') = Phi_sigma(u) - b for some constant b.  The pair
Delta = (sigma, b) is admissible when b sits strictly between the deeper
well and the saddle of Phi_sigma; the orbit then oscillates between two
turning points z1 < z2 where Phi_sigma(z) = b.  Everything the solver needs
is a handful of integrals over [z1, z2] with inverse-square-root endpoint
singularities, evaluated here through the tanh-sinh kernel.

Near the Maxwell point, b agrees with the well values to dozens of digits,
so b is carried as a pair of *offsets* from the wells (pi1, pi2) whenever
they are small, and the integrands evaluate Phi_sigma - b through
Taylor-shifted polynomial coefficients about the turning points.  Raw
subtraction never touches the singular layers.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import potential as pot
from .numerics import SingularIntegrand, find_root, integrate_singular
from .potential import DomainError, MaxwellPoint, PotentialSpec

__all__ = [
    "Pair",
    "TurningPoints",
    "EpsBound",
    "p_eps",
    "h_plus",
    "h_minus",
    "eps_bound",
    "is_admissible",
    "admissibility_reason",
    "turning_points",
    "f_delta",
    "half_period",
    "moment_integral",
    "orbit_energy",
    "c_eps",
]

# fraction of (z2 - z1) inside which the Taylor-shifted evaluation replaces
# the raw subtraction
LAYER_FRACTION = 1e-2

# offsets below this are kept in pi-coordinates rather than folded into b
PI_OFFSET_CUTOFF = 1e-6


@dataclass(frozen=True)
class Pair:
    """Delta = (sigma, b).  When built from the solver's log coordinates,
    ``pi1 = b - Phi_sigma(alpha_sigma)`` and ``pi2 = b - Phi_sigma(beta_sigma)``
    are carried exactly; ``b`` is then only a rounded convenience value."""
    sigma: float
    b: float
    pi1: Optional[float] = None
    pi2: Optional[float] = None


@dataclass(frozen=True)
class TurningPoints:
    """Turning points of the orbit, with the extra structure the singular
    quadrature needs.

    ``z1``/``z2`` are the rounded positions; ``d1 = z1 - alpha_sigma`` and
    ``d2 = beta_sigma - z2`` are the exact well offsets (which can be far
    below the resolution of ``z1`` itself near the equal-depth point), and
    ``cs1``/``cs2`` are Taylor coefficients of f = Phi_sigma - b about z1/z2
    (ascending from degree 1, exact recenterings of the polynomial) so the
    integrands never subtract nearly equal quantities in the layers.
    """
    z1: float
    z2: float
    phi1: float   # Phi'_sigma(z1) > 0
    phi2: float   # Phi'_sigma(z2) < 0
    d1: float = 0.0
    d2: float = 0.0
    alpha_s: float = 0.0
    beta_s: float = 0.0
    cs1: tuple = ()
    cs2: tuple = ()


@dataclass(frozen=True)
class EpsBound:
    f_bar: float


def p_eps(eps: float, s):
    """P_eps(s) = (1 - 1/sqrt(1 + eps^2 s^2)) / eps^2.

    Evaluated as s^2 / (A (1 + A)) with A = sqrt(1 + eps^2 s^2), which is
    free of cancellation for small arguments.  Even in s; range [0, eps^-2).
    """
    if not eps > 0.0:
        raise DomainError("eps must be positive")
    s = np.asarray(s, dtype=float) if np.ndim(s) else float(s)
    a = np.sqrt(1.0 + (eps * s) ** 2)
    return s * s / (a * (1.0 + a))


def h_plus(eps: float, xi):
    """Positive inverse of P_eps: sqrt(xi (2 - eps^2 xi)) / (1 - eps^2 xi).

    Defined for 0 <= xi < eps^-2; beyond that the orbit does not exist for
    this eps (the first integral is out of range), which is a hard error.
    """
    if not eps > 0.0:
        raise DomainError("eps must be positive")
    xi_arr = np.asarray(xi, dtype=float)
    if np.any(xi_arr < 0.0) or np.any(eps * eps * xi_arr >= 1.0):
        raise DomainError(f"xi out of [0, eps^-2) for eps={eps}")
    e2 = eps * eps
    val = np.sqrt(xi_arr * (2.0 - e2 * xi_arr)) / (1.0 - e2 * xi_arr)
    return val if np.ndim(xi) else float(val)


def h_minus(eps: float, xi):
    return -h_plus(eps, xi)


def eps_bound(mp: MaxwellPoint, p: PotentialSpec) -> EpsBound:
    """Largest eps for which every admissible orbit stays in the domain of
    h_plus: f_bar = [Phi_sigma0(zeta0) - b0]^(-1/2)."""
    gap = pot.gibbs(p, mp.sigma0, mp.zeta0) - mp.b0
    return EpsBound(f_bar=float(gap ** -0.5))


def _wells_and_saddle(p: PotentialSpec, sigma: float):
    tr = pot.critical_points(p, sigma)
    return (tr,
            float(pot.gibbs(p, sigma, tr.alpha_sigma)),
            float(pot.gibbs(p, sigma, tr.beta_sigma)),
            float(pot.gibbs(p, sigma, tr.zeta_sigma)))


def admissibility_reason(p: PotentialSpec, delta: Pair) -> Optional[str]:
    """None if admissible, otherwise a short reason string."""
    sp = pot.spinodal(p)
    if not sp.sigma_lo < delta.sigma < sp.sigma_hi:
        return "sigma outside the spinodal slope range"
    tr, wa, wb, saddle = _wells_and_saddle(p, delta.sigma)
    pi1 = delta.pi1 if delta.pi1 is not None else delta.b - wa
    pi2 = delta.pi2 if delta.pi2 is not None else delta.b - wb
    if not (pi1 > 0.0 and pi2 > 0.0):
        return "b does not exceed both well values"
    b = delta.b
    if not b < saddle:
        return "b not below the saddle value"
    return None


def is_admissible(p: PotentialSpec, delta: Pair) -> bool:
    return admissibility_reason(p, delta) is None


def turning_points(p: PotentialSpec, delta: Pair,
                   tol: float = 1e-14) -> TurningPoints:
    """Roots of Phi_sigma = b adjacent to the saddle.

    Solved in the shifted variable d = z - alpha_sigma (resp. beta_sigma - z)
    so that the equation reads  [Phi_sigma(well + d) - Phi_sigma(well)] = pi_i
    with both sides exact: the left side is a Taylor sum, the right side the
    stored offset.  This keeps the turning points meaningful even when the
    offsets are ~1e-25.
    """
    reason = admissibility_reason(p, delta)
    if reason is not None:
        raise DomainError(f"pair not admissible: {reason}")
    sigma = delta.sigma
    tr = pot.critical_points(p, sigma)
    wa = float(pot.gibbs(p, sigma, tr.alpha_sigma))
    wb = float(pot.gibbs(p, sigma, tr.beta_sigma))
    pi1 = delta.pi1 if delta.pi1 is not None else delta.b - wa
    pi2 = delta.pi2 if delta.pi2 is not None else delta.b - wb

    # The linear coefficient of Phi_sigma about its own critical point is
    # zero by definition; the ~1-ulp residual left by the root polish is
    # discarded.  Keeping it would poison everything below once the offsets
    # drop under its square (pi ~ 1e-33): the turning point and the slope
    # phi would then track the rounding noise instead of the offset.
    # Zeroing it re-expresses the same polynomial about the *exact* critical
    # point, with relative coefficient error at the machine-epsilon level.
    cs_a = (0.0,) + pot.shifted_coeffs(p, sigma, tr.alpha_sigma)[1:]
    cs_b = (0.0,) + pot.shifted_coeffs(p, sigma, tr.beta_sigma)[1:]

    def solve_side(cs, span, target):
        # d^2-scale initial magnitude from the quadratic term, then Brent on
        # a bracket sized relative to it, then Newton to the last ulp of d
        curv = max(cs[1], 1e-30)
        d0 = math.sqrt(target / curv)
        lo, hi = 0.0, min(span, 8.0 * d0)
        f = lambda d: pot.eval_shifted(cs, d) - target
        while f(hi) < 0.0:
            hi = min(span, 2.0 * hi)
            if hi == span:
                break
        d = find_root(f, lo, hi, tol=max(tol * d0, 1e-300))
        # derivative sum_k k*cs[k-1]*d^(k-1) = cs[0] + 2*cs[1]*d + ...
        dcs = tuple((j + 2) * c for j, c in enumerate(cs[1:]))
        for _ in range(2):
            slope = float(pot.eval_shifted(dcs, d)) + cs[0]
            if not slope > 0.0:
                break
            step = f(d) / slope
            if not math.isfinite(step) or d - step <= 0.0:
                break
            d = d - step
        return d

    d1 = solve_side(cs_a, tr.zeta_sigma - tr.alpha_sigma, pi1)
    # mirror for the right turning point: evaluate at negative displacement
    cs_b_neg = tuple(c * (-1.0) ** (j + 1) for j, c in enumerate(cs_b))
    d2 = solve_side(cs_b_neg, tr.beta_sigma - tr.zeta_sigma, pi2)

    # recenter f = Phi_sigma - b about the turning points *in offset space*:
    # shifting the alpha-centred polynomial [-pi1, a1, a2, ...] by d1 keeps
    # full relative precision in d1 even when z1 = alpha + d1 rounds d1 away.
    # The constant is forced to zero (it is the root residual, ~1 ulp), and
    # the linear term is Phi'_sigma(z1) computed without cancellation.
    s1 = pot.taylor_shift((-pi1,) + cs_a, d1)
    cs1 = s1[1:]
    phi1 = float(s1[1])
    # right side: same trick in e = beta - z coordinates, then flip signs to
    # express the coefficients in dz = z - z2 = -(e - d2)
    s2 = pot.taylor_shift((-pi2,) + cs_b_neg, d2)
    cs2 = tuple(c * (-1.0) ** j for j, c in enumerate(s2[1:], 1))
    phi2 = float(-s2[1])

    z1 = tr.alpha_sigma + d1
    z2 = tr.beta_sigma - d2
    return TurningPoints(z1=z1, z2=z2, phi1=phi1, phi2=phi2,
                         d1=d1, d2=d2,
                         alpha_s=tr.alpha_sigma, beta_s=tr.beta_sigma,
                         cs1=cs1, cs2=cs2)


def _f_core(p: PotentialSpec, delta: Pair, tp: TurningPoints):
    """Vectorized evaluator of f(z) = Phi_sigma(z) - b using distances.

    Inside a layer of width LAYER_FRACTION * (z2 - z1) around each turning
    point the value comes from the Taylor shift about that turning point
    (exact for polynomials); in the middle the raw subtraction is harmless
    because f is O(1) there.
    """
    sigma, b = delta.sigma, delta.b
    layer = LAYER_FRACTION * (tp.z2 - tp.z1)
    # turning points built by turning_points() carry exact recentred
    # coefficients; degenerate ones (double zeros at the wells, as in the
    # expansion constant) fall back to a direct recentring, which is safe
    # there because the offsets are exactly zero
    cs1 = tp.cs1 if tp.cs1 else pot.shifted_coeffs(p, sigma, tp.z1)
    cs2 = tp.cs2 if tp.cs2 else pot.shifted_coeffs(p, sigma, tp.z2)

    def f(z, dlo, dhi):
        mid = pot.gibbs(p, sigma, z) - b
        lo = pot.eval_shifted(cs1, dlo)
        hi = pot.eval_shifted(cs2, -dhi)
        out = np.where(dlo < layer, lo, np.where(dhi < layer, hi, mid))
        return np.maximum(out, 0.0)

    return f


def f_delta(p: PotentialSpec, delta: Pair, tp: TurningPoints, z):
    """Phi_sigma(z) - b on [z1, z2], >= 0, exactly 0 at the endpoints."""
    z = np.asarray(z, dtype=float)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    val = _f_core(p, delta, tp)(z, z - tp.z1, tp.z2 - z)
    return float(val[0]) if scalar else val


def _check_eps(p: PotentialSpec, delta: Pair, eps: float):
    if not eps > 0.0:
        raise DomainError("eps must be positive")
    tr, wa, wb, saddle = _wells_and_saddle(p, delta.sigma)
    fmax = saddle - delta.b
    if eps * eps * fmax >= 1.0:
        raise DomainError(
            f"eps={eps} too large for this orbit (eps^2 * max f >= 1)")


def moment_integral(p: PotentialSpec, delta: Pair, eps: float, n: int,
                    rel_tol: float = 1e-10, tp: Optional[TurningPoints] = None):
    """I_n(Delta; eps) = int_z1^z2 (1 - eps^2 f) z^n / sqrt(f (2 - eps^2 f)) dz.

    n = 0 is the half-period (the x-length of one monotone branch is
    eps * I_0); n = 1 carries the mass.
    """
    if n not in (0, 1):
        raise ValueError("n must be 0 or 1")
    _check_eps(p, delta, eps)
    if tp is None:
        tp = turning_points(p, delta)
    fc = _f_core(p, delta, tp)
    e2 = eps * eps

    def core(z, dlo, dhi):
        f = fc(z, dlo, dhi)
        val = (1.0 - e2 * f) / np.sqrt(f * (2.0 - e2 * f))
        if n == 1:
            val = val * z
        return val

    res = integrate_singular(SingularIntegrand(tp.z1, tp.z2, core),
                             rel_tol=rel_tol)
    return res.value


def half_period(p: PotentialSpec, delta: Pair, eps: float,
                rel_tol: float = 1e-10, tp: Optional[TurningPoints] = None):
    """T(Delta) = I_0(Delta; eps)."""
    return moment_integral(p, delta, eps, 0, rel_tol=rel_tol, tp=tp)


def orbit_energy(p: PotentialSpec, delta: Pair, eps: float, r: float,
                 rel_tol: float = 1e-10, tp: Optional[TurningPoints] = None):
    """Energy of the simple solution with pair Delta at mass parameter r:

        E = 2 (sigma r + b) + eps * int_z1^z2 sqrt(f (2 - eps^2 f)) dz.

    The integrand vanishes like a square root at the endpoints, so the same
    tanh-sinh kernel is reused (overkill but uniform).
    """
    _check_eps(p, delta, eps)
    if tp is None:
        tp = turning_points(p, delta)
    fc = _f_core(p, delta, tp)
    e2 = eps * eps

    def core(z, dlo, dhi):
        f = fc(z, dlo, dhi)
        return np.sqrt(f * (2.0 - e2 * f))

    res = integrate_singular(SingularIntegrand(tp.z1, tp.z2, core),
                             rel_tol=rel_tol)
    return 2.0 * (delta.sigma * r + delta.b) + eps * res.value


def c_eps(p: PotentialSpec, mp: MaxwellPoint, eps: float,
          rel_tol: float = 1e-10):
    """Expansion constant of the leading-order energy:

        c_eps = int_alpha0^beta0 sqrt(ftilde (2 - eps^2 ftilde)) ds,

    with ftilde = Phi_sigma0 - b0 (double zeros at both wells).  c_eps(0)
    is the classical transition cost; for the symmetric quartic it equals
    2 sqrt(2) / 3.
    """
    if eps < 0.0:
        raise DomainError("eps must be nonnegative")
    gap = float(pot.gibbs(p, mp.sigma0, mp.zeta0) - mp.b0)
    if eps > 0.0 and eps * eps * gap >= 1.0:
        raise DomainError("eps too large for the expansion constant")
    tp = TurningPoints(z1=mp.alpha0, z2=mp.beta0, phi1=0.0, phi2=0.0)
    delta = Pair(sigma=mp.sigma0, b=mp.b0, pi1=0.0, pi2=0.0)
    fc = _f_core(p, delta, tp)
    e2 = eps * eps

    def core(z, dlo, dhi):
        f = fc(z, dlo, dhi)
        return np.sqrt(f * (2.0 - e2 * f))

    res = integrate_singular(SingularIntegrand(mp.alpha0, mp.beta0, core),
                             rel_tol=rel_tol)
    return res.value

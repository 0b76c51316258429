"""Reusable numerical kernels.

Two things live here: a Brent-style bracketing root finder, and tanh-sinh
(double-exponential) quadrature for integrals whose integrand blows up like
an inverse square root at one or both endpoints.  The quadrature is the
workhorse behind every period/moment integral in the phase-plane module,
where the singular layer can be as thin as 1e-30 near the Maxwell point.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "BracketError",
    "QuadResult",
    "SingularIntegrand",
    "find_root",
    "integrate_singular",
]


class BracketError(ValueError):
    """Raised when a root finder is called without a sign change."""


# ---------------------------------------------------------------------------
# Brent root finder
# ---------------------------------------------------------------------------

def find_root(f: Callable[[float], float], lo: float, hi: float,
              tol: float = 1e-12, max_iter: int = 200) -> float:
    """Find a root of ``f`` in ``[lo, hi]`` by Brent's method.

    Combines bisection, secant and inverse quadratic interpolation; the
    bracket shrinks monotonically, so convergence is guaranteed for any
    continuous ``f`` with ``f(lo) * f(hi) <= 0``.

    Parameters
    ----------
    f : callable
        Scalar function, continuous on the bracket.
    lo, hi : float
        Bracket endpoints with opposite signs of ``f``.
    tol : float
        Absolute tolerance on the bracket width.

    Returns
    -------
    float
        Approximate root with bracket width below ``tol``.
    """
    a, b = float(lo), float(hi)
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0.0:
        raise BracketError(f"no sign change on [{lo}, {hi}]: f={fa}, {fb}")

    if abs(fa) < abs(fb):
        a, b, fa, fb = b, a, fb, fa
    c, fc = a, fa
    d = e = b - a

    for _ in range(max_iter):
        if fb * fc > 0.0:
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol1 = 2.0 * np.finfo(float).eps * abs(b) + 0.5 * tol
        xm = 0.5 * (c - b)
        if abs(xm) <= tol1 or fb == 0.0:
            return b
        if abs(e) >= tol1 and abs(fa) > abs(fb):
            s = fb / fa
            if a == c:
                # secant step
                p = 2.0 * xm * s
                q = 1.0 - s
            else:
                # inverse quadratic interpolation
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0.0:
                q = -q
            p = abs(p)
            if 2.0 * p < min(3.0 * xm * q - abs(tol1 * q), abs(e * q)):
                e, d = d, p / q
            else:
                d = e = xm
        else:
            d = e = xm
        a, fa = b, fb
        b = b + (d if abs(d) > tol1 else np.copysign(tol1, xm))
        fb = f(b)
    return b


# ---------------------------------------------------------------------------
# tanh-sinh quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadResult:
    value: float
    err_estimate: float
    levels_used: int


@dataclass(frozen=True)
class SingularIntegrand:
    """An integrand on ``(z1, z2)`` that may be singular at both endpoints.

    ``core`` is a vectorized evaluator ``core(z, d_lo, d_hi) -> array`` where
    ``d_lo = z - z1`` and ``d_hi = z2 - z`` are supplied *without cancellation*
    (they come straight from the double-exponential transform, so they stay
    meaningful down to 1e-300 even when ``z`` itself rounds to an endpoint).
    Evaluators must use the distances, not ``z``, for anything that vanishes
    at the endpoints.
    """
    z1: float
    z2: float
    core: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


# Truncation of the double-exponential sum.  At t = 5 the node distance from
# the endpoint is ~exp(-pi*sinh(5)) ~ 1e-101, far below anything an inverse
# square-root singularity can turn into a visible contribution.
_T_MAX = 5.0

_node_cache: dict = {}


def _nodes(level: int):
    """Abscissa/weight data for the tanh-sinh rule at step h = 2**-level.

    Returns ``(dlo, dhi, w)`` for the nodes that are *new* at this level
    (odd multiples of h), plus the k = 0 node when level == _BASE_LEVEL.
    ``dlo = 1 + x`` and ``dhi = 1 - x`` are computed from exp(-2y) directly,
    so they underflow gracefully instead of cancelling.
    """
    if level in _node_cache:
        return _node_cache[level]
    h = 2.0 ** (-level)
    if level == _BASE_LEVEL:
        t = np.arange(0.0, _T_MAX + h, h)
    else:
        t = np.arange(h, _T_MAX + h, 2.0 * h)
    y = 0.5 * np.pi * np.sinh(t)
    ey = np.exp(-2.0 * y)
    # 1 -/+ tanh(y) without cancellation
    one_m = 2.0 * ey / (1.0 + ey)
    one_p = 2.0 / (1.0 + ey)
    # w = (pi/2) cosh(t) sech^2(y), with sech^2 = 4 e^{-2y} / (1 + e^{-2y})^2
    w = 0.5 * np.pi * np.cosh(t) * 4.0 * ey / (1.0 + ey) ** 2
    if level == _BASE_LEVEL:
        # mirror the positive-t nodes; keep k = 0 once
        dlo = np.concatenate([one_m[:0:-1], one_p])
        dhi = np.concatenate([one_p[:0:-1], one_m])
        w = np.concatenate([w[:0:-1], w])
    else:
        dlo = np.concatenate([one_m[::-1], one_p])
        dhi = np.concatenate([one_p[::-1], one_m])
        w = np.concatenate([w[::-1], w])
    _node_cache[level] = (dlo, dhi, w)
    return _node_cache[level]


_BASE_LEVEL = 3


def integrate_singular(q: SingularIntegrand, rel_tol: float = 1e-10,
                       max_levels: int = 12) -> QuadResult:
    """tanh-sinh quadrature of ``q.core`` over ``[q.z1, q.z2]``.

    The step is halved until two successive levels agree to ``rel_tol``
    (relative to the latest value).  The double-exponential clustering
    resolves inverse-square-root endpoint layers of essentially any width
    without knowing it in advance.

    Returns the best value with ``err_estimate`` equal to the last
    inter-level difference; if the tolerance was not met within
    ``max_levels`` the estimate is simply left above tolerance for the
    caller to inspect.
    """
    if not q.z2 > q.z1:
        raise ValueError("integration interval is empty")
    mid = 0.5 * (q.z1 + q.z2)
    s = 0.5 * (q.z2 - q.z1)

    def level_sum(level):
        dlo_u, dhi_u, w = _nodes(level)
        z = mid + s * (1.0 - dhi_u)  # == mid + s*x; only used where smooth
        vals = q.core(z, s * dlo_u, s * dhi_u)
        return s * np.dot(w, vals)

    h = 2.0 ** (-_BASE_LEVEL)
    total = level_sum(_BASE_LEVEL)
    value = h * total
    err = np.inf
    level = _BASE_LEVEL
    for level in range(_BASE_LEVEL + 1, _BASE_LEVEL + max_levels + 1):
        h *= 0.5
        total += level_sum(level)
        new_value = h * total
        err = abs(new_value - value)
        value = new_value
        if err <= rel_tol * max(abs(value), 1e-300):
            break
    return QuadResult(value=value, err_estimate=err,
                      levels_used=level - _BASE_LEVEL)

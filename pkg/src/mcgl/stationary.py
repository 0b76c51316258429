"""Transition-layer stationary solutions: solve, reconstruct, rank, destabilize.

The boundary/mass system for a monotone ("simple") solution is

    eps * I_0(Delta; eps) = 2,        eps * I_1(Delta; eps) = 2 r,

solved for the pair Delta = (sigma, b).  Near the equal-depth point the well
offsets pi_i = b - Phi_sigma(well_i) collapse like exp(-c_i(r)/eps), so the
Newton iteration runs in the log offsets (ln h_1, ln h_2), where the system
is O(1) and well conditioned.  An n-transition solution solves the same
system with eps replaced by n * eps.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import phase_plane as pp
from . import potential as pot
from .numerics import BracketError, find_root
from .phase_plane import Pair, TurningPoints
from .potential import DomainError, MaxwellPoint, PotentialSpec

__all__ = [
    "SolverError",
    "SolverScaling",
    "SolveReport",
    "Profile",
    "LimitProfile",
    "Destabilizer",
    "scaling",
    "pair_from_lnh",
    "solve_simple",
    "solve_n_transition",
    "reconstruct_profile",
    "reversal",
    "energy_of_profile",
    "maxwell_energy_expansion",
    "rank_energies",
    "second_variation",
    "destabilize_nonmonotone",
    "limit_profile",
    "limit_eval",
    "convergence_metrics",
]

# relative width of the r-window guard: r must stay in
# [alpha0 + delta, beta0 - delta] with delta = R_GUARD * (beta0 - alpha0)
R_GUARD = 0.1

# quadrature tolerance used inside the Newton residuals
SOLVER_QUAD_TOL = 1e-12

FD_STEP = 1e-3          # finite-difference step in ln h
MAX_NEWTON_ITERS = 60
CONTINUATION_FACTOR = 0.8


class SolverError(RuntimeError):
    """Newton iteration failed to converge."""


@dataclass(frozen=True)
class SolverScaling:
    B1: float
    B2: float
    c1: float
    c2: float
    mu1: float
    mu2: float


@dataclass(frozen=True)
class SolveReport:
    delta: Pair
    ln_h: Tuple[float, float]
    k: Tuple[float, float]
    residuals: Tuple[float, float]
    iterations: int
    energy: float
    tp: TurningPoints
    eps: float
    r: float
    n_transitions: int = 1

    @property
    def eps_eff(self) -> float:
        return self.eps * self.n_transitions


@dataclass(frozen=True)
class Profile:
    xs: np.ndarray
    us: np.ndarray
    eps: float
    r: float
    n_transitions: int = 1
    orientation: str = "increasing"


@dataclass(frozen=True)
class LimitProfile:
    mp: MaxwellPoint
    r: float
    ell1: float
    ell2: float


@lru_cache(maxsize=32)
def _mp_cached(coeffs: tuple, floor: float, wmax: float) -> MaxwellPoint:
    return pot.maxwell_point(PotentialSpec(coeffs, floor, wmax))


def _maxwell(p: PotentialSpec) -> MaxwellPoint:
    return _mp_cached(p.coeffs, p.domain_floor, p.window_max)


def scaling(p: PotentialSpec, mp: MaxwellPoint, r: float) -> SolverScaling:
    """Scaling constants of the log-offset coordinates.

    B_i = [2 F''(well_i)]^{-1/2} set the strength of the logarithmic
    singularity of the period integrals; c_i(r) are the decay rates of the
    offsets, and mu_i = [B_i (beta0 - alpha0)]^{-1} the conversion between
    the bounded correction k_i and ln h_i.
    """
    if not mp.alpha0 < r < mp.beta0:
        raise DomainError(f"r={r} outside ({mp.alpha0}, {mp.beta0}); "
                          "only the constant state exists there")
    B1 = (2.0 * float(pot.evaluate(p, mp.alpha0, 2))) ** -0.5
    B2 = (2.0 * float(pot.evaluate(p, mp.beta0, 2))) ** -0.5
    width = mp.beta0 - mp.alpha0
    c1 = 2.0 * math.sqrt(2.0) * (mp.beta0 - r) / (B1 * width)
    c2 = 2.0 * math.sqrt(2.0) * (r - mp.alpha0) / (B2 * width)
    return SolverScaling(B1=B1, B2=B2, c1=c1, c2=c2,
                         mu1=1.0 / (B1 * width), mu2=1.0 / (B2 * width))


def pair_from_lnh(p: PotentialSpec, ln_h: Sequence[float],
                  mp: Optional[MaxwellPoint] = None) -> Pair:
    """Invert the offset map: given (ln h1, ln h2), recover (sigma, b).

    sigma solves the scalar equation  well_gap(sigma) = h1 - h2, which is
    strictly decreasing (envelope identity), so a bracket around sigma0 of
    width proportional to |h1 - h2| always works.  b is then carried as the
    exact offsets (pi1, pi2) = (h1, h2) from the wells.
    """
    if mp is None:
        mp = _maxwell(p)
    if max(ln_h) > 0.0:
        # offsets >= 1 are far outside any admissible orbit; treat a runaway
        # trial step as infeasible so the line search backtracks
        raise DomainError("offsets out of range of the well gap")
    h1, h2 = math.exp(ln_h[0]), math.exp(ln_h[1])
    dgh = h1 - h2
    sp = pot.spinodal(p)
    if dgh == 0.0:
        sigma = mp.sigma0
    else:
        width = mp.beta0 - mp.alpha0
        s = max(4.0 * abs(dgh) / width, 1e-13)
        g = lambda x: pot.well_gap(p, x) - dgh
        lo = hi = mp.sigma0
        for _ in range(60):
            lo = max(mp.sigma0 - s, sp.sigma_lo + 1e-9)
            hi = min(mp.sigma0 + s, sp.sigma_hi - 1e-9)
            if g(lo) * g(hi) <= 0.0:
                break
            s *= 4.0
        else:
            raise DomainError("offsets out of range of the well gap")
        sigma = find_root(g, lo, hi, tol=1e-15)
    tr = pot.critical_points(p, sigma)
    wa = float(pot.gibbs(p, sigma, tr.alpha_sigma))
    return Pair(sigma=float(sigma), b=wa + h1, pi1=h1, pi2=h2)


def _residuals(p, mp, ln_h, eps_eff, r):
    pair = pair_from_lnh(p, ln_h, mp)
    tp = pp.turning_points(p, pair)
    i0 = pp.moment_integral(p, pair, eps_eff, 0, rel_tol=SOLVER_QUAD_TOL, tp=tp)
    i1 = pp.moment_integral(p, pair, eps_eff, 1, rel_tol=SOLVER_QUAD_TOL, tp=tp)
    return np.array([eps_eff * i0 - 2.0, eps_eff * i1 - 2.0 * r]), pair, tp


def _newton(p, mp, x0, eps_eff, r, tol):
    """Damped Newton with finite-difference Jacobian in (ln h1, ln h2)."""
    x = np.array(x0, dtype=float)
    try:
        res, pair, tp = _residuals(p, mp, x, eps_eff, r)
    except (DomainError, BracketError) as exc:
        raise SolverError(f"initial guess infeasible: {exc}") from exc
    for it in range(1, MAX_NEWTON_ITERS + 1):
        if np.max(np.abs(res)) <= tol:
            return x, res, pair, tp, it - 1
        jac = np.empty((2, 2))
        for j in range(2):
            xp = x.copy()
            xp[j] += FD_STEP
            try:
                rp, _, _ = _residuals(p, mp, xp, eps_eff, r)
                jac[:, j] = (rp - res) / FD_STEP
            except (DomainError, BracketError):
                # forward probe left the admissible set; difference backwards
                xp[j] = x[j] - FD_STEP
                rp, _, _ = _residuals(p, mp, xp, eps_eff, r)
                jac[:, j] = (res - rp) / FD_STEP
        try:
            step = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError as exc:
            raise SolverError("singular Jacobian") from exc
        lam, norm0 = 1.0, np.linalg.norm(res)
        while lam > 2.0 ** -25:
            try:
                res_new, pair_new, tp_new = _residuals(
                    p, mp, x + lam * step, eps_eff, r)
            except (DomainError, BracketError):
                lam *= 0.5
                continue
            if np.linalg.norm(res_new) < norm0:
                x = x + lam * step
                res, pair, tp = res_new, pair_new, tp_new
                break
            lam *= 0.5
        else:
            raise SolverError(
                f"line search stalled at |res|={norm0:.3e} (iter {it})")
    raise SolverError(f"no convergence in {MAX_NEWTON_ITERS} iterations "
                      f"(|res|={np.max(np.abs(res)):.3e})")


def _guess(sc: SolverScaling, eps_eff: float):
    return np.array([-sc.c1 / eps_eff, -sc.c2 / eps_eff])


def solve_simple(p: PotentialSpec, mp: MaxwellPoint, eps: float, r: float,
                 tol: float = 1e-10, x0=None) -> SolveReport:
    """Solve the boundary/mass system for the monotone transition solution.

    The initial guess drops the bounded correction of the log offsets
    (ln h_i = -c_i(r)/eps); if Newton fails from there, the solver first
    converges at a larger eps and continues geometrically down to the
    target, reusing the bounded correction as the warm start.
    """
    return _solve(p, mp, eps, r, n=1, tol=tol, x0=x0)


def solve_n_transition(p: PotentialSpec, mp: MaxwellPoint, eps: float,
                       r: float, n: int, tol: float = 1e-10) -> SolveReport:
    """Non-monotone solution with n monotone branches: same system with
    eps replaced by n * eps, reported at the original eps."""
    if n < 1:
        raise DomainError("n must be >= 1")
    return _solve(p, mp, eps, r, n=n, tol=tol)


def _solve(p, mp, eps, r, n, tol, x0=None) -> SolveReport:
    fbar = pp.eps_bound(mp, p).f_bar
    eps_eff = eps * n
    if not 0.0 < eps_eff < fbar:
        raise DomainError(f"eps*n={eps_eff} outside (0, {fbar})")
    guard = R_GUARD * (mp.beta0 - mp.alpha0)
    if not mp.alpha0 + guard <= r <= mp.beta0 - guard:
        raise DomainError(
            f"r={r} outside the guarded window "
            f"[{mp.alpha0 + guard}, {mp.beta0 - guard}]")
    sc = scaling(p, mp, r)

    if x0 is None:
        x0 = _guess(sc, eps_eff)
    try:
        x, res, pair, tp, iters = _newton(p, mp, x0, eps_eff, r, tol)
    except SolverError:
        x, res, pair, tp, iters = _continuation(p, mp, sc, eps_eff, r, tol)

    k = ((x[0] + sc.c1 / eps_eff) / sc.mu1,
         (x[1] + sc.c2 / eps_eff) / sc.mu2)
    energy = pp.orbit_energy(p, pair, eps_eff, r,
                             rel_tol=SOLVER_QUAD_TOL, tp=tp)
    return SolveReport(delta=pair, ln_h=(float(x[0]), float(x[1])), k=k,
                       residuals=(float(res[0]), float(res[1])),
                       iterations=iters, energy=float(energy), tp=tp,
                       eps=eps, r=r, n_transitions=n)


def _continuation(p, mp, sc, eps_target, r, tol):
    """Geometric eps-continuation fallback: converge where the leading-order
    guess is good, then walk eps down keeping the bounded correction."""
    fbar = pp.eps_bound(mp, p).f_bar
    eps_hi = min(0.35 * fbar, eps_target / CONTINUATION_FACTOR ** 12)
    eps_c = max(eps_target, min(eps_hi, 0.35 * fbar))
    x = _guess(sc, eps_c)
    last_exc = None
    total_iters = 0
    while True:
        try:
            x, res, pair, tp, iters = _newton(p, mp, x, eps_c, r, tol)
            total_iters += iters
        except SolverError as exc:
            raise SolverError(
                f"continuation failed at eps={eps_c}: {exc}") from exc
        if eps_c <= eps_target:
            return x, res, pair, tp, total_iters
        # keep k fixed across the eps step
        k1 = x[0] + sc.c1 / eps_c
        k2 = x[1] + sc.c2 / eps_c
        eps_c = max(eps_target, CONTINUATION_FACTOR * eps_c)
        x = np.array([k1 - sc.c1 / eps_c, k2 - sc.c2 / eps_c])


# ---------------------------------------------------------------------------
# profile reconstruction
# ---------------------------------------------------------------------------

def _branch_march(p, pair, tp, eps_b, xs, x_mid, u_mid):
    """Values of the increasing branch u(x) on the sorted grid ``xs``.

    Integrates du/dx = H+(f(u)) / eps_b with classical RK4 from the interior
    anchor (x_mid, u_mid) outward in both directions; the turning points are
    degenerate equilibria of this ODE, so marching *away* from the interior
    is the stable direction and the solution settles exponentially onto
    z1/z2 near the interval ends.
    """
    e2 = eps_b * eps_b

    def slope(u):
        f = pp.f_delta(p, pair, tp, min(max(u, tp.z1), tp.z2))
        f = min(f, (1.0 - 1e-14) / e2)
        return math.sqrt(f * (2.0 - e2 * f)) / ((1.0 - e2 * f) * eps_b)

    def rk4(x, u, h):
        k1 = slope(u)
        k2 = slope(u + 0.5 * h * k1)
        k3 = slope(u + 0.5 * h * k2)
        k4 = slope(u + h * k3)
        return u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    hmax = eps_b / 20.0
    out = np.empty_like(xs)

    def march(idx_iter):
        x, u = x_mid, u_mid
        for i in idx_iter:
            target = xs[i]
            nsub = max(1, math.ceil(abs(target - x) / hmax))
            h = (target - x) / nsub
            for _ in range(nsub):
                u = rk4(x, u, h)
                x += h
            x = target
            out[i] = min(max(u, tp.z1), tp.z2)
        return out

    right = [i for i in range(len(xs)) if xs[i] >= x_mid]
    left = [i for i in range(len(xs) - 1, -1, -1) if xs[i] < x_mid]
    march(right)
    march(left)
    return out


def _branch_midpoint(p, pair, tp, eps_b):
    """x-position (branch coordinates, [-1, 1]) where u crosses the saddle."""
    tr = pot.critical_points(p, pair.sigma)
    zeta = tr.zeta_sigma
    fc = pp._f_core(p, pair, tp)
    e2 = eps_b * eps_b

    def core(z, dlo, dhi):
        # the interval ends at the saddle, not at z2: recompute the distance
        # f_core expects (z2 is far away, so plain subtraction is fine here)
        f = fc(z, dlo, tp.z2 - z)
        return (1.0 - e2 * f) / np.sqrt(f * (2.0 - e2 * f))

    from .numerics import SingularIntegrand, integrate_singular
    res = integrate_singular(SingularIntegrand(tp.z1, zeta, core),
                             rel_tol=1e-12)
    return -1.0 + eps_b * res.value, zeta


def reconstruct_profile(p: PotentialSpec, report: SolveReport, eps: float,
                        grid_size: int = 2001) -> Profile:
    """Sample the stationary solution on a uniform grid over [-1, 1].

    For n transitions the profile is the eps_eff = n*eps branch compressed
    n-fold, reflected on every other segment so consecutive branches
    alternate direction.
    """
    if abs(eps - report.eps) > 1e-15:
        raise ValueError("eps must match the report")
    n = report.n_transitions
    eps_b = report.eps_eff
    pair, tp = report.delta, report.tp
    x_mid, u_mid = _branch_midpoint(p, pair, tp, eps_b)

    xs = np.linspace(-1.0, 1.0, grid_size)
    if n == 1:
        us = _branch_march(p, pair, tp, eps_b, xs, x_mid, u_mid)
    else:
        us = np.empty_like(xs)
        # segment index and local coordinate of each grid point
        xi = (xs + 1.0) * n / 2.0
        seg = np.minimum(np.floor(xi).astype(int), n - 1)
        s = xi - seg
        for j in range(n):
            m = seg == j
            if not np.any(m):
                continue
            sj = s[m]
            if j % 2 == 1:
                sj = 1.0 - sj
            xb = np.sort(-1.0 + 2.0 * sj)
            vals = _branch_march(p, pair, tp, eps_b, xb, x_mid, u_mid)
            interp = PchipInterpolator(xb, vals) if len(xb) > 2 else None
            target = -1.0 + 2.0 * sj
            if interp is None:
                us[m] = np.interp(target, xb, vals)
            else:
                us[m] = interp(target)
        us[0] = tp.z1
    if n == 1:
        us[0], us[-1] = tp.z1, tp.z2
    return Profile(xs=xs, us=us, eps=eps, r=report.r, n_transitions=n,
                   orientation="increasing")


def reversal(profile: Profile) -> Profile:
    """x -> u(-x); same energy, opposite orientation."""
    flip = {"increasing": "decreasing", "decreasing": "increasing"}
    return Profile(xs=profile.xs.copy(), us=profile.us[::-1].copy(),
                   eps=profile.eps, r=profile.r,
                   n_transitions=profile.n_transitions,
                   orientation=flip[profile.orientation])


def _q_second(s):
    return (1.0 + s * s) ** -1.5


def energy_of_profile(p: PotentialSpec, eps: float, profile: Profile) -> float:
    """Composite-trapezoid energy with centered-difference gradients."""
    u, x = profile.us, profile.xs
    ux = np.gradient(u, x)
    arg = eps * eps * ux
    dens = (np.sqrt(1.0 + arg * arg) - 1.0) / (eps * eps) + pot.evaluate(p, u, 0)
    return float(np.trapezoid(dens, x))


def maxwell_energy_expansion(p: PotentialSpec, mp: MaxwellPoint, eps: float,
                             r: float):
    """(E0, base, correction, defect): energy of the solved transition
    solution against 2(sigma0 r + b0) + eps * c_eps."""
    report = solve_simple(p, mp, eps, r, tol=1e-11)
    base = 2.0 * (mp.sigma0 * r + mp.b0)
    correction = eps * pp.c_eps(p, mp, eps, rel_tol=1e-13)
    defect = report.energy - base - correction
    return report.energy, base, correction, defect


def rank_energies(p: PotentialSpec, mp: MaxwellPoint, eps: float, r: float,
                  n_max: int = 3):
    """Energies of {transition solution, constant, n-transitions}, ascending.

    Failed entries carry NaN instead of aborting the ranking.  Raises if the
    single-transition solution is not strictly first among the successes.
    """
    entries = []
    try:
        entries.append(("maxwell", solve_simple(p, mp, eps, r).energy))
    except (SolverError, DomainError):
        entries.append(("maxwell", math.nan))
    entries.append(("constant", 2.0 * float(pot.evaluate(p, r, 0))))
    for n in range(2, n_max + 1):
        try:
            entries.append((f"{n}-transition",
                            solve_n_transition(p, mp, eps, r, n).energy))
        except (SolverError, DomainError):
            entries.append((f"{n}-transition", math.nan))
    entries.sort(key=lambda kv: (math.isnan(kv[1]), kv[1]))
    finite = [e for _, e in entries if not math.isnan(e)]
    if finite and entries[0][0] != "maxwell":
        raise SolverError("energy ranking violated: transition solution "
                          "is not the minimizer")
    return entries


# ---------------------------------------------------------------------------
# second variation
# ---------------------------------------------------------------------------

def second_variation(p: PotentialSpec, eps: float, profile: Profile,
                     eta, eta_x=None) -> float:
    """Discrete second variation

        J = int_{-1}^{1} [ eps^2 Q''(eps^2 u') eta_x^2 + F''(u) eta^2 ] dx

    for a zero-mean perturbation.  ``eta`` (and optionally its derivative)
    may be callables on [-1, 1] or samples on the profile grid; without an
    analytic derivative a centered difference is used, which caps the
    achievable accuracy near O(h^2).
    """
    x, u = profile.xs, profile.us
    ev = np.asarray(eta(x), dtype=float) if callable(eta) else \
        np.asarray(eta, dtype=float)
    if eta_x is None:
        exv = np.gradient(ev, x)
    else:
        exv = np.asarray(eta_x(x), dtype=float) if callable(eta_x) else \
            np.asarray(eta_x, dtype=float)
    mean = float(np.trapezoid(ev, x))
    scale = max(1.0, float(np.trapezoid(np.abs(ev), x)))
    if abs(mean) > 1e-10 * scale:
        raise ValueError(f"eta must have zero mean (got {mean:.3e})")
    ux = np.gradient(u, x)
    dens = eps * eps * _q_second(eps * eps * ux) * exv * exv \
        + pot.evaluate(p, u, 2) * ev * ev
    return float(np.trapezoid(dens, x))


@dataclass(frozen=True)
class Destabilizer:
    eta: np.ndarray
    J: float
    gamma: float
    phi1: float
    j1: float

    def j_of_gamma(self, gamma: float) -> float:
        """Second variation of eta_0 + gamma * eta_1 via the boundary-term
        identity (see destabilize_nonmonotone)."""
        return -2.0 * gamma * self.phi1 + gamma * gamma * self.j1


def _eta1_profile(xs: np.ndarray, n: int):
    """Compactly supported corrector: value 1 at x = -1, smooth decay to 0
    across the first monotone branch, zero mean.

    The mean of the cubic decay is removed with a smooth interior bump
    (not a constant: a constant offset would make eta_1 discontinuous at
    the edge of its support and blow up the gradient term).
    """
    L = 2.0 / n
    s = (xs + 1.0) / L
    inside = s <= 1.0
    sc = np.clip(s, 0.0, 1.0)
    base = 1.0 - 3.0 * sc ** 2 + 2.0 * sc ** 3
    bump = 15.0 * sc ** 2 * (1.0 - sc) ** 2   # integral over s in [0,1] = 0.5
    eta = np.where(inside, base - bump, 0.0)
    dbase = (-6.0 * sc + 6.0 * sc ** 2) / L
    dbump = 15.0 * (2.0 * sc * (1.0 - sc) ** 2 - 2.0 * sc ** 2 * (1.0 - sc)) / L
    deta = np.where(inside, dbase - dbump, 0.0)
    return eta, deta


def destabilize_nonmonotone(p: PotentialSpec, eps: float, profile: Profile,
                            report: SolveReport) -> Destabilizer:
    """Certify instability of a non-monotone stationary profile.

    The perturbation is eta_0 + gamma * eta_1 where eta_0 equals u' over the
    first full period and vanishes afterwards (zero mean by periodicity) and
    eta_1 is the compactly supported corrector with eta_1(-1) = 1.  For the
    exact stationary profile the differentiated Euler-Lagrange identity
    reduces the quadratic form to

        J(gamma) = -2 gamma Phi'_sigma(z1) + gamma^2 J[eta_1],

    where Phi'_sigma(z1) = eps^2 u''(-1) > 0.  The minimum of that parabola
    is certified negative; this identity-based evaluation is essential
    because the negative value is of order exp(-2c/eps) and far below any
    direct quadrature of the two (cancelling) bulk terms.
    """
    n = profile.n_transitions
    if n < 2:
        raise ValueError("profile must have at least two transitions")
    phi1 = report.tp.phi1
    x, u = profile.xs, profile.us
    eta1, eta1_x = _eta1_profile(x, n)
    ux = np.gradient(u, x)
    dens = eps * eps * _q_second(eps * eps * ux) * eta1_x ** 2 \
        + pot.evaluate(p, u, 2) * eta1 ** 2
    j1 = float(np.trapezoid(dens, x))

    if j1 > 0.0:
        gamma = phi1 / j1                 # parabola vertex
    else:
        gamma = 1.0                       # any positive gamma works
    J = -2.0 * gamma * phi1 + gamma * gamma * j1
    # line-search guard: shrink gamma until J < 0 (always succeeds for
    # phi1 > 0, but keep the loop as a safety net against a degenerate j1)
    for _ in range(60):
        if J < 0.0:
            break
        gamma *= 0.5
        J = -2.0 * gamma * phi1 + gamma * gamma * j1
    else:
        raise SolverError("no gamma with negative second variation found "
                          "(discretization too coarse?)")

    # sampled rendering of the perturbation, discretely mean-corrected
    period_end = -1.0 + 4.0 / n
    eta0 = np.where(x <= period_end + 1e-12, ux, 0.0)
    eta = eta0 + gamma * eta1
    eta = eta - np.trapezoid(eta, x) / (x[-1] - x[0])
    return Destabilizer(eta=eta, J=float(J), gamma=float(gamma),
                        phi1=float(phi1), j1=j1)


# ---------------------------------------------------------------------------
# sharp-interface limit
# ---------------------------------------------------------------------------

def limit_profile(mp: MaxwellPoint, r: float) -> LimitProfile:
    """The eps -> 0 minimizer: a single step from alpha0 to beta0 with the
    interface position fixed by the mass."""
    if not mp.alpha0 < r < mp.beta0:
        raise DomainError(f"r={r} outside ({mp.alpha0}, {mp.beta0})")
    width = mp.beta0 - mp.alpha0
    ell1 = 2.0 * (mp.beta0 - r) / width
    return LimitProfile(mp=mp, r=r, ell1=ell1, ell2=2.0 - ell1)


def limit_eval(lp: LimitProfile, x):
    x = np.asarray(x, dtype=float)
    val = np.where(x <= -1.0 + lp.ell1, lp.mp.alpha0, lp.mp.beta0)
    return float(val) if val.ndim == 0 else val


def convergence_metrics(profile: Profile, lp: LimitProfile,
                        exclusion_halfwidth: float):
    """(sup_dev, interface_x, interface_err) against the step limit.

    sup_dev excludes a window around the limiting interface; the interface
    of the profile is located by the midpoint-level crossing.
    """
    x, u = profile.xs, profile.us
    x_if = -1.0 + lp.ell1
    mask = np.abs(x - x_if) >= exclusion_halfwidth
    sup_dev = float(np.max(np.abs(u - limit_eval(lp, x))[mask]))
    level = 0.5 * (lp.mp.alpha0 + lp.mp.beta0)
    sign = np.sign(u - level)
    idx = np.nonzero(np.diff(sign) != 0)[0]
    if len(idx) == 0:
        return sup_dev, math.nan, math.nan
    i = idx[0]
    # linear interpolation of the crossing
    t = (level - u[i]) / (u[i + 1] - u[i])
    interface_x = float(x[i] + t * (x[i + 1] - x[i]))
    return sup_dev, interface_x, abs(interface_x - x_if)

import math
from fractions import Fraction

import numpy as np
import pytest

from mcgl import potential as pot
from mcgl.potential import DomainError, PotentialError, PotentialSpec


def test_tilted_quartic_matches_direct_formula():
    p = pot.tilted_quartic(0.3)
    u = np.linspace(0.2, 4.5, 57)
    expected = ((u - 2.0) ** 2 - 1.0) ** 2 / 4.0 + 0.3 * u
    assert np.allclose(pot.evaluate(p, u, 0), expected, rtol=0, atol=1e-13)


@pytest.mark.parametrize("order", [1, 2, 3])
def test_derivatives_match_finite_differences(order):
    # exact rational central differences: only the O(h^2) truncation is left
    p = pot.tilted_quartic(-0.1)
    h = Fraction(1, 10 ** 6)

    def fr_eval(u, k):
        coeffs = [Fraction(c) for c in p.coeffs]
        for _ in range(k):
            coeffs = [j * c for j, c in enumerate(coeffs)][1:]
        return sum(c * u ** j for j, c in enumerate(coeffs))

    for u in (Fraction(7, 10), Fraction(9, 5), Fraction(33, 10)):
        fd = (fr_eval(u + h, order - 1) - fr_eval(u - h, order - 1)) / (2 * h)
        assert pot.evaluate(p, float(u), order) == pytest.approx(
            float(fd), rel=1e-10)


def test_evaluate_rejects_bad_order():
    with pytest.raises(ValueError):
        pot.evaluate(pot.tilted_quartic(), 1.0, 4)


def test_spec_requires_degree_four():
    with pytest.raises(PotentialError):
        PotentialSpec(coeffs=(1.0, 2.0, 3.0))


def test_spinodal_of_symmetric_quartic():
    # F'' = 3(u-2)^2 - 1 vanishes at 2 -/+ 1/sqrt(3)
    sp = pot.spinodal(pot.tilted_quartic())
    assert sp.alpha_bar == pytest.approx(2.0 - 1.0 / math.sqrt(3.0), abs=1e-12)
    assert sp.beta_bar == pytest.approx(2.0 + 1.0 / math.sqrt(3.0), abs=1e-12)
    assert sp.sigma_hi == pytest.approx(2.0 * math.sqrt(3.0) / 9.0, abs=1e-12)
    assert sp.sigma_lo == pytest.approx(-2.0 * math.sqrt(3.0) / 9.0, abs=1e-12)


def test_validate_flags_single_well():
    # u^4 is convex: F'' never changes sign
    p = PotentialSpec(coeffs=(0.0, 0.0, 0.0, 0.0, 1.0))
    problems = pot.validate(p)
    assert problems
    with pytest.raises(PotentialError):
        pot.maxwell_point(p)


def test_gibbs_is_tilt():
    p = pot.tilted_quartic()
    z = np.linspace(0.5, 3.5, 11)
    assert np.allclose(pot.gibbs(p, 0.25, z),
                       pot.evaluate(p, z, 0) - 0.25 * z)
    assert np.allclose(pot.gibbs(p, 0.25, z, 1),
                       pot.evaluate(p, z, 1) - 0.25)


def test_critical_points_bracketing_and_residual():
    p = pot.tilted_quartic()
    tr = pot.critical_points(p, 0.05)
    sp = pot.spinodal(p)
    assert tr.alpha_sigma < sp.alpha_bar < tr.zeta_sigma < sp.beta_bar \
        < tr.beta_sigma
    for z in (tr.alpha_sigma, tr.zeta_sigma, tr.beta_sigma):
        assert abs(pot.gibbs(p, 0.05, z, 1)) < 1e-13


def test_critical_points_outside_spinodal_range():
    with pytest.raises(DomainError):
        pot.critical_points(pot.tilted_quartic(), 1.0)


def test_well_gap_strictly_decreasing():
    p = pot.tilted_quartic()
    sigmas = np.linspace(-0.3, 0.3, 9)
    gaps = [pot.well_gap(p, s) for s in sigmas]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))


@pytest.mark.parametrize("t", [-0.2, -0.1, 0.0, 0.1, 0.2])
def test_maxwell_point_closed_form_family(t):
    """For F = ((u-2)^2-1)^2/4 + t*u the construction has the closed form
    (sigma0, b0, alpha0, beta0, zeta0) = (t, 0, 1, 3, 2)."""
    mp = pot.maxwell_point(pot.tilted_quartic(t))
    assert mp.sigma0 == pytest.approx(t, abs=1e-12)
    assert mp.b0 == pytest.approx(0.0, abs=1e-12)
    assert mp.alpha0 == pytest.approx(1.0, abs=1e-12)
    assert mp.beta0 == pytest.approx(3.0, abs=1e-12)
    assert mp.zeta0 == pytest.approx(2.0, abs=1e-12)


def test_maxwell_wells_have_equal_depth():
    mp = pot.maxwell_point(pot.tilted_quartic(0.17))
    p = pot.tilted_quartic(0.17)
    assert pot.gibbs(p, mp.sigma0, mp.alpha0) == pytest.approx(
        pot.gibbs(p, mp.sigma0, mp.beta0), abs=1e-13)


def test_shifted_coeffs_reproduce_increments():
    # the float difference of gibbs values cancels catastrophically for
    # small dz, so the oracle increment is computed in exact rationals
    p = pot.tilted_quartic(0.08)
    sigma, center = 0.03, 1.37
    cs = pot.shifted_coeffs(p, sigma, center)

    def fr_phi(u):
        total = sum(Fraction(c) * u ** j for j, c in enumerate(p.coeffs))
        return total - Fraction(sigma) * u

    for dz in (1e-18, 1e-9, 1e-3, 0.4):
        fdz = Fraction(dz)
        direct = fr_phi(Fraction(center) + fdz) - fr_phi(Fraction(center))
        assert pot.eval_shifted(cs, dz) == pytest.approx(
            float(direct), rel=1e-12, abs=1e-30)


def test_taylor_shift_recenters_exactly():
    asc = (3.0, -2.0, 0.5, 1.25)
    t = 0.7
    shifted = pot.taylor_shift(asc, t)
    for x in (-1.3, 0.0, 0.9, 2.4):
        direct = sum(c * x ** k for k, c in enumerate(asc))
        recentred = sum(c * (x - t) ** k for k, c in enumerate(shifted))
        assert recentred == pytest.approx(direct, rel=1e-14, abs=1e-14)

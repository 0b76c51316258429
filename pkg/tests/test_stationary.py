import math

import numpy as np
import pytest

from mcgl import phase_plane as pp
from mcgl import potential as pot
from mcgl import stationary as st
from mcgl.potential import DomainError


@pytest.fixture(scope="module")
def quartic():
    p = pot.tilted_quartic()
    return p, pot.maxwell_point(p)


@pytest.fixture(scope="module")
def report_01_2(quartic):
    p, mp = quartic
    return st.solve_simple(p, mp, 0.1, 2.0, tol=1e-11)


def test_scaling_closed_form(quartic):
    # B_i = (2 F''(well))^{-1/2} = 1/2; c_i = 2 sqrt(2) (beta0 - r)/(B1 * 2)
    p, mp = quartic
    sc = st.scaling(p, mp, 1.5)
    assert sc.B1 == pytest.approx(0.5, abs=1e-12)
    assert sc.B2 == pytest.approx(0.5, abs=1e-12)
    assert sc.c1 == pytest.approx(2.0 * math.sqrt(2.0) * 1.5 / 1.0, abs=1e-10)
    assert sc.c2 == pytest.approx(2.0 * math.sqrt(2.0) * 0.5 / 1.0, abs=1e-10)


def test_scaling_r_out_of_window(quartic):
    p, mp = quartic
    with pytest.raises(DomainError):
        st.scaling(p, mp, 0.5)


def test_pair_from_lnh_roundtrip(quartic):
    p, mp = quartic
    pair = st.pair_from_lnh(p, (-12.0, -9.0), mp)
    tr = pot.critical_points(p, pair.sigma)
    wa = float(pot.gibbs(p, pair.sigma, tr.alpha_sigma))
    wb = float(pot.gibbs(p, pair.sigma, tr.beta_sigma))
    assert pair.b - wa == pytest.approx(math.exp(-12.0), rel=1e-9)
    # the defining identity: well gap equals h1 - h2
    assert wb - wa == pytest.approx(math.exp(-12.0) - math.exp(-9.0),
                                    rel=1e-9)


def test_solve_simple_residuals_and_window(report_01_2):
    rep = report_01_2
    assert max(abs(r) for r in rep.residuals) <= 1e-11
    assert rep.tp.z1 < 2.0 < rep.tp.z2
    assert rep.iterations >= 0


def test_solve_symmetric_sigma_vanishes(report_01_2):
    assert abs(report_01_2.delta.sigma) < 1e-12


def test_reflection_equivariance(quartic):
    # r' = alpha0 + beta0 - r swaps the offsets and negates sigma
    p, mp = quartic
    a = st.solve_simple(p, mp, 0.12, 1.7, tol=1e-10)
    b = st.solve_simple(p, mp, 0.12, 2.3, tol=1e-10)
    assert a.ln_h[0] == pytest.approx(b.ln_h[1], rel=1e-7)
    assert a.ln_h[1] == pytest.approx(b.ln_h[0], rel=1e-7)
    assert a.delta.sigma == pytest.approx(-b.delta.sigma, rel=1e-6)


def test_superpolynomial_closeness_to_maxwell(quartic):
    p, mp = quartic
    devs = []
    for eps in (0.2, 0.1):
        rep = st.solve_simple(p, mp, eps, 1.5, tol=1e-10)
        devs.append(abs(rep.delta.sigma - mp.sigma0))
    # halving eps should cut the deviation far more than any power law
    assert devs[1] < devs[0] * (0.5) ** 6


def test_solve_n_transition_period_scaling(quartic):
    # the n-transition branch solves the same system at eps_eff = n * eps
    p, mp = quartic
    two = st.solve_n_transition(p, mp, 0.05, 2.0, 2, tol=1e-10)
    one = st.solve_simple(p, mp, 0.10, 2.0, tol=1e-10)
    assert two.delta.b == pytest.approx(one.delta.b, rel=1e-8)
    assert two.eps_eff == pytest.approx(0.10)


def test_profile_mass_and_endpoints(quartic, report_01_2):
    p, _ = quartic
    prof = st.reconstruct_profile(p, report_01_2, 0.1, grid_size=4001)
    assert np.trapezoid(prof.us, prof.xs) == pytest.approx(4.0, abs=1e-6)
    assert prof.us[0] == report_01_2.tp.z1
    assert prof.us[-1] == report_01_2.tp.z2
    assert np.all(np.diff(prof.us) >= 0.0)


def test_profile_energy_crosschecks_orbit_energy(quartic, report_01_2):
    p, _ = quartic
    prof = st.reconstruct_profile(p, report_01_2, 0.1, grid_size=4001)
    e_grid = st.energy_of_profile(p, 0.1, prof)
    assert e_grid == pytest.approx(report_01_2.energy, rel=1e-4)


def test_constant_profile_energy(quartic):
    p, _ = quartic
    xs = np.linspace(-1.0, 1.0, 101)
    prof = st.Profile(xs=xs, us=np.full_like(xs, 1.7), eps=0.1, r=1.7)
    assert st.energy_of_profile(p, 0.1, prof) == pytest.approx(
        2.0 * float(pot.evaluate(p, 1.7, 0)), rel=1e-12)


def test_n_transition_profile_oscillates(quartic):
    p, mp = quartic
    rep = st.solve_n_transition(p, mp, 0.05, 2.0, 2, tol=1e-10)
    prof = st.reconstruct_profile(p, rep, 0.05, grid_size=4001)
    assert np.trapezoid(prof.us, prof.xs) == pytest.approx(4.0, abs=1e-6)
    # two transitions: up then down; interior extremum near z2
    mid = prof.us[len(prof.us) // 2]
    assert mid == pytest.approx(rep.tp.z2, abs=1e-3)
    assert prof.us[0] == pytest.approx(rep.tp.z1, abs=1e-12)
    assert prof.us[-1] == pytest.approx(rep.tp.z1, abs=1e-3)


def test_reversal_flips_orientation(quartic, report_01_2):
    p, _ = quartic
    prof = st.reconstruct_profile(p, report_01_2, 0.1, grid_size=201)
    rev = st.reversal(prof)
    assert rev.orientation == "decreasing"
    assert np.all(np.diff(rev.us) <= 0.0)
    assert st.energy_of_profile(p, 0.1, rev) == pytest.approx(
        st.energy_of_profile(p, 0.1, prof), rel=1e-12)


def test_rank_energies_order(quartic):
    p, mp = quartic
    entries = st.rank_energies(p, mp, 0.1, 2.0, n_max=3)
    labels = [k for k, _ in entries]
    assert labels[0] == "maxwell"
    energies = [v for _, v in entries if not math.isnan(v)]
    assert energies == sorted(energies)
    assert dict(entries)["constant"] == pytest.approx(0.5, abs=1e-12)


def test_second_variation_spinodal_constant(quartic):
    p, _ = quartic
    eps = 0.1
    xs = np.linspace(-1.0, 1.0, 2001)
    prof = st.Profile(xs=xs, us=np.full_like(xs, 2.0), eps=eps, r=2.0)
    eta = lambda x: np.cos(np.pi * (x + 1.0) / 2.0)
    eta_x = lambda x: -np.pi / 2.0 * np.sin(np.pi * (x + 1.0) / 2.0)
    j = st.second_variation(p, eps, prof, eta, eta_x=eta_x)
    assert j == pytest.approx(eps ** 2 * np.pi ** 2 / 4.0 - 1.0, abs=1e-8)


def test_second_variation_rejects_nonzero_mean(quartic):
    p, _ = quartic
    xs = np.linspace(-1.0, 1.0, 101)
    prof = st.Profile(xs=xs, us=np.full_like(xs, 2.0), eps=0.1, r=2.0)
    with pytest.raises(ValueError):
        st.second_variation(p, 0.1, prof, np.ones_like(xs))


def test_destabilizer_negative_direction(quartic):
    p, mp = quartic
    rep = st.solve_n_transition(p, mp, 0.05, 2.0, 2, tol=1e-10)
    prof = st.reconstruct_profile(p, rep, 0.05, grid_size=4001)
    dz = st.destabilize_nonmonotone(p, 0.05, prof, rep)
    assert dz.J < 0.0
    assert dz.gamma > 0.0
    # sampled perturbation has zero mean
    assert abs(np.trapezoid(dz.eta, prof.xs)) < 1e-10
    # the quadratic model is a parabola with the certified minimum
    assert dz.j_of_gamma(dz.gamma) <= dz.j_of_gamma(2.0 * dz.gamma)
    assert dz.j_of_gamma(0.0) == 0.0


def test_destabilizer_requires_nonmonotone(quartic, report_01_2):
    p, _ = quartic
    prof = st.reconstruct_profile(p, report_01_2, 0.1, grid_size=201)
    with pytest.raises(ValueError):
        st.destabilize_nonmonotone(p, 0.1, prof, report_01_2)


def test_limit_profile_mass_and_interface(quartic):
    _, mp = quartic
    lp = st.limit_profile(mp, 1.5)
    assert lp.ell1 == pytest.approx(1.5)
    xs = np.linspace(-1.0, 1.0, 200001)
    mass = np.trapezoid(st.limit_eval(lp, xs), xs)
    assert mass == pytest.approx(3.0, abs=1e-3)
    with pytest.raises(DomainError):
        st.limit_profile(mp, 3.5)


def test_convergence_metrics_tail_matches_layer_width(quartic):
    """Oracle: the layer is u = 2 + tanh((x - x_if)/(sqrt(2) eps)) + O(eps^2),
    so the sup deviation outside halfwidth w is 1 - tanh(w/(sqrt(2) eps))."""
    p, mp = quartic
    eps, w = 0.05, 0.1
    rep = st.solve_simple(p, mp, eps, 2.0, tol=1e-10)
    prof = st.reconstruct_profile(p, rep, eps, grid_size=4001)
    sup, x_if, err = st.convergence_metrics(prof, st.limit_profile(mp, 2.0), w)
    assert sup == pytest.approx(1.0 - math.tanh(w / (math.sqrt(2.0) * eps)),
                                rel=1e-2)
    assert err < 1e-8


def test_maxwell_energy_expansion_structure(quartic):
    p, mp = quartic
    e0, base, corr, defect = st.maxwell_energy_expansion(p, mp, 0.1, 2.0)
    assert base == 0.0
    assert corr == pytest.approx(0.1 * pp.c_eps(p, mp, 0.1), rel=1e-10)
    assert abs(defect) < 1e-9
    assert e0 == pytest.approx(base + corr + defect, abs=1e-15)

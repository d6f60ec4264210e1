"""Talenti calibration, the best Sobolev constant, and Nehari scaling."""

import math

import numpy as np
import pytest

import plaplab.radial_core as rc
import plaplab.sobolev as sb
from plaplab.errors import DomainError, NumericError

import oracles

# classical beta values for alpha = 1: p = 2 gives beta = 1/(N(N-2))
BETA_EXACT = {(3, 2.0): 1.0 / 3.0, (4, 2.0): 0.125}
# frozen by the calibration root-find; machine-exact across runs
BETA_43 = 1.0


def test_oracle_formula_reproduces_classical_closed_forms():
    # two hand-derivable specializations guard the Gamma-function oracle
    assert math.isclose(oracles.sobolev_best_constant(3, 2.0),
                        3.0 * (math.pi / 2.0) ** (4.0 / 3.0), rel_tol=1e-13)
    assert math.isclose(oracles.sobolev_best_constant(4, 2.0),
                        8.0 * math.pi / math.sqrt(6.0), rel_tol=1e-13)


@pytest.mark.parametrize("N,p", [(3, 2.0), (4, 2.0), (4, 3.0)])
def test_calibration_finds_the_extremal_beta(N, p):
    prof = sb.calibrate_talenti(N, p)
    expected = BETA_EXACT.get((N, p), BETA_43)
    assert abs(prof.beta - expected) <= 1e-10 * expected


@pytest.mark.parametrize("N,p", [(3, 2.0), (4, 2.0), (4, 3.0)])
def test_calibration_certificate_degrades_off_the_root(N, p):
    prof = sb.calibrate_talenti(N, p)
    res = sb.sampled_residual(prof)
    assert res <= 1e-6
    for factor in (0.5, 1.5):
        off = sb.TalentiProfile(prof.alpha, prof.beta * factor, N, p)
        assert sb.sampled_residual(off) >= 1e3 * max(res, 1e-12)


def test_talenti_integrals_balance_and_match_quadrature():
    prof = sb.calibrate_talenti(4, 2.0)
    A, B = sb.talenti_integrals(prof)
    assert abs(A - B) <= 1e-10 * A  # Nehari balance at calibration
    # closed form for (4,2), alpha=1, beta=1/8: both integrals are 32 pi^2/3
    exact = 32.0 * math.pi ** 2 / 3.0
    assert abs(A - exact) <= 1e-9 * exact
    # phi_infty = A/N lands exactly on the quantum
    assert abs(A / 4.0 - oracles.quantum(4, 2.0)) <= 1e-9 * A


@pytest.mark.parametrize("N,p,sig", [(3, 2.0, 5e-3), (4, 2.0, 5e-3), (4, 3.0, 5e-3)])
def test_sobolev_constant_near_closed_form(N, p, sig):
    rep = sb.sobolev_constant(N, p)
    S_true = oracles.sobolev_best_constant(N, p)
    assert abs(rep.S - S_true) / S_true <= sig
    assert rep.S >= S_true * (1.0 - 1e-9)  # upper bound: Q of a test function
    assert math.isclose(rep.c_infty, rep.S ** (N / p) / N, rel_tol=1e-14)


def test_sobolev_constant_self_convergence():
    a = sb.sobolev_constant(4, 2.0, M=1024).S
    b = sb.sobolev_constant(4, 2.0, M=2048).S
    assert abs(b - a) / b <= 1e-3


def test_default_truncation_ranges():
    assert sb.default_truncation(4, 2.0) == 1e4  # tail exponent 2
    assert sb.default_truncation(4, 3.0) == 1e8  # tail exponent 1/2, capped
    assert sb.default_truncation(3, 2.0) == 1e4


def test_sobolev_report_json_keys():
    rep = sb.sobolev_constant(4, 2.0, M=512)
    d = rep.to_json_dict()
    assert set(d) == {"S", "c_infty", "N", "p", "truncation_radius", "grid_size"}


def test_sobolev_constant_validation():
    with pytest.raises(DomainError):
        sb.sobolev_constant(4, 2.0, truncation_radius=1.5)
    with pytest.raises(DomainError):
        sb.sobolev_constant(4, 2.0, M=4)
    with pytest.raises(DomainError):
        sb.calibrate_talenti(4, 2.0, alpha=-1.0)
    with pytest.raises(DomainError):
        sb.calibrate_talenti(4, 4.0)


def test_cached_quantum_consistent_with_report():
    rep = sb.sobolev_constant(4, 2.0)
    assert sb.cached_quantum(4, 2.0) == rep.c_infty


def test_nehari_scale_closed_form():
    # a=2, b=1, p=2, p*=4: t* = (a/b)^{1/2}
    assert math.isclose(sb.nehari_scale(2.0, 1.0, 2.0, 4.0), math.sqrt(2.0),
                        rel_tol=1e-15)
    with pytest.raises(DomainError):
        sb.nehari_scale(0.0, 1.0, 2.0, 4.0)
    with pytest.raises(DomainError):
        sb.nehari_scale(1.0, 1.0, 4.0, 2.0)


def test_nehari_project_balances_and_maximizes():
    g = rc.make_grid(rc.AnnulusSpec(0.2, 1.0, 4, 2.0), 256)
    rng = np.random.default_rng(5)
    vals = rng.standard_normal(g.M + 1)
    vals[0] = vals[-1] = 0.0
    u = rc.RadialFunction(g, vals)
    proj = sb.nehari_project(u)
    A = rc.grad_norm_p(proj)
    B = rc.lpstar_norm_pow(proj)
    assert abs(A - B) <= 1e-10 * A  # on the manifold both integrals agree
    # brute-force scan of t -> J(t u) peaks at the projected level
    a, b = rc.grad_norm_p(u), rc.lpstar_norm_pow(u)
    J_scan, _ = oracles.scan_projection_level(a, b, g.exponent, g.pstar)
    assert abs(rc.energy_J(proj) - J_scan) <= 1e-6 * abs(J_scan)


def test_projection_level_equals_rayleigh_power():
    """The projected energy is Q(u)^{N/p}/N for every nonzero u."""
    g = rc.make_grid(rc.AnnulusSpec(0.2, 1.0, 4, 3.0), 128)
    rng = np.random.default_rng(9)
    for _ in range(5):
        vals = rng.standard_normal(g.M + 1)
        vals[0] = vals[-1] = 0.0
        u = rc.RadialFunction(g, vals)
        level = rc.energy_J(sb.nehari_project(u))
        q = rc.rayleigh_Q(u)
        assert abs(level - q ** (g.dim / g.exponent) / g.dim) <= 1e-10 * abs(level)


def test_dilate_invariance_and_group_law():
    g = rc.make_grid(rc.AnnulusSpec(0.2, 1.0, 4, 2.0), 512)
    rng = np.random.default_rng(1)
    vals = rng.standard_normal(g.M + 1)
    vals[0] = vals[-1] = 0.0
    u = rc.RadialFunction(g, vals)
    A0, B0, J0 = rc.grad_norm_p(u), rc.lpstar_norm_pow(u), rc.energy_J(u)
    for lam in (0.1, 3.0, 10.0):
        ul = sb.dilate(u, lam)
        assert ul.grid.nodes[0] == pytest.approx(lam * 0.2, rel=1e-15)
        assert abs(rc.grad_norm_p(ul) - A0) <= 1e-12 * A0
        assert abs(rc.lpstar_norm_pow(ul) - B0) <= 1e-12 * B0
        assert abs(rc.energy_J(ul) - J0) <= 1e-12 * abs(J0)
    # dilating twice composes multiplicatively
    once = sb.dilate(sb.dilate(u, 2.0), 5.0)
    direct = sb.dilate(u, 10.0)
    assert np.allclose(once.grid.nodes, direct.grid.nodes, rtol=1e-14)
    assert np.allclose(once.values, direct.values, rtol=1e-14)


def test_tapered_profile_is_dirichlet_with_small_interior_residual():
    prof = sb.calibrate_talenti(4, 2.0)
    u = sb.tapered_profile(prof, 1e4, 2048)
    assert u.values[0] == 0.0 and u.values[-1] == 0.0
    assert u.dirichlet
    # the taper perturbs only far-field decades; Q stays near S
    assert abs(rc.rayleigh_Q(u) - oracles.sobolev_best_constant(4, 2.0)) \
        <= 5e-3 * oracles.sobolev_best_constant(4, 2.0)

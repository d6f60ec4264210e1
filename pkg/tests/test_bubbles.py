"""Multi-bubble configurations and Monte Carlo additivity checks.

MC assertions use fixed seeds, so every z-score below is deterministic;
the 3-sigma bounds leave room for BLAS reduction-order jitter only.
"""

import math
import warnings

import numpy as np
import pytest

import plaplab.annulus as an
import plaplab.bubbles as bb
import plaplab.radial_core as rc
import plaplab.sobolev as sb
import plaplab.symmetry as sym
from plaplab.errors import DomainError, NumericError

PROFILE = sb.calibrate_talenti(4, 2.0)
A_EXACT, B_EXACT = sb.talenti_integrals(PROFILE)  # both 32 pi^2 / 3
TWO_CAP_FROZEN = 53.69731396447679  # window 100, M 1024, spread 1e5


def _bubble(center, scale=1.0):
    return bb.TalentiBubble(np.asarray(center, dtype=float), scale, PROFILE)


def _single():
    return bb.BubbleConfig(bubbles=[(_bubble([0.0, 0.0, 0.0, 0.0]), None)])


def test_bubble_value_at_center_matches_amplitude():
    u = _bubble([0.0] * 4, scale=0.5)
    # lambda^{(p-N)/p} * alpha^{1-N/p} with alpha = 1: 0.5^{-1} = 2
    assert u.value_at(np.zeros((1, 4)))[0] == pytest.approx(2.0, rel=1e-14)
    shifted = _bubble([3.0, 0.0, 0.0, 0.0], scale=0.5)
    assert shifted.value_at(np.array([[3.0, 0.0, 0.0, 0.0]]))[0] \
        == pytest.approx(2.0, rel=1e-14)


def test_bubble_gradient_matches_finite_differences():
    u = _bubble([1.0, -2.0, 0.5, 0.0], scale=0.7)
    rng = np.random.default_rng(3)
    pts = rng.standard_normal((10, 4)) * 2.0
    grad = u.gradient_at(pts)
    eps = 1e-6
    for k in range(4):
        dp = pts.copy()
        dm = pts.copy()
        dp[:, k] += eps
        dm[:, k] -= eps
        fd = (u.value_at(dp) - u.value_at(dm)) / (2.0 * eps)
        assert np.max(np.abs(fd - grad[:, k])) <= 1e-6


def test_evaluate_config_pointwise_sum():
    assert bb.evaluate_config(bb.BubbleConfig(), np.ones(4)) == 0.0
    b1 = _bubble([0.0] * 4)
    b2 = _bubble([30.0, 0.0, 0.0, 0.0])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        both = bb.BubbleConfig(bubbles=[(b1, None), (b2, None)])
    x = np.array([10.0, 1.0, 0.0, 0.0])
    expected = b1.value_at(x[None, :])[0] + b2.value_at(x[None, :])[0]
    assert bb.evaluate_config(both, x) == pytest.approx(expected, rel=1e-14)


def test_config_gradient_is_sum_of_bubble_gradients():
    b1 = _bubble([0.0] * 4)
    b2 = _bubble([12.0, 0.0, 0.0, 0.0])
    cfg = bb.BubbleConfig(bubbles=[(b1, None), (b2, None)])
    pts = np.array([[4.0, 1.0, -1.0, 0.5]])
    total = bb.config_gradient(cfg, pts)
    assert np.allclose(total, b1.gradient_at(pts) + b2.gradient_at(pts),
                       rtol=1e-14)


def test_single_bubble_norm_within_three_sigma_of_quadrature():
    est = bb.config_norm_p(_single(), bb.MCParams(samples=20_000, seed=1))
    assert est.std_error > 0.0
    assert abs(est.value - A_EXACT) <= 3.0 * est.std_error


def test_norm_estimate_is_dilation_invariant():
    tiny = bb.BubbleConfig(bubbles=[(_bubble([0.0] * 4, scale=0.01), None)])
    a = bb.config_norm_p(_single(), bb.MCParams(samples=20_000, seed=2))
    b = bb.config_norm_p(tiny, bb.MCParams(samples=20_000, seed=2))
    z = abs(a.value - b.value) / math.hypot(a.std_error, b.std_error)
    assert z <= 3.0


def test_independent_seeds_agree_within_mutual_three_sigma():
    a = bb.config_norm_p(_single(), bb.MCParams(samples=20_000, seed=1))
    b = bb.config_norm_p(_single(), bb.MCParams(samples=20_000, seed=3))
    z = abs(a.value - b.value) / math.hypot(a.std_error, b.std_error)
    assert z <= 3.0


def test_coincident_bubbles_scale_by_two_to_the_p():
    with pytest.warns(UserWarning):
        doubled = bb.BubbleConfig(
            bubbles=[(_bubble([0.0] * 4), None), (_bubble([0.0] * 4), None)])
    assert doubled.separation_warning
    est = bb.config_norm_p(doubled, bb.MCParams(samples=20_000, seed=4))
    # 2u has norm 2^p * ||u||^p, not 2x
    assert abs(est.value - 4.0 * A_EXACT) <= 3.0 * est.std_error
    assert abs(est.value - 2.0 * A_EXACT) > 10.0 * est.std_error


def test_separation_ratio_and_warning_threshold():
    near = [(_bubble([0.0] * 4), None), (_bubble([5.0, 0.0, 0.0, 0.0]), None)]
    with pytest.warns(UserWarning):
        cfg = bb.BubbleConfig(bubbles=near)
    assert cfg.separation_ratio == pytest.approx(5.0, rel=1e-14)
    far = [(_bubble([0.0] * 4), None), (_bubble([50.0, 0.0, 0.0, 0.0]), None)]
    with warnings.catch_warnings():
        warnings.simplefilter("error")  # must not warn at ratio 50
        cfg2 = bb.BubbleConfig(bubbles=far)
    assert not cfg2.separation_warning


def test_sample_floor_is_enforced():
    with pytest.raises(DomainError):
        bb.config_norm_p(_single(), bb.MCParams(samples=5000, seed=0))
    with pytest.raises(DomainError):
        bb.MCParams(samples=0)


def test_mc_estimate_json_keys():
    est = bb.config_norm_p(_single(), bb.MCParams(samples=10_000, seed=0))
    assert set(est.to_json_dict()) == {"value", "std_error", "samples"}


def test_additivity_single_bubble_deviation_is_zero():
    # the difference estimator integrates f_total - f_part, identically 0
    rep = bb.additivity_check(_single(), bb.MCParams(samples=10_000, seed=0))
    assert rep.norm_deviation == 0.0
    assert rep.energy_deviation == 0.0


def test_additivity_deviation_decreases_with_separation():
    devs = []
    for d in (10.0, 100.0):
        cfg = bb.BubbleConfig(
            bubbles=[(_bubble([0.0] * 4), None),
                     (_bubble([d, 0.0, 0.0, 0.0]), None)])
        rep = bb.additivity_check(cfg, bb.MCParams(samples=50_000, seed=11))
        devs.append((rep.norm_deviation, rep.energy_deviation))
    assert devs[1][0] < devs[0][0]
    assert devs[1][1] < devs[0][1]


def test_additivity_requires_a_bubble():
    with pytest.raises(DomainError):
        bb.additivity_check(bb.BubbleConfig(), bb.MCParams(samples=10_000))


def test_orbit_expansion_prediction_is_exact_arithmetic():
    clo = sym.close_group(sym.GroupSpec(4, (-np.eye(4),)))
    cfg = bb.BubbleConfig(
        bubbles=[(_bubble([10.0, 0.0, 0.0, 0.0], scale=0.1), clo)])
    rep = bb.additivity_check(cfg, bb.MCParams(samples=20_000, seed=7))
    # prediction side: |orbit| = 2 times the dilation-invariant integrals
    assert rep.norm_prediction == 2.0 * A_EXACT
    assert rep.norm_deviation <= 2e-3
    assert set(rep.to_json_dict()) >= {"norm_deviation", "energy_deviation"}


def test_base_plus_bubble_prediction_and_deviation():
    base, _ = an.minimize_annulus(rc.AnnulusSpec(0.2, 1.0, 4, 2.0), 256)
    cfg = bb.BubbleConfig(
        base=base, bubbles=[(_bubble([50.0, 0.0, 0.0, 0.0], scale=0.1), None)])
    rep = bb.additivity_check(cfg, bb.MCParams(samples=50_000, seed=13))
    assert rep.norm_prediction == pytest.approx(
        rc.grad_norm_p(base) + A_EXACT, rel=1e-14)
    assert rep.energy_prediction == pytest.approx(
        rc.energy_J(base) + A_EXACT / 4.0, rel=1e-14)
    assert rep.norm_deviation <= 1e-6
    assert rep.energy_deviation <= 1e-2


def test_config_validation():
    other = sb.calibrate_talenti(3, 2.0)
    with pytest.raises(DomainError):
        bb.BubbleConfig(bubbles=[
            (_bubble([0.0] * 4), None),
            (bb.TalentiBubble(np.zeros(3), 1.0, other), None)])
    with pytest.raises(DomainError):
        bb.TalentiBubble(np.zeros(3), 1.0, PROFILE)  # center dim mismatch
    with pytest.raises(DomainError):
        bb.TalentiBubble(np.zeros(4), -1.0, PROFILE)
    dense = sym.close_group(
        sym.GroupSpec(4, (sym.rotation_generator(4, 0, 1, 1.0),)), max_order=50)
    with pytest.raises(DomainError):
        bb.BubbleConfig(bubbles=[(_bubble([1.0, 0.0, 0.0, 0.0]), dense)])


def test_two_cap_level_frozen_and_above_twice_quantum():
    level = bb.two_cap_level(PROFILE)
    assert abs(level - TWO_CAP_FROZEN) <= 1e-9 * TWO_CAP_FROZEN
    assert level >= 2.0 * sb.cached_quantum(4, 2.0) * 0.99
    with pytest.raises(DomainError):
        bb.two_cap_level(PROFILE, window=100.0, spread=100.0)


def test_energy_quantum_check_returns_the_quantum():
    phi = bb.energy_quantum_check(PROFILE)
    # A = B at calibration, so phi = A/N lands on 8 pi^2 / 3 exactly
    assert abs(phi - A_EXACT / 4.0) <= 1e-12 * phi
    assert abs(phi - 8.0 * math.pi ** 2 / 3.0) <= 1e-9 * phi


def test_energy_quantum_check_flags_impossible_reference():
    with pytest.raises(NumericError):
        bb.energy_quantum_check(PROFILE, c_reference=1e6)


def test_projected_perturbed_profile_stays_above_the_quantum():
    pert = sb.TalentiProfile(PROFILE.alpha, PROFILE.beta * 1.7, 4, 2.0)
    u = sb.nehari_project(sb.tapered_profile(pert, 1e4, 1024))
    c_inf = sb.cached_quantum(4, 2.0)
    assert rc.energy_J(u) >= c_inf * (1.0 - 0.01)

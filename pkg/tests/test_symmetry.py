"""Group closures, orbit arithmetic, and the symmetry threshold mu_G."""

import math

import numpy as np
import pytest

import plaplab.symmetry as sym
from plaplab.errors import DomainError


def _closure(dim, generators, **kw):
    return sym.close_group(sym.GroupSpec(dim, tuple(generators)), **kw)


def _random_orthogonal(dim, rng):
    Q, R = np.linalg.qr(rng.standard_normal((dim, dim)))
    return Q * np.sign(np.diag(R))


def test_antipodal_group_closes_to_order_two():
    clo = _closure(4, [-np.eye(4)])
    assert clo.complete and clo.order == 2
    rep = sym.min_orbit_card(clo)
    assert rep.l == 2 and rep.exact
    assert rep.fix_dim == 0


def test_double_block_rotation_gives_l_three():
    theta = 2.0 * math.pi / 3.0
    c, s = math.cos(theta), math.sin(theta)
    g = np.zeros((4, 4))
    g[0, 0] = g[2, 2] = c
    g[1, 1] = g[3, 3] = c
    g[0, 1] = g[2, 3] = -s
    g[1, 0] = g[3, 2] = s
    clo = _closure(4, [g])
    assert clo.complete and clo.order == 3
    assert sym.fixed_subspace(clo).shape[1] == 0
    rep = sym.min_orbit_card(clo)
    assert rep.l == 3 and rep.exact


def test_cyclic_rotation_order_and_orbit():
    g = sym.rotation_generator(2, 0, 1, 2.0 * math.pi / 8.0)
    clo = _closure(2, [g])
    assert clo.order == 8
    pts = sym.orbit_points(np.array([1.0, 0.0]), clo)
    assert pts.shape == (8, 2)
    assert sym.orbit_size(np.array([1.0, 0.0]), clo) == 8


def test_closure_contains_identity_and_products():
    g = sym.rotation_generator(3, 0, 1, 2.0 * math.pi / 5.0)
    clo = _closure(3, [g])
    els = clo.elements
    assert any(np.allclose(e, np.eye(3), atol=1e-12) for e in els)
    # closure under multiplication, checked on a few random pairs
    rng = np.random.default_rng(0)
    for _ in range(10):
        a, b = els[rng.integers(len(els))], els[rng.integers(len(els))]
        prod = a @ b
        assert min(np.max(np.abs(prod - e)) for e in els) <= 1e-9


def test_fixed_subspace_of_axis_rotation():
    g = sym.rotation_generator(3, 0, 1, 2.0 * math.pi / 5.0)
    clo = _closure(3, [g])
    fix = sym.fixed_subspace(clo)
    assert fix.shape == (3, 1)
    assert abs(abs(fix[2, 0]) - 1.0) <= 1e-12  # the rotation axis


def test_min_orbit_card_detects_fixed_lines():
    g = sym.rotation_generator(3, 0, 1, 2.0 * math.pi / 5.0)
    rep = sym.min_orbit_card(_closure(3, [g]))
    assert rep.l == 1 and rep.fix_dim == 1
    assert sym.orbit_size(rep.witness, _closure(3, [g])) == 1


def test_trivial_group_has_l_one():
    rep = sym.min_orbit_card(_closure(3, [np.eye(3)]))
    assert rep.l == 1


def test_l_is_one_exactly_when_fix_is_nontrivial():
    rng = np.random.default_rng(21)
    for trial in range(12):
        dim = int(rng.integers(2, 5))
        gens = []
        for _ in range(int(rng.integers(1, 3))):
            k = int(rng.integers(2, 5))
            if dim >= 2:
                g = sym.rotation_generator(dim, 0, 1, 2.0 * math.pi / k)
            Q = _random_orthogonal(dim, rng)
            gens.append(Q @ g @ Q.T)
        if rng.random() < 0.3:
            gens.append(-np.eye(dim))
        clo = _closure(dim, gens)
        if not clo.complete:
            continue
        rep = sym.min_orbit_card(clo)
        fix = sym.fixed_subspace(clo)
        assert (rep.l == 1) == (fix.shape[1] > 0), \
            f"trial {trial}: l={rep.l}, fix_dim={fix.shape[1]}"


def test_orbit_sizes_divide_group_order():
    theta = 2.0 * math.pi / 3.0
    c, s = math.cos(theta), math.sin(theta)
    g = np.zeros((4, 4))
    g[0, 0] = g[2, 2] = g[1, 1] = g[3, 3] = c
    g[0, 1] = g[2, 3] = -s
    g[1, 0] = g[3, 2] = s
    clo = _closure(4, [g, -np.eye(4)])  # order 6
    assert clo.order == 6
    rng = np.random.default_rng(5)
    for _ in range(200):
        x = rng.standard_normal(4)
        assert clo.order % sym.orbit_size(x, clo) == 0


def test_incomplete_closure_reports_infinite_l():
    g = sym.rotation_generator(2, 0, 1, 1.0)  # irrational angle, dense subgroup
    clo = _closure(2, [g], max_order=100)
    assert not clo.complete
    rep = sym.min_orbit_card(clo, samples=50)
    assert math.isinf(rep.l)
    assert not rep.exact
    assert rep.lower_bound >= 100
    assert rep.to_json_dict()["l"] == "inf"
    with pytest.raises(DomainError):
        sym.fixed_subspace(clo)


def test_conjugation_leaves_l_invariant():
    rng = np.random.default_rng(8)
    base = [sym.rotation_generator(4, 0, 1, math.pi), -np.eye(4)]
    l0 = sym.min_orbit_card(_closure(4, base)).l
    for _ in range(5):
        Q = _random_orthogonal(4, rng)
        conj = [Q @ g @ Q.T for g in base]
        assert sym.min_orbit_card(_closure(4, conj)).l == l0


def test_orbit_separation_closed_forms():
    clo = _closure(3, [-np.eye(3)])
    y = np.array([0.7, 0.0, 0.1])
    sep = sym.orbit_separation(y, clo)
    assert math.isclose(sep, 2.0 * float(np.linalg.norm(y)), rel_tol=1e-12)
    # chord of 120 degrees at radius 1
    g = sym.rotation_generator(2, 0, 1, 2.0 * math.pi / 3.0)
    clo2 = _closure(2, [g])
    sep2 = sym.orbit_separation(np.array([1.0, 0.0]), clo2)
    assert math.isclose(sep2, math.sqrt(3.0), rel_tol=1e-12)
    assert math.isclose(sym.orbit_separation(np.array([2.0, 0.0]), clo2),
                        2.0 * sep2, rel_tol=1e-12)


def test_orbit_separation_edge_cases():
    g = sym.rotation_generator(3, 0, 1, 2.0 * math.pi / 3.0)
    clo = _closure(3, [g])
    assert math.isinf(sym.orbit_separation(np.array([0.0, 0.0, 1.0]), clo))
    with pytest.raises(DomainError):
        sym.orbit_separation(np.zeros(3), clo)


def test_mu_on_annulus_avoiding_fix():
    c_inf = 26.318945069571622  # 8 pi^2 / 3, the (4,2) quantum
    clo = _closure(4, [-np.eye(4)])
    mu = sym.mu_G(clo, sym.annulus_sampler(0.2, 1.0, 4), c_inf)
    assert mu == 2.0 * c_inf
    assert (mu / c_inf) == round(mu / c_inf)


def test_mu_on_domain_meeting_fix():
    """A sampler of the closed domain that includes axis points must report
    the singleton orbit, so mu drops to one quantum."""
    g = sym.rotation_generator(3, 0, 1, 2.0 * math.pi / 5.0)
    clo = _closure(3, [g])
    base = sym.annulus_sampler(0.2, 1.0, 3)

    def sampler(n, rng):
        pts = base(n, rng)
        k = max(1, n // 8)
        r = rng.uniform(0.2, 1.0, size=k)
        pts[:k] = 0.0
        pts[:k, 2] = r  # points on the rotation axis inside the annulus
        return pts

    c_inf = 4.0
    assert sym.mu_G(clo, sampler, c_inf) == c_inf


def test_mu_validation():
    clo = _closure(2, [sym.rotation_generator(2, 0, 1, 1.0)], max_order=50)
    with pytest.raises(DomainError):
        sym.mu_G(clo, sym.annulus_sampler(0.5, 1.0, 2), 1.0)
    clo2 = _closure(2, [-np.eye(2)])
    with pytest.raises(DomainError):
        sym.mu_G(clo2, lambda n, rng: np.empty((0, 2)), 1.0)


def test_group_spec_rejects_non_orthogonal_generators():
    with pytest.raises(DomainError):
        sym.GroupSpec(2, (np.array([[1.0, 0.1], [0.0, 1.0]]),))
    with pytest.raises(DomainError):
        sym.GroupSpec(2, (np.eye(3),))


def test_rotation_generator_validation():
    with pytest.raises(DomainError):
        sym.rotation_generator(3, 1, 1, 0.5)
    with pytest.raises(DomainError):
        sym.rotation_generator(3, 0, 3, 0.5)

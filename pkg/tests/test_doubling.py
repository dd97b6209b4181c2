"""Doubling profiles, ratio/packing bounds, net coloring, concentration."""

from __future__ import annotations

import numpy as np
import pytest

import mmconc as mc
from conftest import random_space


def torus(n: int, normalized: bool = False, weights=None) -> mc.FiniteMMSpace:
    return mc.generate(
        mc.FamilySpec("discrete_torus", n, normalized=normalized, weights=weights)
    )


def check_coloring(space, net, coloring):
    """Independent verification: disjoint, exhaustive, each class 5e-separated."""
    scale = 5.0 * coloring.epsilon
    seen = []
    for cls in coloring.classes:
        for p in cls:
            assert p not in seen
            seen.append(p)
        for a in cls:
            for b in cls:
                if a != b:
                    assert space.dist[a, b] >= scale
    assert sorted(seen) == sorted(net.members.indices)


class TestProfile:
    def test_eight_cycle_doubling_constant_at_one(self):
        prof = mc.doubling_profile(torus(8))
        # B(x,2) has 5 points, B(x,1) has 3, uniform mass: C(1) = 5/3
        assert prof.constant_at(1.0) == 5 / 3

    def test_values_are_minimal_and_attained(self):
        rng = np.random.default_rng(91)
        for _ in range(10):
            sp = random_space(rng, int(rng.integers(3, 9)))
            prof = mc.doubling_profile(sp)
            for r, c in zip(prof.radii, prof.values):
                ratios = []
                for x in range(len(sp.points)):
                    inner = mc.ball_mass(sp, x, r)
                    outer = mc.ball_mass(sp, x, 2 * r)
                    ratios.append(outer / inner)
                # minimal constant, attained at the argmax (up to summation order)
                assert max(ratios) == pytest.approx(c, rel=1e-12)

    def test_default_grid_is_half_distances_within_horizon(self):
        sp = torus(8)
        prof = mc.doubling_profile(sp)
        want = sorted({d / 2 for d in np.unique(sp.dist) if 0 < d / 2 <= prof.horizon})
        assert list(prof.radii) == want

    def test_refined_grid_and_off_grid_queries_agree(self):
        sp = torus(8)
        prof = mc.doubling_profile(sp)
        fresh = prof.constant_at(0.7)  # off-grid: computed on demand
        refined = prof.refined([0.7])
        assert refined.constant_at(0.7) == fresh

    def test_dominated_by_constant_and_callable(self):
        prof = mc.doubling_profile(torus(8))
        assert prof.dominated_by(10.0)
        assert not prof.dominated_by(1.0)
        assert prof.dominated_by(lambda r: 5.0)

    def test_requires_positive_weights(self):
        sp = mc.generate(mc.FamilySpec("hamming_cube", 2))
        dead = mc.FiniteMMSpace(sp.points, sp.dist, np.array([0.5, 0.5, 0.0, 0.0]))
        with pytest.raises(ValueError):
            mc.doubling_profile(dead)


class TestLadderAndRatio:
    def test_ladder_constant_on_the_sixteen_cycle(self):
        prof = mc.doubling_profile(torus(16))
        assert mc.lemma_constant(prof, 0.25, 4.0) == 3.0

    def test_ladder_includes_the_base_rung(self):
        prof = mc.doubling_profile(torus(16))
        for r1, r2 in [(0.25, 4.0), (0.5, 2.0), (1.0, 3.0)]:
            assert mc.lemma_constant(prof, r1, r2) >= prof.constant_at(r1)

    def test_ladder_rejects_bad_radii(self):
        prof = mc.doubling_profile(torus(16))
        with pytest.raises(ValueError):
            mc.lemma_constant(prof, 2.0, 1.0)  # r1 > r2
        with pytest.raises(ValueError):
            mc.lemma_constant(prof, 0.5, 5.0)  # 2*r2 beyond horizon

    def test_ratio_bound_holds_empirically(self):
        for sp in [torus(8), torus(16)]:
            prof = mc.doubling_profile(sp)
            r1, r2 = 1.0, prof.horizon / 2
            bound = mc.ratio_bound(prof, r1, r2)
            worst = np.inf
            for y in range(len(sp.points)):
                for x in range(len(sp.points)):
                    if sp.dist[x, y] <= r2:
                        worst = min(
                            worst,
                            mc.ball_mass(sp, x, r1) / mc.ball_mass(sp, y, r2),
                        )
            assert 0.0 < bound <= 1.0
            assert bound <= worst


class TestPacking:
    def test_sixteen_cycle_packing_numbers(self):
        sp = torus(16)
        prof = mc.doubling_profile(sp)
        net = mc.build_net(sp, 0.75)
        chk = mc.packing_bound_check(prof, net, 0.75)
        assert chk == mc.PackingCheck(36864.0, 7, True)

    def test_radius_precondition_is_enforced(self):
        sp = torus(16)
        prof = mc.doubling_profile(sp)  # horizon 8
        net = mc.build_net(sp, 1.0)
        with pytest.raises(ValueError):
            mc.packing_bound_check(prof, net, 1.0)  # 32 > 3*8

    def test_holds_on_random_spaces(self):
        rng = np.random.default_rng(92)
        for _ in range(10):
            sp = random_space(rng, int(rng.integers(4, 10)))
            prof = mc.doubling_profile(sp)
            eps = 3.0 * prof.horizon / 32.0
            net = mc.build_net(sp, eps)
            assert mc.packing_bound_check(prof, net, eps).holds


class TestColoring:
    def test_sixteen_cycle_coloring_frozen(self):
        sp = torus(16)
        net = mc.build_net(sp, 1.0)
        col = mc.color_net(sp, net)
        assert col.anchor == 0 and col.k == 11
        assert tuple(cls.indices for cls in col.classes) == (
            (0, 6), (1, 7), (2, 8), (3, 9), (4, 10),
            (5,), (11,), (12,), (13,), (14,), (15,),
        )
        check_coloring(sp, net, col)

    def test_classes_verified_on_random_spaces(self):
        rng = np.random.default_rng(93)
        for _ in range(15):
            sp = random_space(rng, int(rng.integers(4, 11)))
            eps = float(rng.uniform(0.05, 0.5)) * sp.diameter
            net = mc.build_net(sp, eps)
            col = mc.color_net(sp, net)
            check_coloring(sp, net, col)
            # k equals the max number of members in a 5-eps ball of a member
            members = list(net.members.indices)
            counts = [
                sum(sp.dist[a, b] <= 5 * eps for b in members) for a in members
            ]
            assert col.k == max(counts)


class TestConcentrationWitness:
    def _cluster_space(self):
        d = np.full((4, 4), 100.0)
        np.fill_diagonal(d, 0.0)
        d[0, 1] = d[1, 0] = 5.0
        d[2, 3] = d[3, 2] = 4.2
        d = mc.exact_triangle_closure(d)
        return mc.validate_space(
            ("x1", "x2", "y1", "y2"), d, np.array([0.4, 0.1, 0.3, 0.15])
        )

    def test_reported_masses_match_direct_recomputation(self):
        rng = np.random.default_rng(94)
        for _ in range(15):
            sp = random_space(rng, int(rng.integers(3, 9)))
            screen = random_space(rng, int(rng.integers(2, 6)))
            idx = rng.integers(0, len(screen.points), len(sp.points))
            pm = mc.pushforward_screen(sp, screen, idx)
            eps = float(rng.uniform(0.05, 0.4))
            net = mc.build_net(screen, eps)
            w = mc.concentration_witness(pm, net, eps, mass_floor=0.0)
            assert w is not None
            ball2 = pm.weights[screen.dist[w.center] <= 2 * eps].sum()
            outside3 = pm.weights[screen.dist[w.center] > 3 * eps].sum()
            assert w.ball_mass == ball2 and w.residual == outside3
            # no other member has a strictly heavier 2-eps ball
            for member in net.members:
                other = pm.weights[screen.dist[member] <= 2 * eps].sum()
                assert other <= w.ball_mass

    def test_residual_plus_triple_ball_is_total_mass(self):
        rng = np.random.default_rng(95)
        sp = random_space(rng, 7)
        pm = mc.pushforward_screen(sp, sp, np.arange(7))
        net = mc.build_net(sp, 0.2)
        w = mc.concentration_witness(pm, net, 0.2, 0.0)
        ball3 = pm.weights[sp.dist[w.center] <= 0.6].sum()
        assert w.residual <= pm.total_mass - ball3 + 1e-12

    def test_below_floor_returns_none(self, two_point):
        pm = mc.pushforward_screen(two_point, two_point, [0, 1])
        net = mc.build_net(two_point, 0.5)
        assert mc.concentration_witness(pm, net, 0.1, mass_floor=0.9) is None

    def test_residual_can_rise_when_the_best_center_switches(self):
        """The reported residual is not monotone in epsilon: enlarging the
        ball can hand the argmax to a different cluster with more mass
        far away.  Pinned so the behavior stays documented."""
        sp = self._cluster_space()
        pm = mc.pushforward_screen(sp, sp, np.arange(4))
        net = mc.build_net(sp, 2.0)
        lo = mc.concentration_witness(pm, net, 2.0, 0.05)
        hi = mc.concentration_witness(pm, net, 2.1, 0.05)
        assert lo.center == 0 and hi.center == 2  # argmax moved clusters
        assert hi.residual > lo.residual

    def test_residual_monotone_at_a_fixed_center(self):
        """At any fixed center the outside-3-eps mass can only shrink as
        epsilon grows; the non-monotonicity above is purely the switch."""
        sp = self._cluster_space()
        pm = mc.pushforward_screen(sp, sp, np.arange(4))
        for center in range(4):
            prev = np.inf
            for eps in (2.0, 2.1, 2.5, 3.0):
                res = pm.weights[sp.dist[center] > 3 * eps].sum()
                assert res <= prev
                prev = res

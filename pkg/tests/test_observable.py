"""Lipschitz maps, pushforwards, partial diameters, observable-diameter brackets."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

import mmconc as mc
from conftest import line_space, random_measure, random_space


class TestValidateLipschitz:
    def test_distance_functions_validate_exactly(self):
        rng = np.random.default_rng(71)
        for _ in range(20):
            sp = random_space(rng, int(rng.integers(2, 10)))
            a = int(rng.integers(0, len(sp.points)))
            lmap = mc.validate_lipschitz(sp, None, sp.dist[:, a])
            assert lmap.is_real and lmap.constant <= 1.0

    def test_rejects_a_stretching_map(self, two_point):
        with pytest.raises(mc.LipschitzValidationError) as err:
            mc.validate_lipschitz(two_point, None, [0.0, 1.5])
        assert err.value.spread == 1.5 and err.value.allowed == 1.0

    def test_screen_target_uses_screen_distances(self, two_point):
        screen = line_space([0.0, 0.25, 2.0])
        # sending the two unit-separated points to atoms 0 and 1 is fine,
        # sending them to atoms 0 and 2 stretches 1.0 into 2.0
        ok = mc.validate_lipschitz(two_point, screen, [0, 1])
        assert not ok.is_real
        with pytest.raises(mc.LipschitzValidationError):
            mc.validate_lipschitz(two_point, screen, [0, 2])


class TestPushforward:
    def test_real_pushforward_conserves_mass_exactly(self):
        rng = np.random.default_rng(72)
        for _ in range(20):
            sp = random_space(rng, int(rng.integers(2, 10)))
            nu = mc.pushforward_real(sp, sp.dist[:, 0])
            # fsum-grade conservation: identical accumulation of the same weights
            assert nu.total_mass == pytest.approx(sp.weights.sum(), abs=1e-15)

    def test_screen_pushforward_bins_weights_by_target_point(self):
        sp = line_space([0.0, 0.4, 0.8], weights=[0.2, 0.3, 0.5])
        screen = line_space([0.0, 1.0])
        pm = mc.pushforward_screen(sp, screen, [0, 0, 1])
        assert pm.weights == pytest.approx([0.5, 0.5])
        assert pm.total_mass == pytest.approx(1.0)

    def test_pushforward_space_of_a_real_map_is_a_line_space(self, two_point):
        lmap = mc.validate_lipschitz(two_point, None, [0.0, 1.0])
        img = mc.pushforward_space(two_point, lmap)
        assert img.dist[0, 1] == 1.0 and img.weights.sum() == pytest.approx(1.0)


class TestPartialDiameterReal:
    def test_four_uniform_atoms_at_half_mass(self):
        nu = mc.RealMeasure.from_atoms(np.arange(4.0), np.full(4, 0.25))
        assert mc.partial_diameter_real(nu, 0.5) == 1.0

    def test_zero_and_overflow_targets(self):
        nu = mc.RealMeasure.from_atoms(np.arange(3.0), np.full(3, 1 / 3))
        assert mc.partial_diameter_real(nu, 0.0) == 0.0
        assert mc.partial_diameter_real(nu, -1.0) == 0.0
        assert mc.partial_diameter_real(nu, 1.5) == np.inf

    @given(st.integers(0, 2**31 - 1))
    def test_monotone_in_target_mass(self, seed):
        rng = np.random.default_rng(seed)
        nu = random_measure(rng, int(rng.integers(2, 12)))
        t1, t2 = sorted(rng.uniform(0.0, 1.0, 2))
        assert mc.partial_diameter_real(nu, t1) <= mc.partial_diameter_real(nu, t2)

    def test_window_is_optimal_by_brute_force(self):
        rng = np.random.default_rng(73)
        for _ in range(40):
            nu = random_measure(rng, int(rng.integers(2, 9)))
            target = float(rng.uniform(0.1, 0.99))
            got = mc.partial_diameter_real(nu, target)
            k = len(nu)
            best = np.inf
            for i in range(k):
                acc = 0.0
                for j in range(i, k):
                    acc += nu.weights[j]
                    if acc >= target:
                        best = min(best, nu.positions[j] - nu.positions[i])
                        break
            assert got == best


class TestPartialDiameterScreen:
    def test_matches_brute_force_subset_search(self):
        rng = np.random.default_rng(74)
        for _ in range(15):
            sp = random_space(rng, int(rng.integers(2, 8)))
            screen = random_space(rng, int(rng.integers(2, 6)))
            idx = rng.integers(0, len(screen.points), len(sp.points))
            pm = mc.pushforward_screen(sp, screen, idx)
            target = float(rng.uniform(0.2, 0.95))
            got = mc.partial_diameter_screen(pm, target)
            # exhaustive: smallest subset diameter reaching the target mass
            ns = len(screen.points)
            best = np.inf
            for mask in range(1, 1 << ns):
                sel = [i for i in range(ns) if mask >> i & 1]
                if pm.weights[sel].sum() >= target:
                    diam = max(screen.dist[i, j] for i in sel for j in sel)
                    best = min(best, diam)
            assert got == best

    def test_support_budget_guard(self):
        sp = line_space(np.linspace(0, 1, 25))
        pm = mc.pushforward_screen(sp, sp, np.arange(25))
        with pytest.raises(mc.BudgetExceededError):
            mc.partial_diameter_screen(pm, 0.9, support_budget=20)
        val = mc.partial_diameter_screen(pm, 0.9, support_budget=20, force=True)
        assert np.isfinite(val)


class TestObsdiamReal:
    def test_two_point_at_half_kappa_collapses(self, two_point):
        br = mc.obsdiam_real_bracket(two_point, 0.5)
        assert br.lower == 0.0
        assert br.lower <= br.upper

    def test_lower_bound_carries_a_checkable_witness(self):
        rng = np.random.default_rng(75)
        sp = random_space(rng, 7)
        br = mc.obsdiam_real_bracket(sp, 0.1, effort=400, seed=2)
        values = np.asarray(br.witness["values"], dtype=float)
        lmap = mc.validate_lipschitz(sp, None, values)  # witness is 1-Lipschitz
        nu = mc.pushforward_real(sp, lmap.values)
        m = sp.weights.sum()
        assert mc.partial_diameter_real(nu, m - 0.1) == br.lower

    def test_bracket_orders_lower_below_upper(self):
        rng = np.random.default_rng(76)
        for _ in range(15):
            sp = random_space(rng, int(rng.integers(2, 9)))
            kap = float(rng.uniform(0.02, 0.3))
            br = mc.obsdiam_real_bracket(sp, kap, effort=300, seed=4)
            assert br.lower <= br.upper

    def test_separation_witness_functions_are_in_the_candidate_pool(self):
        """The pool always contains d(.,A) for Sep witnesses A, so the bracket
        lower bound is at least the separation-based guarantee."""
        rng = np.random.default_rng(77)
        for _ in range(10):
            sp = random_space(rng, int(rng.integers(3, 9)))
            m = sp.weights.sum()
            kap = float(rng.uniform(0.05, m / 5))
            sep = mc.sep_exact(sp, [kap, kap])
            if not sep.feasible:
                continue
            br = mc.obsdiam_real_bracket(sp, kap / 2, effort=300, seed=5)
            assert br.lower >= sep.value - 1e-12


class TestObsdiamScreen:
    def test_square_cube_into_a_circle(self):
        cube2 = mc.generate(mc.FamilySpec("hamming_cube", 2))
        torus8 = mc.generate(mc.FamilySpec("discrete_torus", 8))
        br = mc.obsdiam_screen_estimate(cube2, torus8, 0.1, samples=32, seed=0)
        assert br.lower == 0.5 and br.upper == 0.5

    def test_sampled_maps_are_validated_and_lower_is_certified(self):
        rng = np.random.default_rng(78)
        sp = random_space(rng, 6)
        screen = random_space(rng, 4)
        br = mc.obsdiam_screen_estimate(sp, screen, 0.1, samples=16, seed=1)
        idx = np.asarray(br.witness["values"], dtype=int)
        mc.validate_lipschitz(sp, screen, idx)
        pm = mc.pushforward_screen(sp, screen, idx)
        m = sp.weights.sum()
        assert mc.partial_diameter_screen(pm, m - 0.1, force=True) == br.lower
        assert br.lower <= br.upper

    def test_identity_partial_diameter_can_exceed_two_group_separation(self):
        """Regression pinning why the upper bound is NOT min(diam, Sep(k/2,k/2)):
        on a 16-cycle the identity map's partial diameter at mass 3/4 is 8,
        strictly above Sep(1/8, 1/8) = 7."""
        z16 = mc.generate(mc.FamilySpec("discrete_torus", 16, normalized=False))
        pm = mc.pushforward_screen(z16, z16, np.arange(16))
        pd = mc.partial_diameter_screen(pm, 0.75, force=True)
        sep = mc.sep_exact(z16, [1 / 8, 1 / 8], budget=3**17)
        assert pd == 8.0 and sep.value == 7.0 and pd > sep.value

    def test_singleton_screen_collapses_to_zero(self):
        rng = np.random.default_rng(79)
        sp = random_space(rng, 5)
        singleton = mc.default_screen_roster()[2][1]
        br = mc.obsdiam_screen_estimate(sp, singleton, 0.1, samples=4, seed=0)
        assert br.lower == 0.0 and br.upper == 0.0


class TestCandidates:
    def test_candidates_are_all_one_lipschitz(self):
        rng = np.random.default_rng(80)
        for _ in range(8):
            sp = random_space(rng, int(rng.integers(2, 9)))
            for cand in mc.lipschitz_candidates(sp, 0.1, effort=250, seed=6):
                mc.validate_lipschitz(sp, None, cand)

    def test_pool_contains_every_singleton_distance_function(self):
        rng = np.random.default_rng(81)
        sp = random_space(rng, 6)
        cands = mc.lipschitz_candidates(sp, 0.1, effort=250, seed=6)
        for a in range(6):
            want = sp.dist[:, a]
            assert any(np.array_equal(c, want) for c in cands)

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ccqid.channel import depolarizing_channel, noiseless_channel
from ccqid.codes import (
    DeterministicCode,
    StochasticEncoder,
    avg_error,
    id_acceptance,
    id_error_first,
    id_error_second,
    max_error,
    verify_simultaneous,
)
from ccqid.construction import (
    SubsetFamily,
    build_subset_family,
    construct_sim_id_code,
    derandomize_literal,
    derandomize_pointmass,
    family_overlap,
    growth_check,
    id_rate_pair,
    lober_bound_log2,
    lober_condition,
    mix_encoders,
    singleton_family,
    transmission_rate_pair,
)
from ccqid.errors import ParameterError, UndefinedQuantityError
from ccqid.harness import generate_random_code
from ccqid.linalg import Povm

from conftest import dense_id_errors, projector_code, to_stochastic


def brute_force_max_family(M, w, cap):
    """Largest family of w-subsets of range(M) with pairwise intersections <= cap (exhaustive backtracking)."""
    cands = [frozenset(c) for c in itertools.combinations(range(M), w)]
    best = 0

    def extend(chosen, start):
        nonlocal best
        best = max(best, len(chosen))
        for i in range(start, len(cands)):
            if len(chosen) + len(cands) - i <= best:
                return
            if all(len(cands[i] & c) <= cap for c in chosen):
                extend(chosen + [cands[i]], i + 1)

    extend([], 0)
    return best


class TestLoberCondition:
    def test_half_is_infeasible(self):
        assert lober_condition(0.5, 0.9) is False

    def test_direct_evaluation(self):
        assert lober_condition(0.1, 0.7) is True  # 0.7 * log2 9 = 2.219
        assert lober_condition(0.1, 0.6) is False  # 1.902

    @pytest.mark.parametrize("lam", [0.0, 1.0, 1.5, -0.1])
    def test_lambda_range(self, lam):
        with pytest.raises(ParameterError):
            lober_condition(lam, 0.5)

    def test_bound_log2(self):
        assert lober_bound_log2(8, 0.5) == 1.0
        assert lober_bound_log2(4, 0.5) == 0.0
        assert lober_bound_log2(1, 0.9) == 0.0


class TestSubsetFamily:
    def test_disjoint_pairs_of_four(self):
        fam = build_subset_family(4, 0.5, 0.4, target_count=100, seed=0)
        assert fam.subsets == ((0, 1), (2, 3))
        assert len(fam) == brute_force_max_family(4, 2, 0.8) == 2
        assert len(fam) >= 2 ** lober_bound_log2(4, 0.5)

    def test_all_triples_of_six(self):
        fam = build_subset_family(6, 0.5, 0.7, target_count=100, seed=0)
        assert len(fam) == math.comb(6, 3) == 20

    def test_singletons(self):
        fam = build_subset_family(2, 0.5, 0.1, target_count=10, seed=0)
        assert fam.subsets == ((0,), (1,))

    def test_target_caps_and_shortfall(self):
        fam = build_subset_family(6, 0.5, 0.7, target_count=5, seed=0)
        assert len(fam) == 5 and not fam.shortfall
        fam = build_subset_family(4, 0.5, 0.4, target_count=5, seed=0)
        assert len(fam) == 2 and fam.shortfall

    def test_infeasible_weight(self):
        with pytest.raises(ParameterError):
            build_subset_family(3, 0.2, 0.5, 4, 0)

    def test_invalid_family_rejected(self):
        with pytest.raises(ParameterError):
            SubsetFamily(4, 2, 0.8, ((0, 1), (1, 2)))
        with pytest.raises(ParameterError):
            SubsetFamily(4, 2, 2.0, ((0, 1), (0, 1)))
        with pytest.raises(ParameterError):
            SubsetFamily(4, 2, 2.0, ((0, 1, 2),))

    @pytest.mark.parametrize("M,lam,eps", [(5, 0.4, 0.5), (6, 0.34, 0.5), (6, 0.5, 0.34), (7, 0.3, 0.9)])
    def test_matches_brute_force_on_tiny_cases(self, M, lam, eps):
        w = math.floor(lam * M)
        fam = build_subset_family(M, lam, eps, 10**6, 0)
        best = brute_force_max_family(M, w, eps * w)
        assert len(fam) <= best
        # greedy result is maximal: nothing else fits
        chosen = set(fam.subsets)
        for s in itertools.combinations(range(M), w):
            if s not in chosen:
                assert any(len(set(s) & set(t)) > eps * w for t in chosen)

    def test_randomized_mode_deterministic_and_valid(self):
        a = build_subset_family(100, 0.15, 0.8, target_count=330, seed=7)
        b = build_subset_family(100, 0.15, 0.8, target_count=330, seed=7)
        assert a.mode == "randomized"
        assert a.subsets == b.subsets
        assert lober_condition(0.15, 0.8)
        assert len(a) >= math.ceil(2 ** lober_bound_log2(100, 0.15))
        assert a.max_intersection() <= 0.8 * 15

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 12), st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.integers(1, 50))
    def test_invariants_hold(self, M, lam, eps, target):
        w = math.floor(lam * M)
        if w < 1:
            return
        fam = build_subset_family(M, lam, eps, target, 0)
        assert 1 <= len(fam) <= target
        for a, b in itertools.combinations(fam.subsets, 2):
            assert len(set(a) & set(b)) <= eps * w
            assert a != b
        assert all(len(s) == w for s in fam.subsets)


class TestMixEncoders:
    def test_singleton(self):
        e = StochasticEncoder(1, 3, (((0,), 0.2), ((2,), 0.8)))
        assert mix_encoders([e], [0]) == e

    def test_two_point_masses(self):
        es = [StochasticEncoder.point_mass((0,), 2), StochasticEncoder.point_mass((1,), 2)]
        assert mix_encoders(es, [0, 1]).as_dict() == {(0,): 0.5, (1,): 0.5}

    def test_hand_mixture(self):
        p1 = StochasticEncoder(1, 2, (((0,), 0.6), ((1,), 0.4)))
        p2 = StochasticEncoder.point_mass((1,), 2)
        mixed = mix_encoders([p1, p2], [0, 1]).as_dict()
        assert mixed[(0,)] == pytest.approx(0.3)
        assert mixed[(1,)] == pytest.approx(0.7)

    def test_empty(self):
        with pytest.raises(ParameterError):
            mix_encoders([StochasticEncoder.point_mass((0,), 2)], [])


class TestConstructSimId:
    def test_singletons_reproduce_code(self):
        code = to_stochastic(projector_code(2, 2, 1))
        sim = construct_sim_id_code(code, singleton_family(2), singleton_family(2))
        for a, b in zip(sim.id_code.effects, code.decoder):
            np.testing.assert_array_equal(a, b)
        assert sim.id_code.encoders_x == code.encoders_x
        assert verify_simultaneous(sim).decomposition_deviation == 0.0

    def test_noiseless_disjoint_families(self):
        code = to_stochastic(projector_code(4, 4, 1))
        fam = build_subset_family(4, 0.5, 0.4, 10, 0)
        sim = construct_sim_id_code(code, fam, fam)
        ch = noiseless_channel(4, 4)
        assert sim.id_code.M == sim.id_code.N == 2
        assert id_error_first(sim.id_code, ch).value <= 1e-12
        assert id_error_second(sim.id_code, ch).value <= 1e-12

    def test_depolarizing_srm_bounds(self):
        ch = depolarizing_channel(0.2, 4, 4).block(1)
        code = generate_random_code(ch, 4, 4, seed=2)
        fam = build_subset_family(4, 0.5, 0.6, 10, 0)  # cap 1.2: pairs may share one element
        sim = construct_sim_id_code(code, fam, fam)
        e = max_error(code, ch).value
        e1 = id_error_first(sim.id_code, ch).value
        e2 = id_error_second(sim.id_code, ch).value
        oracle_e1, oracle_e2 = dense_id_errors(sim.id_code, ch)
        assert e1 == pytest.approx(oracle_e1, abs=1e-12)
        assert e2 == pytest.approx(oracle_e2, abs=1e-12)
        assert e1 <= e + 1e-9
        assert e2 <= family_overlap(fam, fam) + 3 * e + 1e-9

    def test_ground_size_mismatch(self):
        code = to_stochastic(projector_code(2, 2, 1))
        with pytest.raises(ParameterError):
            construct_sim_id_code(code, singleton_family(3), singleton_family(2))

    def test_noiseless_counting_oracle(self):
        # every word pair is a codeword pair, so acceptance is pure set counting
        code = to_stochastic(projector_code(2, 2, 3))
        ch = noiseless_channel(2, 2).block(3)
        fa = build_subset_family(8, 0.375, 0.67, 6, 0)
        fb = build_subset_family(8, 0.25, 0.5, 5, 0)
        sim = construct_sim_id_code(code, fa, fb)
        acc = id_acceptance(sim.id_code, ch)
        for m, A in enumerate(fa.subsets):
            for n, B in enumerate(fb.subsets):
                for a, A2 in enumerate(fa.subsets):
                    for b, B2 in enumerate(fb.subsets):
                        count = len(set(A) & set(A2)) * len(set(B) & set(B2))
                        assert acc[m, n, a, b] == pytest.approx(count / (len(A) * len(B)), abs=1e-12)
        assert id_error_second(sim.id_code, ch).value == pytest.approx(family_overlap(fa, fb), abs=1e-12)


class TestFamilyOverlap:
    def test_disjoint(self):
        fam = build_subset_family(4, 0.5, 0.4, 10, 0)
        assert family_overlap(fam, fam) == 0.0

    def test_one_shared_element(self):
        fa = SubsetFamily(3, 2, 1.0, ((0, 1), (1, 2)))
        fb = singleton_family(1)
        assert family_overlap(fa, fb) == pytest.approx(0.5)

    def test_single_pair(self):
        assert family_overlap(singleton_family(1), singleton_family(1)) == 0.0


def two_by_two_deterministic(decoder):
    return DeterministicCode(1, 2, 2, [(0,), (1,)], [(0,), (1,)], decoder)


class TestDerandomize:
    def test_single_message(self):
        code = DeterministicCode(1, 2, 2, [(1,)], [(0,)], Povm([np.eye(4)]))
        ch = depolarizing_channel(0.3, 2, 2)
        lit = derandomize_literal(code)
        assert max_error(lit, ch).value == pytest.approx(max_error(code, ch).value)
        assert max_error(lit, ch).value == pytest.approx(avg_error(code, ch).value)

    def test_literal_noiseless(self):
        code = projector_code(2, 2, 1)
        ch = noiseless_channel(2, 2)
        lit = derandomize_literal(code)
        assert max_error(lit, ch).value == pytest.approx(0.75, abs=1e-12)
        assert avg_error(lit, ch).value == pytest.approx(0.75, abs=1e-12)
        assert avg_error(code, ch).value == pytest.approx(0.0, abs=1e-12)
        assert all(e.as_dict() == {(0,): 0.5, (1,): 0.5} for e in lit.encoders_x)

    def test_pointmass_noiseless(self):
        assert max_error(derandomize_pointmass(projector_code(2, 2, 1)), noiseless_channel(2, 2)).value <= 1e-12

    def test_pointmass_zero_effects(self):
        z = np.zeros((4, 4))
        code = two_by_two_deterministic(Povm([np.eye(4), z, z, z]))
        pm = derandomize_pointmass(code)
        ch = noiseless_channel(2, 2)
        assert max_error(pm, ch).value == pytest.approx(1.0)
        assert avg_error(pm, ch).value == pytest.approx(0.75)

    def test_pointmass_depolarizing(self):
        pm = derandomize_pointmass(projector_code(2, 2, 1))
        assert max_error(pm, depolarizing_channel(0.2, 2, 2)).value == pytest.approx(0.15, abs=1e-12)

    def test_duplicates_rejected(self):
        code = DeterministicCode(1, 2, 2, [(0,), (0,)], [(0,)], Povm([0.5 * np.eye(4)] * 2))
        with pytest.raises(ParameterError):
            derandomize_literal(code)
        with pytest.raises(ParameterError):
            derandomize_pointmass(code)


class TestRates:
    def test_id_rate_examples(self):
        assert id_rate_pair(2, 16, 16).r1 == 1.0
        r = id_rate_pair(1, 4, 2)
        assert (r.r1, r.r2) == (1.0, 0.0)
        assert id_rate_pair(3, 256, 2).r1 == pytest.approx(1.0)

    def test_id_rate_undefined(self):
        with pytest.raises(UndefinedQuantityError):
            id_rate_pair(1, 1, 4)

    def test_transmission_rate(self):
        r = transmission_rate_pair(2, 16, 4)
        assert (r.r1, r.r2) == (2.0, 1.0)

    def test_growth_examples(self):
        g = growth_check(4, 1.0, 0.5, 0.25, 0.0, 2.0)
        assert g.rate_bound_log2 == pytest.approx(-3.0)
        assert g.passed and g.rate_bound_met
        g = growth_check(1, 3.0, 0.0, 0.5, 1.0, 3.0)
        assert g.lemma_bound_log2 == 1.0 == lober_bound_log2(8, 0.5)
        assert g.passed
        assert not growth_check(1, 3.0, 0.0, 0.5, 0.0, 3.0).passed

    def test_growth_huge_sizes_in_log_domain(self):
        # M = 2^1002 and M' = 2^(2^1000): lam * M is far outside exact float range
        g = growth_check(100, 20.0, 0.0, 0.25, 2.0 ** 1000, 1002.0)
        assert g.precision_note
        assert g.passed
        assert not growth_check(100, 20.0, 0.0, 0.25, 2.0 ** 990, 1002.0).passed

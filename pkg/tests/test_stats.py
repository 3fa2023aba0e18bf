import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaffect.stats import (
    NoPairableValuesError,
    UndefinedKappaError,
    bh_fdr,
    cohen_kappa,
    fleiss_kappa,
    krippendorff_alpha,
    pearson_r,
    wilcoxon_rank_sum,
)
from oracles import (
    cohen_kappa_bruteforce,
    fleiss_kappa_bruteforce,
    krippendorff_alpha_bruteforce,
)


class TestCohenKappa:
    def test_perfect_agreement(self):
        assert cohen_kappa(list("HHL"), list("HHL")).statistic == 1.0

    def test_hand_computed_value(self):
        a = list("HHLLHL")
        b = list("HLLLHH")
        assert cohen_kappa(a, b).statistic == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_perfect_disagreement(self):
        assert cohen_kappa(list("HL"), list("LH")).statistic == pytest.approx(-1.0)

    def test_undefined_when_chance_is_one(self):
        with pytest.raises(UndefinedKappaError):
            cohen_kappa(list("HH"), list("HH"))

    def test_matches_bruteforce_on_random_vectors(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            n = rng.integers(4, 20)
            a = list(rng.choice(["H", "L", "M"], size=n))
            b = list(rng.choice(["H", "L", "M"], size=n))
            try:
                expect = cohen_kappa_bruteforce(a, b)
            except ZeroDivisionError:
                continue
            assert cohen_kappa(a, b).statistic == pytest.approx(expect, abs=1e-12)

    @given(st.permutations(range(8)))
    @settings(max_examples=30, deadline=None)
    def test_item_order_invariance(self, perm):
        rng = np.random.default_rng(3)
        a = list(rng.choice(["H", "L"], size=8))
        b = list(rng.choice(["H", "L"], size=8))
        if all(x == y for x, y in zip(a, b)):
            return
        base = cohen_kappa(a, b).statistic
        shuffled = cohen_kappa([a[i] for i in perm], [b[i] for i in perm]).statistic
        assert shuffled == pytest.approx(base, abs=1e-12)


class TestFleissKappa:
    def test_unanimity(self):
        assert fleiss_kappa([[3, 0], [0, 3], [3, 0]]).statistic == 1.0

    def test_two_item_perfect(self):
        assert fleiss_kappa([[2, 0], [0, 2]]).statistic == 1.0

    def test_two_item_maximal_disagreement(self):
        assert fleiss_kappa([[1, 1], [1, 1]]).statistic == pytest.approx(-1.0)

    def test_unequal_ratings_rejected(self):
        with pytest.raises(ValueError, match="unequal"):
            fleiss_kappa([[2, 1], [1, 1]])

    def test_matches_bruteforce(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            items, cats, n = rng.integers(2, 10), rng.integers(2, 4), int(rng.integers(2, 7))
            tallies = np.zeros((items, cats), dtype=int)
            for i in range(items):
                draws = rng.integers(0, cats, size=n)
                for d in draws:
                    tallies[i, d] += 1
            try:
                expect = fleiss_kappa_bruteforce(tallies.tolist())
            except ZeroDivisionError:
                continue
            assert fleiss_kappa(tallies).statistic == pytest.approx(expect, abs=1e-12)


class TestKrippendorffAlpha:
    def test_perfect_agreement(self):
        grid = np.tile(np.array([1.0, 2.0, 3.0, 1.0]), (3, 1))
        for metric in ("ordinal", "interval"):
            assert krippendorff_alpha(grid, metric).statistic == 1.0

    def test_interval_matches_bruteforce_small_case(self):
        grid = np.array([[1.0, 2.0], [2.0, 1.0]])
        expect = krippendorff_alpha_bruteforce(grid.tolist(), "interval")
        assert krippendorff_alpha(grid, "interval").statistic == pytest.approx(expect, abs=1e-12)

    def test_degenerate_denominator(self):
        grid = np.array([[2.0, np.nan], [2.0, 1.0]])
        with pytest.raises(NoPairableValuesError):
            krippendorff_alpha(grid, "interval")

    def test_missing_entries_allowed(self):
        grid = np.array([[1.0, 2.0, np.nan], [1.0, np.nan, 3.0], [np.nan, 2.0, 3.0]])
        a = krippendorff_alpha(grid, "interval").statistic
        expect = krippendorff_alpha_bruteforce(grid.tolist(), "interval")
        assert a == pytest.approx(expect, abs=1e-12)

    def test_matches_bruteforce_random(self):
        rng = np.random.default_rng(23)
        for metric in ("ordinal", "interval"):
            for _ in range(30):
                raters, items = rng.integers(2, 6), rng.integers(3, 10)
                grid = rng.integers(0, 4, size=(raters, items)).astype(float)
                grid[rng.random(grid.shape) < 0.15] = np.nan
                try:
                    expect = krippendorff_alpha_bruteforce(grid.tolist(), metric)
                except ValueError:
                    continue
                got = krippendorff_alpha(grid, metric).statistic
                assert got == pytest.approx(expect, abs=1e-10)

    def test_binary_data_metrics_coincide(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            grid = rng.integers(0, 2, size=(4, 9)).astype(float)
            try:
                a_ord = krippendorff_alpha(grid, "ordinal").statistic
                a_int = krippendorff_alpha(grid, "interval").statistic
            except NoPairableValuesError:
                continue
            assert a_ord == pytest.approx(a_int, abs=1e-12)

    def test_item_permutation_invariance(self):
        rng = np.random.default_rng(9)
        grid = rng.integers(0, 5, size=(4, 8)).astype(float)
        base = krippendorff_alpha(grid, "ordinal").statistic
        perm = rng.permutation(8)
        assert krippendorff_alpha(grid[:, perm], "ordinal").statistic == pytest.approx(base, abs=1e-12)


class TestPearson:
    def test_self_correlation(self):
        x = np.array([1.0, 2.0, 5.0, 3.0])
        assert pearson_r(x, x).statistic == pytest.approx(1.0)

    def test_sign_flip(self):
        x = np.array([1.0, 2.0, 5.0, 3.0])
        assert pearson_r(x, -x).statistic == pytest.approx(-1.0)

    def test_hand_value(self):
        r = pearson_r([1, 2, 3, 4], [2, 1, 4, 3])
        assert r.statistic == pytest.approx(0.6, abs=1e-12)

    def test_zero_variance_rejected(self):
        with pytest.raises(ValueError, match="variance"):
            pearson_r([1, 1, 1], [1, 2, 3])

    def test_p_value_behaviour(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=200)
        strongly = pearson_r(x, x + 0.1 * rng.normal(size=200))
        assert strongly.p_value < 1e-10
        unrelated = pearson_r(x, rng.normal(size=200))
        assert unrelated.p_value > 0.01


class TestWilcoxon:
    def test_exact_extreme(self):
        res = wilcoxon_rank_sum([1, 2, 3], [4, 5, 6])
        assert res.p_value == pytest.approx(0.1, abs=1e-12)

    def test_identical_samples(self):
        res = wilcoxon_rank_sum([1, 2, 3, 4], [1, 2, 3, 4])
        assert res.p_value >= 0.99

    def test_large_shift_significant(self):
        rng = np.random.default_rng(2)
        x = rng.normal(0.0, 1.0, size=200)
        y = rng.normal(1.0, 1.0, size=200)
        assert wilcoxon_rank_sum(x, y).p_value < 0.001

    def test_exact_close_to_normal_when_balanced(self):
        rng = np.random.default_rng(4)
        for _ in range(5):
            x = rng.normal(0.0, 1.0, size=10)
            y = rng.normal(0.4, 1.0, size=10)
            p_exact = wilcoxon_rank_sum(x, y, method="exact").p_value
            p_norm = wilcoxon_rank_sum(x, y, method="normal").p_value
            assert abs(p_exact - p_norm) < 0.05

    def test_midrank_ties(self):
        # pooled [1,1,2,2]; x holds one of each tie group -> W = 1.5+3.5
        res = wilcoxon_rank_sum([1, 2], [1, 2])
        assert res.statistic == pytest.approx(5.0)
        assert res.p_value == 1.0


class TestBhFdr:
    def test_step_up_example(self):
        mask = bh_fdr([0.01, 0.02, 0.04, 0.8], 0.05)
        assert list(mask) == [True, True, False, False]

    def test_all_ones_reject_none(self):
        assert not bh_fdr([1.0, 1.0, 1.0], 0.05).any()

    def test_all_zeros_reject_all(self):
        assert bh_fdr([0.0, 0.0, 0.0], 0.05).all()

    def test_monotone_in_q(self):
        rng = np.random.default_rng(6)
        p = rng.random(40)
        small = bh_fdr(p, 0.01)
        large = bh_fdr(p, 0.2)
        assert np.all(large[small])  # superset


class TestAgreementRangeProperty:
    def test_statistics_bounded(self):
        rng = np.random.default_rng(13)
        for _ in range(30):
            a = list(rng.choice(["H", "L"], size=10))
            b = list(rng.choice(["H", "L"], size=10))
            try:
                k = cohen_kappa(a, b).statistic
            except UndefinedKappaError:
                continue
            assert -1.0 - 1e-12 <= k <= 1.0 + 1e-12

    def test_category_relabeling_invariance(self):
        rng = np.random.default_rng(17)
        a = list(rng.choice(["H", "L"], size=12))
        b = list(rng.choice(["H", "L"], size=12))
        swap = {"H": "L", "L": "H"}
        base = cohen_kappa(a, b).statistic
        relabeled = cohen_kappa([swap[v] for v in a], [swap[v] for v in b]).statistic
        assert relabeled == pytest.approx(base, abs=1e-12)

import numpy as np
import pytest
from fractions import Fraction
from hypothesis import given, settings
from hypothesis import strategies as st

from scenery_lab.localization import (
    ACCEPT_DEN,
    ACCEPT_NUM,
    ACCEPT_THRESHOLD,
    NoFirstCrossing,
    RATE_DIFFERENT,
    RATE_SAME,
    StoppingTimes,
    decide,
    estimate_opposite,
    sample_structural_words,
    straightness_experiment,
    tau_times,
    word_dot,
)
from scenery_lab.rng import make_generator
from scenery_lab.walks import NNPath, gen_walk

# Path crossing (0, 3) out, back, and out again slowly; the middle return
# is accepted, the slow third crossing rejected.
T_FIX = NNPath(0, [0, 1, 2, 3, 2, 1, 0, 1, 2, 1, 2, 3])


class TestWordDot:
    def test_counts_shared_ones(self):
        assert word_dot([1, 0, 1, 1], [1, 1, 0, 1]) == 2

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            word_dot([1, 0], [1])


class TestDecide:
    def test_threshold_is_exact(self):
        assert ACCEPT_THRESHOLD == Fraction(189, 512)
        n = ACCEPT_DEN
        wa = np.ones(n, dtype=np.uint8)
        at_threshold = np.zeros(n, dtype=np.uint8)
        at_threshold[:ACCEPT_NUM] = 1
        just_over = np.zeros(n, dtype=np.uint8)
        just_over[: ACCEPT_NUM + 1] = 1
        assert not decide(wa, at_threshold)  # dot == cn rejects
        assert decide(wa, just_over)

    def test_rates_bracket_threshold(self):
        assert RATE_DIFFERENT < ACCEPT_THRESHOLD < RATE_SAME
        assert RATE_SAME == Fraction(27, 64)
        assert RATE_DIFFERENT == Fraction(81, 256)

    def test_single_bit(self):
        assert decide([1], [1])
        assert not decide([1], [0])


class TestStoppingTimes:
    def test_order_validated(self):
        with pytest.raises(ValueError):
            StoppingTimes(1, (5, 3), (1, 2))
        with pytest.raises(ValueError):
            StoppingTimes(1, (3,), (1, 2))

    def test_fixture(self):
        st_ = tau_times(T_FIX, 1, 10)
        assert st_.times == (3, 3)
        assert st_.crossing_index == (1, 2)

    def test_max_count(self):
        st_ = tau_times(T_FIX, 1, 1)
        assert st_.times == (3,)

    def test_no_crossing_raises(self):
        with pytest.raises(NoFirstCrossing):
            tau_times(NNPath(0, [0, 1, 0, 1]), 1, 5)

    def test_first_crossing_always_accepted(self):
        for seed in range(8):
            w = gen_walk(seed, 5000)
            try:
                st_ = tau_times(w, 1, 100)
            except NoFirstCrossing:
                continue
            assert st_.crossing_index[0] == 1

    def test_times_non_decreasing_on_random_walks(self):
        for seed in range(8):
            w = gen_walk(seed + 50, 20_000)
            try:
                st_ = tau_times(w, 2, 50)
            except NoFirstCrossing:
                continue
            assert all(a <= b for a, b in zip(st_.times, st_.times[1:]))


class TestEstimateOpposite:
    def test_fixture(self):
        est = estimate_opposite(T_FIX, 1)
        assert est.found
        assert (est.crossing.t1, est.crossing.t2) == (6, 11)
        assert est.index == 3
        assert est.word.tolist() == [0]

    def test_not_found_when_all_accepted(self):
        p = NNPath(0, [0, 1, 2, 3, 2, 1, 0])
        assert not estimate_opposite(p, 1).found

    def test_horizon_cuts_late_crossings(self):
        assert not estimate_opposite(T_FIX, 1, horizon=10).found

    def test_predecessor_must_be_negative(self):
        # The slow rejected crossing here is the return leg itself, so its
        # predecessor is the positive first crossing: pattern not matched.
        p = NNPath(0, [0, 1, 2, 3, 2, 3, 2, 1, 2, 1, 0])
        assert not estimate_opposite(p, 1).found


class TestStructuralWords:
    def test_shapes_and_range(self):
        gen = make_generator(1)
        wa, wb = sample_structural_words(gen, 64, True)
        assert wa.shape == (64,) and wb.shape == (64,)
        assert set(np.unique(np.concatenate([wa, wb]))) <= {0, 1}

    def test_marginal_rate(self):
        gen = make_generator(2)
        tot = 0
        reps = 300
        for _ in range(reps):
            wa, _ = sample_structural_words(gen, 64, True)
            tot += int(wa.sum())
        rate = tot / (64 * reps)
        expected = 9 / 16
        assert abs(rate - expected) < 0.02

    def test_same_hypothesis_correlates(self):
        gen = make_generator(3)
        n = 400
        dots_same = []
        dots_diff = []
        for _ in range(200):
            wa, wb = sample_structural_words(gen, n, True)
            dots_same.append(word_dot(wa, wb))
            wa, wb = sample_structural_words(gen, n, False)
            dots_diff.append(word_dot(wa, wb))
        assert abs(np.mean(dots_same) / n - 27 / 64) < 0.02
        assert abs(np.mean(dots_diff) / n - 81 / 256) < 0.02


class TestStraightness:
    def test_requires_positive_count(self):
        with pytest.raises(ValueError):
            straightness_experiment(1, 0)

    def test_small_run_matches_law(self):
        res = straightness_experiment(5, 20_000)
        assert res["count"] == 20_000
        assert abs(res["fraction"] - 0.75) < 0.02
        assert res["ci99"][0] < 0.75 < res["ci99"][1]
        assert sum(res["durations"]) == 20_000
        # Duration 3 + 2k has probability (3/4)(1/4)^k.
        assert res["expected"][0] == 0.75
        assert res["expected"][1] == 0.75 * 0.25
        assert abs(res["durations"][0] / res["count"] - 0.75) < 0.02

    def test_deterministic_in_seed(self):
        a = straightness_experiment(9, 2000)
        b = straightness_experiment(9, 2000)
        assert a == b


@given(st.integers(1, 60), st.integers(0, 2**32))
@settings(max_examples=60, deadline=None)
def test_decide_symmetric(n, seed):
    gen = make_generator(seed)
    wa = gen.integers(0, 2, n, dtype=np.uint8)
    wb = gen.integers(0, 2, n, dtype=np.uint8)
    assert decide(wa, wb) == decide(wb, wa)
    assert decide(wa, wa) == (ACCEPT_DEN * int(wa.sum()) > ACCEPT_NUM * n)

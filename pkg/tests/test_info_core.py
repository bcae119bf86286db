import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustcx.errors import DomainError, StructuralError
from robustcx.info_core import (
    INF,
    FiniteDistribution,
    PayoffTable,
    StructuredModel,
    log_sum_exp,
    relative_entropy,
    shannon_entropy,
)


def simplex(n_min=2, n_max=6):
    return st.lists(st.floats(0.0, 1.0), min_size=n_min, max_size=n_max).filter(lambda xs: sum(xs) > 1e-3).map(
        lambda xs: np.array(xs) / sum(xs)
    )


class TestFiniteDistribution:
    def test_renormalizes_small_drift(self):
        d = FiniteDistribution([0.5, 0.5 + 5e-10])
        assert abs(d.probs.sum() - 1) <= 1e-12

    def test_rejects_far_from_simplex(self):
        with pytest.raises(DomainError):
            FiniteDistribution([0.5, 0.6])

    def test_rejects_negative(self):
        with pytest.raises(DomainError):
            FiniteDistribution([1.1, -0.1])

    def test_labels_and_lookup(self):
        d = FiniteDistribution([0.25, 0.75], ("g", "b"))
        assert d["b"] == 0.75 and d[0] == 0.25
        assert d.support == (0, 1) and d.full_support
        with pytest.raises(StructuralError):
            d.index("z")

    def test_point_mass_and_uniform(self):
        assert FiniteDistribution.point_mass(1, 3).support == (1,)
        assert np.allclose(FiniteDistribution.uniform(("a", "b")).probs, 0.5)

    def test_immutable(self):
        d = FiniteDistribution([0.5, 0.5])
        with pytest.raises(ValueError):
            d.probs[0] = 1.0


class TestEntropy:
    def test_uniform_two_points(self):
        assert shannon_entropy([0.5, 0.5]) == pytest.approx(math.log(2), abs=1e-15)

    def test_point_mass(self):
        assert shannon_entropy([1.0, 0.0, 0.0]) == 0.0

    def test_derived_value(self):
        assert shannon_entropy([0.7, 0.3]) == pytest.approx(0.6108643020548935, abs=1e-12)

    @given(simplex())
    def test_nonnegative_and_bounded(self, p):
        h = shannon_entropy(p)
        assert -1e-15 <= h <= math.log(p.size) + 1e-12


class TestRelativeEntropy:
    def test_identical(self):
        assert relative_entropy([0.3, 0.7], [0.3, 0.7]) == 0.0

    def test_point_mass_vs_uniform(self):
        assert relative_entropy([1.0, 0.0], [0.5, 0.5]) == pytest.approx(math.log(2), abs=1e-15)

    def test_counterexample_value(self):
        assert relative_entropy([0.5, 0.5], [9 / 11, 2 / 11]) == pytest.approx(0.5 * math.log(121 / 72), abs=1e-14)

    def test_infinite_sentinel(self):
        r = relative_entropy([0.5, 0.5], [1.0, 0.0])
        assert r is INF and math.isinf(r)

    def test_label_mismatch(self):
        with pytest.raises(StructuralError):
            relative_entropy(FiniteDistribution([0.5, 0.5], ("a", "b")), FiniteDistribution([0.5, 0.5], ("a", "c")))

    @settings(max_examples=200)
    @given(simplex(3, 3), simplex(3, 3))
    def test_gibbs_inequality(self, p, q):
        if np.any(q == 0):
            return
        r = relative_entropy(p, q)
        assert r >= 0
        if np.max(np.abs(p - q)) > 1e-6:
            assert r > 0


class TestLogSumExp:
    def test_log_two(self):
        assert log_sum_exp([0, 0], [1, 1]) == pytest.approx(math.log(2), abs=1e-15)

    def test_shift(self):
        assert log_sum_exp([1000, 0], [1, 1]) == pytest.approx(1000.0, abs=1e-12)

    def test_example_normalizer(self):
        assert log_sum_exp([-1, 0], [0.7, 0.3]) == pytest.approx(math.log(0.7 * math.exp(-1) + 0.3), abs=1e-15)
        assert log_sum_exp([-1, 0], [0.7, 0.3]) == pytest.approx(-0.5843, abs=1e-4)

    def test_zero_weights(self):
        with pytest.raises(DomainError):
            log_sum_exp([1, 2], [0, 0])

    @given(st.lists(st.floats(-50, 50), min_size=1, max_size=8))
    def test_agrees_with_naive(self, xs):
        naive = math.log(sum(math.exp(x) for x in xs))
        assert log_sum_exp(xs) == pytest.approx(naive, rel=1e-13, abs=1e-13)


def test_payoff_and_model_shapes():
    with pytest.raises(DomainError):
        PayoffTable([[1.0, math.inf]])
    m = StructuredModel([[0.5, 0.5], [1.0, 0.0]], ("r", "s"))
    assert not m.full_support
    assert m.row("r").full_support

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import capacity_oracle

from robustcx.capacity import (
    capacity_profile,
    check_assumption_C1,
    complexity_functional,
    solve_budget,
)
from robustcx.errors import DomainError, RegimeError
from robustcx.info_core import PayoffTable, StructuredModel, shannon_entropy

ACTS, OUTS = ("r", "s"), ("g", "b")
PAY = PayoffTable([[1.0, 0.0], [0.4, 0.4]], ACTS, OUTS)
QH = StructuredModel([[0.7, 0.3], [0.5, 0.5]], ACTS, OUTS, "qH")
QL = StructuredModel([[0.3, 0.7], [0.5, 0.5]], ACTS, OUTS, "qL")


def three_outcome(seed):
    rng = np.random.default_rng(seed)
    pay = PayoffTable([rng.uniform(-1, 1, 3), np.zeros(3)], ("a", "b"))
    models = [StructuredModel(np.vstack([rng.dirichlet(np.ones(3) * 2), np.full(3, 1 / 3)]), ("a", "b")) for _ in range(2)]
    pi = rng.dirichlet(np.ones(2) * 3)
    return pay, models, pi


class TestFunctional:
    def test_constant_uniform(self):
        pay = PayoffTable([[0.5, 0.5, 0.5]])
        m = StructuredModel([[1 / 3] * 3])
        assert complexity_functional(pay, [m], 1.0, 0.3, 0, [1.0]) == pytest.approx(math.log(3), abs=1e-14)

    def test_limits(self):
        pi = [0.4, 0.6]
        lo = complexity_functional(PAY, [QH, QL], 1.0, -1e6, "r", pi)
        assert abs(lo - (shannon_entropy(pi) + math.log(2))) < 1e-3
        hi = complexity_functional(PAY, [QH, QL], 1.0, 1 - 1e-6, "r", pi)
        assert abs(hi - shannon_entropy(pi)) < 1e-2

    def test_regime(self):
        with pytest.raises(RegimeError):
            complexity_functional(PAY, [QH], 1.0, 1.0, "r", [1.0])

    def test_profile_decreasing(self):
        prof = capacity_profile(PAY, [QH, QL], 1.0, "r", [0.5, 0.5], np.arange(-2, 0.99, 0.01))
        assert prof.strictly_decreasing
        assert prof.limits == (pytest.approx(math.log(2) * 2), pytest.approx(math.log(2)))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_monotone_when_C1_holds(self, seed):
        pay, models, pi = three_outcome(seed)
        lam = 1.0
        if not check_assumption_C1(pay, models, lam, "a").holds:
            return
        # Near 1/lam the distortion entropy underflows to 0, so stop where it is resolvable.
        prof = capacity_profile(pay, models, lam, "a", pi, np.arange(-3, 0.9, 0.01))
        assert prof.strictly_decreasing


class TestAssumptionC1:
    def test_constant_uniform_fails(self):
        rep = check_assumption_C1(PAY, [QH], 1.0, "s")
        assert rep.nondegenerate == (False,)

    def test_running_example_risky_holds(self):
        assert check_assumption_C1(PAY, [QH, QL], 1.0, "r").holds

    def test_knife_edge(self):
        q = np.array([0.2, 0.3, 0.5])
        pay = PayoffTable([np.log(q) / 0.5 + 4.0])
        rep = check_assumption_C1(pay, [StructuredModel([q])], 0.5, 0)
        assert rep.nondegenerate == (False,)


class TestBudget:
    def test_slack(self):
        pi = [0.5, 0.5]
        sol = solve_budget(PAY, [QH, QL], 1.0, "r", pi, shannon_entropy(pi) + math.log(2) - 1e-9)
        assert sol.mu_B == 0.0 and not sol.binding

    def test_round_trip_running_example(self):
        b = complexity_functional(PAY, [QH], 1.0, 0.2, "r", [1.0])
        sol = solve_budget(PAY, [QH], 1.0, "r", [1.0], b)
        assert sol.mu_B == pytest.approx(0.2, abs=1e-8) and sol.binding

    def test_tight_budget(self):
        sol = solve_budget(PAY, [QH], 1.0, "r", [1.0], 1e-3)
        assert sol.mu_B > 1.0 - 0.05

    def test_domain(self):
        with pytest.raises(DomainError):
            solve_budget(PAY, [QH], 1.0, "r", [1.0], math.log(2) + 0.1)
        with pytest.raises(DomainError):
            solve_budget(PAY, [QH], 1.0, "r", [1.0], 0.0)

    @pytest.mark.parametrize("k", range(1, 10))
    def test_inverse_consistency(self, k):
        lam = 1.3
        pi = [0.3, 0.7]
        mu = k * 0.1 / lam
        b = complexity_functional(PAY, [QH, QL], lam, mu, "r", pi)
        assert solve_budget(PAY, [QH, QL], lam, "r", pi, b).mu_B == pytest.approx(mu, abs=1e-8)

    @pytest.mark.parametrize("seed", [0, 1])
    def test_matches_brute_force(self, seed):
        pay, models, pi = three_outcome(seed)
        c0 = complexity_functional(pay, models, 1.0, 0.0, "a", pi)
        b = c0 - 0.15
        sol = solve_budget(pay, models, 1.0, "a", pi, b)
        ref = capacity_oracle(pay.u[0], models[0].q[0], models[1].q[0], pi, 1.0, b)
        assert abs(sol.objective - ref) < 1e-4

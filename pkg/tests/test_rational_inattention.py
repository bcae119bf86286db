import math
from dataclasses import replace

import numpy as np
import pytest
from oracles import ri_grid_oracle

from robustcx.errors import DomainError, NonConvergenceError, PreconditionError
from robustcx.info_core import FiniteDistribution, shannon_entropy
from robustcx.presets import ri_2x2, ri_identity
from robustcx.rational_inattention import (
    RIProblem,
    log_odds_check,
    mutual_information,
    objective,
    probability_neglect_profile,
    shannon_cost,
    solve_saddle,
    state_utilities,
    stationarity_residual,
    worst_case_states,
)
from robustcx.robust_static import escort_transform


def problem(d):
    return RIProblem.from_dict(d)


class TestCost:
    def test_state_independent(self):
        psi = np.array([[0.3, 0.7], [0.3, 0.7]])
        assert shannon_cost(psi, [0.5, 0.5], 2.0) == 0.0

    def test_fully_revealing(self):
        assert shannon_cost(np.eye(2), [0.5, 0.5], 0.7) == pytest.approx(0.7 * math.log(2), abs=1e-15)

    def test_derived_value(self):
        psi = np.array([[0.9, 0.1], [0.1, 0.9]])
        assert mutual_information(psi, [0.5, 0.5]) == pytest.approx(0.3681, abs=1e-4)
        assert mutual_information(psi, [0.5, 0.5]) == pytest.approx(math.log(2) - shannon_entropy([0.9, 0.1]), abs=1e-15)

    def test_rejects_bad_rows(self):
        with pytest.raises(DomainError):
            shannon_cost([[0.5, 0.6], [0.5, 0.5]], [0.5, 0.5], 1.0)


class TestWorstCaseStates:
    def test_constant_utility_gives_escort(self):
        p = RIProblem([[2.0, 2.0]], [0.2, 0.8], 1.0, 1.0, 0.4)
        m = worst_case_states([[1.0], [1.0]], p)
        assert np.allclose(m.probs, escort_transform([0.2, 0.8], p.params.beta).escort.probs, atol=1e-14)
        pu = RIProblem([[2.0, 2.0]], [0.5, 0.5], 1.0, 1.0, 0.4)
        assert np.allclose(worst_case_states([[1.0], [1.0]], pu).probs, 0.5)

    def test_running_example(self):
        p = RIProblem([[1.0, 0.0]], [0.7, 0.3], 1.0, 1.0, 0.0)
        assert worst_case_states([[1.0], [1.0]], p)[0] == pytest.approx(0.462, abs=1e-3)

    def test_concentrates_on_argmin(self):
        p = RIProblem([[1.0, 0.2, 0.6]], [1 / 3] * 3, 1.0, 1.0, 1 - 1e-4)
        m = worst_case_states(np.ones((3, 1)), p)
        assert m[1] > 0.999

    def test_entropy_falls_with_mu_at_fixed_psi(self):
        base = problem(ri_2x2())
        psi = np.array([[0.8, 0.2], [0.3, 0.7]])
        ents = [shannon_entropy(worst_case_states(psi, base.with_mu(m))) for m in np.linspace(0, 0.99, 50)]
        assert np.all(np.diff(ents) <= 1e-15)


class TestSaddle:
    def test_single_action(self):
        p = RIProblem([[1.0, 0.0]], [0.6, 0.4], 0.5, 1.0, 0.3)
        s = solve_saddle(p)
        assert np.allclose(s.psi, 1.0)
        assert shannon_cost(s.psi, p.g, p.xi) == 0.0
        ref = escort_transform([0.6, 0.4], p.params.beta)
        w = np.exp(-np.array([1.0, 0.0]) / p.params.kappa) * ref.escort.probs
        assert np.allclose(s.m_star.probs, w / w.sum(), atol=1e-14)

    def test_symmetric_problem(self):
        p = RIProblem([[1.0, 0.0], [0.0, 1.0]], [0.5, 0.5], 0.5, 1.0, 0.0)
        s = solve_saddle(p)
        assert np.allclose(s.psi_bar.probs, 0.5, atol=1e-9)

    @pytest.mark.parametrize("maker", [ri_identity, ri_2x2])
    def test_grid_oracle(self, maker):
        d = maker(0.3)
        s = solve_saddle(problem(d))
        ref, _ = ri_grid_oracle(d["v"], d["g"], d["xi"], d["lam"], d["mu"])
        assert abs(s.objective - ref) < 1e-3
        assert s.objective >= ref - 1e-9

    def test_solution_invariants(self):
        p = problem(ri_2x2(0.6))
        s = solve_saddle(p)
        assert np.max(np.abs(s.psi_bar.probs - p.g.probs @ s.psi)) < 1e-12
        assert np.max(np.abs(s.scales * s.m_star.probs - p.xi * p.g.probs)) < 1e-12
        assert np.allclose(s.m_star.probs, worst_case_states(s.psi, p).probs, atol=1e-15)
        assert s.stationarity < 1e-8 and stationarity_residual(s.psi, p) == s.stationarity
        assert s.objective == objective(s.psi, p)

    def test_non_convergence(self):
        with pytest.raises(NonConvergenceError) as err:
            solve_saddle(problem(ri_2x2()), max_iters=3)
        assert err.value.iterations == 3 and err.value.residual > 0

    def test_damping_domain(self):
        with pytest.raises(DomainError):
            solve_saddle(problem(ri_2x2()), damping=0.0)


class TestLogOdds:
    def test_same_action(self):
        p = problem(ri_2x2())
        s = solve_saddle(p)
        assert log_odds_check(s, p, 1, 1, 0) == 0.0

    def test_converged(self):
        p = problem(ri_2x2())
        s = solve_saddle(p)
        assert max(log_odds_check(s, p, a, b, w) for a in range(2) for b in range(2) for w in range(2)) < 1e-8

    def test_negative_control(self):
        p = problem(ri_2x2())
        s = solve_saddle(p)
        bent = s.psi.copy()
        bent[0] = [0.5, 0.5]
        assert log_odds_check(replace(s, psi=bent), p, 0, 1, 0) > 1e-3

    def test_zero_marginal(self):
        p = problem(ri_2x2())
        s = solve_saddle(p)
        dead = replace(s, psi_bar=FiniteDistribution([1.0, 0.0]))
        with pytest.raises(PreconditionError):
            log_odds_check(dead, p, 0, 1, 0)


class TestNeglect:
    def test_profile_near_corner(self):
        p = problem(ri_2x2())
        prof = probability_neglect_profile(p, [0.0, 0.3, 0.6, 0.9, 0.999])
        assert prof.m_star[-1, prof.focal_state] > 0.99
        assert prof.entropy_decreasing
        assert prof.other_scales_growing

    def test_uniform_prior_selects_argmin(self):
        d = dict(ri_2x2(), g=[0.5, 0.5])
        p = problem(d)
        prof = probability_neglect_profile(p, [0.5, 0.99])
        u = np.einsum("wa,aw->w", prof.solutions[-1].psi, p.v)
        assert prof.focal_state == int(np.argmin(u))

    def test_baseline_dispersion_bound(self):
        p = problem(ri_2x2(0.0))
        s = solve_saddle(p)
        u = state_utilities(s.psi, p)
        ratio = p.g.probs / s.m_star.probs
        spread = ratio.max() / ratio.min()
        assert spread <= math.exp(np.ptp(u) / p.params.kappa) * (1 + 1e-12)

    def test_grid_domain(self):
        with pytest.raises(DomainError):
            probability_neglect_profile(problem(ri_2x2()), [0.5, 1.0])

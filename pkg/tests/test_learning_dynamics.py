import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import product_llr

from robustcx.errors import AssumptionViolation, DomainError
from robustcx.info_core import (
    FiniteDistribution,
    PayoffTable,
    StructuredModel,
    relative_entropy,
)
from robustcx.learning_dynamics import (
    Environment,
    History,
    cycle_diagnostic,
    initial_state,
    llr,
    llr_from_counts,
    objective_payoff,
    simulate,
    simulate_batch,
    spawn_seeds,
    state_value,
    step,
    update_posterior,
    write_summary_json,
    write_trajectory_csv,
)
from robustcx.presets import correct_spec_env, cycle_env, running_example


def running_env(mu_bar=0.0, **kw):
    ex = running_example()
    return Environment(ex["payoffs"], ex["true_dgp"], ex["models"], FiniteDistribution.uniform(("qH", "qL")),
                       mu_bar=mu_bar, **kw)


class TestEnvironment:
    def test_assumption_two(self):
        with pytest.raises(DomainError):
            running_env(mu_bar=1.0, lambda_cap=1.0)

    def test_full_support_required(self):
        ex = running_example()
        bad = StructuredModel([[1.0, 0.0], [0.5, 0.5]], ("r", "s"), ("g", "b"))
        with pytest.raises(AssumptionViolation):
            Environment(ex["payoffs"], ex["true_dgp"], (bad,), FiniteDistribution([1.0]))


class TestPosterior:
    def test_bayes_step(self):
        ex = running_example()
        pi = update_posterior(FiniteDistribution.uniform(("qH", "qL")), 0, 0, ex["models"])
        assert pi["qH"] == pytest.approx(0.7, abs=1e-15)

    def test_degenerate_prior_unchanged(self):
        ex = running_example()
        pi = update_posterior(FiniteDistribution([1.0, 0.0], ("qH", "qL")), 0, 1, ex["models"])
        assert pi.probs.tolist() == [1.0, 0.0]

    def test_uninformative_outcome(self):
        ex = running_example()
        pi0 = FiniteDistribution([0.3, 0.7], ("qH", "qL"))
        assert np.allclose(update_posterior(pi0, 1, 0, ex["models"]).probs, pi0.probs, atol=1e-15)


class TestLLR:
    def test_empty(self):
        with pytest.raises(DomainError):
            llr(History.empty(2, 2), running_example()["models"])

    def test_perfect_fit(self):
        q = StructuredModel([[0.5, 0.5]], ("r",))
        h = History.empty(1, 2).append(0, 0).append(0, 1)
        assert llr(h, [q]) == pytest.approx(0.0, abs=1e-15)

    def test_single_step(self):
        models = running_example()["models"]
        h = History.empty(2, 2).append(0, 1)
        assert llr(h, models) == pytest.approx(-math.log(0.7), abs=1e-15)

    def test_ten_steps(self):
        q = StructuredModel([[0.7, 0.3]], ("r",))
        h = History.empty(1, 2)
        for y in [0, 1] * 5:
            h = h.append(0, y)
        assert llr(h, [q]) == pytest.approx(10 * relative_entropy([0.5, 0.5], [0.7, 0.3]), abs=1e-10)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 1000))
    def test_matches_product_likelihood(self, seed, t):
        rng = np.random.default_rng(seed)
        models = [rng.dirichlet(np.ones(3), size=2) for _ in range(3)]
        acts, outs = rng.integers(0, 2, t), rng.integers(0, 3, t)
        counts = np.zeros((2, 3), dtype=np.int64)
        np.add.at(counts, (acts, outs), 1)
        sm = [StructuredModel(m) for m in models]
        assert llr_from_counts(counts, sm) == pytest.approx(product_llr(acts, outs, models), abs=1e-10 * max(1, t))
        assert llr_from_counts(counts, sm) >= 0


class TestSimulation:
    def test_horizon_one(self):
        tr = simulate(running_env(), 1, seed=3)
        assert tr.horizon == 1 and tr.snapshot_t.tolist() == [1]

    def test_deterministic(self):
        env = running_env()
        for seed in range(10):
            a, b = simulate(env, 300, seed), simulate(env, 300, seed)
            assert np.array_equal(a.actions, b.actions) and np.array_equal(a.outcomes, b.outcomes)
            assert np.array_equal(a.lambdas, b.lambdas)

    def test_regression_first_steps(self):
        # Both arms have true success probability 1/2, so outcomes follow the raw uniforms.
        tr = simulate(running_env(), 12, seed=0)
        draws = np.random.Generator(np.random.PCG64(0)).random(12)
        assert tr.outcomes.tolist() == [0 if x < 0.5 else 1 for x in draws]
        assert tr.actions.tolist() == [0, 1, 1, 1, 1, 0, 1, 1, 1, 1, 1, 1]

    def test_step_matches_simulate(self):
        env = cycle_env(0.3)
        rng = np.random.Generator(np.random.PCG64(5))
        state, hist = initial_state(env), History.empty(2, 4)
        for _ in range(200):
            state, hist, _, _ = step(env, state, hist, rng)
        tr = simulate(env, 200, seed=5)
        assert [a for a, _ in hist.steps] == tr.actions.tolist()
        assert state.lambda_t == pytest.approx(tr.final_state.lambda_t, abs=1e-12)

    def test_invariants_along_path(self):
        env = cycle_env(0.4)
        tr = simulate(env, 3000, seed=1)
        assert np.all(tr.lambdas >= 0) and np.all(tr.lambdas <= env.lambda_cap)
        assert np.array_equal(tr.mus, 0.4 * tr.lambdas)
        kappa = 1 / tr.lambdas[tr.lambdas > 0] - 0.4 * tr.lambdas[tr.lambdas > 0]
        assert np.all(kappa > 0)

    def test_kernel_values_match_library(self):
        env = cycle_env(0.3)
        tr = simulate(env, 500, seed=2)
        lib = [state_value(env, tr.final_state, a) for a in env.payoffs.actions]
        assert np.allclose(lib, tr.final_values, atol=1e-12)

    def test_deterministic_dgp(self):
        pay = PayoffTable([[1.0, 0.0], [0.5, 0.5]], ("r", "s"))
        q = StructuredModel([[0.6, 0.4], [0.5, 0.5]], ("r", "s"), name="q")
        p = StructuredModel([[1 - 1e-12, 1e-12], [0.5, 0.5]], ("r", "s"))
        env = Environment(pay, p, (q,), FiniteDistribution([1.0], ("q",)))
        a, b = simulate(env, 50, seed=0), simulate(env, 50, seed=99)
        assert np.array_equal(a.actions, b.actions)

    def test_batch_and_spawn(self):
        env = running_env()
        seeds = spawn_seeds(7, 3)
        serial = simulate_batch(env, 200, seeds)
        again = simulate_batch(env, 200, spawn_seeds(7, 3))
        assert all(np.array_equal(x.actions, y.actions) for x, y in zip(serial, again))
        assert not np.array_equal(serial[0].outcomes, serial[1].outcomes)

    def test_parallel_batch_matches_serial(self):
        env = running_env()
        seeds = [0, 1]
        par = simulate_batch(env, 100, seeds, workers=2)
        ser = simulate_batch(env, 100, seeds)
        assert all(np.array_equal(x.actions, y.actions) for x, y in zip(par, ser))

    def test_martingale_sanity(self):
        env = correct_spec_env(mu_bar=0.5)
        finals = [simulate(env, 10_000, seed=s).final_state.posterior["qH"] for s in range(50)]
        assert np.mean(finals) >= 0.5


class TestDiagnostics:
    def _fake(self, actions):
        env = running_env()
        tr = simulate(env, len(actions), seed=0)
        object.__setattr__(tr, "actions", np.array(actions))
        return tr

    def test_converged(self):
        d = cycle_diagnostic(self._fake([1] * 400), 100)
        assert d.verdict == "Converged(s)" and d.converged_action == "s"

    def test_alternation(self):
        d = cycle_diagnostic(self._fake([0, 1] * 200), 100)
        assert d.verdict == "Mixing" and d.switch_count == 399

    def test_undetermined(self):
        d = cycle_diagnostic(self._fake([0] * 360 + [1] * 40), 100)
        assert d.verdict == "Undetermined"

    def test_window_too_large(self):
        with pytest.raises(DomainError):
            cycle_diagnostic(self._fake([0] * 100), 30)


class TestWelfare:
    def test_objective_payoff(self):
        env = running_env()
        assert objective_payoff(FiniteDistribution([0.0, 1.0]), env) == pytest.approx(0.4)
        assert objective_payoff(FiniteDistribution([1.0, 0.0]), env) == pytest.approx(0.5)
        assert objective_payoff(FiniteDistribution([0.5, 0.5]), env) == pytest.approx(0.45)


def test_exports(tmp_path):
    tr = simulate(running_env(), 250, seed=0, snapshot_every=50)
    write_trajectory_csv(tr, tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0].startswith("t,action,outcome,lambda_t,mu_t,posterior_qH,posterior_qL,freq_r,freq_s")
    assert len(lines) == 6
    write_summary_json(tr, tmp_path / "s.json")
    assert '"final_choice"' in (tmp_path / "s.json").read_text()


"""Finite-horizon simulation of misspecification learning with complexity aversion.

Each period the agent plays a myopic best reply under the criterion with
``lam_t`` and ``mu_t = mu_bar * lam_t``, observes an outcome drawn from the true
DGP, updates a Bayesian posterior over structured models, and resets

    lam_{t+1} = clip(LLR_t / (c (t+1)), 0, lambda_cap)

where ``LLR_t`` is the log-likelihood ratio of the unrestricted fit (per-action
empirical frequencies) against the best structured model.

Randomness comes from numpy's PCG64 generator. One uniform draw per step picks the
outcome by inverse CDF, so a seed pins the whole trajectory.
"""

from __future__ import annotations

import bisect
import csv
import json
import math
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import AssumptionViolation, DomainError, StructuralError
from .info_core import FiniteDistribution, PayoffTable, StructuredModel
from .robust_static import TIE_TOL, RobustParams, posterior_value


@dataclass(frozen=True, eq=False)
class Environment:
    payoffs: PayoffTable
    true_dgp: StructuredModel
    models: tuple
    prior: FiniteDistribution
    c: float = 1.0
    mu_bar: float = 0.0
    lambda_cap: float = 1.0
    lambda0: float = 0.0
    name: str = ""

    def __post_init__(self):
        models = tuple(self.models)
        object.__setattr__(self, "models", models)
        shape = self.payoffs.u.shape
        for m in (self.true_dgp, *models):
            if m.q.shape != shape:
                raise StructuralError(f"model shape {m.q.shape} does not match payoffs {shape}")
        for m in models:
            if not m.full_support:
                raise AssumptionViolation("every structured model needs full support")
        if not self.true_dgp.full_support:
            raise AssumptionViolation("the true DGP needs full support for a finite LLR")
        if len(self.prior) != len(models):
            raise StructuralError("prior length must match the number of models")
        if self.c <= 0:
            raise DomainError("c must be positive")
        if self.mu_bar < 0:
            raise DomainError("mu_bar must be non-negative")
        if self.lambda_cap <= 0:
            raise DomainError("lambda_cap must be positive")
        if self.mu_bar * self.lambda_cap**2 >= 1:
            raise DomainError(
                f"need mu_bar * lambda_cap^2 < 1, got {self.mu_bar * self.lambda_cap**2:.6g}"
            )
        if not 0 <= self.lambda0 <= self.lambda_cap:
            raise DomainError("lambda0 must lie in [0, lambda_cap]")

    @property
    def n_actions(self) -> int:
        return self.payoffs.u.shape[0]

    @property
    def n_outcomes(self) -> int:
        return self.payoffs.u.shape[1]

    def with_mu_bar(self, mu_bar: float) -> Environment:
        return Environment(
            self.payoffs, self.true_dgp, self.models, self.prior, self.c, mu_bar,
            self.lambda_cap, self.lambda0, self.name,
        )

    def static_game(self):
        from .equilibrium import StaticGame

        return StaticGame(self.payoffs, self.models, self.true_dgp)


@dataclass(frozen=True, eq=False)
class History:
    steps: tuple
    counts: np.ndarray

    @classmethod
    def empty(cls, n_actions: int, n_outcomes: int) -> History:
        return cls((), np.zeros((n_actions, n_outcomes), dtype=np.int64))

    @property
    def t(self) -> int:
        return len(self.steps)

    def append(self, action: int, outcome: int) -> History:
        counts = self.counts.copy()
        counts[action, outcome] += 1
        return History(self.steps + ((action, outcome),), counts)


@dataclass(frozen=True, eq=False)
class AgentState:
    posterior: FiniteDistribution
    lambda_t: float
    mu_t: float
    freq: FiniteDistribution


def update_posterior(pi: FiniteDistribution, action: int, outcome: int, Q: Sequence[StructuredModel]) -> FiniteDistribution:
    """Bayes update of a posterior over models, done in log space."""
    if len(Q) != len(pi):
        raise StructuralError("posterior and model list differ in length")
    with np.errstate(divide="ignore"):
        logp = np.log(pi.probs) + np.log([m.q[action, outcome] for m in Q])
    logp -= np.max(logp)
    w = np.exp(logp)
    return FiniteDistribution(w / w.sum(), pi.labels)


def _xlogx(k):
    return k * math.log(k) if k > 0 else 0.0


def llr_from_counts(counts: np.ndarray, Q: Sequence[StructuredModel]) -> float:
    """LLR of the unrestricted per-action frequencies against the best structured model."""
    counts = np.asarray(counts)
    if counts.sum() == 0:
        raise DomainError("LLR is undefined on an empty history")
    n_a = counts.sum(axis=1)
    unrestricted = sum(_xlogx(k) for k in counts.ravel()) - sum(_xlogx(k) for k in n_a)
    with np.errstate(divide="ignore", invalid="ignore"):
        restricted = max(float(np.sum(np.where(counts > 0, counts * np.log(m.q), 0.0))) for m in Q)
    return max(unrestricted - restricted, 0.0)


def llr(history: History, Q: Sequence[StructuredModel]) -> float:
    return llr_from_counts(history.counts, Q)


class _Kernel:
    """Mutable per-run state kept in Python lists for speed."""

    def __init__(self, env: Environment):
        self.env = env
        nA, nY = env.n_actions, env.n_outcomes
        self.nA, self.nY = nA, nY
        self.u = [list(map(float, env.payoffs.u[a])) for a in range(nA)]
        self.logq = [[list(map(float, np.log(m.q[a]))) for a in range(nA)] for m in env.models]
        self.eu = [[float(m.q[a] @ env.payoffs.u[a]) for a in range(nA)] for m in env.models]
        self.cum = []
        for a in range(nA):
            c = list(np.cumsum(env.true_dgp.q[a]))
            c[-1] = 1.0
            self.cum.append(c)
        with np.errstate(divide="ignore"):
            self.logpost = list(map(float, np.log(env.prior.probs)))
        self.counts = [[0] * nY for _ in range(nA)]
        self.n_a = [0] * nA
        self.unrestricted = 0.0
        self.loglik = [0.0] * len(env.models)
        self.t = 0
        self.lam = float(env.lambda0)
        self.clip_count = 0

    def posterior(self) -> list:
        mx = max(self.logpost)
        w = [math.exp(x - mx) for x in self.logpost]
        s = sum(w)
        return [x / s for x in w]

    def values(self) -> list:
        lam = self.lam
        post = self.posterior()
        out = []
        if lam == 0.0:
            # Bayes limit with mu = mu_bar * 0 = 0.
            for a in range(self.nA):
                out.append(sum(p * self.eu[m][a] for m, p in enumerate(post) if p > 0))
            return out
        mu = self.env.mu_bar * lam
        kappa = 1.0 / lam - mu
        beta = 1.0 / (lam * kappa)
        for a in range(self.nA):
            ua = self.u[a]
            total = 0.0
            for m, p in enumerate(post):
                if p <= 0:
                    continue
                lq = self.logq[m][a]
                xs = [beta * l - x / kappa for x, l in zip(ua, lq)]
                mx = max(xs)
                total += p * (-kappa * (mx + math.log(sum(math.exp(x - mx) for x in xs))))
            out.append(total)
        return out

    def choose(self) -> tuple:
        vals = self.values()
        top = max(vals)
        for a, v in enumerate(vals):
            if v >= top - TIE_TOL:
                return a, vals
        raise AssertionError("unreachable")

    def advance(self, uniform: float) -> tuple:
        a, _ = self.choose()
        lam_used = self.lam
        y = bisect.bisect_right(self.cum[a], uniform)
        if y >= self.nY:
            y = self.nY - 1
        row = self.counts[a]
        k, n = row[y], self.n_a[a]
        self.unrestricted += (_xlogx(k + 1) - _xlogx(k)) - (_xlogx(n + 1) - _xlogx(n))
        row[y] = k + 1
        self.n_a[a] = n + 1
        lp = self.logpost
        for m in range(len(lp)):
            lq = self.logq[m][a][y]
            self.loglik[m] += lq
            lp[m] += lq
        mx = max(lp)
        norm = mx + math.log(sum(math.exp(x - mx) for x in lp))
        for m in range(len(lp)):
            lp[m] -= norm
        self.t += 1
        ratio = (self.unrestricted - max(self.loglik)) / (self.env.c * self.t)
        if ratio > self.env.lambda_cap:
            self.clip_count += 1
            ratio = self.env.lambda_cap
        self.lam = max(0.0, ratio)
        return a, y, lam_used

    def state(self) -> AgentState:
        env = self.env
        post = FiniteDistribution(self.posterior(), env.prior.labels)
        if self.t:
            freq = FiniteDistribution(np.array(self.n_a, float) / self.t, env.payoffs.actions)
        else:
            freq = FiniteDistribution.uniform(env.payoffs.actions)
        return AgentState(post, self.lam, env.mu_bar * self.lam, freq)


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def initial_state(env: Environment) -> AgentState:
    return _Kernel(env).state()


def step(env: Environment, state: AgentState, history: History, rng) -> tuple:
    """One period of the myopic policy. Returns ``(state, history, action, outcome)``.

    ``rng`` is a numpy Generator; exactly one uniform draw is consumed.
    """
    k = _Kernel(env)
    k.logpost = list(map(float, np.log(np.maximum(state.posterior.probs, 1e-300))))
    k.lam = float(state.lambda_t)
    for a, y in history.steps:
        k.counts[a][y] += 1
    k.n_a = [sum(r) for r in k.counts]
    k.t = history.t
    k.unrestricted = sum(_xlogx(c) for r in k.counts for c in r) - sum(_xlogx(n) for n in k.n_a)
    k.loglik = [
        float(sum(k.logq[m][a][y] * k.counts[a][y] for a in range(k.nA) for y in range(k.nY)))
        for m in range(len(env.models))
    ]
    a, y, _ = k.advance(float(_rng(rng).random()))
    return k.state(), history.append(a, y), a, y


@dataclass(frozen=True, eq=False)
class Trajectory:
    env: Environment
    seed: object
    actions: np.ndarray
    outcomes: np.ndarray
    lambdas: np.ndarray
    snapshot_t: np.ndarray
    snapshot_posterior: np.ndarray
    final_state: AgentState
    final_values: tuple
    final_choice: int
    clip_count: int

    @property
    def horizon(self) -> int:
        return int(self.actions.size)

    @property
    def mus(self) -> np.ndarray:
        return self.env.mu_bar * self.lambdas

    @property
    def final_alpha(self) -> FiniteDistribution:
        return self.final_state.freq

    @property
    def payoffs_realized(self) -> np.ndarray:
        return self.env.payoffs.u[self.actions, self.outcomes]

    @property
    def realized_mean_payoff(self) -> float:
        return float(self.payoffs_realized.mean())

    def summary(self) -> dict:
        env = self.env
        return {
            "horizon": self.horizon,
            "seed": self.seed if isinstance(self.seed, int) else str(self.seed),
            "mu_bar": env.mu_bar,
            "final_lambda": self.final_state.lambda_t,
            "final_mu": self.final_state.mu_t,
            "final_posterior": self.final_state.posterior.as_dict(),
            "final_alpha": self.final_alpha.as_dict(),
            "final_values": dict(zip(env.payoffs.actions, self.final_values)),
            "final_choice": env.payoffs.actions[self.final_choice],
            "realized_mean_payoff": self.realized_mean_payoff,
            "lambda_clip_count": self.clip_count,
        }


def simulate(env: Environment, horizon: int, seed=0, snapshot_every: int = 100) -> Trajectory:
    """Run the myopic policy for ``horizon`` steps. Deterministic given ``seed``."""
    if horizon < 1:
        raise DomainError("horizon must be at least 1")
    if snapshot_every < 1:
        raise DomainError("snapshot cadence must be at least 1")
    k = _Kernel(env)
    draws = _rng(seed).random(horizon).tolist()
    actions = np.empty(horizon, dtype=np.int16)
    outcomes = np.empty(horizon, dtype=np.int16)
    lambdas = np.empty(horizon)
    snap_t, snap_p = [], []
    advance = k.advance
    for t in range(horizon):
        a, y, lam = advance(draws[t])
        actions[t] = a
        outcomes[t] = y
        lambdas[t] = lam
        if (t + 1) % snapshot_every == 0 or t + 1 == horizon:
            snap_t.append(t + 1)
            snap_p.append(k.posterior())
    choice, vals = k.choose()
    return Trajectory(
        env, seed, actions, outcomes, lambdas, np.array(snap_t), np.array(snap_p),
        k.state(), tuple(vals), choice, k.clip_count,
    )


def _simulate_job(args):
    env, horizon, seed, every = args
    return simulate(env, horizon, seed, every)


def spawn_seeds(seed: int, n: int) -> list:
    """Independent per-run streams derived from one root seed."""
    return np.random.SeedSequence(seed).spawn(n)


def simulate_batch(env: Environment, horizon: int, seeds: Sequence, snapshot_every: int = 100, workers: int = 1) -> list:
    """Independent runs over ``seeds``; with ``workers > 1`` runs go to a process pool."""
    jobs = [(env, horizon, s, snapshot_every) for s in seeds]
    if workers <= 1:
        return [_simulate_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_simulate_job, jobs))


@dataclass(frozen=True, eq=False)
class CycleDiagnostic:
    switch_count: int
    window: int
    window_freqs: np.ndarray
    verdict: str
    converged_action: str | None


def cycle_diagnostic(traj: Trajectory, window: int) -> CycleDiagnostic:
    """Classify the trailing four windows as converged, mixing or undetermined."""
    T = traj.horizon
    if window < 1 or 4 * window > T:
        raise DomainError(f"window must satisfy 1 <= window <= horizon/4, got {window} for T={T}")
    acts = traj.actions
    nA = traj.env.n_actions
    freqs = np.array([
        np.bincount(acts[T - (4 - k) * window: T - (3 - k) * window], minlength=nA) / window
        for k in range(4)
    ])
    switches = int(np.count_nonzero(acts[1:] != acts[:-1]))
    labels = traj.env.payoffs.actions
    for a in range(nA):
        if np.all(freqs[:, a] > 0.99):
            return CycleDiagnostic(switches, window, freqs, f"Converged({labels[a]})", labels[a])
    if np.all(freqs > 0.05):
        return CycleDiagnostic(switches, window, freqs, "Mixing", None)
    return CycleDiagnostic(switches, window, freqs, "Undetermined", None)


def objective_payoff(alpha: FiniteDistribution, env: Environment) -> float:
    """``U*(alpha) = sum_a alpha(a) E_{p*_a}[u(a, .)]``."""
    a = alpha.probs if isinstance(alpha, FiniteDistribution) else np.asarray(alpha, float)
    if a.size != env.n_actions:
        raise StructuralError("alpha has the wrong number of actions")
    per_action = np.einsum("ay,ay->a", env.true_dgp.q, env.payoffs.u)
    return float(a @ per_action)


def state_value(env: Environment, state: AgentState, action) -> float:
    """``V_{lam, mu}(a; pi)`` at an agent state, through the static library."""
    return posterior_value(env.payoffs, action, env.models, state.posterior, RobustParams(state.lambda_t, state.mu_t))


def write_trajectory_csv(traj: Trajectory, path, every: int | None = None) -> None:
    """Rows at the snapshot cadence: t, action, outcome, lambda_t, mu_t, posterior, running freq."""
    env = traj.env
    every = every or (int(traj.snapshot_t[1] - traj.snapshot_t[0]) if traj.snapshot_t.size > 1 else traj.horizon)
    labels = env.payoffs.actions
    running = np.cumsum(np.eye(env.n_actions, dtype=np.int64)[traj.actions], axis=0)
    post_at = {int(t): p for t, p in zip(traj.snapshot_t, traj.snapshot_posterior)}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["t", "action", "outcome", "lambda_t", "mu_t"]
            + [f"posterior_{m}" for m in env.prior.labels]
            + [f"freq_{a}" for a in labels]
        )
        for t in range(every, traj.horizon + 1, every):
            i = t - 1
            post = post_at.get(t)
            post_cells = [repr(float(x)) for x in post] if post is not None else [""] * len(env.models)
            freq = running[i] / t
            w.writerow(
                [t, labels[traj.actions[i]], env.payoffs.outcomes[traj.outcomes[i]],
                 repr(float(traj.lambdas[i])), repr(float(traj.mus[i]))]
                + post_cells + [repr(float(x)) for x in freq]
            )


def write_summary_json(traj: Trajectory, path, extra: dict | None = None) -> None:
    payload = traj.summary()
    if extra:
        payload.update(extra)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)

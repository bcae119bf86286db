"""Mixed c-robust equilibria, value differences, entropy gaps and elimination thresholds.

A triple ``(alpha, eta, tau)`` is an equilibrium when ``eta`` is supported on the best-fit
models ``Q(alpha)`` (minimizers of ``D(q; alpha) = sum_a alpha(a) R(p*_a || q_a)``),
``tau = min_q D(q; alpha) / c``, and every action played under ``alpha`` is a best reply
at ``(lam, mu) = (tau, mu_bar * tau)`` with belief ``eta``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, Infeasible, PreconditionError, StructuralError
from .info_core import (
    FiniteDistribution,
    PayoffTable,
    StructuredModel,
    relative_entropy,
)
from .robust_static import RobustParams, evaluate, posterior_entropy, posterior_value

FIT_TOL = 1e-10
BR_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class StaticGame:
    """Payoffs, structured models and the true DGP, without any dynamics."""

    payoffs: PayoffTable
    models: tuple
    true_dgp: StructuredModel

    def __post_init__(self):
        object.__setattr__(self, "models", tuple(self.models))
        shape = self.payoffs.u.shape
        for m in (self.true_dgp, *self.models):
            if m.q.shape != shape:
                raise StructuralError("model and payoff shapes differ")

    @property
    def n_actions(self) -> int:
        return self.payoffs.u.shape[0]

    @property
    def model_labels(self) -> tuple:
        return tuple(m.name or f"q{i}" for i, m in enumerate(self.models))

    def belief(self, weights) -> FiniteDistribution:
        return FiniteDistribution(weights, self.model_labels)


@dataclass(frozen=True, eq=False)
class EquilibriumTriple:
    alpha: FiniteDistribution
    eta: FiniteDistribution
    tau: float
    residuals: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "alpha": self.alpha.as_dict(),
            "eta": self.eta.as_dict(),
            "tau": self.tau,
            "residuals": dict(self.residuals),
        }


def _alpha(game: StaticGame, alpha) -> np.ndarray:
    a = alpha.probs if isinstance(alpha, FiniteDistribution) else np.asarray(alpha, float)
    if a.size != game.n_actions:
        raise StructuralError("alpha has the wrong number of actions")
    return a


def model_misfit(q: StructuredModel, alpha, p_star: StructuredModel) -> float:
    """``D(q; alpha) = sum_a alpha(a) R(p*_a || q_a)``."""
    a = alpha.probs if isinstance(alpha, FiniteDistribution) else np.asarray(alpha, float)
    return float(sum(w * relative_entropy(p_star.q[i], q.q[i]) for i, w in enumerate(a) if w > 0))


def best_fit_set(game: StaticGame, alpha, tol: float = FIT_TOL) -> tuple[np.ndarray, tuple]:
    a = _alpha(game, alpha)
    d = np.array([model_misfit(m, a, game.true_dgp) for m in game.models])
    return d, tuple(int(i) for i in np.flatnonzero(d <= d.min() + tol))


def _params(lam: float, mubar: float) -> RobustParams:
    return RobustParams(lam, mubar * lam)


def _check_admissible(lam: float, mubar: float):
    if lam < 0:
        raise DomainError("lam must be non-negative")
    if mubar * lam**2 >= 1:
        raise DomainError(f"need mu_bar * lam^2 < 1, got {mubar * lam**2:.6g}")


def value_difference(game: StaticGame, lam: float, mubar: float, pi, pair) -> float:
    """``Delta_ij = V(i; pi) - V(j; pi)`` at ``(lam, mu_bar * lam)``."""
    _check_admissible(lam, mubar)
    i, j = (game.payoffs.action_index(x) for x in pair)
    if i == j:
        return 0.0
    p = _params(lam, mubar)
    return posterior_value(game.payoffs, i, game.models, pi, p) - posterior_value(game.payoffs, j, game.models, pi, p)


def entropy_gap(game: StaticGame, lam: float, mubar: float, pi, pair) -> float:
    """``H_i - H_j`` with ``H_a = sum_q pi(q) H(p_hat(a; q))``."""
    _check_admissible(lam, mubar)
    i, j = (game.payoffs.action_index(x) for x in pair)
    if i == j:
        return 0.0
    p = _params(lam, mubar)
    return posterior_entropy(game.payoffs, i, game.models, pi, p) - posterior_entropy(game.payoffs, j, game.models, pi, p)


def _values(game: StaticGame, tau: float, mubar: float, eta: np.ndarray) -> np.ndarray:
    p = _params(tau, mubar)
    return np.array([posterior_value(game.payoffs, a, game.models, eta, p) for a in range(game.n_actions)])


def verify_triple(game: StaticGame, c: float, mubar: float, alpha, eta, tau: float) -> dict:
    """Recompute the three equilibrium conditions from scratch; returns their slacks."""
    a = _alpha(game, alpha)
    e = eta.probs if isinstance(eta, FiniteDistribution) else np.asarray(eta, float)
    d = []
    for m in game.models:
        total = 0.0
        for ai, w in enumerate(a):
            if w > 0:
                pa, qa = game.true_dgp.q[ai], m.q[ai]
                total += w * float(np.sum(pa * np.log(pa / qa)))
        d.append(total)
    d = np.array(d)
    fit = float(max((d[k] - d.min() for k in np.flatnonzero(e > 0)), default=0.0))
    tau_res = float(abs(tau - d.min() / c))
    vals = _values(game, tau, mubar, e)
    played = np.flatnonzero(a > 0)
    br = float(max(vals.max() - vals[played].min(), 0.0))
    return {"fit": fit, "tau": tau_res, "best_reply": br}


def _passes(res: dict, tol: float = BR_TOL) -> bool:
    return res["fit"] <= FIT_TOL and res["tau"] <= tol and res["best_reply"] <= tol


def _eta_candidates(support: tuple, n_models: int) -> list:
    cands = []
    u = np.zeros(n_models)
    u[list(support)] = 1.0 / len(support)
    cands.append(u)
    if len(support) > 1:
        for k in support:
            v = np.zeros(n_models)
            v[k] = 1.0
            cands.append(v)
    return cands


def _simplex_grid(n_actions: int, steps: int):
    for comp in itertools.combinations(range(steps + n_actions - 1), n_actions - 1):
        parts, prev = [], -1
        for c in comp:
            parts.append(c - prev - 1)
            prev = c
        parts.append(steps + n_actions - 2 - prev)
        yield np.array(parts, float) / steps


def find_mixed_equilibria(game: StaticGame, c: float, mubar: float, resolution: float = 1 / 200) -> list:
    """Grid search over alpha with bisection refinement along simplex edges.

    Candidate beliefs are the uniform distribution over ``Q(alpha)`` and its vertices,
    plus a bisection over ``eta`` when exactly two models tie. Interior points of faces
    with three or more played actions are only found when they lie on the grid.
    """
    if game.n_actions < 2:
        raise DomainError("need at least two actions")
    if not 0 < resolution <= 0.1:
        raise DomainError("resolution must lie in (0, 0.1]")
    if c <= 0:
        raise DomainError("c must be positive")
    steps = int(round(1.0 / resolution))
    nA, nQ = game.n_actions, len(game.models)
    found: list = []

    def keep(alpha, eta, tau):
        res = verify_triple(game, c, mubar, alpha, eta, tau)
        if not _passes(res):
            return
        for t in found:
            if np.max(np.abs(t.alpha.probs - alpha)) < 1e-9 and np.max(np.abs(t.eta.probs - eta)) < 1e-9:
                return
        found.append(EquilibriumTriple(
            FiniteDistribution(alpha, game.payoffs.actions), game.belief(eta), float(tau), res
        ))

    def state(alpha):
        d, supp = best_fit_set(game, alpha)
        return d.min() / c, supp

    for alpha in _simplex_grid(nA, steps):
        tau, supp = state(alpha)
        for eta in _eta_candidates(supp, nQ):
            keep(alpha, eta, tau)
        played = np.flatnonzero(alpha > 0)
        if len(supp) == 2 and len(played) == 2:
            i, j = played
            e0, e1 = np.zeros(nQ), np.zeros(nQ)
            e0[supp[0]], e1[supp[1]] = 1.0, 1.0

            def gap(x):
                v = _values(game, tau, mubar, (1 - x) * e0 + x * e1)
                return v[i] - v[j]

            g0, g1 = gap(0.0), gap(1.0)
            if g0 * g1 < 0:
                x = brentq(gap, 0.0, 1.0, xtol=1e-14)
                keep(alpha, (1 - x) * e0 + x * e1, tau)

    # Edge refinement: locate indifference points between grid nodes.
    xs = np.linspace(0.0, 1.0, steps + 1)
    for i, j in itertools.combinations(range(nA), 2):
        def alpha_at(x):
            a = np.zeros(nA)
            a[i], a[j] = x, 1.0 - x
            return a

        for rule in range(1 + nQ):
            def diff(x):
                a = alpha_at(x)
                tau, supp = state(a)
                if rule == 0:
                    eta = _eta_candidates(supp, nQ)[0]
                else:
                    if (rule - 1) not in supp:
                        return math.nan
                    eta = np.zeros(nQ)
                    eta[rule - 1] = 1.0
                v = _values(game, tau, mubar, eta)
                return v[i] - v[j]

            vals = np.array([diff(x) for x in xs])
            for k in range(steps):
                lo, hi = vals[k], vals[k + 1]
                if not (np.isfinite(lo) and np.isfinite(hi)) or lo * hi > 0 or lo == hi == 0:
                    continue
                try:
                    x = brentq(diff, xs[k], xs[k + 1], xtol=1e-15, rtol=1e-15)
                except ValueError:
                    continue
                a = alpha_at(x)
                tau, supp = state(a)
                eta = _eta_candidates(supp, nQ)[0] if rule == 0 else np.eye(nQ)[rule - 1]
                keep(a, eta, tau)
            if nQ == 1:
                break
    return found


def belief_threshold(game: StaticGame, lam: float, mubar: float, risky, safe, optimistic: int = 0) -> float:
    """Posterior weight on the optimistic model at which risky and safe are indifferent."""
    if len(game.models) != 2:
        raise StructuralError("belief threshold needs exactly two models")
    _check_admissible(lam, mubar)
    other = 1 - optimistic

    def delta(theta):
        w = np.zeros(2)
        w[optimistic], w[other] = theta, 1.0 - theta
        return value_difference(game, lam, mubar, w, (risky, safe))

    d0, d1 = delta(0.0), delta(1.0)
    if not d0 < 0 < d1:
        raise PreconditionError(f"sign condition fails: Delta(0)={d0!r}, Delta(1)={d1!r}")
    probe = np.linspace(0.0, 1.0, 11)
    vals = np.array([delta(t) for t in probe])
    if np.any(np.diff(vals) <= 0):
        raise PreconditionError("Delta is not increasing in the optimistic weight")
    lo, hi = 0.0, 1.0
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if delta(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _belief_grid(n_models: int, n: int) -> list:
    if n_models == 1:
        return [np.ones(1)]
    return list(_simplex_grid(n_models, max(n - 1, 1)))


@dataclass(frozen=True)
class EliminationReport:
    feasible: bool
    formula_threshold: float
    empirical_threshold: float
    entropy_gap_min: float
    max_delta_at_mubar0: float
    mubar0: float
    lambda_interval: tuple
    diagnostics: dict


def elimination_threshold(
    game: StaticGame, pair, lambda_interval, mubar0: float = 0.0,
    n_lambda: int = 21, n_pi: int = 11, n_mubar: int = 200,
) -> EliminationReport:
    """Threshold on ``mu_bar`` beyond which action ``i`` never beats ``j``.

    Proof-formula threshold ``mu_bar0 + M / (lam_lo H*)`` with ``H* = min (H_j - H_i)`` and
    ``M = max Delta_ij(., mu_bar0, .)`` over a ``(lam, pi)`` grid, together with the smallest
    grid ``mu_bar`` at which ``Delta_ij < 0`` everywhere on that grid.
    """
    i, j = (game.payoffs.action_index(x) for x in pair)
    lo, hi = map(float, lambda_interval)
    if not 0 < lo <= hi:
        raise DomainError("need 0 < lam_lo <= lam_hi")
    mu_cap = 1.0 / hi**2
    lams = np.linspace(lo, hi, n_lambda)
    pis = _belief_grid(len(game.models), n_pi)
    diag = {"grid_points": len(lams) * len(pis)}
    if i == j:
        raise Infeasible("identical actions have zero entropy gap", {"entropy_gap_min": 0.0})
    if mubar0 >= mu_cap:
        raise Infeasible("mu_bar0 is not admissible on the lambda interval", {"mu_cap": mu_cap})
    mus = np.linspace(mubar0, mu_cap, n_mubar, endpoint=False)
    gaps = [
        -entropy_gap(game, l, m, p, (i, j)) for m in mus for l in lams for p in pis
    ]
    h_star = float(min(gaps))
    big_m = float(max(value_difference(game, l, mubar0, p, (i, j)) for l in lams for p in pis))
    diag.update(entropy_gap_min=h_star, max_delta=big_m)
    if h_star <= 0:
        raise Infeasible("measured entropy gap is not positive", diag)
    if big_m <= 0:
        return EliminationReport(True, mubar0, mubar0, h_star, big_m, mubar0, (lo, hi), diag)
    formula = mubar0 + big_m / (lo * h_star)
    if not big_m < lo * h_star * (mu_cap - mubar0):
        raise Infeasible("threshold exceeds the admissible range", dict(diag, formula=formula))
    candidates = np.unique(np.append(mus, formula))
    empirical = math.nan
    for m in candidates:
        if all(value_difference(game, l, m, p, (i, j)) < 0 for l in lams for p in pis):
            empirical = float(m)
            break
    return EliminationReport(True, float(formula), empirical, h_star, big_m, mubar0, (lo, hi), diag)


@dataclass(frozen=True)
class CycleThreshold:
    mubar_star: float
    admissible: bool
    entropy_gap_min: float
    m_hat: float
    max_delta_at_mubar0: float
    epsilon: float
    mubar0: float
    lambda_interval: tuple


def cycle_elimination_threshold(
    game: StaticGame, risky, safe, lambda_interval, mubar0: float = 0.0,
    n_lambda: int = 41, n_pi: int = 11, n_mubar: int = 100,
) -> CycleThreshold:
    """Constructive threshold above which only the safe action survives in equilibrium.

    ``H*`` is the smallest safe-minus-risky entropy gap at grid points where risky weakly
    beats safe (all admissible ``mu_bar >= mu_bar0``), ``m = lam_lo H*``,
    ``M0 = max(Delta(., mu_bar0, .), 0)``, and the threshold is
    ``mu_bar0 + M0/m + eps`` with ``eps = (1/lam_hi^2 - mu_bar0 - M0/m)_+ / 2``.
    """
    r, s = (game.payoffs.action_index(x) for x in (risky, safe))
    lo, hi = map(float, lambda_interval)
    lams = np.linspace(lo, hi, n_lambda)
    pis = _belief_grid(len(game.models), n_pi)
    cond, uncond = math.inf, math.inf
    for l in lams:
        for m in np.linspace(mubar0, 1.0 / l**2, n_mubar, endpoint=False):
            for p in pis:
                g = -entropy_gap(game, l, m, p, (r, s))
                uncond = min(uncond, g)
                if value_difference(game, l, m, p, (r, s)) >= 0:
                    cond = min(cond, g)
    h_star = cond if math.isfinite(cond) else uncond
    if h_star <= 0:
        raise Infeasible("entropy gap is not positive where risky competes", {"entropy_gap_min": h_star})
    m_hat = lo * h_star
    big_m = max(max(value_difference(game, l, mubar0, p, (r, s)) for l in lams for p in pis), 0.0)
    eps = 0.5 * max(1.0 / hi**2 - mubar0 - big_m / m_hat, 0.0)
    star = mubar0 + big_m / m_hat + eps
    return CycleThreshold(float(star), eps > 0, float(h_star), float(m_hat), float(big_m), float(eps), float(mubar0), (lo, hi))


def crra(w, gamma: float):
    w = np.asarray(w, float)
    if gamma == 1:
        return np.log(w)
    return w ** (1 - gamma) / (1 - gamma)


def concentration_entropy(p: float) -> float:
    """Entropy of a distribution with mass ``p`` on one of four points and the rest spread evenly."""
    return -p * math.log(p) - (1 - p) * math.log((1 - p) / 3)


@dataclass(frozen=True, eq=False)
class GapReport:
    status: str
    delta: float
    kappa_bar: float
    mubar0_raw: float
    mubar0: float
    H_star: float
    feasibility_product: float
    lambda_interval: tuple
    lambda_grid: np.ndarray
    mubar_points_per_lambda: int
    H_s_minus_H_r: float
    min_LL_mass: float
    min_H_s: float
    Delta_sign_consistency: bool
    gap_certified: bool
    concentration_certified: bool
    rows: np.ndarray

    def as_dict(self) -> dict:
        return {
            "status": self.status,
            "delta": self.delta,
            "kappa_bar": self.kappa_bar,
            "mubar0_raw": self.mubar0_raw,
            "mubar0": self.mubar0,
            "H_star": self.H_star,
            "feasibility_product": self.feasibility_product,
            "lambda_interval": list(self.lambda_interval),
            "admissible_lambda_points": int(self.lambda_grid.size),
            "mubar_points_per_lambda": self.mubar_points_per_lambda,
            "grid_points": int(self.rows.shape[0]),
            "H_s_minus_H_r_min": self.H_s_minus_H_r,
            "min_LL_mass": self.min_LL_mass,
            "min_H_s": self.min_H_s,
            "Delta_sign_consistency": self.Delta_sign_consistency,
            "gap_certified": self.gap_certified,
            "concentration_certified": self.concentration_certified,
        }


def chamberlain_game(gamma: float, R_H: float, R_L: float, r_f: float, w0: float, q_h: float) -> StaticGame:
    """Two-date portfolio plans: ``r`` holds the risky asset twice, ``s`` the risk-free asset."""
    outcomes = ("HH", "HL", "LH", "LL")
    wr = w0 * np.array([R_H * R_H, R_H * R_L, R_L * R_H, R_L * R_L])
    u = np.vstack([crra(wr, gamma), np.full(4, crra(w0 * r_f**2, gamma))])
    q = np.array([q_h / 2, (1 - q_h) / 2, (1 - q_h) / 2, q_h / 2])
    model = StructuredModel(np.vstack([q, q]), ("r", "s"), outcomes, name="q")
    return StaticGame(PayoffTable(u, ("r", "s"), outcomes), (model,), model)


def chamberlain_gap_certificate(
    gamma: float, R_H: float, R_L: float, r_f: float, w0: float, q_h: float,
    lambda_interval, pbar: float, n_lambda: int = 51, n_mubar: int = 200,
) -> GapReport:
    """Check the safe-minus-risky entropy gap in the two-date portfolio problem.

    The grid covers ``lam`` in the interval and ``mu_bar in [mu_bar0, 1/lam^2)``. When the
    feasibility condition ``mu_bar0 lam_hi^2 < 1`` fails the report is marked infeasible and
    only the admissible part of the grid is evaluated.
    """
    if not 0 < R_L < r_f < R_H:
        raise PreconditionError("need 0 < R_L < r_f < R_H")
    if not q_h > 0.5 or not q_h < 1:
        raise PreconditionError("need 1/2 < q_h < 1")
    if gamma <= 0 or w0 <= 0:
        raise PreconditionError("need gamma > 0 and w0 > 0")
    if not 0 < pbar < 1:
        raise PreconditionError("pbar must lie in (0, 1)")
    h_bar = concentration_entropy(pbar)
    if not math.log(2) > h_bar:
        raise PreconditionError(f"need log 2 > H_bar(pbar), got H_bar={h_bar:.6g}")
    lo, hi = map(float, lambda_interval)
    if not 0 < lo <= hi:
        raise DomainError("need 0 < lam_lo <= lam_hi")
    game = chamberlain_game(gamma, R_H, R_L, r_f, w0, q_h)
    delta = float(crra(w0 * R_H * R_L, gamma) - crra(w0 * R_L**2, gamma))
    kappa_bar = delta / math.log(3 * pbar / (1 - pbar))
    mu0_raw = (1 / lo - kappa_bar) / lo
    mu0 = max(mu0_raw, 0.0)
    h_star = math.log(2) - h_bar
    product = mu0 * hi**2
    status = "feasible" if product < 1 else "infeasible"
    lams = np.array([l for l in np.linspace(lo, hi, n_lambda) if mu0 * l**2 < 1])
    q = game.models[0].q[0]
    ur, us = game.payoffs.u
    rows = []
    for l in lams:
        for m in np.linspace(mu0, 1 / l**2, n_mubar, endpoint=False):
            params = RobustParams(l, m * l)
            pr = evaluate(ur, q, params)
            ps = evaluate(us, q, params)
            rows.append((l, m, ps.entropy, pr.entropy, ps.value - pr.value, pr.distortion.probs[3]))
    rows = np.array(rows).reshape(-1, 6)
    if rows.shape[0]:
        gap = rows[:, 2] - rows[:, 3]
        min_gap, min_ll, min_hs = float(gap.min()), float(rows[:, 5].min()), float(rows[:, 2].min())
        # Delta = V(r) - V(s) = -(V(s) - V(r)); implication Delta >= 0 => gap >= H*.
        risky_competes = -rows[:, 4] >= 0
        consistent = bool(np.all(gap[risky_competes] >= h_star - 1e-12))
    else:
        min_gap = min_ll = min_hs = math.nan
        consistent = False
    return GapReport(
        status, delta, kappa_bar, mu0_raw, mu0, h_star, product, (lo, hi), lams, n_mubar,
        min_gap, min_ll, min_hs, consistent,
        bool(rows.shape[0] and min_gap >= h_star), bool(rows.shape[0] and min_ll >= pbar), rows,
    )

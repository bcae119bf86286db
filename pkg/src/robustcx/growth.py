"""Stochastic growth with complexity aversion, and the home-bias premium.

For a portfolio ``alpha`` over assets with log returns ``u(a, y)`` the per-state aggregator is

    G_mu(alpha, y) = max_q { E_q u - R(q||alpha) - mu H(q) }
                   = (1 - mu) log sum_a alpha(a)^{1/(1-mu)} exp(u(a, y)/(1-mu)).

``G_0`` is log wealth (the Kelly objective). For ``mu > 0`` the expected aggregator is not
concave in ``alpha``, so portfolio optimization searches globally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, softmax

from .errors import DomainError, NonConvergenceError, StructuralError
from .info_core import FiniteDistribution

GOLDEN = (math.sqrt(5) - 1) / 2


def _mu(mu: float) -> float:
    if not 0 <= mu < 1:
        raise DomainError(f"mu must lie in [0, 1), got {mu}")
    return float(mu)


def _probs(x) -> np.ndarray:
    return x.probs if isinstance(x, FiniteDistribution) else np.asarray(x, float)


def growth_aggregator(alpha, y: int, u, mu: float) -> float:
    """Closed form of ``G_mu(alpha, y)``; zero-weight assets drop out."""
    mu = _mu(mu)
    a = _probs(alpha)
    u = np.asarray(u, float)
    keep = a > 0
    s = 1.0 / (1.0 - mu)
    return float((1.0 - mu) * logsumexp(s * np.log(a[keep]) + s * u[keep, y]))


def expected_aggregator(alpha, p, u, mu: float) -> float:
    pr = _probs(p)
    return float(sum(pr[y] * growth_aggregator(alpha, y, u, mu) for y in range(pr.size) if pr[y] > 0))


@dataclass(frozen=True, eq=False)
class GrowthProblem:
    u: np.ndarray
    p: FiniteDistribution
    mu: float
    actions: tuple = None
    states: tuple = None

    def __post_init__(self):
        u = np.array(self.u, float)
        if u.ndim != 2:
            raise StructuralError("log returns must be a matrix u[a, y]")
        if not np.all(np.isfinite(u)):
            raise DomainError("gross returns must be finite and positive")
        p = self.p if isinstance(self.p, FiniteDistribution) else FiniteDistribution(self.p, self.states)
        if p.probs.size != u.shape[1]:
            raise StructuralError("model length must equal the number of states")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "mu", _mu(self.mu))
        object.__setattr__(self, "actions", tuple(self.actions or (f"a{i + 1}" for i in range(u.shape[0]))))

    @classmethod
    def from_gross(cls, gross, p, mu, **kw) -> GrowthProblem:
        g = np.asarray(gross, float)
        if np.any(g <= 0):
            raise DomainError("gross returns must be positive")
        return cls(np.log(g), p, mu, **kw)


@dataclass(frozen=True, eq=False)
class PortfolioSolution:
    alpha: FiniteDistribution
    value: float
    first_order_residual: float
    boundary: bool


def _gradient(alpha: np.ndarray, p: np.ndarray, u: np.ndarray, mu: float) -> np.ndarray:
    """Gradient of the expected aggregator in ``alpha`` (entries with zero weight use the limit)."""
    s = 1.0 / (1.0 - mu)
    grad = np.zeros_like(alpha)
    keep = alpha > 0
    for y in range(p.size):
        if p[y] == 0:
            continue
        logw = np.full(alpha.size, -np.inf)
        logw[keep] = s * np.log(alpha[keep]) + s * u[keep, y]
        lse = logsumexp(logw[keep])
        # d G / d alpha_a = alpha_a^{s-1} e^{s u_a} / sum_b alpha_b^s e^{s u_b}
        with np.errstate(divide="ignore"):
            la = np.where(alpha > 0, (s - 1) * np.log(np.where(alpha > 0, alpha, 1.0)), -np.inf if s > 1 else 0.0)
        grad += p[y] * np.exp(la + s * u[:, y] - lse)
    return grad


def _grid_values(xs: np.ndarray, p: np.ndarray, u: np.ndarray, mu: float) -> np.ndarray:
    """Expected aggregator along the edge ``alpha = (x, 1 - x)`` for a vector of ``x``."""
    s = 1.0 / (1.0 - mu)
    with np.errstate(divide="ignore"):
        la = s * np.log(np.column_stack([xs, 1.0 - xs]))
    out = np.zeros(xs.size)
    for y in range(p.size):
        if p[y] > 0:
            out += p[y] * (1.0 - mu) * logsumexp(la + s * u[:, y][None, :], axis=1)
    return out


def _two_asset(problem: GrowthProblem, grid: int = 4001) -> PortfolioSolution:
    u, p, mu = problem.u, problem.p.probs, problem.mu

    def f(x):
        return expected_aggregator(np.array([x, 1.0 - x]), p, u, mu)

    def df(x):
        g = _gradient(np.array([x, 1.0 - x]), p, u, mu)
        return float(g[0] - g[1])

    xs = np.linspace(0.0, 1.0, grid)
    vals = _grid_values(xs, p, u, mu)
    k = int(np.argmax(vals))
    best_x, best_v = float(xs[k]), float(vals[k])
    lo, hi = xs[max(k - 1, 0)], xs[min(k + 1, grid - 1)]
    # Golden-section inside the winning bracket, then bisection on the derivative sign.
    a, b = lo, hi
    c, d = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > 1e-9:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    a, b = max(lo, x - 1e-6), min(hi, x + 1e-6)
    if 0 < a and b < 1 and df(a) > 0 > df(b):
        while b - a > 1e-13:
            m = 0.5 * (a + b)
            if df(m) > 0:
                a = m
            else:
                b = m
        x = 0.5 * (a + b)
    if f(x) > best_v:
        best_x, best_v = x, f(x)
    for edge in (0.0, 1.0):
        if f(edge) >= best_v - 1e-15:
            best_x, best_v = edge, f(edge)
    alpha = np.array([best_x, 1.0 - best_x])
    boundary = best_x in (0.0, 1.0)
    if boundary:
        slope = df(best_x) if best_x == 0.0 else -df(best_x)
        residual = max(slope, 0.0)
    else:
        residual = abs(df(best_x))
    return PortfolioSolution(FiniteDistribution(alpha, problem.actions), best_v, residual, boundary)


def _project_simplex(v: np.ndarray) -> np.ndarray:
    srt = np.sort(v)[::-1]
    css = np.cumsum(srt) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(srt - css / idx > 0)[0][-1]
    return np.maximum(v - css[rho] / (rho + 1), 0.0)


def _projected_ascent(problem: GrowthProblem, start: np.ndarray, max_iters: int = 20000) -> tuple:
    u, p, mu = problem.u, problem.p.probs, problem.mu
    x = start.copy()
    fx = expected_aggregator(x, p, u, mu)
    step = 1.0
    for _ in range(max_iters):
        g = _gradient(x, p, u, mu)
        while True:
            cand = _project_simplex(x + step * g)
            fc = expected_aggregator(cand, p, u, mu)
            if fc >= fx + 1e-4 * g @ (cand - x) or step < 1e-14:
                break
            step *= 0.5
        if np.max(np.abs(cand - x)) < 1e-13:
            return cand, fc
        x, fx = cand, fc
        step = min(step * 2.0, 1.0)
    raise NonConvergenceError("projected gradient ascent did not converge")


def optimal_portfolio(problem: GrowthProblem) -> PortfolioSolution:
    """Maximize ``E_p G_mu(alpha, y)`` over the simplex."""
    n = problem.u.shape[0]
    if n == 1:
        v = float(problem.p.probs @ problem.u[0])
        return PortfolioSolution(FiniteDistribution([1.0], problem.actions), v, 0.0, True)
    if n == 2:
        return _two_asset(problem)
    starts = [np.full(n, 1.0 / n)] + [np.eye(n)[k] for k in range(n)]
    best = None
    for s in starts:
        x, fx = _projected_ascent(problem, s)
        if best is None or fx > best[1] + 1e-14:
            best = (x, fx)
    x, fx = best
    g = _gradient(x, problem.p.probs, problem.u, problem.mu)
    supp = x > 0
    lam = float(np.max(g[supp]))
    residual = max(float(np.max(np.abs(g[supp] - lam))), float(np.max(g[~supp] - lam, initial=0.0)))
    return PortfolioSolution(FiniteDistribution(x, problem.actions), fx, residual, bool(np.any(~supp)))


def misspecification_loss(p_true, p_mis, u, mu: float) -> float:
    """Growth-rate loss from optimizing against ``p_mis`` while returns follow ``p_true``."""
    best = optimal_portfolio(GrowthProblem(u, p_true, mu))
    mis = optimal_portfolio(GrowthProblem(u, p_mis, mu))
    return best.value - expected_aggregator(mis.alpha, p_true, u, mu)


@dataclass(frozen=True, eq=False)
class SampledRule:
    conditional: np.ndarray
    marginal: np.ndarray
    posteriors: dict


def sampled_choice_rule(alpha_star, p, u) -> SampledRule:
    """``q(a|y) ∝ alpha(a) e^{u(a,y)}``, its marginal under ``p`` and the Bayes posteriors ``q(y|a)``."""
    a = _probs(alpha_star)
    pr = _probs(p)
    u = np.asarray(u, float)
    with np.errstate(divide="ignore"):
        cond = softmax(np.log(a)[:, None] + u, axis=0).T
    marginal = pr @ cond
    posts = {}
    for k in range(a.size):
        if marginal[k] > 0:
            posts[k] = pr * cond[:, k] / marginal[k]
    return SampledRule(cond, marginal, posts)


@dataclass(frozen=True)
class HullCheck:
    holds: bool
    weights: tuple | None
    certificate: dict | None


def check_regularity_2(p_mis, rule: SampledRule, tol: float = 1e-10) -> HullCheck:
    """Is ``p_mis`` a convex combination of the sampled-rule posteriors?"""
    target = _probs(p_mis)
    keys = sorted(rule.posteriors)
    pts = [rule.posteriors[k] for k in keys]
    n_actions = rule.marginal.size

    def full(ws):
        w = np.zeros(n_actions)
        for k, x in zip(keys, ws):
            w[k] = x
        return tuple(float(x) for x in w)

    if not pts:
        return HullCheck(False, None, {"reason": "no posteriors"})
    if target.size == 2:
        xs = np.array([p[0] for p in pts])
        t = target[0]
        lo, hi = xs.min(), xs.max()
        if t < lo - tol or t > hi + tol:
            side = "below" if t < lo else "above"
            return HullCheck(False, None, {"reason": f"{side} hull", "interval": [float(lo), float(hi)], "target": float(t)})
        for i, x in enumerate(xs):
            if abs(x - t) <= tol:
                ws = np.zeros(len(pts))
                ws[i] = 1.0
                return HullCheck(True, full(ws), None)
        i = int(np.argmax(np.where(xs < t, xs, -np.inf)))
        j = int(np.argmin(np.where(xs > t, xs, np.inf)))
        w = (xs[j] - t) / (xs[j] - xs[i])
        ws = np.zeros(len(pts))
        ws[i], ws[j] = w, 1.0 - w
        return HullCheck(True, full(ws), None)
    if len(pts) > 3:
        raise DomainError("hull check supports at most three posteriors for more than two states")
    mat = np.vstack([np.column_stack(pts), np.ones(len(pts))])
    rhs = np.append(target, 1.0)
    ws, *_ = np.linalg.lstsq(mat, rhs, rcond=None)
    resid = float(np.max(np.abs(mat @ ws - rhs)))
    if resid <= 1e-9 and np.all(ws >= -tol):
        return HullCheck(True, full(np.clip(ws, 0.0, None)), None)
    return HullCheck(False, None, {"reason": "no convex weights", "residual": resid, "weights": ws.tolist()})


@dataclass(frozen=True)
class HomeBiasInstance:
    N: int
    delta: float
    epsilon: float
    lam: float
    mu: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise DomainError("N must be an integer >= 2")
        if not 0 < self.delta < 1:
            raise DomainError("delta must lie in (0, 1)")
        if not 0 < self.epsilon < self.delta / self.N:
            raise DomainError("epsilon must lie in (0, delta/N)")
        if not self.lam > 0:
            raise DomainError("lam must be positive")
        if not 0 <= self.mu < 1 / self.lam:
            raise DomainError("mu must lie in [0, 1/lam)")

    def models(self) -> tuple:
        """Domestic and foreign outcome distributions over ``(y*, y_1, ..., y_N)``."""
        n, d, e = self.N, self.delta, self.epsilon
        q_d = np.concatenate([[1 - d], np.full(n, d / n)])
        q_f = np.concatenate([[1 - d, d - (n - 1) * e], np.full(n - 1, e)])
        return q_d, q_f


@dataclass(frozen=True)
class HomeBiasResult:
    v_d: float
    v_f: float
    premium: float
    log_Z_d: float
    log_Z_f: float


def home_bias_premium(inst: HomeBiasInstance) -> HomeBiasResult:
    """Values ``-kappa log Z_a`` with payoff 1 on ``y*`` and 0 on the loss states."""
    kappa = 1 / inst.lam - inst.mu
    beta = 1 / (inst.lam * kappa)
    q_d, q_f = inst.models()
    payoff = np.concatenate([[1.0], np.zeros(inst.N)])

    def log_z(q):
        return float(logsumexp(-payoff / kappa + beta * np.log(q)))

    lz_d, lz_f = log_z(q_d), log_z(q_f)
    v_d, v_f = -kappa * lz_d, -kappa * lz_f
    return HomeBiasResult(v_d, v_f, kappa * (lz_f - lz_d), lz_d, lz_f)


def home_bias_limit(N: int, delta: float, lam: float, mu: float) -> float:
    """Premium as ``epsilon -> 0`` with the favourable-state term kept.

    Equals ``mu log N`` when that term is negligible against ``delta^beta``.
    """
    kappa = 1 / lam - mu
    beta = 1 / (lam * kappa)
    head = -1 / kappa + beta * math.log(1 - delta)
    tail = beta * math.log(delta)
    lz_f = float(logsumexp([head, tail]))
    lz_d = float(logsumexp([head, (1 - beta) * math.log(N) + tail]))
    return kappa * (lz_f - lz_d)


def home_bias_sweep(N: int, delta: float, lam: float, epsilons, mus) -> list:
    rows = []
    for e in epsilons:
        for m in mus:
            r = home_bias_premium(HomeBiasInstance(N, delta, e, lam, m))
            rows.append({"epsilon": e, "mu": m, "premium": r.premium, "v_d": r.v_d, "v_f": r.v_f})
    return rows

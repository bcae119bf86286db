"""Information-capacity view of complexity aversion.

The joint description entropy of a model draw and a worst-case outcome draw is

    C_a(lam, mu; pi) = H(pi) + sum_q pi(q) H(p_hat_{lam,mu}(a; q)),

strictly decreasing in ``mu`` from ``H(pi) + log|Y|`` to ``H(pi)``. A budget ``B`` on this
entropy is enforced by the multiplier ``mu_B`` solving ``C_a(lam, mu_B) = B``.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NonConvergenceError, RegimeError
from .info_core import (
    FiniteDistribution,
    PayoffTable,
    StructuredModel,
    relative_entropy,
    shannon_entropy,
)
from .robust_static import RobustParams, worst_case

BISECT_MAX_ITERS = 200
BRACKET_GAP = 1e-12


def _weights(models, pi) -> np.ndarray:
    w = pi.probs if isinstance(pi, FiniteDistribution) else np.asarray(pi, float)
    if w.size != len(models):
        raise DomainError("posterior length does not match the model list")
    return w


def complexity_functional(payoffs: PayoffTable, models: Sequence[StructuredModel], lam: float, mu: float, action, pi) -> float:
    """``C_a = H(pi) + sum_q pi(q) H(p_hat(a; q))``."""
    if lam <= 0:
        raise DomainError("lam must be positive")
    if mu >= 1.0 / lam:
        raise RegimeError("complexity functional needs mu < 1/lam")
    w = _weights(models, pi)
    a = payoffs.action_index(action)
    params = RobustParams(lam, mu)
    h = sum(wq * worst_case(payoffs.u[a], m.q[a], params).entropy for wq, m in zip(w, models) if wq > 0)
    return shannon_entropy(w) + float(h)


@dataclass(frozen=True, eq=False)
class CapacityProfile:
    lam: float
    action: str
    pi: FiniteDistribution
    mu_grid: np.ndarray
    C_values: np.ndarray
    limits: tuple
    strictly_decreasing: bool


def capacity_profile(payoffs, models, lam: float, action, pi, mu_grid) -> CapacityProfile:
    grid = np.asarray(mu_grid, float)
    vals = np.array([complexity_functional(payoffs, models, lam, m, action, pi) for m in grid])
    w = _weights(models, pi)
    h_pi = shannon_entropy(w)
    limits = (h_pi + math.log(payoffs.u.shape[1]), h_pi)
    pi_d = pi if isinstance(pi, FiniteDistribution) else FiniteDistribution(w)
    dec = bool(vals.size > 1 and np.all(np.diff(vals) < 0))
    return CapacityProfile(lam, payoffs.actions[payoffs.action_index(action)], pi_d, grid, vals, limits, dec)


@dataclass(frozen=True)
class C1Report:
    nondegenerate: tuple
    unique_min: tuple

    @property
    def holds(self) -> bool:
        return all(self.nondegenerate) and all(self.unique_min)


def check_assumption_C1(payoffs: PayoffTable, models, lam: float, action, pi=None, tol: float = 1e-12) -> C1Report:
    """Per model: ``log q_a - lam u_a`` is not constant, and ``u_a - log(q_a)/lam`` has a unique minimizer."""
    a = payoffs.action_index(action)
    u = payoffs.u[a]
    nondeg, unique = [], []
    for m in models:
        lq = np.log(m.q[a])
        phi = lq - lam * u
        nondeg.append(bool(np.ptp(phi) > tol))
        score = np.sort(u - lq / lam)
        unique.append(bool(score.size == 1 or score[1] - score[0] > tol))
    return C1Report(tuple(nondeg), tuple(unique))


@dataclass(frozen=True, eq=False)
class BudgetSolution:
    B: float
    mu_B: float
    solution_distortions: tuple
    kkt_residual: float
    binding: bool
    objective: float
    iterations: int


def constrained_objective(payoffs, models, lam: float, action, pi, distortions) -> float:
    """``sum_q pi(q) (E_{p_q} u + R(p_q || q_a) / lam)``."""
    a = payoffs.action_index(action)
    w = _weights(models, pi)
    u = payoffs.u[a]
    total = 0.0
    for wq, m, p in zip(w, models, distortions):
        if wq > 0:
            pa = p.probs if isinstance(p, FiniteDistribution) else np.asarray(p, float)
            total += wq * (float(pa @ u) + relative_entropy(pa, m.q[a]) / lam)
    return total


def _distortions(payoffs, models, lam, mu, action):
    a = payoffs.action_index(action)
    params = RobustParams(lam, mu)
    return tuple(worst_case(payoffs.u[a], m.q[a], params).distortion for m in models)


def solve_budget(payoffs: PayoffTable, models, lam: float, action, pi, B: float, tol: float = 1e-10) -> BudgetSolution:
    """Minimize the multiplier objective subject to ``H(pi) + sum pi H(p_q) <= B``."""
    w = _weights(models, pi)
    h_pi = shannon_entropy(w)
    top = h_pi + math.log(payoffs.u.shape[1])
    if not h_pi < B < top:
        raise DomainError(f"budget must lie in (H(pi), H(pi) + log|Y|) = ({h_pi:.6g}, {top:.6g}), got {B!r}")

    def cap(mu):
        return complexity_functional(payoffs, models, lam, mu, action, w)

    c0 = cap(0.0)
    if B >= c0:
        d = _distortions(payoffs, models, lam, 0.0, action)
        obj = constrained_objective(payoffs, models, lam, action, w, d)
        return BudgetSolution(B, 0.0, d, max(c0 - B, 0.0), False, obj, 0)
    lo, hi = 0.0, 1.0 / lam - BRACKET_GAP
    if cap(hi) > B:
        raise NonConvergenceError("budget below the attainable entropy on the bracket", residual=cap(hi) - B)
    it = 0
    mid = 0.5 * (lo + hi)
    for it in range(1, BISECT_MAX_ITERS + 1):
        mid = 0.5 * (lo + hi)
        val = cap(mid)
        if abs(val - B) <= tol * 1e-3 or hi - lo <= 1e-15:
            break
        if val > B:
            lo = mid
        else:
            hi = mid
    residual = abs(cap(mid) - B)
    if residual > tol:
        raise NonConvergenceError("budget bisection did not reach tolerance", residual=residual, iterations=it)
    d = _distortions(payoffs, models, lam, mid, action)
    obj = constrained_objective(payoffs, models, lam, action, w, d)
    return BudgetSolution(B, mid, d, residual, True, obj, it)

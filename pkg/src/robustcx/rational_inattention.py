"""Robust rational inattention with a Shannon information cost.

The agent chooses a stochastic choice rule ``psi(a|w)`` to maximize

    J(psi) = -kappa log sum_w g(w)^beta exp(-U_psi(w)/kappa) - xi I(psi; g),

where ``U_psi(w) = sum_a v(a, w) psi(a|w)`` and ``I`` is the mutual information between
states and actions. The inner minimization picks the worst-case state distribution
``m* ∝ exp(-U_psi/kappa) g^beta``. At a saddle point the choice rule is a logit with
state-dependent scale ``xi_w = xi g(w) / m*(w)``:

    psi(a|w) ∝ psi_bar(a) exp(v(a, w) / xi_w).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError, NonConvergenceError, PreconditionError, StructuralError
from .info_core import FiniteDistribution, shannon_entropy
from .robust_static import RobustParams, worst_case

SUPPORT_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class RIProblem:
    v: np.ndarray
    g: FiniteDistribution
    xi: float
    lam: float
    mu: float
    states: tuple = None
    actions: tuple = None

    def __post_init__(self):
        v = np.array(self.v, dtype=float)
        if v.ndim != 2:
            raise StructuralError("payoffs must be a matrix v[a, w]")
        g = self.g if isinstance(self.g, FiniteDistribution) else FiniteDistribution(self.g, self.states)
        if g.probs.size != v.shape[1]:
            raise StructuralError("prior length must equal the number of states")
        if not g.full_support:
            raise DomainError("prior over states needs full support")
        if not self.xi > 0:
            raise DomainError("information cost xi must be positive")
        if not self.lam > 0:
            raise DomainError("lam must be positive")
        if not 0 <= self.mu < 1.0 / self.lam:
            raise DomainError("mu must lie in [0, 1/lam)")
        v.setflags(write=False)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "states", g.labels)
        acts = self.actions or tuple(f"a{i}" for i in range(v.shape[0]))
        object.__setattr__(self, "actions", tuple(acts))

    @classmethod
    def from_dict(cls, d: dict) -> RIProblem:
        states = tuple(d.get("states") or [f"w{i}" for i in range(len(d["g"]))])
        return cls(d["v"], FiniteDistribution(d["g"], states), float(d["xi"]), float(d["lam"]), float(d["mu"]),
                   states, tuple(d["actions"]) if d.get("actions") else None)

    def with_mu(self, mu: float) -> RIProblem:
        return RIProblem(self.v, self.g, self.xi, self.lam, mu, self.states, self.actions)

    @property
    def params(self) -> RobustParams:
        return RobustParams(self.lam, self.mu)


@dataclass(frozen=True, eq=False)
class RISolution:
    psi: np.ndarray
    psi_bar: FiniteDistribution
    m_star: FiniteDistribution
    scales: np.ndarray
    objective: float
    iterations: int
    residual: float
    stationarity: float
    boundary: bool

    def as_dict(self) -> dict:
        return {
            "psi": self.psi.tolist(),
            "psi_bar": self.psi_bar.as_dict(),
            "m_star": self.m_star.as_dict(),
            "scales": self.scales.tolist(),
            "objective": self.objective,
            "iterations": self.iterations,
            "residual": self.residual,
            "stationarity": self.stationarity,
            "boundary": self.boundary,
        }


def _psi(psi) -> np.ndarray:
    p = np.asarray(psi, float)
    if p.ndim != 2 or np.any(p < -1e-15) or np.max(np.abs(p.sum(axis=1) - 1)) > 1e-9:
        raise DomainError("psi rows must be probability vectors over actions")
    return np.clip(p, 0.0, None)


def state_utilities(psi, problem: RIProblem) -> np.ndarray:
    """``U_psi(w) = sum_a v(a, w) psi(a|w)``; ``psi`` is indexed ``[w, a]``."""
    return np.einsum("wa,aw->w", _psi(psi), problem.v)


def mutual_information(psi, g) -> float:
    p = _psi(psi)
    gw = g.probs if isinstance(g, FiniteDistribution) else np.asarray(g, float)
    bar = gw @ p
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(p / bar[None, :]), 0.0)
    return max(float(gw @ terms.sum(axis=1)), 0.0)


def shannon_cost(psi, g, xi: float) -> float:
    """``xi`` times the mutual information between states and actions."""
    return xi * mutual_information(psi, g)


def worst_case_states(psi, problem: RIProblem) -> FiniteDistribution:
    """``m* ∝ exp(-U_psi/kappa) g^beta``."""
    return worst_case(state_utilities(psi, problem), problem.g, problem.params).distortion


def objective(psi, problem: RIProblem) -> float:
    inner = worst_case(state_utilities(psi, problem), problem.g, problem.params).value
    return inner - shannon_cost(psi, problem.g, problem.xi)


def _logit(psi: np.ndarray, problem: RIProblem, active: np.ndarray):
    m = worst_case_states(psi, problem).probs
    with np.errstate(divide="ignore", over="ignore"):
        scales = problem.xi * problem.g.probs / m
    bar = problem.g.probs @ psi
    logits = np.full(psi.shape, -np.inf)
    logits[:, active] = np.log(bar[active])[None, :] + problem.v[active].T / scales[:, None]
    logits -= logsumexp(logits, axis=1, keepdims=True)
    return logits, m, scales, bar


def stationarity_residual(psi, problem: RIProblem) -> float:
    """Largest gap between ``psi`` and the logit form on actions with ``psi_bar > 1e-9``."""
    p = _psi(psi)
    bar = problem.g.probs @ p
    active = bar > 1e-9
    logits, *_ = _logit(p, problem, active)
    return float(np.max(np.abs(p[:, active] - np.exp(logits[:, active]))))


def _iterate(problem, psi, damping, max_iters, tol):
    active = np.ones(psi.shape[1], dtype=bool)
    residual = math.inf
    for it in range(1, max_iters + 1):
        logits, _, _, _ = _logit(psi, problem, active)
        with np.errstate(divide="ignore"):
            mixed = (1 - damping) * np.log(psi[:, active]) + damping * logits[:, active]
        mixed -= logsumexp(mixed, axis=1, keepdims=True)
        new = np.zeros_like(psi)
        new[:, active] = np.exp(mixed)
        bar = problem.g.probs @ new
        dead = active & (bar < SUPPORT_FLOOR)
        if np.any(dead):
            active &= ~dead
            new[:, dead] = 0.0
            new /= new.sum(axis=1, keepdims=True)
        residual = float(np.max(np.abs(new - psi)))
        psi = new
        if residual < tol:
            return psi, it, residual, active
    raise NonConvergenceError(
        f"saddle iteration did not converge in {max_iters} steps (residual {residual:.3g})",
        residual=residual, iterations=max_iters,
    )


def solve_saddle(problem: RIProblem, init=None, damping: float = 0.5, max_iters: int = 100_000, tol: float = 1e-10) -> RISolution:
    """Alternate the worst-case state update and the damped logit update until ``psi`` settles."""
    if not 0 < damping <= 1:
        raise DomainError("damping must lie in (0, 1]")
    n_w, n_a = problem.v.shape[1], problem.v.shape[0]
    psi0 = np.full((n_w, n_a), 1.0 / n_a) if init is None else _psi(init).copy()
    psi, it, residual, active = _iterate(problem, psi0, damping, max_iters, tol)
    if not np.all(active):
        # One restart from a perturbed interior point before accepting a boundary solution.
        rng = np.random.Generator(np.random.PCG64(0))
        alt0 = 0.9 * psi0 + 0.1 * rng.dirichlet(np.ones(n_a), size=n_w)
        try:
            alt, it2, res2, act2 = _iterate(problem, alt0, damping, max_iters, tol)
        except NonConvergenceError:
            alt = None
        if alt is not None and objective(alt, problem) > objective(psi, problem) + 1e-12:
            psi, it, residual, active = alt, it + it2, res2, act2
    return _solution(psi, problem, it, residual, not np.all(active))


def _solution(psi, problem, it, residual, boundary) -> RISolution:
    m = worst_case_states(psi, problem)
    with np.errstate(divide="ignore", over="ignore"):
        scales = problem.xi * problem.g.probs / m.probs
    bar = FiniteDistribution(problem.g.probs @ psi, problem.actions)
    return RISolution(
        psi, bar, FiniteDistribution(m.probs, problem.states), scales,
        objective(psi, problem), it, residual, stationarity_residual(psi, problem), boundary,
    )


def log_odds_check(solution: RISolution, problem: RIProblem, a: int, b: int, state: int) -> float:
    """``|log(psi(a|w)/psi(b|w)) - log(psi_bar(a)/psi_bar(b)) - (v(a,w) - v(b,w))/xi_w|``."""
    bar = solution.psi_bar.probs
    if bar[a] <= 0 or bar[b] <= 0:
        raise PreconditionError("both actions must be in the support of psi_bar")
    if a == b:
        return 0.0
    p = solution.psi
    lhs = math.log(p[state, a] / p[state, b])
    rhs = math.log(bar[a] / bar[b]) + (problem.v[a, state] - problem.v[b, state]) / solution.scales[state]
    return abs(lhs - rhs)


@dataclass(frozen=True, eq=False)
class NeglectProfile:
    mu_grid: np.ndarray
    m_star: np.ndarray
    scales: np.ndarray
    entropy: np.ndarray
    focal_state: int
    entropy_decreasing: bool
    focal_scale_ratio: float
    other_scales_growing: bool
    solutions: tuple

    def rows(self) -> list:
        out = []
        for k, mu in enumerate(self.mu_grid):
            out.append([float(mu), *map(float, self.m_star[k]), *map(float, self.scales[k]), float(self.entropy[k])])
        return out


def probability_neglect_profile(problem: RIProblem, mu_grid, **solver_kw) -> NeglectProfile:
    """Solve along an increasing ``mu`` grid and track how ``m*`` and the scales sharpen."""
    grid = np.asarray(mu_grid, float)
    if np.any(grid < 0) or np.any(grid >= 1.0 / problem.lam):
        raise DomainError("grid must lie in [0, 1/lam)")
    sols = tuple(solve_saddle(problem.with_mu(float(m)), **solver_kw) for m in grid)
    ms = np.array([s.m_star.probs for s in sols])
    sc = np.array([s.scales for s in sols])
    ent = np.array([shannon_entropy(m) for m in ms])
    focal = int(np.argmax(ms[-1]))
    others = [w for w in range(ms.shape[1]) if w != focal]
    return NeglectProfile(
        grid, ms, sc, ent, focal,
        entropy_decreasing=bool(np.all(np.diff(ent) <= 1e-12)),
        focal_scale_ratio=float(sc[-1, focal] / (problem.xi * problem.g.probs[focal])),
        other_scales_growing=bool(all(np.all(np.diff(sc[:, w]) >= -1e-12) for w in others)),
        solutions=sols,
    )

"""Static complexity-augmented robust criterion.

For an action with payoff row ``u`` and reference model ``q`` the agent evaluates

    v = min_p  E_p[u] + (1/lam) R(p||q) + mu H(p).

With ``kappa = 1/lam - mu > 0`` and ``beta = 1/(1 - lam mu)`` the minimizer is the Gibbs
distortion ``p_hat ∝ exp(-u/kappa) q^beta`` and ``v = -kappa log sum exp(-u/kappa) q^beta``.
When ``mu >= 1/lam`` Nature puts a point mass on the minimizer of ``u + (1/lam) log(1/q)``.
At ``lam = 0`` the criterion is entropy-modified expected utility.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import (
    AssumptionViolation,
    DomainError,
    InternalConsistencyError,
    RegimeError,
    StructuralError,
)
from .info_core import (
    FiniteDistribution,
    PayoffTable,
    StructuredModel,
    relative_entropy,
    shannon_entropy,
)

TIE_TOL = 1e-10
SELF_CHECK_TOL = 1e-8


class Regime(str, enum.Enum):
    INTERIOR = "interior"
    CORNER = "corner"
    BAYES_LIMIT = "bayes-limit"


@dataclass(frozen=True)
class RobustParams:
    """Misspecification concern ``lam`` and complexity aversion ``mu``."""

    lam: float
    mu: float

    def __post_init__(self):
        lam, mu = float(self.lam), float(self.mu)
        if not (math.isfinite(lam) and math.isfinite(mu)):
            raise DomainError(f"non-finite parameters lam={lam}, mu={mu}")
        if lam < 0:
            raise DomainError(f"lam must be non-negative, got {lam}")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "mu", mu)

    @property
    def regime(self) -> Regime:
        if self.lam == 0.0:
            return Regime.BAYES_LIMIT
        return Regime.INTERIOR if self.mu < 1.0 / self.lam else Regime.CORNER

    @property
    def kappa(self) -> float:
        if self.lam == 0.0:
            return math.inf
        return 1.0 / self.lam - self.mu

    @property
    def beta(self) -> float:
        # 1/(lam kappa) equals 1/(1 - lam mu) and keeps kappa*beta = 1/lam to rounding.
        if self.lam == 0.0:
            return 1.0
        k = self.kappa
        if k == 0.0:
            raise RegimeError("beta is undefined at lam*mu = 1")
        return 1.0 / (self.lam * k)


@dataclass(frozen=True, eq=False)
class WorstCaseResult:
    distortion: FiniteDistribution
    value: float
    entropy: float
    kl_to_model: float


@dataclass(frozen=True, eq=False)
class EscortModel:
    base: FiniteDistribution
    beta: float
    escort: FiniteDistribution
    log_norm: float


def _row(u_row) -> np.ndarray:
    u = np.asarray(u_row, dtype=float).ravel()
    if not np.all(np.isfinite(u)):
        raise DomainError("payoffs must be finite")
    return u


def _dist(q, n=None) -> FiniteDistribution:
    if isinstance(q, FiniteDistribution):
        d = q
    else:
        d = FiniteDistribution(q)
    if n is not None and len(d) != n:
        raise StructuralError(f"payoff row has {n} outcomes, model has {len(d)}")
    return d


def direct_objective(u_row, q, p, params: RobustParams) -> float:
    """Evaluate ``E_p u + (1/lam) R(p||q) + mu H(p)`` at a given ``p``."""
    u = _row(u_row)
    p_arr = p.probs if isinstance(p, FiniteDistribution) else np.asarray(p, float)
    q_arr = q.probs if isinstance(q, FiniteDistribution) else np.asarray(q, float)
    r = relative_entropy(p_arr, q_arr)
    if math.isinf(r):
        return math.inf
    pen = r / params.lam if params.lam > 0 else 0.0
    return float(p_arr @ u) + pen + params.mu * shannon_entropy(p_arr)


def gibbs_log_weights(u_row, log_q, kappa: float, beta: float) -> np.ndarray:
    """Unnormalized log weights ``-u/kappa + beta log q`` of the worst-case distortion."""
    return -np.asarray(u_row, float) / kappa + beta * np.asarray(log_q, float)


def _log_distortion(u, q, log_q, params: RobustParams, x) -> tuple:
    """``log Z = log sum q^beta e^{-u/kappa}``, ``log p_hat`` and ``log(p_hat/q)`` to full precision.

    For small ``lam`` the tilt ``y = (beta - 1) log q - u/kappa`` is tiny while ``kappa`` is
    huge, so ``log Z`` comes from ``log1p`` of ``E_q[expm1(y)]``. Otherwise the largest weight
    is factored out and the rest enter through ``log1p``, which keeps ``log p_hat`` exact near
    a point mass.
    """
    lm = params.lam * params.mu
    y = (lm / (1.0 - lm)) * log_q - u / params.kappa
    if np.max(np.abs(y)) <= 1.0:
        log_z = math.log1p(float(q @ np.expm1(y)))
        return log_z, log_q + y - log_z, y - log_z
    k = int(np.argmax(x))
    shifted = x - x[k]
    tail = math.log1p(float(np.sum(np.exp(np.delete(shifted, k)))))
    log_p = shifted - tail
    return float(x[k]) + tail, log_p, log_p - log_q


def worst_case(u_row, q_a, params: RobustParams, check: bool = True) -> WorstCaseResult:
    """Closed-form worst-case distortion and value in the interior regime."""
    if params.regime is not Regime.INTERIOR:
        raise RegimeError(f"worst_case needs the interior regime, got {params.regime.value}")
    u = _row(u_row)
    q = _dist(q_a, u.size)
    if not q.full_support:
        raise AssumptionViolation("reference model must have full support")
    kappa, beta = params.kappa, params.beta
    log_q = np.log(q.probs)
    x = gibbs_log_weights(u, log_q, kappa, beta)
    log_z, log_p, log_ratio = _log_distortion(u, q.probs, log_q, params, x)
    p_hat = np.exp(log_p)
    value = -kappa * log_z
    dist = FiniteDistribution(p_hat, q.labels)
    # Entropy and divergence from the log weights avoid the cancellation in p log(p/q) and log(1 - eps).
    h = max(-float(p_hat @ log_p), 0.0) + 0.0
    r = max(float(p_hat @ log_ratio), 0.0) + 0.0
    if check:
        direct = float(p_hat @ u) + relative_entropy(p_hat, q.probs) / params.lam + params.mu * h
        scale = max(1.0, abs(value), float(np.max(np.abs(u))))
        # The direct KL is accurate only to a few ulps, which 1/lam amplifies.
        conditioning = 64 * np.finfo(float).eps * u.size * (1.0 + float(np.max(np.abs(log_q)))) / params.lam
        if abs(direct - value) > SELF_CHECK_TOL * scale + conditioning:
            raise InternalConsistencyError(
                f"normalizer value {value!r} and direct objective {direct!r} disagree"
            )
    return WorstCaseResult(dist, value, h, r)


def worst_case_corner(u_row, q_a, lam: float) -> WorstCaseResult:
    """Corner regime (``mu >= 1/lam``): point mass on the minimizer of ``u + (1/lam) log(1/q)``."""
    if lam <= 0:
        raise DomainError("corner regime needs lam > 0")
    u = _row(u_row)
    q = _dist(q_a, u.size)
    supp = np.flatnonzero(q.probs > 0)
    scores = u[supp] + np.log(1.0 / q.probs[supp]) / lam
    best = float(scores.min())
    j = int(supp[np.flatnonzero(scores <= best + TIE_TOL)[0]])
    score_j = float(u[j] + math.log(1.0 / q.probs[j]) / lam)
    dist = FiniteDistribution.point_mass(j, q.labels)
    return WorstCaseResult(dist, score_j, 0.0, float(math.log(1.0 / q.probs[j])))


def bayes_limit(u_row, q_a, mu: float) -> WorstCaseResult:
    """``lam = 0``: no distortion, value ``E_q u + mu H(q)``."""
    u = _row(u_row)
    q = _dist(q_a, u.size)
    h = shannon_entropy(q)
    return WorstCaseResult(q, float(q.probs @ u) + mu * h, h, 0.0)


def evaluate(u_row, q_a, params: RobustParams) -> WorstCaseResult:
    """Dispatch to the interior, corner or Bayes-limit evaluation."""
    reg = params.regime
    if reg is Regime.INTERIOR:
        return worst_case(u_row, q_a, params)
    if reg is Regime.CORNER:
        return worst_case_corner(u_row, q_a, params.lam)
    return bayes_limit(u_row, q_a, params.mu)


def _check_posterior(Q: Sequence[StructuredModel], pi) -> np.ndarray:
    w = pi.probs if isinstance(pi, FiniteDistribution) else np.asarray(pi, float)
    if len(Q) != w.size:
        raise StructuralError(f"{len(Q)} models but posterior of length {w.size}")
    return w


def posterior_value(u: PayoffTable, action, Q: Sequence[StructuredModel], pi, params: RobustParams) -> float:
    """``V(a; pi) = sum_q pi(q) v(a; q)``."""
    w = _check_posterior(Q, pi)
    a = u.action_index(action)
    row = u.u[a]
    return float(sum(wq * evaluate(row, m.q[a], params).value for wq, m in zip(w, Q) if wq > 0))


def posterior_entropy(u: PayoffTable, action, Q, pi, params: RobustParams) -> float:
    """``H_a = sum_q pi(q) H(p_hat(a; q))``."""
    w = _check_posterior(Q, pi)
    a = u.action_index(action)
    return float(sum(wq * evaluate(u.u[a], m.q[a], params).entropy for wq, m in zip(w, Q) if wq > 0))


@dataclass(frozen=True)
class BestReply:
    values: tuple
    argmax: tuple
    choice: str


def best_reply(u: PayoffTable, Q, pi, params: RobustParams) -> BestReply:
    """Argmax set (ties within 1e-10) and the lowest-index canonical choice."""
    vals = [posterior_value(u, a, Q, pi, params) for a in range(len(u.actions))]
    top = max(vals)
    ties = tuple(u.actions[i] for i, v in enumerate(vals) if v >= top - TIE_TOL)
    return BestReply(tuple(vals), ties, ties[0])


def envelope_derivatives(u_row, q_a, params: RobustParams) -> tuple[float, float]:
    """``(dv/dmu, dv/dlam) = (H(p_hat), -R(p_hat||q)/lam^2)``."""
    res = worst_case(u_row, q_a, params)
    return res.entropy, -res.kl_to_model / params.lam**2


def escort_transform(q, beta: float) -> EscortModel:
    """Power transform ``q^beta / Z`` on the support of ``q``."""
    if not math.isfinite(beta):
        raise DomainError("beta must be finite")
    qd = _dist(q)
    supp = qd.probs > 0
    logs = np.full(len(qd), -np.inf)
    logs[supp] = beta * np.log(qd.probs[supp])
    log_z = float(logsumexp(logs[supp]))
    esc = np.zeros(len(qd))
    esc[supp] = np.exp(logs[supp] - log_z)
    return EscortModel(qd, float(beta), FiniteDistribution(esc, qd.labels), log_z)


def arc_equivalence_check(u_row, q, params: RobustParams) -> float:
    """Gap between the criterion and its escort re-representation.

    The interior value equals ``-kappa log Z(q)`` plus the multiplier value with
    penalty ``kappa`` against the escort model ``q^beta / Z``. Returns the absolute gap.
    """
    if params.regime is not Regime.INTERIOR:
        raise RegimeError("representation check needs the interior regime")
    lhs = worst_case(u_row, q, params).value
    esc = escort_transform(q, params.beta)
    arc = RobustParams(1.0 / params.kappa, 0.0)
    rhs = -params.kappa * esc.log_norm + worst_case(u_row, esc.escort, arc).value
    return abs(lhs - rhs)


def is_affine_in_log_q(u_row, q, slope: float | None = None, tol: float = 1e-12) -> bool:
    """True when ``u = b1 + b2 log q``; with ``slope`` given, ``b2`` is pinned to it.

    The entropy profile is flat in ``mu`` exactly when ``b2 = 1/lam``: the distortion is
    then uniform for every ``mu``.
    """
    u = _row(u_row)
    lq = np.log(_dist(q, u.size).probs)
    scale = max(1.0, float(np.max(np.abs(u))))
    if slope is not None:
        return bool(np.ptp(u - slope * lq) <= tol * scale)
    design = np.column_stack([np.ones_like(lq), lq])
    coef, *_ = np.linalg.lstsq(design, u, rcond=None)
    resid = u - design @ coef
    return bool(np.max(np.abs(resid)) <= tol * scale)


@dataclass(frozen=True, eq=False)
class EntropyProfile:
    mu_grid: np.ndarray
    entropies: np.ndarray
    nondegenerate: bool
    strictly_decreasing: bool
    constant: bool
    min_drop: float


def entropy_mu_profile(u_row, q_a, lam: float, mu_grid, margin: float = 1e-12) -> EntropyProfile:
    """Entropy of the worst-case distortion along an increasing grid of ``mu``."""
    grid = np.asarray(mu_grid, float)
    if np.any(grid >= 1.0 / lam):
        raise RegimeError("all grid points must satisfy mu < 1/lam")
    if np.any(np.diff(grid) <= 0):
        raise DomainError("mu grid must be strictly increasing")
    hs = np.array([worst_case(u_row, q_a, RobustParams(lam, m)).entropy for m in grid])
    drops = -np.diff(hs)
    min_drop = float(drops.min()) if drops.size else math.inf
    return EntropyProfile(
        grid,
        hs,
        nondegenerate=not is_affine_in_log_q(u_row, q_a, slope=1.0 / lam),
        strictly_decreasing=bool(drops.size and min_drop > margin),
        constant=bool(np.ptp(hs) <= 1e-12),
        min_drop=min_drop,
    )

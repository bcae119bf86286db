"""Finite-simplex primitives: distributions, entropy, relative entropy, log-sum-exp.

Probabilities are stored in linear space. Anything exponential is done in log
space through :func:`log_sum_exp` and exponentiated once.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.special import entr, logsumexp, rel_entr

from .errors import AssumptionViolation, DomainError, StructuralError

NORM_TOL = 1e-12
RENORM_TOL = 1e-9

#: Sentinel for an infinite relative entropy. ``math.inf`` never collides with a finite result.
INF = math.inf


def _labels(labels, n, prefix):
    if labels is None:
        return tuple(f"{prefix}{i}" for i in range(n))
    labels = tuple(str(x) for x in labels)
    if len(labels) != n:
        raise StructuralError(f"{len(labels)} labels for {n} entries")
    if len(set(labels)) != n:
        raise StructuralError(f"duplicate labels: {labels}")
    return labels


def _as_simplex(probs) -> np.ndarray:
    p = np.array(probs, dtype=float).ravel()
    if p.size == 0:
        raise DomainError("empty probability vector")
    if not np.all(np.isfinite(p)):
        raise DomainError(f"non-finite probabilities: {p}")
    if np.any(p < -RENORM_TOL):
        raise DomainError(f"negative probabilities: {p}")
    p = np.clip(p, 0.0, None)
    total = p.sum()
    if abs(total - 1.0) > RENORM_TOL:
        raise DomainError(f"probabilities sum to {total!r}, not 1")
    if abs(total - 1.0) > 0.0:
        p = p / total
    return p


@dataclass(frozen=True, eq=False)
class FiniteDistribution:
    """Probability vector over an ordered set of labels.

    Inputs within 1e-9 of the simplex are renormalized; anything further off is rejected.
    """

    probs: np.ndarray
    labels: tuple = None

    def __post_init__(self):
        p = _as_simplex(self.probs)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "labels", _labels(self.labels, p.size, "x"))

    @classmethod
    def uniform(cls, labels_or_n) -> FiniteDistribution:
        if isinstance(labels_or_n, int):
            return cls(np.full(labels_or_n, 1.0 / labels_or_n))
        labels = tuple(labels_or_n)
        return cls(np.full(len(labels), 1.0 / len(labels)), labels)

    @classmethod
    def point_mass(cls, index: int, labels_or_n) -> FiniteDistribution:
        n = labels_or_n if isinstance(labels_or_n, int) else len(labels_or_n)
        p = np.zeros(n)
        p[index] = 1.0
        return cls(p, None if isinstance(labels_or_n, int) else tuple(labels_or_n))

    def __len__(self):
        return self.probs.size

    def __getitem__(self, key):
        if isinstance(key, str):
            return float(self.probs[self.index(key)])
        return float(self.probs[key])

    def index(self, label) -> int:
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise StructuralError(f"unknown label {label!r}; have {self.labels}") from None

    @property
    def support(self) -> tuple:
        return tuple(int(i) for i in np.flatnonzero(self.probs > 0))

    @property
    def full_support(self) -> bool:
        return bool(np.all(self.probs > 0))

    def as_dict(self) -> dict:
        return {lab: float(x) for lab, x in zip(self.labels, self.probs)}

    def __repr__(self):
        body = ", ".join(f"{lab}={x:.6g}" for lab, x in zip(self.labels, self.probs))
        return f"FiniteDistribution({body})"


@dataclass(frozen=True, eq=False)
class PayoffTable:
    """Bounded utility matrix ``u[a, y]``."""

    u: np.ndarray
    actions: tuple = None
    outcomes: tuple = None

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        if u.ndim != 2:
            raise StructuralError("payoff table must be a matrix")
        if not np.all(np.isfinite(u)):
            raise DomainError("payoffs must be finite")
        u.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "actions", _labels(self.actions, u.shape[0], "a"))
        object.__setattr__(self, "outcomes", _labels(self.outcomes, u.shape[1], "y"))

    def action_index(self, action) -> int:
        if isinstance(action, (int, np.integer)):
            return int(action)
        try:
            return self.actions.index(str(action))
        except ValueError:
            raise StructuralError(f"unknown action {action!r}") from None

    def row(self, action) -> np.ndarray:
        return self.u[self.action_index(action)]


@dataclass(frozen=True, eq=False)
class StructuredModel:
    """Per-action outcome distributions ``q[a, y]``."""

    q: np.ndarray
    actions: tuple = None
    outcomes: tuple = None
    name: str = ""

    def __post_init__(self):
        q = np.array(self.q, dtype=float)
        if q.ndim != 2:
            raise StructuralError("structured model must be a matrix (actions x outcomes)")
        q = np.vstack([_as_simplex(row) for row in q])
        q.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "actions", _labels(self.actions, q.shape[0], "a"))
        object.__setattr__(self, "outcomes", _labels(self.outcomes, q.shape[1], "y"))

    def row(self, action) -> FiniteDistribution:
        i = action if isinstance(action, (int, np.integer)) else self.actions.index(str(action))
        return FiniteDistribution(self.q[i], self.outcomes)

    @property
    def full_support(self) -> bool:
        return bool(np.all(self.q > 0))

    def require_full_support(self):
        if not self.full_support:
            raise AssumptionViolation(f"model {self.name or ''} lacks full support")


def _probs(p) -> np.ndarray:
    return p.probs if isinstance(p, FiniteDistribution) else np.asarray(p, dtype=float)


def shannon_entropy(p) -> float:
    """Shannon entropy in nats with ``0 log 0 = 0``."""
    return float(entr(_probs(p)).sum())


def relative_entropy(p, q) -> float:
    """``R(p||q)`` in nats; returns :data:`INF` when ``p`` is not absolutely continuous wrt ``q``."""
    if isinstance(p, FiniteDistribution) and isinstance(q, FiniteDistribution):
        if p.labels != q.labels:
            raise StructuralError(f"label mismatch: {p.labels} vs {q.labels}")
    pa, qa = _probs(p), _probs(q)
    if pa.shape != qa.shape:
        raise StructuralError(f"shape mismatch: {pa.shape} vs {qa.shape}")
    value = float(rel_entr(pa, qa).sum())
    if math.isinf(value):
        return INF
    return max(value, 0.0)


def log_sum_exp(xs: Sequence[float], weights: Sequence[float] | None = None) -> float:
    """``log sum_i w_i exp(x_i)`` via max-shift. Zero weights drop their term."""
    x = np.asarray(xs, dtype=float).ravel()
    if x.size == 0:
        raise DomainError("log_sum_exp of an empty vector")
    if weights is None:
        return float(logsumexp(x))
    w = np.asarray(weights, dtype=float).ravel()
    if w.shape != x.shape:
        raise StructuralError("weights and xs differ in length")
    if np.any(w < 0):
        raise DomainError("weights must be non-negative")
    keep = w > 0
    if not np.any(keep):
        raise DomainError("all weights are zero")
    return float(logsumexp(x[keep], b=w[keep]))

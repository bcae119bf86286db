"""Packaged scenarios.

``cycle-env`` is a constructed safe-versus-risky environment with one structured model.
Its risky arm misfits more than its safe arm, so the misspecification concern ranges over
``[D_s/c, D_r/c]`` depending on the mix. Without complexity aversion the agent is
indifferent at an interior mix and cycles. The safe arm pays a constant and its model is
uniform over four outcomes, so its worst-case distortion is maximally diffuse. This is the
entropy gap that lets complexity aversion remove the cycle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .info_core import (
    FiniteDistribution,
    PayoffTable,
    StructuredModel,
    relative_entropy,
)
from .learning_dynamics import Environment

PRESET_NAMES = (
    "running-example",
    "cycle-env",
    "growth-counterexample",
    "home-bias-sweep",
    "chamberlain-gap",
    "ri-2x2",
)

PRESET_DESCRIPTIONS = {
    "running-example": "Safe vs risky arm with optimistic/pessimistic models; worst-case distortions at lam=1",
    "cycle-env": "Constructed two-action environment with lambda-cycles at mu_bar=0 and safe convergence above the certified threshold",
    "growth-counterexample": "Two-state growth portfolio where complexity aversion shrinks the misspecification loss",
    "home-bias-sweep": "Domestic vs foreign asset premium across concentration epsilon and complexity aversion mu",
    "chamberlain-gap": "Two-date CRRA portfolio entropy-gap certificate (feasible lambda range)",
    "ri-2x2": "Robust rational inattention with two states and two actions, including the near-corner profile",
}


def running_example(p_h: float = 0.7, p_l: float = 0.3, u_bar: float = 0.4, p_true_r: float = 0.5) -> dict:
    """Risky arm pays 1 on ``g`` and 0 on ``b``; safe arm pays ``u_bar``.

    Models disagree on the risky arm only. The safe arm is uniform under both.
    """
    outcomes = ("g", "b")
    actions = ("r", "s")
    payoffs = PayoffTable([[1.0, 0.0], [u_bar, u_bar]], actions, outcomes)
    q_h = StructuredModel([[p_h, 1 - p_h], [0.5, 0.5]], actions, outcomes, name="qH")
    q_l = StructuredModel([[p_l, 1 - p_l], [0.5, 0.5]], actions, outcomes, name="qL")
    p_star = StructuredModel([[p_true_r, 1 - p_true_r], [0.5, 0.5]], actions, outcomes, name="p*")
    return {"payoffs": payoffs, "models": (q_h, q_l), "true_dgp": p_star}


def correct_spec_env(mu_bar: float = 0.5, c: float = 1.0, lambda_cap: float = 1.0) -> Environment:
    """Running example whose true DGP equals the optimistic model."""
    ex = running_example(p_true_r=0.7)
    q_h, q_l = ex["models"]
    return Environment(
        ex["payoffs"], q_h, (q_h, q_l), FiniteDistribution.uniform(("qH", "qL")),
        c=c, mu_bar=mu_bar, lambda_cap=lambda_cap, name="correct-spec",
    )


@dataclass(frozen=True)
class CycleSpec:
    u_risky: tuple = (1.0, 0.0, 0.0, 0.0)
    u_safe: float = 0.6
    q_risky: tuple = (0.7, 0.1, 0.1, 0.1)
    p_risky: tuple = (0.55, 0.15, 0.15, 0.15)
    p_safe: tuple = (0.31, 0.31, 0.19, 0.19)
    c: float = 0.045
    lambda_cap: float = 1.3


CYCLE = CycleSpec()

#: Threshold from the constructive bound with mu_bar0 = 0 on the interval below.
#: Regenerated by scripts/build_cycle_env.py and pinned by the test suite.
CYCLE_MUBAR_STAR = 0.5587197602964697


def cycle_env(mu_bar: float = 0.0, spec: CycleSpec = CYCLE, lambda0: float = 0.0) -> Environment:
    outcomes = ("y1", "y2", "y3", "y4")
    actions = ("r", "s")
    payoffs = PayoffTable([list(spec.u_risky), [spec.u_safe] * 4], actions, outcomes)
    q = StructuredModel([list(spec.q_risky), [0.25] * 4], actions, outcomes, name="q")
    p_star = StructuredModel([list(spec.p_risky), list(spec.p_safe)], actions, outcomes, name="p*")
    return Environment(
        payoffs, p_star, (q,), FiniteDistribution([1.0], ("q",)),
        c=spec.c, mu_bar=mu_bar, lambda_cap=spec.lambda_cap, lambda0=lambda0, name="cycle-env",
    )


def cycle_lambda_interval(spec: CycleSpec = CYCLE) -> tuple:
    """Range of equilibrium concerns: pure-safe misfit to pure-risky misfit, over c."""
    d_r = relative_entropy(np.array(spec.p_risky), np.array(spec.q_risky))
    d_s = relative_entropy(np.array(spec.p_safe), np.full(4, 0.25))
    return d_s / spec.c, d_r / spec.c


def ri_2x2(mu: float = 0.3) -> dict:
    """Risky action ``a1`` pays 3 or 0, insured ``a2`` pays 2 or 1; state ``w2`` is bad for both."""
    return {
        "states": ("w1", "w2"),
        "actions": ("a1", "a2"),
        "v": [[3.0, 0.0], [2.0, 1.0]],
        "g": [0.6, 0.4],
        "xi": 0.5,
        "lam": 1.0,
        "mu": mu,
    }


def ri_identity(mu: float = 0.3) -> dict:
    """Matching-pennies style payoffs ``v = I``."""
    return {
        "states": ("w1", "w2"),
        "actions": ("a1", "a2"),
        "v": [[1.0, 0.0], [0.0, 1.0]],
        "g": [0.6, 0.4],
        "xi": 0.5,
        "lam": 1.0,
        "mu": mu,
    }


GROWTH_COUNTEREXAMPLE = {
    "gross_returns": [[3.0, 1.0], [1.0, 4.0]],
    "p_true": [0.5, 0.5],
    "p_mis": [9 / 11, 2 / 11],
    "mu_grid": [round(0.1 * k, 10) for k in range(1, 10)],
}

HOME_BIAS_SWEEP = {
    "N": 10,
    "delta": 0.5,
    "lam": 1.0,
    "epsilons": [1e-2, 1e-3, 1e-4, 1e-6, 1e-8],
    "mus": [0.0, 0.1, 0.3, 0.5, 0.7, 0.9],
}

CHAMBERLAIN = {
    "gamma": 2.0,
    "R_H": 1.3,
    "R_L": 0.7,
    "r_f": 1.02,
    "w0": 1.0,
    "q_h": 0.6,
    "pbar": 0.9,
    "lambda_interval": [0.5, 0.52],
}

CHAMBERLAIN_WIDE = dict(CHAMBERLAIN, lambda_interval=[0.5, 1.0])

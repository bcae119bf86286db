"""Command-line scenario runner.

Every subcommand resolves a ``ScenarioConfig`` (file, preset and flags), runs it, checks the
invariants of the produced table, and writes a report. JSON output has sorted keys. CSV output
has a header row. Outputs are written only after the run succeeds.

Exit codes: 0 success, 2 config error, 3 precondition error, 4 non-convergence,
5 internal-consistency error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass

import numpy as np

from . import __version__, presets
from .capacity import (
    capacity_profile,
    check_assumption_C1,
    complexity_functional,
    solve_budget,
)
from .config import KINDS, ScenarioConfig, load_file, resolve
from .equilibrium import (
    StaticGame,
    chamberlain_gap_certificate,
    find_mixed_equilibria,
    verify_triple,
)
from .errors import (
    ConfigError,
    InternalConsistencyError,
    NonConvergenceError,
    PreconditionError,
    RobustCXError,
)
from .growth import (
    GrowthProblem,
    check_regularity_2,
    expected_aggregator,
    home_bias_sweep,
    misspecification_loss,
    optimal_portfolio,
    sampled_choice_rule,
)
from .info_core import FiniteDistribution, PayoffTable, StructuredModel, shannon_entropy
from .learning_dynamics import (
    Environment,
    cycle_diagnostic,
    simulate_batch,
    spawn_seeds,
)
from .rational_inattention import (
    RIProblem,
    log_odds_check,
    probability_neglect_profile,
    solve_saddle,
)
from .robust_static import (
    RobustParams,
    arc_equivalence_check,
    bayes_limit,
    best_reply,
    escort_transform,
    posterior_value,
    worst_case,
    worst_case_corner,
)

EXIT_OK, EXIT_CONFIG, EXIT_PRECONDITION, EXIT_NONCONVERGENCE, EXIT_INTERNAL = 0, 2, 3, 4, 5

SUBCOMMANDS = {
    "static-value": "static",
    "simulate": "simulate",
    "equilibrium": "equilibrium",
    "capacity": "capacity",
    "ri-solve": "ri",
    "growth-loss": "growth",
    "home-bias": "home-bias",
    "representation-check": "representation-check",
    "chamberlain-gap": "chamberlain",
}


@dataclass
class RunReport:
    config: dict
    version: str
    wall_time_s: float
    results: dict
    checks: dict
    header: list
    rows: list

    def payload(self, include_time: bool = True) -> dict:
        out = {
            "config": self.config,
            "version": self.version,
            "results": self.results,
            "checks": self.checks,
            "table": {"header": self.header, "rows": self.rows},
        }
        if include_time:
            out["wall_time_s"] = self.wall_time_s
        return out

    def to_json(self, include_time: bool = True) -> str:
        return json.dumps(_jsonable(self.payload(include_time)), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for r in self.rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
        return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    return x


# Environment construction


def _explicit_environment(spec: dict, mu_bar: float) -> Environment:
    actions, outcomes = tuple(spec["actions"]), tuple(spec["outcomes"])
    payoffs = PayoffTable(spec["u"], actions, outcomes)
    models = tuple(StructuredModel(q, actions, outcomes, name=n) for n, q in spec["models"].items())
    true_dgp = StructuredModel(spec["true_dgp"], actions, outcomes, name="p*")
    names = tuple(m.name for m in models)
    prior = FiniteDistribution(spec["prior"], names) if spec.get("prior") else FiniteDistribution.uniform(names)
    return Environment(
        payoffs, true_dgp, models, prior, c=float(spec.get("c", 1.0)), mu_bar=mu_bar,
        lambda_cap=float(spec.get("lambda_cap", 1.0)), lambda0=float(spec.get("lambda0", 0.0)),
    )


def build_environment(env, mu_bar: float = 0.0) -> Environment:
    if env == "cycle-env":
        return presets.cycle_env(mu_bar)
    if env == "correct-spec":
        return presets.correct_spec_env(mu_bar)
    if env == "running-example":
        ex = presets.running_example()
        names = tuple(m.name for m in ex["models"])
        return Environment(ex["payoffs"], ex["true_dgp"], ex["models"], FiniteDistribution.uniform(names),
                           mu_bar=mu_bar, name="running-example")
    return _explicit_environment(env, mu_bar)


def _require(checks: dict, keys) -> None:
    failed = [k for k in keys if not checks[k]]
    if failed:
        raise InternalConsistencyError(f"output failed invariant checks: {', '.join(failed)}")


# Scenario runners. Each returns (results, checks, header, rows).


def run_static(cfg: ScenarioConfig):
    p = cfg.parameters
    env = build_environment(p["environment"])
    pi = FiniteDistribution(p["pi"], env.prior.labels) if p["pi"] is not None else env.prior
    lam = float(p["lam"])
    header = ["mu", "action", "model", *[f"p_hat_{y}" for y in env.payoffs.outcomes], "value", "entropy", "kl_to_model"]
    rows, per_mu = [], []
    self_consistent = True
    for mu in p["mus"]:
        params = RobustParams(lam, float(mu))
        for a in env.payoffs.actions:
            for m in env.models:
                r = worst_case(env.payoffs.row(a), m.row(a), params)
                direct = float(r.distortion.probs @ env.payoffs.row(a)) + r.kl_to_model / lam + float(mu) * r.entropy
                self_consistent &= abs(direct - r.value) <= 1e-10 * max(1.0, abs(r.value))
                rows.append([float(mu), a, m.name, *r.distortion.probs.tolist(), r.value, r.entropy, r.kl_to_model])
        br = best_reply(env.payoffs, env.models, pi, params)
        per_mu.append({
            "mu": float(mu),
            "posterior_values": {a: posterior_value(env.payoffs, a, env.models, pi, params) for a in env.payoffs.actions},
            "best_reply": br.choice,
        })
    checks = {"value_self_consistency": bool(self_consistent)}
    _require(checks, checks)
    return {"lam": lam, "pi": pi.as_dict(), "by_mu": per_mu}, checks, header, rows


def run_representation(cfg: ScenarioConfig):
    p = cfg.parameters
    u, q = np.asarray(p["u"], float), FiniteDistribution(p["q"])
    lam, mu = float(p["lam"]), float(p["mu"])
    params = RobustParams(lam, mu)
    wc = worst_case(u, q, params)
    esc = escort_transform(q, params.beta)
    arc = arc_equivalence_check(u, q, params)
    corner = worst_case_corner(u, q, lam)
    near = worst_case(u, q, RobustParams(lam, 1.0 / lam - 1e-6))
    bayes = bayes_limit(u, q, mu)
    results = {
        "kappa": params.kappa,
        "beta": params.beta,
        "worst_case": {"distortion": wc.distortion.probs, "value": wc.value, "entropy": wc.entropy},
        "escort": {"probs": esc.escort.probs, "log_norm": esc.log_norm},
        "arc_residual": arc,
        "corner": {"value": corner.value, "distortion": corner.distortion.probs},
        "interior_near_corner_value": near.value,
        "bayes_limit_value": bayes.value,
    }
    checks = {"arc_residual_small": arc < 1e-9, "corner_continuity": abs(near.value - corner.value) < 1e-3}
    _require(checks, checks)
    header = ["quantity", "value"]
    rows = [["arc_residual", arc], ["corner_value", corner.value], ["interior_near_corner_value", near.value],
            ["worst_case_value", wc.value], ["bayes_limit_value", bayes.value]]
    return results, checks, header, rows


def run_simulate(cfg: ScenarioConfig):
    p = cfg.parameters
    env = build_environment(p["environment"], float(p["mu_bar"]))
    T, n = p["horizon"], p["n_seeds"]
    window = p["window"] or max(T // 10, 1)
    seeds = [cfg.seed] if n == 1 else spawn_seeds(cfg.seed, n)
    trajs = simulate_batch(env, T, seeds, p["snapshot_every"], workers=p["workers"])
    header = ["run", "final_lambda", "final_mu", "final_choice", "verdict", "switch_count",
              *[f"freq_{a}" for a in env.payoffs.actions], "realized_mean_payoff", "lambda_clip_count"]
    rows, runs = [], []
    for k, tr in enumerate(trajs):
        diag = cycle_diagnostic(tr, window)
        s = tr.summary()
        s["seed"] = cfg.seed if n == 1 else f"{cfg.seed}/spawn{k}"
        s.update(verdict=diag.verdict, switch_count=diag.switch_count, window_freqs=diag.window_freqs)
        runs.append(s)
        rows.append([k, tr.final_state.lambda_t, tr.final_state.mu_t, env.payoffs.actions[tr.final_choice],
                     diag.verdict, diag.switch_count, *tr.final_alpha.probs.tolist(), tr.realized_mean_payoff,
                     tr.clip_count])
    lam_ok = all(0 <= tr.lambdas.min() and tr.lambdas.max() <= env.lambda_cap for tr in trajs)
    mu_ok = all(np.array_equal(tr.mus, env.mu_bar * tr.lambdas) for tr in trajs)
    checks = {"lambda_in_range": bool(lam_ok), "mu_equals_mubar_lambda": bool(mu_ok)}
    _require(checks, checks)
    pay = np.array([tr.realized_mean_payoff for tr in trajs])
    results = {
        "environment": env.name or "custom",
        "mu_bar": env.mu_bar,
        "horizon": T,
        "window": window,
        "runs": runs,
        "mean_payoff": float(pay.mean()),
        "payoff_standard_error": float(pay.std(ddof=1) / math.sqrt(n)) if n > 1 else None,
    }
    return results, checks, header, rows


def run_equilibrium(cfg: ScenarioConfig):
    p = cfg.parameters
    env = build_environment(p["environment"], float(p["mu_bar"]))
    c = float(p["c"]) if p["c"] is not None else env.c
    game = StaticGame(env.payoffs, env.models, env.true_dgp)
    triples = find_mixed_equilibria(game, c, env.mu_bar, float(p["resolution"]))
    rechecked = [verify_triple(game, c, env.mu_bar, t.alpha, t.eta, t.tau) for t in triples]
    checks = {"triples_reverified": all(max(r.values()) < 1e-8 for r in rechecked)}
    _require(checks, checks)
    header = [*[f"alpha_{a}" for a in env.payoffs.actions], *[f"eta_{m}" for m in game.model_labels],
              "tau", "fit_residual", "tau_residual", "best_reply_residual"]
    rows = [[*t.alpha.probs.tolist(), *t.eta.probs.tolist(), t.tau, r["fit"], r["tau"], r["best_reply"]]
            for t, r in zip(triples, rechecked)]
    return {"c": c, "mu_bar": env.mu_bar, "triples": [t.as_dict() for t in triples]}, checks, header, rows


def run_capacity(cfg: ScenarioConfig):
    p = cfg.parameters
    env = build_environment(p["environment"])
    lam = float(p["lam"])
    pi = FiniteDistribution(p["pi"], env.prior.labels)
    prof = capacity_profile(env.payoffs, env.models, lam, p["action"], pi, p["mu_grid"])
    c1 = check_assumption_C1(env.payoffs, env.models, lam, p["action"])
    results = {
        "lam": lam,
        "action": prof.action,
        "limits": list(prof.limits),
        "strictly_decreasing": prof.strictly_decreasing,
        "assumption_C1": {"nondegenerate": c1.nondegenerate, "unique_min": c1.unique_min},
    }
    checks = {"decreasing_when_C1_holds": prof.strictly_decreasing or not c1.holds}
    if p["B"] is not None:
        sol = solve_budget(env.payoffs, env.models, lam, p["action"], pi, float(p["B"]))
        results["budget"] = {"B": sol.B, "mu_B": sol.mu_B, "binding": sol.binding,
                             "kkt_residual": sol.kkt_residual, "objective": sol.objective}
        back = complexity_functional(env.payoffs, env.models, lam, sol.mu_B, p["action"], pi)
        checks["budget_round_trip"] = (not sol.binding) or abs(back - sol.B) < 1e-8
    _require(checks, checks)
    rows = [[float(m), float(v)] for m, v in zip(prof.mu_grid, prof.C_values)]
    return results, checks, ["mu", "C_a"], rows


def run_ri(cfg: ScenarioConfig):
    p = cfg.parameters
    prob = RIProblem.from_dict({k: p[k] for k in ("v", "g", "xi", "lam", "mu", "states", "actions")})
    kw = {"damping": float(p["damping"]), "tol": float(p["tol"]), "max_iters": int(p["max_iters"])}
    sol = solve_saddle(prob, **kw)
    interior = [a for a in range(len(prob.actions)) if sol.psi_bar.probs[a] > 1e-9]
    lo = [log_odds_check(sol, prob, a, b, w) for a in interior for b in interior for w in range(len(prob.states))]
    scale_id = float(np.max(np.abs(sol.scales * sol.m_star.probs - prob.xi * prob.g.probs)))
    checks = {
        "stationarity": sol.stationarity < 1e-8,
        "log_odds": max(lo, default=0.0) < 1e-8,
        "scale_identity": scale_id < 1e-12,
    }
    _require(checks, checks)
    results = {"solution": sol.as_dict(), "max_log_odds_residual": max(lo, default=0.0)}
    header = ["mu", *[f"m_star_{w}" for w in prob.states], *[f"scale_{w}" for w in prob.states], "entropy_m_star"]
    if p["mu_grid"] is not None:
        prof = probability_neglect_profile(prob, p["mu_grid"], **kw)
        results["neglect_profile"] = {
            "focal_state": prob.states[prof.focal_state],
            "entropy_decreasing": prof.entropy_decreasing,
            "focal_scale_ratio": prof.focal_scale_ratio,
            "other_scales_growing": prof.other_scales_growing,
        }
        rows = prof.rows()
    else:
        rows = [[prob.mu, *sol.m_star.probs.tolist(), *sol.scales.tolist(), shannon_entropy(sol.m_star)]]
    return results, checks, header, rows


def run_growth(cfg: ScenarioConfig):
    p = cfg.parameters
    gross = np.asarray(p["gross_returns"], float)
    if np.any(gross <= 0):
        raise PreconditionError("gross returns must be positive")
    u = np.log(gross)
    base = optimal_portfolio(GrowthProblem(u, p["p_true"], 0.0))
    rule = sampled_choice_rule(base.alpha, p["p_true"], u)
    hull = check_regularity_2(p["p_mis"], rule)
    rows, losses = [], []
    for mu in p["mu_grid"]:
        best = optimal_portfolio(GrowthProblem(u, p["p_true"], float(mu)))
        mis = optimal_portfolio(GrowthProblem(u, p["p_mis"], float(mu)))
        loss = best.value - expected_aggregator(mis.alpha, p["p_true"], u, float(mu))
        losses.append(loss)
        rows.append([float(mu), *best.alpha.probs.tolist(), *mis.alpha.probs.tolist(), loss])
    n = u.shape[0]
    header = ["mu", *[f"alpha_true_{k + 1}" for k in range(n)], *[f"alpha_mis_{k + 1}" for k in range(n)], "loss"]
    checks = {"loss_nonnegative": all(x >= -1e-12 for x in losses)}
    _require(checks, checks)
    results = {
        "alpha_star_0": base.alpha.probs,
        "sampled_rule": {"conditional": rule.conditional, "marginal": rule.marginal,
                         "posteriors": {str(k + 1): v for k, v in rule.posteriors.items()}},
        "regularity_2": {"holds": hull.holds, "weights": hull.weights, "certificate": hull.certificate},
        "losses": dict(zip((str(float(m)) for m in p["mu_grid"]), losses)),
        "loss_0_closed_form": misspecification_loss(p["p_true"], p["p_mis"], u, 0.0) if 0.0 in p["mu_grid"] else None,
    }
    return results, checks, header, rows


def run_home_bias(cfg: ScenarioConfig):
    p = cfg.parameters
    rows_d = home_bias_sweep(int(p["N"]), float(p["delta"]), float(p["lam"]), p["epsilons"], p["mus"])
    rows = [[r["epsilon"], r["mu"], r["premium"], r["v_d"], r["v_f"]] for r in rows_d]
    zero_ok = all(abs(r["premium"]) <= 1e-12 for r in rows_d if r["mu"] == 0)
    pos_ok = all(r["premium"] > 0 for r in rows_d if r["mu"] > 0)
    mono = True
    for mu in p["mus"]:
        seq = [r["premium"] for r in sorted((r for r in rows_d if r["mu"] == mu), key=lambda r: -r["epsilon"])]
        mono &= all(b >= a - 1e-12 for a, b in zip(seq, seq[1:]))
    checks = {"zero_at_mu0": zero_ok, "positive_for_mu_positive": pos_ok, "monotone_in_concentration": bool(mono)}
    _require(checks, checks)
    return {"N": p["N"], "delta": p["delta"], "lam": p["lam"]}, checks, ["epsilon", "mu", "premium", "v_d", "v_f"], rows


def run_chamberlain(cfg: ScenarioConfig):
    p = cfg.parameters
    rep = chamberlain_gap_certificate(
        float(p["gamma"]), float(p["R_H"]), float(p["R_L"]), float(p["r_f"]), float(p["w0"]), float(p["q_h"]),
        p["lambda_interval"], float(p["pbar"]), n_lambda=int(p["n_lambda"]), n_mubar=int(p["n_mubar"]),
    )
    checks = {"rows_finite": bool(np.all(np.isfinite(rep.rows)))}
    _require(checks, checks)
    header = ["lambda", "mu_bar", "H_s", "H_r", "Delta_s_minus_r", "LL_mass"]
    return rep.as_dict(), checks, header, rep.rows.tolist()


RUNNERS = {
    "static": run_static,
    "simulate": run_simulate,
    "equilibrium": run_equilibrium,
    "capacity": run_capacity,
    "ri": run_ri,
    "growth": run_growth,
    "home-bias": run_home_bias,
    "representation-check": run_representation,
    "chamberlain": run_chamberlain,
}
assert set(RUNNERS) == set(KINDS)


def run(cfg: ScenarioConfig) -> RunReport:
    t0 = time.perf_counter()
    results, checks, header, rows = RUNNERS[cfg.kind](cfg)
    return RunReport(cfg.echo(), __version__, time.perf_counter() - t0, results, checks, header, rows)


def list_presets() -> list:
    return [{"name": n, "description": presets.PRESET_DESCRIPTIONS[n]} for n in presets.PRESET_NAMES]


def _write_atomic(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".robustcx-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robustcx", description="Complexity-averse robust control scenarios")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON or YAML scenario file")
        sp.add_argument("--preset", help="named preset supplying default parameters")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output path (stdout when omitted)")
        sp.add_argument("--format", choices=("csv", "json"))
        sp.add_argument("--horizon", type=int)
    sp = sub.add_parser("presets")
    sp.add_argument("--format", choices=("csv", "json"), default="json")
    sp.add_argument("--out")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "presets":
            cat = list_presets()
            if args.format == "csv":
                text = "name,description\n" + "".join(f"{c['name']},\"{c['description']}\"\n" for c in cat)
            else:
                text = json.dumps(cat, indent=2, sort_keys=True) + "\n"
        else:
            data = load_file(args.config) if args.config else {}
            cfg = resolve(data, kind=SUBCOMMANDS[args.command], preset=args.preset, seed=args.seed,
                          out=args.out, fmt=args.format, horizon=args.horizon)
            report = run(cfg)
            text = report.to_csv() if cfg.output_format == "csv" else report.to_json()
            args.out = cfg.output_path
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PreconditionError as exc:
        print(f"precondition error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except NonConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (TypeError, ValueError, KeyError) as exc:
        print(f"config error: invalid parameter value ({exc})", file=sys.stderr)
        return EXIT_CONFIG
    except (InternalConsistencyError, RobustCXError) as exc:
        print(f"internal consistency error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    if args.out:
        _write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())

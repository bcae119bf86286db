"""Regenerate and validate the certified threshold of the ``cycle-env`` preset.

The environment is built by hand (one structured model, two actions) so that at
``mu_bar = 0`` the only equilibrium is interior and the agent cycles, while above the
constructive threshold only the safe action survives. This script

1. computes the threshold from the entropy-gap bound,
2. checks the construction with a plain-float grid scan of ``V_r - V_s`` that shares no
   code with the library, and
3. confirms the equilibrium solver's triples at ``mu_bar = 0`` and at the threshold.

Run with ``--write`` to update ``CYCLE_MUBAR_STAR`` in ``robustcx/presets.py``.
"""

from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

from oracles import two_action_equilibrium_scan

from robustcx import presets
from robustcx.equilibrium import cycle_elimination_threshold, find_mixed_equilibria


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--write", action="store_true", help="rewrite the pinned constant in presets.py")
    args = parser.parse_args(argv)

    env = presets.cycle_env()
    game = env.static_game()
    interval = presets.cycle_lambda_interval()
    t = cycle_elimination_threshold(game, "r", "s", interval)
    print(f"lambda interval      {interval[0]:.6f} .. {interval[1]:.6f}")
    print(f"entropy gap H*       {t.entropy_gap_min:.6f}")
    print(f"M0 at mu_bar0        {t.max_delta_at_mubar0:.6f}")
    print(f"epsilon              {t.epsilon:.6f}  (admissible: {t.admissible})")
    print(f"threshold mu_bar*    {t.mubar_star!r}")

    u, q, p = game.payoffs.u, game.models[0].q, game.true_dgp.q
    _, d0 = two_action_equilibrium_scan(u, q, p, env.c, 0.0)
    _, d1 = two_action_equilibrium_scan(u, q, p, env.c, t.mubar_star)
    crossing = d0[0] > 0 > d0[-1]
    safe_only = bool(np.all(d1 < 0))
    print(f"grid oracle at 0:    V_r - V_s changes sign on [0, 1]: {crossing}")
    print(f"grid oracle at star: V_r < V_s everywhere:           {safe_only}")

    eq0 = find_mixed_equilibria(game, env.c, 0.0)
    eq1 = find_mixed_equilibria(game, env.c, t.mubar_star)
    print("solver at 0:         " + ", ".join(f"alpha(r)={e.alpha['r']:.5f}" for e in eq0))
    print("solver at star:      " + ", ".join(f"alpha(r)={e.alpha['r']:.5f}" for e in eq1))
    ok = (crossing and safe_only and t.admissible and any(0 < e.alpha["r"] < 1 for e in eq0)
          and [e.alpha.probs.tolist() for e in eq1] == [[0.0, 1.0]])
    print("construction valid" if ok else "construction INVALID")
    if not ok:
        return 1
    if args.write:
        path = ROOT / "src" / "robustcx" / "presets.py"
        text = path.read_text()
        new = re.sub(r"^CYCLE_MUBAR_STAR = .*$", f"CYCLE_MUBAR_STAR = {t.mubar_star!r}", text, flags=re.MULTILINE)
        path.write_text(new)
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

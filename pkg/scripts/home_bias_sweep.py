"""Home-bias premium across downside concentration, complexity aversion and downside mass.

Writes the premium on an (epsilon, mu) grid, and compares the exact epsilon -> 0 limit with
``mu log N`` as the downside mass ``delta`` approaches one.
"""

from __future__ import annotations

import argparse
import csv
import math

from robustcx.growth import home_bias_limit, home_bias_sweep
from robustcx.presets import HOME_BIAS_SWEEP


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="home_bias.csv")
    args = parser.parse_args(argv)

    p = HOME_BIAS_SWEEP
    rows = home_bias_sweep(p["N"], p["delta"], p["lam"], p["epsilons"], p["mus"])
    with open(args.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["epsilon", "mu", "premium", "v_d", "v_f"])
        w.writeheader()
        w.writerows(rows)
    print(f"wrote {args.out} ({len(rows)} rows)")
    print("epsilon -> 0 limit at mu = 0.5, N = 10 against mu log N = %.6f" % (0.5 * math.log(10)))
    for delta in (0.5, 0.9, 0.99, 0.999, 0.9999):
        print(f"  delta = {delta:<7} limit = {home_bias_limit(10, delta, 1.0, 0.5):.6f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

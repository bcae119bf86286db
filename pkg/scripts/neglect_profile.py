"""Probability neglect in robust rational inattention.

Solves the 2x2 instance along a grid of ``mu`` approaching ``1/lam`` and writes the
worst-case state distribution, the effective logit scales and the entropy of ``m*``.
"""

from __future__ import annotations

import argparse
import csv

import numpy as np

from robustcx.presets import ri_2x2
from robustcx.rational_inattention import RIProblem, probability_neglect_profile


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--points", type=int, default=21)
    parser.add_argument("--out", default="neglect_profile.csv")
    args = parser.parse_args(argv)

    prob = RIProblem.from_dict(ri_2x2())
    grid = np.append(np.linspace(0.0, 0.99, args.points - 1), 1.0 - 1e-3)
    prof = probability_neglect_profile(prob, grid)
    header = ["mu", *[f"m_star_{w}" for w in prob.states], *[f"scale_{w}" for w in prob.states], "entropy_m_star"]
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(prof.rows())
    focal = prob.states[prof.focal_state]
    print(f"focal state {focal}: m* = {prof.m_star[-1, prof.focal_state]:.6f} at mu = {grid[-1]}")
    print(f"entropy decreasing: {prof.entropy_decreasing}; other scales growing: {prof.other_scales_growing}")
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

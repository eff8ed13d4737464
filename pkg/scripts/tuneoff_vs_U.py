"""Tune-off right splitting as a function of the charging energy.

Prints the smallest valid delta_R root for a log-spaced U grid next to the
large-U estimate sqrt(|E_L| delta_L), plus the exact singlet/triplet ratio at
each root as a check.
"""

import argparse
import math

import numpy as np

from cotunnel.closedform import NoValidRoot, solve_tuneoff_delta_r
from cotunnel.model import ModelParams, Scenario
from cotunnel.tmatrix import SingularDenominator, amplitude_report


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--EL", type=float, default=-2.0)
    ap.add_argument("--dL", type=float, default=0.5)
    ap.add_argument("--umin", type=float, default=0.1)
    ap.add_argument("--umax", type=float, default=1e6)
    ap.add_argument("--points", type=int, default=15)
    args = ap.parse_args()

    scenario = Scenario.parse("single:du")
    estimate = math.sqrt(abs(args.EL) * args.dL)
    print(f"{'U':>12} {'delta_R':>14} {'asymptote':>10} {'|s|/|t|':>10}")
    for U in np.geomspace(args.umin, args.umax, args.points):
        try:
            dR = solve_tuneoff_delta_r(args.EL, args.dL, float(U))[0]
        except NoValidRoot:
            print(f"{U:12.4g} {'no root':>14}")
            continue
        p = ModelParams(E_L=args.EL, delta_L=args.dL, delta_R=dR, U=float(U))
        try:
            reps = {r.label: r.exact for r in amplitude_report(scenario, p)}
            ratio = f"{abs(reps['dn_s']) / abs(reps['dn_t']):10.1e}"
        except SingularDenominator:
            ratio = f"{'singular':>10}"
        print(f"{U:12.4g} {dR:14.10f} {estimate:10.6f} {ratio}")


if __name__ == "__main__":
    main()

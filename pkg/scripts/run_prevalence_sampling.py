#!/usr/bin/env python3
"""Monte-Carlo sample of the linear-shift prevalence claim.

Draws xi from a box and records, for each shifted Hamiltonian h - xi.I, the
largest ladder gamma at which the Morse check passes.  Desk-scale evidence
only: the fraction is recorded, never asserted.
"""

import argparse
import csv

import numpy as np

from driftbench.steepness import sample_prevalence
from driftbench.systems import QuadraticHamiltonian, SeriesHamiltonian, degenerate_steep


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--tau", type=float, default=10.5)  # needs tau > 2(n^2+1) = 10
    ap.add_argument("--xi-box", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="prevalence.csv")
    args = ap.parse_args()

    cases = {
        "identity-quadratic": QuadraticHamiltonian(np.eye(2)),
        "degenerate-quadratic": QuadraticHamiltonian(np.diag([1.0, 0.0])),
        "zero": QuadraticHamiltonian(np.zeros((2, 2))),
        "degenerate-steep-toy": SeriesHamiltonian(degenerate_steep(0.0).hamiltonian.integrable),
    }
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["case", "samples", "fraction", "gamma_histogram"])
        for name, h in cases.items():
            rep = sample_prevalence(
                h, args.tau, args.samples, args.xi_box, n=2,
                L_max=2, grid_res=17, seed=args.seed,
            )
            hist = ";".join(f"{g}:{c}" for g, c in sorted(rep.histogram.items()))
            writer.writerow([name, rep.num_samples, rep.fraction, hist])
            print(f"{name:<24} fraction={rep.fraction}  histogram={hist}")
    print(f"-> {args.out}")


if __name__ == "__main__":
    main()

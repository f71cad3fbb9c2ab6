#!/usr/bin/env python3
"""Measure the implicit constants in the norm inequalities over a fixed corpus.

The derivative and composition inequalities hold with unspecified constants;
this script evaluates both sides over a deterministic corpus of small series
and prints the observed extreme ratios.  The frozen values in
``driftbench/calibration.py`` were produced by this scan (with headroom);
rerun after touching the norm code and update the module if the numbers move.
"""

import itertools
import math

import numpy as np

from driftbench.calibration import COMPOSITION_RADIUS_RATIO, DERIVATIVE_BOUND_CONSTANT
from driftbench.norms import GridSpec, check_composition_bound, check_derivative_bound
from driftbench.series import Domain, FourierTaylorSeries, Gevrey


def corpus(seed: int = 20240817):
    rng = np.random.default_rng(seed)
    grid = GridSpec(theta_res=16, action_res=9)
    out = []
    for n in (1, 2):
        d = Domain(n, 1.0)
        for _ in range(6):
            coeffs = {}
            for _ in range(4):
                k = tuple(int(x) for x in rng.integers(-2, 3, n))
                l = tuple(int(x) for x in rng.integers(0, 2, n))
                if sum(l) > 2:
                    continue
                c = complex(rng.normal(), rng.normal() if any(k) else 0.0)
                coeffs[(k, l)] = coeffs.get((k, l), 0) + c
                coeffs[(tuple(-x for x in k), l)] = (
                    coeffs.get((tuple(-x for x in k), l), 0) + c.conjugate()
                )
            s = FourierTaylorSeries(d, coeffs, 2, 2)
            if not s.is_zero:
                out.append((s, grid))
    return out


def scan_derivative_bound():
    worst = 0.0
    for (s, grid), p, alpha, L in itertools.product(
        corpus(), (1, 2), (1.0, 1.5, 2.0), (0.1, 0.3)
    ):
        rep = check_derivative_bound(s, Gevrey(alpha, L), p, deriv_order_cap=8, grid=grid)
        if math.isfinite(rep.ratio):
            worst = max(worst, rep.ratio)
    print(f"derivative bound: max observed ratio {worst:.6g} "
          f"(frozen constant {DERIVATIVE_BOUND_CONSTANT})")
    return worst


def scan_composition_bound():
    ok = True
    worst = 0.0
    for (s, grid) in corpus():
        n = s.domain.n
        d = s.domain
        v = FourierTaylorSeries.sine(d, (1,) + (0,) * (n - 1), 0.05, k_max=2, d_max=2)
        zero = FourierTaylorSeries.zero(d, 2, 2)
        rep = check_composition_bound(
            s, None, [v] + [zero] * (n - 1), Gevrey(1.0, 0.3),
            C=COMPOSITION_RADIUS_RATIO, deriv_order_cap=8, grid=grid,
        )
        worst = max(worst, rep.left / rep.right if rep.right else 0.0)
        ok = ok and rep.holds
    print(f"composition bound at C={COMPOSITION_RADIUS_RATIO}: "
          f"max left/right {worst:.6g}, all hold: {ok}")
    return worst


if __name__ == "__main__":
    scan_derivative_bound()
    scan_composition_bound()

#!/usr/bin/env python3
"""Pendulum drift-time scaling study: crossing times against the eps ladder.

Thresholds scale like sqrt(eps) so crossings actually occur at desk scale;
the theorem-shaped thresholds (n+1)^2 eps^b are astronomically close to 1
for honest eps and would never be crossed within any affordable budget.
"""

import argparse

from driftbench.experiments import ExperimentConfig, run_scaling


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="scaling_pendulum.csv")
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    cfg = ExperimentConfig(
        system="pendulum",
        eps_ladder=(1e-2, 3e-3, 1e-3, 3e-4, 1e-4),
        num_ic=8,
        seed=args.seed,
        step=0.005,
        sample_stride=20,
        m_multiplier=6.0,
        t_cap=400.0,
        threshold_mode="sqrt",
        threshold_scale=0.5,
    )
    records, fit = run_scaling(cfg, args.out, workers=args.workers)
    print(f"{len(records)} rows -> {args.out}")
    print(fit.describe())


if __name__ == "__main__":
    main()

"""Scaling-study orchestration: drift times across an epsilon ladder.

Each (epsilon, initial condition) pair yields one record: integrate to the
time budget or to the drift threshold, log the crossing time or a sentinel,
and optionally run the restrain monitor.  Fits of the stability-time trend
are descriptive only: at desk scale the theoretical horizons and thresholds
are far outside reach for honest epsilons, so rows record censoring
explicitly and the fit is reported with residuals, never asserted.

Determinism contract: a fixed seed makes every record, and therefore the
CSV data section, byte-identical across runs.  Rows are written as complete
lines and flushed, and finished (epsilon, ic) pairs are skipped on resume.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .dynamics import IntegratorConfig, drift_time
from .restrain import exponents, time_budget
from .series import Gevrey
from .steepness import MorseParams
from .systems import System, make_system


@dataclass(frozen=True)
class ExperimentConfig:
    """Scaling run parameters; every field lands in the CSV provenance header."""

    system: str = "quasiconvex"
    eps_ladder: tuple[float, ...] = (1e-2, 1e-3, 1e-4)
    num_ic: int = 4
    seed: int = 0
    tau: float = 2.0
    step: float = 0.05
    sample_stride: int = 20
    m_multiplier: float = 1.0
    t_cap: float = 1e4
    wall_cap_s: float = 60.0
    threshold_mode: str = "theorem"    # theorem: (n+1)^2 eps^b | sqrt: eps^0.5
    threshold_scale: float = 1.0
    run_restrain: bool = False
    mu0: float = 0.05
    gamma: float = 0.9
    system_kwargs: tuple[tuple[str, object], ...] = ()

    def __post_init__(self) -> None:
        if any(not 0 < e < 1 for e in self.eps_ladder):
            raise ValueError("epsilon values must lie in (0, 1)")
        if list(self.eps_ladder) != sorted(self.eps_ladder, reverse=True):
            raise ValueError("epsilon ladder must be sorted descending")
        if self.threshold_mode not in ("theorem", "sqrt"):
            raise ValueError("threshold_mode must be 'theorem' or 'sqrt'")

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(step=self.step, sample_stride=self.sample_stride)


@dataclass(frozen=True)
class ScalingRecord:
    eps: float
    ic_index: int
    seed: int
    threshold: float
    drift_time: float            # +inf sentinel if no crossing
    drift_at_budget: float
    tau_m: float
    m: int
    certificate: str             # none | restrained | failed:<condition>
    censored: bool               # wall-clock cap hit before budget
    runtime_s: float
    config_hash: str

    # runtime_s is volatile and sits in the last column; data_section() strips
    # it, so the determinism contract covers every other column
    CSV_FIELDS = (
        "eps", "ic_index", "seed", "threshold", "drift_time", "drift_at_budget",
        "tau_m", "m", "certificate", "censored", "config_hash", "runtime_s",
    )

    def csv_row(self) -> list[str]:
        def fmt(x):
            if isinstance(x, float):
                return format(x, ".17g")
            return str(x)

        return [
            fmt(self.eps), str(self.ic_index), str(self.seed), fmt(self.threshold),
            fmt(self.drift_time), fmt(self.drift_at_budget), fmt(self.tau_m),
            str(self.m), self.certificate, str(int(self.censored)),
            self.config_hash, format(self.runtime_s, ".3f"),
        ]


def initial_condition(
    cfg: ExperimentConfig, system: System, eps_index: int, ic_index: int
) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic initial condition: theta uniform on the torus, action
    uniform in the half-radius ball."""
    rng = np.random.default_rng([cfg.seed, eps_index, ic_index])
    n = system.domain.n
    theta = rng.uniform(0.0, 1.0, size=n)
    action = rng.uniform(-system.domain.R / 2, system.domain.R / 2, size=n)
    return theta, action


def run_row(
    cfg: ExperimentConfig, eps_index: int, ic_index: int
) -> ScalingRecord:
    eps = cfg.eps_ladder[eps_index]
    system = make_system(cfg.system, eps, **dict(cfg.system_kwargs))
    n = system.domain.n
    exps = exponents(n, _tau_frac(cfg.tau))
    budget = time_budget(eps, system.hamiltonian.regularity, exps, cfg.m_multiplier)
    tau_m = min(budget.tau_m, cfg.t_cap)
    if cfg.threshold_mode == "theorem":
        threshold = cfg.threshold_scale * (n + 1) ** 2 * eps ** float(exps.b)
    else:
        threshold = cfg.threshold_scale * math.sqrt(eps)
    threshold = min(threshold, system.domain.R)  # stay measurable in B_R
    theta0, I0 = initial_condition(cfg, system, eps_index, ic_index)
    icfg = cfg.integrator()
    t0 = time.monotonic()
    deadline = t0 + cfg.wall_cap_s
    censored = False

    def over_wall(t: float, action: np.ndarray) -> bool:
        nonlocal censored
        if time.monotonic() > deadline:
            censored = True
            return True
        return False

    dt = drift_time(system, (theta0, I0), threshold, tau_m, icfg, stop_when=over_wall)
    traj = dt.trajectory
    runtime = time.monotonic() - t0
    cert_status = "none"
    if cfg.run_restrain:
        from .restrain import try_restrain

        res = try_restrain(
            system, traj, cfg.mu0, budget, MorseParams(cfg.gamma, cfg.tau),
            exps=exps,
        )
        cert_status = (
            "restrained" if res.restrained else f"failed:{res.failure.condition}"
        )
    drift_at_budget = float(np.max(np.abs(traj.actions[-1] - traj.actions[0])))
    return ScalingRecord(
        eps=eps, ic_index=ic_index, seed=cfg.seed, threshold=threshold,
        drift_time=dt.time, drift_at_budget=drift_at_budget, tau_m=tau_m,
        m=budget.m, certificate=cert_status, censored=censored,
        runtime_s=runtime, config_hash=icfg.digest(),
    )


def _tau_frac(tau: float) -> Fraction:
    f = Fraction(tau)
    return f if f >= 2 else Fraction(2)


@dataclass(frozen=True)
class FitSummary:
    """Descriptive least-squares fit of the measured crossing times."""

    kind: str                  # gevrey | ck | empty
    slope: float
    intercept: float
    residual_rms: float
    points: int

    def describe(self) -> str:
        if self.kind == "empty":
            return "fit: no finite crossing times (all rows censored or sentinel)"
        return (
            f"fit[{self.kind}]: log T* ~ {self.intercept:.4g} + "
            f"{self.slope:.4g} * x, rms residual {self.residual_rms:.3g} "
            f"({self.points} rows); descriptive only"
        )


def fit_scaling(
    records: Sequence[ScalingRecord], regularity, exps
) -> FitSummary:
    """Fit log T* against eps^(-a/alpha) (Gevrey) or k* a log(1/eps) (C^k)."""
    rows = [r for r in records if math.isfinite(r.drift_time) and r.drift_time > 0]
    if len(rows) < 2:
        return FitSummary("empty", math.nan, math.nan, math.nan, len(rows))
    a = float(exps.a)
    if isinstance(regularity, Gevrey):
        xs = np.array([r.eps ** (-a / regularity.alpha) for r in rows])
        kind = "gevrey"
    else:
        xs = np.array([regularity.k_star * a * math.log(1 / r.eps) for r in rows])
        kind = "ck"
    ys = np.log(np.array([r.drift_time for r in rows]))
    coeffs, residuals, *_ = np.polyfit(xs, ys, 1, full=True)
    rms = float(np.sqrt(residuals[0] / len(rows))) if len(residuals) else 0.0
    return FitSummary(kind, float(coeffs[0]), float(coeffs[1]), rms, len(rows))


def run_scaling(
    cfg: ExperimentConfig, out_path, workers: int = 1, resume: bool = True,
) -> tuple[list[ScalingRecord], FitSummary]:
    """Run the ladder; stream rows to the CSV; return records and the fit.

    The CSV data section (everything outside '#' comment lines) is a pure
    function of the config and seed.  In sequential mode rows stream out as
    they finish; with workers > 1 results are computed in parallel and
    written in canonical order afterwards.
    """
    out_path = Path(out_path)
    pairs = [
        (ei, ii)
        for ei in range(len(cfg.eps_ladder))
        for ii in range(cfg.num_ic)
    ]
    done: set[str] = set()
    existing: list[str] = []
    if resume and out_path.exists():
        with open(out_path) as fh:
            for ln in fh:
                if ln.startswith("#") or ln.startswith("eps,"):
                    continue
                parts = ln.rstrip("\n").split(",")
                if len(parts) == len(ScalingRecord.CSV_FIELDS):
                    done.add(f"{parts[0]}|{parts[1]}")
                    existing.append(ln.rstrip("\n"))
    todo = [
        (ei, ii)
        for ei, ii in pairs
        if f"{format(cfg.eps_ladder[ei], '.17g')}|{ii}" not in done
    ]
    records: list[ScalingRecord] = []
    if workers > 1:
        from multiprocessing import Pool

        with Pool(workers) as pool:
            records = pool.starmap(run_row, [(cfg, ei, ii) for ei, ii in todo])
    else:
        records = []
    mode = "a" if (resume and out_path.exists()) else "w"
    with open(out_path, mode, newline="") as fh:
        writer = csv.writer(fh)
        if mode == "w":
            fh.write(f"# driftbench scaling run; local time {time.ctime()}\n")
            fh.write(f"# config: {cfg}\n")
            writer.writerow(ScalingRecord.CSV_FIELDS)
            fh.flush()
        if workers > 1:
            for rec in records:
                writer.writerow(rec.csv_row())
            fh.flush()
        else:
            for ei, ii in todo:
                rec = run_row(cfg, ei, ii)
                records.append(rec)
                writer.writerow(rec.csv_row())
                fh.flush()
    system = make_system(cfg.system, cfg.eps_ladder[0], **dict(cfg.system_kwargs))
    exps = exponents(system.domain.n, _tau_frac(cfg.tau))
    fit = fit_scaling(records, system.hamiltonian.regularity, exps)
    with open(out_path, "a") as fh:
        fh.write(f"# {fit.describe()}\n")
    return records, fit


def data_section(path) -> str:
    """The determinism-relevant part of a results CSV.

    Comment lines (timestamps, fit summaries) and the volatile runtime column
    are excluded; everything else is a pure function of config and seed.
    """
    out = []
    with open(path) as fh:
        for ln in fh:
            if ln.startswith("#"):
                continue
            parts = ln.rstrip("\n").split(",")
            out.append(",".join(parts[:-1]))  # drop the trailing runtime column
    return "\n".join(out) + "\n"

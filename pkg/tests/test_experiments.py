import math

import numpy as np
import pytest

from driftbench.experiments import (
    ExperimentConfig,
    FitSummary,
    ScalingRecord,
    data_section,
    fit_scaling,
    run_row,
    run_scaling,
)
from driftbench.restrain import exponents
from driftbench.series import FiniteDiff, Gevrey

FAST = dict(
    system="pendulum", eps_ladder=(1e-2, 1e-3), num_ic=2, seed=5,
    step=0.01, sample_stride=10, t_cap=10.0,
    threshold_mode="sqrt", threshold_scale=2.0,
)


class TestRunRow:
    def test_deterministic_records(self):
        cfg = ExperimentConfig(**FAST)
        a = run_row(cfg, 0, 1)
        b = run_row(cfg, 0, 1)
        assert a.csv_row()[:-1] == b.csv_row()[:-1]  # runtime column excluded

    def test_threshold_modes(self):
        sqrt_cfg = ExperimentConfig(**FAST)
        rec = run_row(sqrt_cfg, 1, 0)
        assert rec.threshold == pytest.approx(2.0 * math.sqrt(1e-3))
        theorem_cfg = ExperimentConfig(**{**FAST, "threshold_mode": "theorem"})
        rec2 = run_row(theorem_cfg, 0, 0)
        exps = exponents(1, 2)
        assert rec2.threshold == pytest.approx(
            min(4 * 1e-2 ** float(exps.b), 2.0)
        )

    def test_ladder_validation(self):
        with pytest.raises(ValueError):
            ExperimentConfig(**{**FAST, "eps_ladder": (1e-3, 1e-2)})  # ascending
        with pytest.raises(ValueError):
            ExperimentConfig(**{**FAST, "eps_ladder": (2.0,)})


class TestFit:
    def _records(self, times):
        return [
            ScalingRecord(
                eps=e, ic_index=0, seed=0, threshold=0.1, drift_time=t,
                drift_at_budget=0.0, tau_m=10.0, m=1, certificate="none",
                censored=False, runtime_s=0.0, config_hash="x",
            )
            for e, t in times
        ]

    def test_gevrey_fit_recovers_trend(self):
        exps = exponents(1, 2)
        a = float(exps.a)
        recs = self._records(
            [(e, math.exp(2.0 + 3.0 * e ** (-a))) for e in (1e-2, 1e-3, 1e-4)]
        )
        fit = fit_scaling(recs, Gevrey(1.0, 0.5), exps)
        assert fit.kind == "gevrey"
        assert fit.slope == pytest.approx(3.0, rel=1e-6)
        assert fit.intercept == pytest.approx(2.0, rel=1e-4)

    def test_ck_fit_kind(self):
        exps = exponents(1, 2)
        recs = self._records([(1e-2, 5.0), (1e-3, 9.0), (1e-4, 14.0)])
        fit = fit_scaling(recs, FiniteDiff(4, 3), exps)
        assert fit.kind == "ck"

    def test_empty_fit(self):
        recs = self._records([(1e-2, math.inf)])
        fit = fit_scaling(recs, Gevrey(1.0, 0.5), exponents(1, 2))
        assert fit.kind == "empty"
        assert "no finite" in fit.describe()


class TestRunScaling:
    def test_resume_appends_only_missing(self, tmp_path):
        cfg = ExperimentConfig(**FAST)
        out = tmp_path / "s.csv"
        records, _ = run_scaling(cfg, out, resume=False)
        assert len(records) == 4
        section = data_section(out)
        again, _ = run_scaling(cfg, out, resume=True)
        assert again == []
        assert data_section(out) == section

    def test_parallel_matches_sequential(self, tmp_path):
        cfg = ExperimentConfig(**FAST)
        seq, par = tmp_path / "seq.csv", tmp_path / "par.csv"
        run_scaling(cfg, seq, workers=1, resume=False)
        run_scaling(cfg, par, workers=2, resume=False)
        assert data_section(seq) == data_section(par)

    def test_fit_comment_appended(self, tmp_path):
        cfg = ExperimentConfig(**FAST)
        out = tmp_path / "s.csv"
        run_scaling(cfg, out, resume=False)
        assert any(ln.startswith("# fit") for ln in out.read_text().splitlines())

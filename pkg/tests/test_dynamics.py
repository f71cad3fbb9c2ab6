import math

import numpy as np
import pytest

from driftbench.diophantine import ResonanceFrame, period_of
from driftbench.dynamics import (
    SENTINEL,
    IntegratorConfig,
    TimeBudget,
    TrajectoryRecord,
    drift_time,
    escape_time,
    integrate,
    tau_m_value,
    transverse_drift,
)
from driftbench.series import (
    Domain,
    FiniteDiff,
    FourierTaylorSeries,
    Gevrey,
    HamiltonianSystem,
)
from driftbench.systems import linear_diophantine, pendulum, quasi_convex


def synthetic_record(times, actions):
    times = np.asarray(times, dtype=float)
    actions = np.asarray(actions, dtype=float)
    return TrajectoryRecord(
        times, np.zeros_like(actions), actions, np.zeros_like(times), False, {}
    )


class TestIntegrate:
    def test_integrable_actions_constant(self):
        sys = quasi_convex(0.0)
        traj = integrate(sys, ((0.0, 0.0), (0.3, 0.4)), 10.0,
                         IntegratorConfig(step=0.01, sample_stride=10))
        assert np.max(np.abs(traj.actions - traj.actions[0])) == 0.0

    def test_linear_flow_angles(self):
        sys = linear_diophantine(0.0, omega=(0.25, 0.125), mode=(1, 1))
        traj = integrate(sys, ((0.1, 0.9), (0.0, 0.0)), 8.0,
                         IntegratorConfig(step=0.01, sample_stride=100))
        expect = (np.array([0.1, 0.9]) + 8.0 * np.array([0.25, 0.125])) % 1.0
        assert np.max(np.abs(traj.thetas[-1] - expect)) < 1e-10

    def test_pendulum_amplitude_against_reference(self):
        # oscillation amplitude vs a reference run at step/100
        sys = pendulum(1e-2)
        start = ((0.25,), (0.0,))
        coarse = integrate(sys, start, 10.0, IntegratorConfig(step=1e-2, sample_stride=1))
        fine = integrate(sys, start, 10.0, IntegratorConfig(step=1e-4, sample_stride=100))
        amp_c = np.max(np.abs(coarse.actions))
        amp_f = np.max(np.abs(fine.actions))
        assert abs(amp_c - amp_f) < 1e-4

    def test_pendulum_amplitude_against_energy_oracle(self):
        # energy conservation fixes the libration amplitude analytically:
        # I_max = sqrt(2 eps (1 - cos(2 pi theta_0))) for a start at I = 0
        eps = 1e-2
        sys = pendulum(eps)
        theta0 = 0.25
        traj = integrate(sys, ((theta0,), (0.0,)), 10.0,
                         IntegratorConfig(step=1e-2, sample_stride=1))
        oracle = math.sqrt(2 * eps * (1 - math.cos(2 * math.pi * theta0)))
        assert abs(np.max(np.abs(traj.actions)) - oracle) < 1e-4

    def test_energy_monitoring(self):
        sys = pendulum(1e-2)
        traj = integrate(sys, ((0.1,), (0.0,)), 20.0,
                         IntegratorConfig(step=1e-3, sample_stride=100))
        assert traj.metadata["energy_ok"]
        assert traj.energy_deviation() < 1e-8

    def test_reversibility(self):
        sys = pendulum(1e-2)
        cfg = IntegratorConfig(step=1e-3, sample_stride=100)
        fwd = integrate(sys, ((0.1,), (0.05,)), 20.0, cfg)
        back = integrate(sys, ((fwd.thetas[-1][0],), (fwd.actions[-1][0],)), -20.0, cfg)
        dtheta = abs((back.thetas[-1][0] - 0.1 + 0.5) % 1.0 - 0.5)
        dI = abs(back.actions[-1][0] - 0.05)
        assert max(dtheta, dI) < 1e-10

    def test_escape_halts_early(self):
        # strong kick drives the action out of the unit ball
        d = Domain(1, 0.05)
        h = FourierTaylorSeries.monomial(d, (2,), 0.5, k_max=1, d_max=2)
        f = FourierTaylorSeries.cosine(d, (1,), 0.3, k_max=1, d_max=2)
        sys = HamiltonianSystem(h, f, 0.3, Gevrey(1.0, 0.5))
        traj = integrate(sys, ((0.13,), (0.0,)), 50.0,
                         IntegratorConfig(step=0.01, sample_stride=5))
        assert traj.escaped
        assert traj.times[-1] < 50.0

    def test_midpoint_fallback_on_nonseparable(self):
        d = Domain(1, 2.0)
        h = FourierTaylorSeries.monomial(d, (2,), 0.5, k_max=1, d_max=2)
        i1 = FourierTaylorSeries.action_coordinate(d, 0, k_max=1, d_max=2)
        f = FourierTaylorSeries.cosine(d, (1,), 1e-2, k_max=1, d_max=2).product(
            FourierTaylorSeries.constant(d, 1.0, 1, 2) + i1
        )
        sys = HamiltonianSystem(h, f, 1e-2, Gevrey(1.0, 0.5))
        traj = integrate(sys, ((0.1,), (0.3,)), 5.0,
                         IntegratorConfig(step=1e-3, sample_stride=100))
        assert traj.metadata["scheme"] == "midpoint"
        assert traj.energy_deviation() < 1e-7

    def test_split_and_midpoint_agree_on_separable(self):
        # two independent schemes, both second order: trajectories agree to
        # their shared truncation order on a short run
        sys = pendulum(1e-2)
        start = ((0.2,), (0.1,))
        a = integrate(sys, start, 5.0,
                      IntegratorConfig(step=1e-3, scheme="split", sample_stride=1000))
        b = integrate(sys, start, 5.0,
                      IntegratorConfig(step=1e-3, scheme="midpoint", sample_stride=1000))
        assert np.max(np.abs(a.actions - b.actions)) < 1e-5
        assert np.max(np.abs(a.thetas - b.thetas)) < 1e-5

    def test_forced_split_on_nonseparable_rejected(self):
        d = Domain(1, 2.0)
        h = FourierTaylorSeries.monomial(d, (2,), 0.5, k_max=1, d_max=2)
        i1 = FourierTaylorSeries.action_coordinate(d, 0, k_max=1, d_max=2)
        f = FourierTaylorSeries.cosine(d, (1,), 1e-2, k_max=1, d_max=2).product(i1)
        sys = HamiltonianSystem(h, f, 1e-2, Gevrey(1.0, 0.5))
        with pytest.raises(ValueError):
            integrate(sys, ((0.0,), (0.1,)), 1.0, IntegratorConfig(scheme="split"))


class TestEscapeTime:
    def test_integrable_sentinel(self):
        sys = quasi_convex(0.0)
        traj = integrate(sys, ((0.0, 0.0), (0.2, 0.1)), 5.0, IntegratorConfig(step=0.01))
        assert escape_time(traj, (0.2, 0.1), 0.05) == SENTINEL

    def test_linear_drift_crossing(self):
        times = np.linspace(0, 10, 101)
        actions = np.stack([0.05 * times, np.zeros_like(times)], axis=1)
        rec = synthetic_record(times, actions)
        t = escape_time(rec, (0.0, 0.0), 0.25)
        assert t == pytest.approx(0.25 / 0.05, abs=0.1 + 1e-12)

    def test_radius_zero(self):
        rec = synthetic_record([0.0, 1.0], [[0.0, 0.0], [0.1, 0.0]])
        assert escape_time(rec, (0.0, 0.0), 0.0) == 0.0

    def test_starts_outside_raises(self):
        rec = synthetic_record([0.0, 1.0], [[0.5, 0.0], [0.6, 0.0]])
        with pytest.raises(ValueError):
            escape_time(rec, (0.0, 0.0), 0.1)


class TestTransverseDrift:
    def test_resonant_g_blocks_transverse_motion(self):
        # H = omega.I + cos(2 pi theta_2) with omega = (1, 0): I_1 conserved
        d = Domain(2, 1.0)
        h = FourierTaylorSeries.linear(d, (1.0, 0.0), k_max=1, d_max=1)
        g = FourierTaylorSeries.cosine(d, (0, 1), 1.0, k_max=1, d_max=1)
        sys = HamiltonianSystem(h, g, 1.0, Gevrey(1.0, 0.5))
        traj = integrate(sys, ((0.0, 0.0), (0.2, 0.1)), 100.0,
                         IntegratorConfig(step=0.02, sample_stride=10))
        frame = ResonanceFrame.build([period_of((1, 0))])
        td = transverse_drift(traj, frame)
        assert td.max_drift <= 1e-9

    def test_integrable_zero_drift(self):
        sys = quasi_convex(0.0)
        traj = integrate(sys, ((0.0, 0.0), (0.3, 0.4)), 5.0, IntegratorConfig(step=0.01))
        frame = ResonanceFrame.build([period_of((1, 1))])
        assert transverse_drift(traj, frame).max_drift == 0.0

    def test_full_frame_equals_total_drift(self):
        times = np.linspace(0, 1, 11)
        actions = np.stack([0.1 * times, 0.2 * times], axis=1)
        rec = synthetic_record(times, actions)
        frame = ResonanceFrame.build([period_of((1, 0)), period_of((0, 1))])
        td = transverse_drift(rec, frame)
        total = np.max(np.abs(actions - actions[0]))
        assert td.max_drift == pytest.approx(total)

    def test_from_time_validation(self):
        rec = synthetic_record([0.0, 1.0], [[0.0, 0.0], [0.1, 0.0]])
        frame = ResonanceFrame.build([], n=2)
        with pytest.raises(ValueError):
            transverse_drift(rec, frame, from_time=5.0)


class TestDriftTime:
    def test_integrable_sentinel(self):
        sys = quasi_convex(0.0)
        res = drift_time(sys, ((0.0, 0.0), (0.2, 0.1)), 0.05, 5.0,
                         IntegratorConfig(step=0.01))
        assert res.time == SENTINEL and res.capped

    def test_pendulum_crossing_matches_reference(self):
        sys = pendulum(1e-2)
        start = ((0.25,), (0.0,))
        threshold = 0.05
        coarse = drift_time(sys, start, threshold, 50.0,
                            IntegratorConfig(step=1e-2, sample_stride=1))
        fine = drift_time(sys, start, threshold, 50.0,
                          IntegratorConfig(step=1e-4, sample_stride=10))
        assert coarse.crossed and fine.crossed
        assert abs(coarse.time - fine.time) < 2e-2
        lo, hi = coarse.bracket
        assert lo <= fine.time <= hi + 2e-2

    def test_threshold_above_energy_bound_sentinel(self):
        # pendulum: |I| <= sqrt(2 (E0 + eps)) for all time; a threshold above
        # that confinement bound can never be crossed
        eps = 1e-2
        sys = pendulum(eps)
        start = ((0.25,), (0.0,))
        E0 = sys.hamiltonian.total().evaluate((0.25,), (0.0,))
        bound = math.sqrt(2 * (E0 + eps))
        res = drift_time(sys, start, bound * 1.5, 20.0, IntegratorConfig(step=1e-3))
        assert res.time == SENTINEL

    def test_invalid_threshold(self):
        with pytest.raises(ValueError):
            drift_time(quasi_convex(0.0), ((0, 0), (0, 0)), 0.0, 1.0)


class TestTimeBudget:
    def test_gevrey_budget(self):
        tb = TimeBudget.for_m(4, Gevrey(1.0, 0.5))
        assert tb.tau_m == pytest.approx(math.exp(4.0))

    def test_gevrey_alpha2(self):
        tb = TimeBudget.for_m(9, Gevrey(2.0, 0.5))
        assert tb.tau_m == pytest.approx(math.exp(3.0))

    def test_ck_budget(self):
        tb = TimeBudget.for_m(10, FiniteDiff(4, 3))
        assert tb.tau_m == 1000.0

    def test_inconsistent_rejected(self):
        with pytest.raises(ValueError):
            TimeBudget(4, 100.0, Gevrey(1.0, 0.5))

    def test_tau_m_value(self):
        assert tau_m_value(1, Gevrey(1.0, 0.1)) == pytest.approx(math.e)
        assert tau_m_value(5, FiniteDiff(3, 2)) == 25.0

import math

import pytest
from hypothesis import given, settings

from conftest import sample_points, series_to_sympy, small_series, sympy_eval
from driftbench.series import (
    CorruptSeriesError,
    Domain,
    DomainError,
    FourierTaylorSeries,
    Gevrey,
    HamiltonianSystem,
    FiniteDiff,
    compose_near_identity,
    load_series,
    poisson_bracket,
    recenter_scale,
    save_series,
    split_by_modes,
)

D2 = Domain(2, 1.0)


class TestEvaluate:
    def test_constant(self):
        s = FourierTaylorSeries.constant(D2, 2.5)
        assert s.evaluate((0.37, 0.91), (0.2, -0.4)) == 2.5

    def test_action_coordinate(self):
        s = FourierTaylorSeries.action_coordinate(D2, 0)
        assert s.evaluate((0.0, 0.0), (0.3, 0.4)) == pytest.approx(0.3, abs=1e-15)

    def test_cosine_against_trig(self):
        s = FourierTaylorSeries.cosine(D2, (1, 0))
        for theta1 in (0.0, 0.25, 0.37, 0.5, 0.99):
            direct = math.cos(2 * math.pi * theta1)
            assert s.evaluate((theta1, 0.1), (0.0, 0.0)) == pytest.approx(direct, abs=1e-12)

    def test_outside_ball_raises(self):
        s = FourierTaylorSeries.constant(D2, 1.0)
        with pytest.raises(DomainError):
            s.evaluate((0.0, 0.0), (1.5, 0.0))

    def test_reality_violation_raises(self):
        with pytest.raises(CorruptSeriesError):
            FourierTaylorSeries(D2, {((1, 0), (0, 0)): 1.0 + 0j}, 1, 0)

    @given(small_series())
    @settings(max_examples=60, deadline=None)
    def test_reality_of_random_series(self, s):
        thetas, actions = sample_points(s.domain.n, count=3)
        for th, ac in zip(thetas, actions):
            s.evaluate(tuple(th), tuple(ac))  # raises if imag residue > 1e-12

    def test_grid_matches_pointwise(self):
        s = FourierTaylorSeries.cosine(D2, (1, 1), 0.7, k_max=2, d_max=1)
        s = s + FourierTaylorSeries.action_coordinate(D2, 1, k_max=2, d_max=1)
        thetas, actions = sample_points(2, count=4)
        grid = s.evaluate_grid(thetas, actions)
        for i, th in enumerate(thetas):
            for j, ac in enumerate(actions):
                assert grid[i, j] == pytest.approx(
                    s.evaluate(tuple(th), tuple(ac)), abs=1e-12
                )


class TestDerivatives:
    def test_theta_derivative_of_constant(self):
        s = FourierTaylorSeries.constant(D2, 3.0)
        assert s.partial_theta(0).is_zero

    def test_action_derivative_of_quadratic(self):
        s = FourierTaylorSeries.monomial(D2, (2, 0), 0.5)
        d = s.partial_action(0)
        expect = FourierTaylorSeries.action_coordinate(D2, 0)
        assert (d - expect).coefficient_norm() == 0

    def test_theta_derivative_of_cosine(self):
        s = FourierTaylorSeries.cosine(D2, (1, 0))
        d = s.partial_theta(0)
        expect = FourierTaylorSeries.sine(D2, (1, 0), -2 * math.pi)
        assert (d - expect).coefficient_norm() == pytest.approx(0.0, abs=1e-15)

    @given(small_series(n_max=2, k_max=2, d_max=2, n_terms=3))
    @settings(max_examples=20, deadline=None)
    def test_derivative_against_sympy(self, s):
        expr, thetas, actions = series_to_sympy(s)
        d_expr = expr.diff(thetas[0])
        d_series = s.partial_theta(0)
        ths, acs = sample_points(s.domain.n, count=2, seed=3)
        for th, ac in zip(ths, acs):
            ours = d_series.evaluate(tuple(th), tuple(ac))
            theirs = sympy_eval(d_expr, thetas, actions, th, ac)
            assert ours == pytest.approx(theirs, abs=1e-9)

    @given(small_series(n_max=2))
    @settings(max_examples=30, deadline=None)
    def test_mixed_derivatives_commute(self, s):
        a = s.partial_theta(0).partial_action(0)
        b = s.partial_action(0).partial_theta(0)
        assert (a - b).coefficient_norm() == 0

    def test_action_derivative_reduces_degree(self):
        s = FourierTaylorSeries.monomial(D2, (2, 0), 1.0)
        assert s.partial_action(0).d_max == s.d_max - 1


class TestPoissonBracket:
    def test_antisymmetry_self(self):
        f = FourierTaylorSeries.cosine(D2, (1, 0), 1.3, k_max=2, d_max=1)
        assert poisson_bracket(f, f).coefficient_norm() == 0

    def test_actions_commute(self):
        i1 = FourierTaylorSeries.action_coordinate(D2, 0, k_max=1, d_max=1)
        i2 = FourierTaylorSeries.action_coordinate(D2, 1, k_max=1, d_max=1)
        assert poisson_bracket(i1, i2).is_zero

    def test_cosine_with_linear_flow(self):
        f = FourierTaylorSeries.cosine(D2, (1, 0), 1.0, k_max=1, d_max=1)
        l = FourierTaylorSeries.linear(D2, (1.0, 0.0), k_max=1, d_max=1)
        bracket = poisson_bracket(f, l)
        expect = FourierTaylorSeries.sine(D2, (1, 0), -2 * math.pi, k_max=1, d_max=1)
        assert (bracket - expect).coefficient_norm() == pytest.approx(0.0, abs=1e-14)

    @given(small_series(n_max=2, k_max=2, d_max=2, n_terms=2),
           small_series(n_max=2, k_max=2, d_max=2, n_terms=2))
    @settings(max_examples=15, deadline=None)
    def test_bracket_against_sympy(self, f, g):
        if f.domain.n != g.domain.n:
            return
        n = f.domain.n
        bracket = poisson_bracket(f, g, k_max=4, d_max=4)
        fe, thetas, actions = series_to_sympy(f)
        ge, _, _ = series_to_sympy(g)
        expr = sum(
            fe.diff(thetas[j]) * ge.diff(actions[j])
            - fe.diff(actions[j]) * ge.diff(thetas[j])
            for j in range(n)
        )
        ths, acs = sample_points(n, count=2, seed=5)
        for th, ac in zip(ths, acs):
            ours = bracket.evaluate(tuple(th), tuple(ac))
            theirs = sympy_eval(expr, thetas, actions, th, ac)
            assert ours == pytest.approx(theirs, abs=1e-8)

    @given(small_series(n=2, k_max=2, d_max=2, n_terms=2),
           small_series(n=2, k_max=2, d_max=2, n_terms=2),
           small_series(n=2, k_max=2, d_max=2, n_terms=2))
    @settings(max_examples=20, deadline=None)
    def test_jacobi_identity(self, f, g, h):
        # widened bounds: no truncation, the identity is coefficient-exact
        wide = lambda s: s.with_bounds(12, 6)
        f, g, h = wide(f), wide(g), wide(h)
        j = (
            poisson_bracket(f, poisson_bracket(g, h))
            + poisson_bracket(g, poisson_bracket(h, f))
            + poisson_bracket(h, poisson_bracket(f, g))
        )
        scale = max(1.0, f.coefficient_norm() * g.coefficient_norm() * h.coefficient_norm())
        assert j.coefficient_norm() <= 1e-10 * scale

    @given(small_series(n=2, k_max=2, d_max=2, n_terms=2),
           small_series(n=2, k_max=2, d_max=2, n_terms=2),
           small_series(n=2, k_max=2, d_max=2, n_terms=2))
    @settings(max_examples=20, deadline=None)
    def test_jacobi_defect_below_reported_loss(self, f, g, h):
        # native bounds: truncation drops mass, but the reported losses bound
        # the defect (plus float slack)
        j = (
            poisson_bracket(f, poisson_bracket(g, h))
            + poisson_bracket(g, poisson_bracket(h, f))
            + poisson_bracket(h, poisson_bracket(f, g))
        )
        bound = j.trunc_loss.raw
        scale = max(1.0, f.coefficient_norm() * g.coefficient_norm() * h.coefficient_norm())
        assert j.coefficient_norm() <= bound + 1e-9 * scale


class TestTruncate:
    def test_constant_noop(self):
        s = FourierTaylorSeries.constant(D2, 4.0, k_max=1, d_max=1)
        out, report = s.truncate(0, 0)
        assert report.raw == 0.0
        assert (out - FourierTaylorSeries.constant(D2, 4.0)).coefficient_norm() == 0

    def test_cosine_drops_unit_mass(self):
        s = FourierTaylorSeries.cosine(D2, (1, 0))
        out, report = s.truncate(0, 0)
        assert out.is_zero
        assert report.raw == pytest.approx(1.0)

    def test_full_truncation_is_identity(self):
        s = FourierTaylorSeries.cosine(D2, (1, 1), 0.3, k_max=2, d_max=2)
        out, report = s.truncate(2, 2)
        assert report.raw == 0.0
        assert (out - s).coefficient_norm() == 0

    def test_cannot_enlarge(self):
        s = FourierTaylorSeries.cosine(D2, (1, 0))
        with pytest.raises(ValueError):
            s.truncate(5, 5)


class TestFileFormat:
    @given(s=small_series())
    @settings(max_examples=25, deadline=None)
    def test_roundtrip_bit_exact(self, tmp_path_factory, s):
        path = tmp_path_factory.mktemp("series") / "s.txt"
        save_series(path, s, Gevrey(1.5, 0.25))
        loaded, reg = load_series(path)
        assert reg == Gevrey(1.5, 0.25)
        assert loaded.domain == s.domain
        assert loaded.center == s.center
        assert (loaded.k_max, loaded.d_max) == (s.k_max, s.d_max)
        assert dict(loaded.items()) == dict(s.items())

    def test_ck_tag_roundtrip(self, tmp_path):
        s = FourierTaylorSeries.constant(D2, 1.0)
        save_series(tmp_path / "s.txt", s, FiniteDiff(5, 2))
        _, reg = load_series(tmp_path / "s.txt")
        assert reg == FiniteDiff(5, 2)


class TestAlgebraMisc:
    def test_recenter_scale_quadratic(self):
        h = FourierTaylorSeries.monomial(D2, (2, 0), 0.5)
        out = recenter_scale(h, (0.3, 0.0), 0.1)
        # 0.5*(0.3 + 0.1 J)^2 = 0.045 + 0.03 J + 0.005 J^2
        assert out.coefficient((0, 0), (0, 0)).real == pytest.approx(0.045)
        assert out.coefficient((0, 0), (1, 0)).real == pytest.approx(0.03)
        assert out.coefficient((0, 0), (2, 0)).real == pytest.approx(0.005)

    def test_compose_identity(self):
        s = FourierTaylorSeries.cosine(D2, (1, 0), 0.8, k_max=2, d_max=2)
        out = compose_near_identity(s, None, None)
        assert (out - s).coefficient_norm() == 0

    def test_compose_action_shift(self):
        i1 = FourierTaylorSeries.action_coordinate(D2, 0, k_max=1, d_max=1)
        v = FourierTaylorSeries.sine(D2, (1, 0), 0.1, k_max=1, d_max=1)
        zero = FourierTaylorSeries.zero(D2, 1, 1)
        out = compose_near_identity(i1, None, [v, zero])
        assert (out - (i1 + v)).coefficient_norm() == pytest.approx(0.0, abs=1e-15)

    def test_split_by_modes(self):
        h = FourierTaylorSeries.monomial(D2, (2, 0), 0.5, k_max=1, d_max=2)
        f = FourierTaylorSeries.cosine(D2, (1, 0), 0.1, k_max=1, d_max=2)
        avg, osc = split_by_modes(h + f)
        assert avg.angle_independent()
        assert (avg - h).coefficient_norm() == pytest.approx(0.0, abs=1e-15)
        assert (osc - f).coefficient_norm() == pytest.approx(0.0, abs=1e-15)

    def test_hamiltonian_system_validation(self):
        h = FourierTaylorSeries.cosine(D2, (1, 0))
        f = FourierTaylorSeries.zero(D2, 1, 0)
        with pytest.raises(ValueError):
            HamiltonianSystem(h, f, 0.1, Gevrey(1.0, 0.5))
        with pytest.raises(ValueError):
            HamiltonianSystem(
                FourierTaylorSeries.constant(D2, 1.0), f, 0.1, FiniteDiff(2, 1)
            )

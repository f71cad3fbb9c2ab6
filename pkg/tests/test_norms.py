import math

import pytest
from hypothesis import given, settings

from conftest import small_series
from driftbench.calibration import COMPOSITION_RADIUS_RATIO, DERIVATIVE_BOUND_CONSTANT
from driftbench.norms import (
    GridSpec,
    check_composition_bound,
    check_derivative_bound,
    ck_norm,
    gevrey_norm,
    grid_sup,
    write_certificates_csv,
)
from driftbench.series import Domain, FourierTaylorSeries, Gevrey

D1 = Domain(1, 1.0)
D2 = Domain(2, 1.0)

COARSE = GridSpec(theta_res=12, action_res=7)


class TestGevreyNorm:
    def test_constant(self):
        s = FourierTaylorSeries.constant(D2, -2.5)
        cert = gevrey_norm(s, Gevrey(1.3, 0.4), 10)
        assert cert.value == pytest.approx(2.5)
        assert cert.lower_bound

    def test_action_coordinate(self):
        # sup |I_1| = 1 on B_1 plus the single first derivative weighted L^alpha
        s = FourierTaylorSeries.action_coordinate(D1, 0)
        cert = gevrey_norm(s, Gevrey(1.0, 0.5), 5)
        assert cert.value == pytest.approx(1.5, abs=1e-14)

    def test_cosine_partial_sums_converge(self):
        s = FourierTaylorSeries.cosine(D1, (1,))
        val = gevrey_norm(s, Gevrey(1.0, 0.1), 50).value
        assert val == pytest.approx(math.exp(0.2 * math.pi), abs=1e-12)

    def test_analytic_case_sanity(self):
        # alpha = 1: the norm of cos matches e^{2 pi L} once the cap clears
        # the factorial tail
        for L in (0.05, 0.1, 0.2):
            s = FourierTaylorSeries.cosine(D1, (1,))
            val = gevrey_norm(s, Gevrey(1.0, L), 50).value
            assert abs(val - math.exp(2 * math.pi * L)) < 1e-10

    @given(s=small_series(n_max=2, k_max=2, d_max=2))
    @settings(max_examples=10, deadline=None)
    def test_absolute_homogeneity(self, s):
        p = Gevrey(1.0, 0.2)
        lam = -3.5
        a = gevrey_norm(s.scaled(lam), p, 6, COARSE).value
        b = abs(lam) * gevrey_norm(s, p, 6, COARSE).value
        assert a == pytest.approx(b, rel=1e-12, abs=1e-12)

    @given(f=small_series(n=2, k_max=2, d_max=2), g=small_series(n=2, k_max=2, d_max=2))
    @settings(max_examples=10, deadline=None)
    def test_triangle_inequality(self, f, g):
        p = Gevrey(1.0, 0.2)
        lhs = gevrey_norm(f + g, p, 6, COARSE).value
        rhs = gevrey_norm(f, p, 6, COARSE).value + gevrey_norm(g, p, 6, COARSE).value
        assert lhs <= rhs + 1e-12 * (1 + rhs)

    @given(f=small_series(n=1, k_max=1, d_max=1, n_terms=2),
           g=small_series(n=1, k_max=1, d_max=1, n_terms=2))
    @settings(max_examples=10, deadline=None)
    def test_algebra_property_with_loss(self, f, g):
        p = Gevrey(1.0, 0.1)
        prod = f.product(g, k_max=2, d_max=2)
        lhs = gevrey_norm(prod, p, 8, COARSE).value
        rhs = gevrey_norm(f, p, 8, COARSE).value * gevrey_norm(g, p, 8, COARSE).value
        loss = prod.trunc_loss.raw * math.exp(4 * math.pi * p.L)
        assert lhs <= rhs + loss + 1e-10 * (1 + rhs)


class TestCkNorm:
    def test_constant(self):
        s = FourierTaylorSeries.constant(D2, 3.0)
        for k in (0, 1, 4):
            assert ck_norm(s, k).value == pytest.approx(3.0)

    def test_action_coordinate_k1(self):
        s = FourierTaylorSeries.action_coordinate(D1, 0)
        assert ck_norm(s, 1).value == pytest.approx(2.0, abs=1e-14)

    def test_action_coordinate_k0(self):
        s = FourierTaylorSeries.action_coordinate(D1, 0)
        assert ck_norm(s, 0).value == pytest.approx(1.0, abs=1e-14)

    @given(s=small_series(n_max=2, k_max=2, d_max=2))
    @settings(max_examples=10, deadline=None)
    def test_monotone_in_k(self, s):
        vals = [ck_norm(s, k, COARSE).value for k in range(4)]
        assert all(a <= b + 1e-14 for a, b in zip(vals, vals[1:]))


class TestDerivativeBound:
    def test_constant_vanishes(self):
        s = FourierTaylorSeries.constant(D1, 7.0)
        rep = check_derivative_bound(s, Gevrey(1.0, 0.1), 1, 8)
        assert rep.left == 0.0 and rep.ratio == 0.0

    def test_cosine_ratio_bounded(self):
        s = FourierTaylorSeries.cosine(D1, (1,))
        rep = check_derivative_bound(s, Gevrey(1.0, 0.1), 1, 20)
        assert 0 < rep.ratio <= DERIVATIVE_BOUND_CONSTANT

    def test_quadratic_second_order(self):
        s = FourierTaylorSeries.monomial(D1, (2,), 1.0)
        rep = check_derivative_bound(s, Gevrey(1.0, 0.1), 2, 8)
        assert rep.left == pytest.approx(2.0)   # d^2/dI^2 of I^2, sup = 2
        assert math.isfinite(rep.ratio) and rep.ratio > 0

    @given(s=small_series(n_max=2, k_max=2, d_max=2))
    @settings(max_examples=8, deadline=None)
    def test_corpus_stays_below_frozen_constant(self, s):
        rep = check_derivative_bound(s, Gevrey(1.0, 0.2), 1, 8, COARSE)
        if rep.right > 0:
            assert rep.ratio <= DERIVATIVE_BOUND_CONSTANT


class TestCompositionBound:
    def test_identity_map(self):
        f = FourierTaylorSeries.cosine(D2, (1, 0), 0.7, k_max=2, d_max=2)
        rep = check_composition_bound(
            f, None, None, Gevrey(1.0, 0.2), C=COMPOSITION_RADIUS_RATIO,
            deriv_order_cap=10, grid=COARSE,
        )
        assert rep.holds
        assert rep.left <= rep.right

    def test_action_shift(self):
        f = FourierTaylorSeries.action_coordinate(D2, 0, k_max=2, d_max=2)
        v = FourierTaylorSeries.sine(D2, (1, 0), 0.1, k_max=2, d_max=2)
        zero = FourierTaylorSeries.zero(D2, 2, 2)
        rep = check_composition_bound(
            f, None, [v, zero], Gevrey(1.0, 0.2), C=COMPOSITION_RADIUS_RATIO,
            deriv_order_cap=10, grid=COARSE,
        )
        assert rep.holds

    def test_constant_equality(self):
        f = FourierTaylorSeries.constant(D2, 4.2)
        rep = check_composition_bound(
            f, None, None, Gevrey(1.0, 0.2), C=0.5, deriv_order_cap=6, grid=COARSE,
        )
        assert rep.holds
        assert rep.left == pytest.approx(rep.right)


class TestPlumbing:
    def test_grid_sup_zero_series(self):
        assert grid_sup(FourierTaylorSeries.zero(D2, 1, 1), COARSE) == 0.0

    def test_certificate_csv(self, tmp_path):
        s = FourierTaylorSeries.constant(D2, 1.0)
        certs = [gevrey_norm(s, Gevrey(1.0, 0.1), 5, COARSE), ck_norm(s, 2, COARSE)]
        path = tmp_path / "certs.csv"
        write_certificates_csv(path, certs)
        rows = path.read_text().splitlines()
        assert rows[0] == "norm_kind,value,cap,grid_spec"
        assert len(rows) == 3

    def test_invalid_caps(self):
        s = FourierTaylorSeries.constant(D2, 1.0)
        with pytest.raises(ValueError):
            gevrey_norm(s, Gevrey(1.0, 0.1), -1)
        with pytest.raises(ValueError):
            ck_norm(s, -2)

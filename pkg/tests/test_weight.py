import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from viriallab import weight as w


S1 = 1.0 + 1.0 / np.sqrt(3.0)


class TestZeta:
    def test_linear_branch(self):
        assert w.zeta(0.5, 0) == pytest.approx(1.0, abs=1e-14)

    def test_oddness_value(self):
        assert w.zeta(-0.5, 0) == pytest.approx(-1.0, abs=1e-14)

    def test_zero_beyond_two(self):
        assert w.zeta(2.5, 0) == 0.0

    def test_cubic_branch_at_s1(self):
        # 2[s - (s-1)^3] at s = 1 + 1/sqrt(3), high-precision oracle
        expected = 2.0 + 4.0 / (3.0 * np.sqrt(3.0))
        assert w.zeta(S1, 0) == pytest.approx(expected, abs=1e-13)

    def test_first_derivative_at_1(self):
        assert w.zeta(1.0, 1) == pytest.approx(2.0, abs=1e-13)

    def test_rejects_bad_order(self):
        with pytest.raises(ValueError):
            w.zeta(0.5, 4)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            w.zeta(np.nan, 0)

    @given(st.floats(-3, 3), st.integers(0, 3))
    @settings(max_examples=200, deadline=None)
    def test_parity(self, s, order):
        sign = -1.0 if order % 2 == 0 else 1.0
        assert w.zeta(-s, order) == pytest.approx(sign * w.zeta(s, order), abs=1e-12)

    @pytest.mark.parametrize("order", [0, 1, 2])
    def test_finite_difference_consistency(self, order):
        # centered differences of order k match order k+1 away from knots
        pts = np.concatenate(
            [np.linspace(0.1, 0.9, 7), np.linspace(1.05, 1.5, 7), np.linspace(1.65, 1.95, 7)]
        )
        h = 1e-5
        fd = (w.zeta(pts + h, order) - w.zeta(pts - h, order)) / (2 * h)
        assert np.max(np.abs(fd - w.zeta(pts, order + 1))) < 1e-4 * max(
            1.0, np.max(np.abs(w.zeta(pts, order + 1)))
        )


class TestChi:
    def test_quadratic_branch(self):
        assert w.chi(0.5) == pytest.approx(0.25, abs=1e-14)

    def test_even(self):
        assert w.chi(-1.0) == pytest.approx(1.0, abs=1e-14)

    def test_plateau_matches_quadrature(self):
        # adaptive quadrature of zeta over [0, 2] as independent oracle
        val, err = quad(lambda s: w.zeta(s), 0, 2, limit=500)
        assert w.chi(3.0) == w.chi(2.0)
        assert w.chi(2.0) == pytest.approx(val, abs=max(1e-8, 10 * err))

    @given(st.floats(-3, 3))
    @settings(max_examples=100, deadline=None)
    def test_nondecreasing_in_abs(self, x):
        assert w.chi(x) <= w.chi(1.1 * x) + 1e-14


class TestChiR:
    def test_order0(self):
        assert w.chi_R(1.0, 2.0, 0) == pytest.approx(1.0, abs=1e-14)

    def test_order2_near_zero(self):
        assert w.chi_R(0.0, 5.0, 2) == pytest.approx(2.0, abs=1e-14)

    def test_lower_bound_outside_R(self):
        rng = np.random.default_rng(0)
        for R in (0.5, 1.0, 10.0):
            x = np.sign(rng.standard_normal(10_000)) * (R + 3 * R * rng.random(10_000))
            assert np.all(w.chi_R(x, R, 0) >= R**2 * (1 - 1e-12))

    @pytest.mark.parametrize("R", [0.5, 1.0, 10.0, 1000.0])
    def test_scaling_identity(self, R):
        x = np.linspace(-3 * R, 3 * R, 101)
        lhs = w.chi_R(x, R, 0)
        rhs = R**2 * w.chi(x / R)
        assert np.max(np.abs(lhs - rhs)) <= 1e-14 * max(1.0, np.max(np.abs(rhs)))

    def test_gradient_envelope(self):
        x = np.linspace(-5, 5, 20_001)
        assert np.all(w.chi_R(x, 2.0, 1) ** 2 <= 4 * w.chi_R(x, 2.0, 0) + 1e-10)

    def test_rejects_order3_and_bad_R(self):
        with pytest.raises(ValueError):
            w.chi_R(1.0, 1.0, 3)
        with pytest.raises(ValueError):
            w.chi_R(1.0, -1.0, 0)


class TestGR:
    def test_inner_zero(self):
        assert w.g_R(0.5, 1.0) == 0.0

    def test_outer_value(self):
        assert w.g_R(5.0, 1.0) == pytest.approx(2.0**0.25, abs=1e-14)

    def test_cubic_branch_value(self):
        # 2 - zeta'(1.2) = 6 * 0.2^2 on the cubic branch
        assert w.g_R(1.2, 1.0) ** 4 == pytest.approx(0.24, abs=1e-12)

    def test_scales_with_R(self):
        assert w.g_R(2.4, 2.0) == pytest.approx(w.g_R(1.2, 1.0), abs=1e-13)


class TestEta:
    def test_zero_mass(self):
        assert w.eta(3.0, 0.0) == 0.0

    def test_exact_inverse_square_scaling(self):
        for R in (1.0, 2.5, 17.0):
            ratio = w.eta(2 * R, 1.37) / w.eta(R, 1.37)
            assert ratio == pytest.approx(0.25, abs=1e-12)

    def test_formula_term_by_term(self):
        # independent evaluation from densely sampled sup norms
        p = w.default_profile()
        tau = 2.0 - p.s1
        t = np.linspace(0, tau, 400_001)
        tail = np.polyval(p.tail_coeffs[::-1], t)  # noqa: F841 (shape guard)
        d2 = np.polyval((p.tail_coeffs[2:] * [2, 6, 12, 20])[::-1], t)
        d3 = np.polyval((p.tail_coeffs[3:] * [6, 24, 60])[::-1], t)
        z2_s = np.max(np.abs(d2))
        z3_s = max(12.0, np.max(np.abs(d3)))
        R, m = 10.0, 2.72070
        expected = (
            4.0 / (3 * R**2) * (np.sqrt(6) + z2_s / 2) ** 2 * m**3
            + z3_s / (2 * R**2) * m
        )
        # sampled sup norms carry O(grid) error against the root-found ones
        assert w.eta(R, m) == pytest.approx(expected, rel=1e-4)

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            w.eta(0.0, 1.0)
        with pytest.raises(ValueError):
            w.eta(1.0, -1.0)


class TestVerifyProfile:
    def test_default_profile_passes(self):
        rep = w.verify_profile(10_000)
        assert rep.passed, rep.failed_names()

    def test_corrupted_profile_fails_continuity(self):
        bad = dataclasses.replace(w.default_profile(), tail_coeffs=np.zeros(6))
        rep = w.verify_profile(2_000, profile=bad)
        assert not rep.passed
        assert "knot_continuity_zeta" in rep.failed_names()

    def test_sup_ratio_bound(self):
        s = np.linspace(-5, 5, 100_001)
        s = s[np.abs(s) > 1e-9]
        assert np.max(w.zeta(s, 0) / s) <= 2.0 + 1e-12

    def test_rejects_too_few_samples(self):
        with pytest.raises(ValueError):
            w.verify_profile(100)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sqlimit import (DerivedQuantities, NoMinimum, ZeroSignal,
                     decoherence_rate, derive, feasibility_report,
                     lorentzian_spectrum, measurement_time, optimal_omega_eff,
                     optimal_tau, resolution_squared, sql_ratio,
                     without_spring)
from sqlimit.resolution import (FINESSE_FORM_LIMIT, analytic_optimal_tau,
                                resolution_coefficients)

from conftest import random_rates


class TestLorentzian:
    def test_peak_value(self, toy_derived):
        assert lorentzian_spectrum(2 * toy_derived.omega_s, toy_derived) \
            == pytest.approx(2 / toy_derived.gamma_d, rel=1e-14)

    def test_half_maximum(self, toy_derived):
        d = toy_derived
        for sign in (+1, -1):
            val = lorentzian_spectrum(2 * d.omega_s + sign * d.gamma_d, d)
            assert val == pytest.approx(1 / d.gamma_d, rel=1e-14)

    def test_low_frequency_wing(self, toy_derived):
        # at -omega_m with omega_m << omega_s the wing sits near gd/(2 ws^2)
        d = toy_derived
        val = lorentzian_spectrum(-d.omega_m, d)
        assert val == pytest.approx(d.gamma_d / (2 * d.omega_s**2), rel=0.05)


class TestGoldenRuleRates:
    def test_no_drive_no_decoherence(self, toy_derived):
        from dataclasses import replace
        dark = replace(toy_derived, c_bar=0.0, K_spring=0.0,
                       omega_eff=toy_derived.omega_m, Lam=1.0,
                       G_eff=toy_derived.G_0)
        assert decoherence_rate(dark) == 0.0

    def test_quadratic_in_drive(self, toy_derived):
        from dataclasses import replace
        double = replace(toy_derived, c_bar=2 * toy_derived.c_bar)
        assert decoherence_rate(double) == pytest.approx(
            4 * decoherence_rate(toy_derived), rel=1e-14)

    def test_exact_flag_uses_full_lorentzian(self, toy_derived):
        d = toy_derived
        exact = decoherence_rate(d, exact=True)
        flat = decoherence_rate(d)
        assert exact == pytest.approx(
            d.G_0**2 * d.c_bar**2 * lorentzian_spectrum(-d.omega_m, d),
            rel=1e-14)
        assert exact == pytest.approx(flat, rel=0.05)

    def test_measurement_time_value(self, toy_derived):
        d = toy_derived
        assert measurement_time(d) == pytest.approx(
            2 * d.omega_s**2 * d.gamma_c / (d.G_0**4 * d.c_bar**2), rel=1e-14)

    def test_measurement_time_scales_inverse_power(self, toy_derived):
        from dataclasses import replace
        double = replace(toy_derived, c_bar=2 * toy_derived.c_bar)
        assert measurement_time(double) == pytest.approx(
            measurement_time(toy_derived) / 4, rel=1e-14)

    def test_zero_signal_raises(self, toy_derived):
        from dataclasses import replace
        with pytest.raises(ZeroSignal):
            measurement_time(replace(toy_derived, c_bar=0.0))

    def test_product_identity_machine_precision(self):
        # tau_m * tau_dec^-1 == gamma_c gamma_d / G_0^2 identically
        rng = np.random.default_rng(42)
        for _ in range(1000):
            d = random_rates(rng)
            product = measurement_time(d) * decoherence_rate(d)
            target = d.gamma_c * d.gamma_d / d.G_0**2
            assert product == pytest.approx(target, rel=1e-12)


class TestSqlRatio:
    def test_boundary_construction(self):
        d = DerivedQuantities.from_rates(omega_m=1.0, omega_s=100.0,
                                         gamma_c=0.05, gamma_d=0.05,
                                         G_0=0.05, c_bar=0.0)
        # with no drive Lam = 1, so G_eff = G_0 = gamma_c = gamma_d
        assert sql_ratio(d).ratio == pytest.approx(1.0, rel=1e-14)
        assert sql_ratio(d).ratio_ok

    def test_finesse_form_equivalence(self, membrane_config):
        # equal mirrors, Lam = 1: ratio == finesse_form^2 / 128 identically
        dark = derive(membrane_config.replace(I_0=0.0))
        s = sql_ratio(dark)
        assert s.ratio == pytest.approx(s.finesse_form**2 / 128, rel=1e-12)
        assert s.ratio_ok == s.finesse_ok
        assert FINESSE_FORM_LIMIT == pytest.approx(11.3137, rel=1e-5)

    def test_verdicts_agree_across_random_configs(self, membrane_config):
        rng = np.random.default_rng(7)
        for _ in range(200):
            cfg = membrane_config.replace(
                m=10.0 ** rng.uniform(-16, -10),
                finesse=10.0 ** rng.uniform(3, 6.5),
                I_0=0.0)
            s = sql_ratio(derive(cfg))
            assert s.ratio == pytest.approx(s.finesse_form**2 / 128, rel=1e-12)
            assert s.ratio_ok == s.finesse_ok

    def test_verdict_flips_crossing_unity(self):
        # one-parameter family in gamma: verdict flips where gc*gd = G_eff^2
        base = dict(omega_m=1.0, omega_s=100.0, G_0=0.05, c_bar=0.0)
        g_crit = 0.05  # gamma_c = gamma_d = G_0 with Lam = 1
        below = DerivedQuantities.from_rates(gamma_c=0.99 * g_crit,
                                             gamma_d=0.99 * g_crit, **base)
        above = DerivedQuantities.from_rates(gamma_c=1.01 * g_crit,
                                             gamma_d=1.01 * g_crit, **base)
        assert sql_ratio(below).ratio_ok
        assert not sql_ratio(above).ratio_ok

    def test_raw_system_has_no_finesse_form(self, toy_derived):
        assert math.isnan(sql_ratio(toy_derived).finesse_form)


class TestResolutionBreakdown:
    def test_zero_temperature_kills_thermal_term(self, toy_derived):
        b = resolution_squared(1e4, toy_derived)
        assert b.thermal_term == 0.0
        assert b.total == b.shot_term + b.backaction_term

    def test_stated_tau_scalings(self, toy_thermal_derived):
        b1 = resolution_squared(1e4, toy_thermal_derived)
        b2 = resolution_squared(2e4, toy_thermal_derived)
        assert b2.shot_term == pytest.approx(b1.shot_term / 2, rel=1e-12)
        assert b2.backaction_term == pytest.approx(4 * b1.backaction_term,
                                                   rel=1e-12)
        assert b2.thermal_term == pytest.approx(4 * b1.thermal_term, rel=1e-12)

    def test_term_values_frozen(self, toy_derived):
        # desk evaluation with the toy rates: A = gc ws^2 / (Geff^4 cbar^2)
        # = 0.1 * 2500 / (0.05^4 Lam^4 * 400) = 1e5 / Lam^4 = 9.8000e4
        d = toy_derived
        b = resolution_squared(1e4, d)
        a_exp = d.gamma_c * d.omega_s**2 / (d.G_eff**4 * d.c_bar**2)
        assert a_exp == pytest.approx(9.80000e4, rel=1e-4)
        assert b.shot_term == pytest.approx(a_exp / 1e4, rel=1e-12)
        b_exp = (5 / 6) * (d.gamma_d * d.G_eff**2 * d.c_bar**2
                           / (2 * math.sqrt(2) * d.omega_s**2)) ** 2
        assert b.backaction_term == pytest.approx(b_exp * 1e8, rel=1e-12)

    def test_shot_term_power_laws(self, toy_derived):
        # shot ~ gamma_c omega_s^2 G_eff^-4 c_bar^-2 tau^-1, one 2x knob at a time
        d0 = toy_derived
        tau = 1e4
        s0 = resolution_squared(tau, d0).shot_term

        def shot(**kw):
            base = dict(omega_m=d0.omega_m, omega_s=d0.omega_s,
                        gamma_c=d0.gamma_c, gamma_d=d0.gamma_d, G_0=d0.G_0,
                        c_bar=d0.c_bar)
            base.update(kw)
            return resolution_squared(tau, DerivedQuantities.from_rates(**base))

        assert shot(gamma_c=2 * d0.gamma_c).shot_term \
            == pytest.approx(2 * s0, rel=1e-12)
        # doubling omega_s also weakens the spring; compare at Lam ~ 1
        no_spring = without_spring(d0)
        s_ns = resolution_squared(tau, no_spring).shot_term
        d_ws = without_spring(DerivedQuantities.from_rates(
            omega_m=d0.omega_m, omega_s=2 * d0.omega_s, gamma_c=d0.gamma_c,
            gamma_d=d0.gamma_d, G_0=d0.G_0, c_bar=d0.c_bar))
        assert resolution_squared(tau, d_ws).shot_term \
            == pytest.approx(4 * s_ns, rel=1e-12)

    def test_thermal_override(self, toy_thermal_derived):
        b_half = resolution_squared(1e4, toy_thermal_derived,
                                    n_th_override=500.0)
        b_full = resolution_squared(1e4, toy_thermal_derived)
        assert b_half.thermal_term == pytest.approx(b_full.thermal_term / 4,
                                                    rel=1e-12)

    def test_vectorized_tau(self, toy_derived):
        taus = np.geomspace(1e3, 1e6, 16)
        b = resolution_squared(taus, toy_derived)
        assert b.total.shape == taus.shape
        assert np.all(np.diff(b.shot_term) < 0)
        assert np.all(np.diff(b.backaction_term) > 0)


class TestOptimalTau:
    def test_no_minimum_without_growth_terms(self, toy_derived):
        # lossless idle mode and cold bath: only the shot term survives
        from dataclasses import replace
        quiet = replace(toy_derived, gamma_d=0.0)
        with pytest.raises(NoMinimum):
            optimal_tau(quiet)

    def test_unit_coefficient_calculus_identity(self):
        assert analytic_optimal_tau(1.0, 1.0) == pytest.approx(0.5 ** (1 / 3),
                                                               rel=1e-14)

    def test_numeric_matches_analytic_on_toy(self, toy_derived):
        A, B_ba, B_th = resolution_coefficients(toy_derived)
        tau_star, dn_min = optimal_tau(toy_derived)
        assert tau_star == pytest.approx(analytic_optimal_tau(A, B_ba + B_th),
                                         rel=1e-6)

    @settings(max_examples=200, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=10_000))
    def test_numeric_matches_analytic_random(self, seed):
        d = random_rates(np.random.default_rng(seed))
        A, B_ba, B_th = resolution_coefficients(d)
        expected = analytic_optimal_tau(A, B_ba + B_th)
        lo, hi = 1e-2 / d.gamma_c, 1e6 / d.gamma_c
        tau_star, _ = optimal_tau(d)
        if lo <= expected <= hi:
            assert tau_star == pytest.approx(expected, rel=1e-6)
        else:
            assert tau_star == pytest.approx(np.clip(expected, lo, hi), rel=1e-6)


class TestOptimalOmegaEff:
    def test_membrane_ratio(self, membrane_derived):
        opt = optimal_omega_eff(membrane_derived)
        ratio = opt.omega_eff_opt / membrane_derived.omega_m
        # sqrt(n_th / Q_m) = sqrt(2.0837e4 / 3.2e7)
        assert ratio == pytest.approx(0.0255, rel=2e-3)
        assert opt.in_model

    def test_constraint_boundary(self):
        d = DerivedQuantities.from_rates(omega_m=1.0, omega_s=50.0,
                                         gamma_c=0.1, gamma_d=0.1, G_0=0.05,
                                         c_bar=20.0, gamma_m=1e-8, n_th=1.0)
        opt = optimal_omega_eff(d)
        rhs = (d.G_0**2 / (d.omega_s * d.gamma_c)) ** (2 / 3)
        assert opt.constraint_rhs == pytest.approx(rhs, rel=1e-14)
        boundary_n = rhs * d.Q_m
        d2 = DerivedQuantities.from_rates(omega_m=1.0, omega_s=50.0,
                                          gamma_c=0.1, gamma_d=0.1, G_0=0.05,
                                          c_bar=20.0, gamma_m=1e-8,
                                          n_th=boundary_n)
        assert optimal_omega_eff(d2).constraint_ok

    def test_zero_temperature_out_of_model(self, toy_derived):
        opt = optimal_omega_eff(toy_derived)
        assert opt.omega_eff_opt == 0.0
        assert not opt.in_model

    def test_hot_bath_out_of_model(self):
        d = DerivedQuantities.from_rates(omega_m=1.0, omega_s=50.0,
                                         gamma_c=0.1, gamma_d=0.1, G_0=0.05,
                                         c_bar=20.0, gamma_m=0.5, n_th=10.0)
        assert d.n_th / d.Q_m >= 1
        assert not optimal_omega_eff(d).in_model


class TestFeasibility:
    def test_unstable_spring_fails_condition_iii(self, membrane_derived):
        report = feasibility_report(membrane_derived)
        assert not membrane_derived.spring_stable
        assert not report.condition_iii
        assert report.used_unit_spring_gain
        assert not report.feasible
        assert math.isfinite(report.tau_star)

    def test_strong_backaction_unreachable(self):
        # gamma_c gamma_d / G_eff^2 ~ 100: the analytic minimum of the two
        # quantum terms is (3/2^(2/3)) (5/48)^(1/3) ratio^(2/3) ~ 19 >> 1,
        # independent of the drive amplitude, so condition (i) must fail
        d = DerivedQuantities.from_rates(omega_m=1.0, omega_s=100.0,
                                         gamma_c=0.5, gamma_d=0.5,
                                         G_0=0.05, c_bar=20.0)
        ratio = sql_ratio(d).ratio
        assert ratio == pytest.approx(100.0, rel=1e-2)
        report = feasibility_report(d)
        expected_min_sq = (3 / 2 ** (2 / 3)) * (5 / 48) ** (1 / 3) * ratio ** (2 / 3)
        assert report.min_resolution**2 == pytest.approx(expected_min_sq,
                                                         rel=1e-6)
        assert not report.condition_i
        assert not report.feasible

    def test_constructed_pass(self):
        d = DerivedQuantities.from_rates(omega_m=1.0, omega_s=200.0,
                                         gamma_c=0.05, gamma_d=0.05,
                                         G_0=0.5, c_bar=2.0)
        report = feasibility_report(d)
        assert sql_ratio(d).ratio < 1
        assert report.condition_i and report.condition_ii and report.condition_iii
        assert report.regime.passed
        assert report.feasible

    def test_record_keys_stable(self, toy_derived):
        rec = feasibility_report(toy_derived).to_record()
        for key in ("sql_ratio", "finesse_form", "min_resolution", "tau_star",
                    "condition_i", "condition_ii", "condition_iii",
                    "thermal_constraint_lhs", "thermal_constraint_rhs",
                    "feasible", "regime_ok"):
            assert key in rec

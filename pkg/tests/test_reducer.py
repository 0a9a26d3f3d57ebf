import math

import numpy as np
import pytest

from sqlimit import (DegenerateModes, DerivedQuantities, ParametricSystem,
                     QndViolated, brute_force_eigen, reduce, sql_ratio,
                     to_tripartite, validate_dispersive)


def coupled_cavity_system(omega_m=1.0, omega_s=50.0, g0=0.05, c_bar=20.0,
                          gamma_c=0.1, gamma_d=0.1, omega_c=1000.0):
    """Two external normal modes split by 2 omega_s, probe coupling g0."""
    chi = np.zeros((2, 2, 1))
    chi[0, 1, 0] = chi[1, 0, 0] = g0
    return ParametricSystem(Omega=[omega_m],
                            omega=[omega_c - omega_s, omega_c + omega_s],
                            chi=chi, drive=(0, c_bar),
                            kappa=[gamma_c, gamma_d])


def random_four_mode(rng, chi_scale):
    omega = np.array([10.0, 17.0, 26.0, 41.0]) + rng.uniform(-1, 1, 4)
    omega.sort()
    n_mech = 2
    Omega = rng.uniform(0.05, 0.2, n_mech)
    chi = rng.normal(0.0, chi_scale, (4, 4, n_mech))
    chi = (chi + chi.transpose(1, 0, 2)) / 2
    return ParametricSystem(Omega=Omega, omega=omega, chi=chi, drive=(0, 1.0))


class TestValidateDispersive:
    def test_zero_coupling_passes(self):
        sys0 = ParametricSystem(Omega=[0.1], omega=[10.0, 20.0],
                                chi=np.zeros((2, 2, 1)), drive=(0, 1.0))
        assert validate_dispersive(sys0).passed

    def test_degenerate_pair_flagged_infinite(self):
        sys0 = ParametricSystem(Omega=[0.1], omega=[10.0, 10.0],
                                chi=np.zeros((2, 2, 1)), drive=(0, 1.0))
        report = validate_dispersive(sys0)
        assert not report.passed
        assert math.isinf(report["|chi[0,1]|/|gap[0,1]|"].ratio)

    def test_coupled_cavity_ratio_matches_direct_check(self, toy_derived):
        sys0 = coupled_cavity_system()
        report = validate_dispersive(sys0)
        ratio = report["|chi[0,1]|/|gap[0,1]|"].ratio
        # same separation of scales as the two-mode regime check G0/(2 ws)
        assert ratio == pytest.approx(toy_derived.G_0 / (2 * toy_derived.omega_s),
                                      rel=1e-12)


class TestReduce:
    def test_coupled_cavity_dispersive_shift(self):
        # probe mode shifts by -g0^2/(2 omega_s) q^2, idle by +g0^2/(2 omega_s)
        sys0 = coupled_cavity_system()
        red = reduce(sys0)
        assert red.qnd_ok
        shift = 0.05**2 / (2 * 50.0)
        assert red.quadratic[0, 0, 0] == pytest.approx(-shift, rel=1e-12)
        assert red.quadratic[1, 0, 0] == pytest.approx(+shift, rel=1e-12)
        assert red.probe_quadratic == pytest.approx(-shift, rel=1e-12)

    def test_diagonal_coupling_gives_pure_linear_shifts(self):
        chi = np.zeros((3, 3, 1))
        for i, val in enumerate((0.01, -0.02, 0.03)):
            chi[i, i, 0] = val
        sys0 = ParametricSystem(Omega=[0.1], omega=[10.0, 20.0, 35.0],
                                chi=chi, drive=(0, 1.0))
        red = reduce(sys0)
        assert np.allclose(red.quadratic, 0.0)
        assert np.allclose(red.linear[:, 0], [0.01, -0.02, 0.03])
        q = np.array([0.7])
        assert np.allclose(red.omega_prime(q),
                           sys0.omega + red.linear[:, 0] * 0.7)

    def test_degenerate_modes_raise(self):
        chi = np.zeros((2, 2, 1))
        chi[0, 1, 0] = chi[1, 0, 0] = 1e-4
        sys0 = ParametricSystem(Omega=[0.1], omega=[10.0, 10.0 + 1e-9],
                                chi=chi, drive=(0, 1.0))
        with pytest.raises(DegenerateModes):
            reduce(sys0)

    def test_residual_linear_coupling(self):
        sys0 = coupled_cavity_system()
        red = reduce(sys0)
        expected = 0.05 * 20.0 / (2 * 50.0)  # chi * amp / gap
        assert red.residual_linear[1] == pytest.approx(expected, rel=1e-12)
        assert red.residual_linear[0] == 0.0


class TestBruteForceOracle:
    def test_zero_coupling_returns_bare_frequencies(self):
        sys0 = ParametricSystem(Omega=[0.1], omega=[10.0, 20.0, 30.0],
                                chi=np.zeros((3, 3, 1)), drive=(0, 1.0))
        assert np.allclose(brute_force_eigen(sys0, [0.5]), sys0.omega)

    def test_two_by_two_closed_form(self):
        sys0 = coupled_cavity_system(omega_s=5.0, g0=0.3)
        q = 0.8
        evs = brute_force_eigen(sys0, [q])
        mean = np.mean(sys0.omega)
        split = math.sqrt(25.0 + (0.3 * q) ** 2)
        assert evs[0] == pytest.approx(mean - split, rel=1e-12)
        assert evs[1] == pytest.approx(mean + split, rel=1e-12)

    def test_quadratic_fit_recovers_perturbative_coefficient(self):
        sys0 = coupled_cavity_system()
        red = reduce(sys0)
        qs = np.linspace(-0.3, 0.3, 9)
        probe = [brute_force_eigen(sys0, [q])[0] for q in qs]
        coeffs = np.polynomial.polynomial.polyfit(qs, probe, 4)
        assert coeffs[2] == pytest.approx(red.probe_quadratic, rel=1e-4)

    def test_perturbation_error_is_third_order(self):
        # halving chi shrinks |exact - perturbative| by about 8
        rng = np.random.default_rng(2718)
        ratios = []
        for _ in range(20):
            sys1 = random_four_mode(rng, chi_scale=0.08)
            q = rng.uniform(-1.0, 1.0, sys1.n_mech)

            def error(system):
                exact = brute_force_eigen(system, q)
                pert = np.sort(reduce(system).omega_prime(q))
                return np.max(np.abs(exact - pert))

            half = ParametricSystem(Omega=sys1.Omega, omega=sys1.omega,
                                    chi=sys1.chi / 2, drive=sys1.drive)
            e1, e2 = error(sys1), error(half)
            ratios.append(e1 / e2)
        median = float(np.median(ratios))
        assert median == pytest.approx(8.0, rel=0.2)

    def test_permutation_of_external_labels(self):
        rng = np.random.default_rng(99)
        sys1 = random_four_mode(rng, chi_scale=0.05)
        perm = np.array([2, 0, 3, 1])
        sys2 = ParametricSystem(Omega=sys1.Omega, omega=sys1.omega[perm],
                                chi=sys1.chi[np.ix_(perm, perm)],
                                drive=(0, 1.0))
        q = np.array([0.3, -0.2])
        w1 = reduce(sys1).omega_prime(q)
        w2 = reduce(sys2).omega_prime(q)
        assert np.allclose(np.sort(w1), np.sort(w2), rtol=1e-12)


class TestTripartite:
    def test_roundtrip_matches_direct_sql_ratio(self, toy_derived):
        sys0 = coupled_cavity_system()
        tri = to_tripartite(sys0)
        assert tri.idle_index == 1
        assert tri.omega_s == pytest.approx(toy_derived.omega_s, rel=1e-12)
        assert tri.G_0 == pytest.approx(toy_derived.G_0, rel=1e-12)
        direct = sql_ratio(toy_derived).ratio
        via_reduction = sql_ratio(tri.derived).ratio
        assert via_reduction == pytest.approx(direct, rel=1e-12)

    def test_equidistant_idles_tie_break_low_index(self):
        chi = np.zeros((3, 3, 1))
        chi[0, 1, 0] = chi[1, 0, 0] = 0.01
        chi[0, 2, 0] = chi[2, 0, 0] = 0.01
        sys0 = ParametricSystem(Omega=[0.1], omega=[20.0, 10.0, 30.0],
                                chi=chi, drive=(0, 1.0))
        with pytest.warns(UserWarning, match="equidistant"):
            tri = to_tripartite(sys0)
        assert tri.idle_index == 1

    def test_far_mode_contribution_reported(self):
        # three external modes: the far mode still shifts the probe but is
        # excluded from the tripartite noise model
        chi = np.zeros((3, 3, 1))
        chi[0, 1, 0] = chi[1, 0, 0] = 0.02
        chi[0, 2, 0] = chi[2, 0, 0] = 0.05
        sys0 = ParametricSystem(Omega=[0.1], omega=[10.0, 12.0, 40.0],
                                chi=chi, drive=(0, 1.0))
        tri = to_tripartite(sys0)
        assert tri.idle_index == 1
        near = 0.02**2 / (10.0 - 12.0)
        far = 0.05**2 / (10.0 - 40.0)
        assert tri.tripartite_quadratic == pytest.approx(near, rel=1e-12)
        assert tri.far_quadratic == pytest.approx(far, rel=1e-12)
        assert tri.probe_quadratic == pytest.approx(near + far, rel=1e-12)

    def test_qnd_violation_raises(self):
        chi = np.zeros((2, 2, 1))
        chi[0, 1, 0] = chi[1, 0, 0] = 0.01
        chi[0, 0, 0] = 0.05  # linear self-coupling on the probe
        sys0 = ParametricSystem(Omega=[0.1], omega=[10.0, 20.0], chi=chi,
                                drive=(0, 1.0))
        with pytest.raises(QndViolated):
            to_tripartite(sys0)

    def test_multi_mechanical_coupling_violates_qnd(self):
        chi = np.zeros((2, 2, 2))
        chi[0, 1, 0] = chi[1, 0, 0] = 0.01
        chi[0, 1, 1] = chi[1, 0, 1] = 0.02  # couples the second mech mode
        sys0 = ParametricSystem(Omega=[0.1, 0.2], omega=[10.0, 20.0], chi=chi,
                                drive=(0, 1.0))
        with pytest.raises(QndViolated):
            to_tripartite(sys0)

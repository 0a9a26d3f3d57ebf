import numpy as np
import pytest

from sqlimit import DerivedQuantities, SystemConfig, derive


@pytest.fixture(scope="session")
def membrane_config() -> SystemConfig:
    """The bundled default parameter set, constructed directly."""
    return SystemConfig(m=50e-15, omega_m=2 * np.pi * 1e5, Q_m=3.2e7,
                        wavelength=532e-9, L=0.03, r_m=0.9999, finesse=6e5,
                        T=0.1, I_0=5e-9)


@pytest.fixture(scope="session")
def membrane_derived(membrane_config):
    return derive(membrane_config, allow_unstable=True)


@pytest.fixture(scope="session")
def toy_derived() -> DerivedQuantities:
    """Dimensionless quantum-noise toy: shot and back-action only."""
    return DerivedQuantities.from_rates(omega_m=1.0, omega_s=50.0,
                                        gamma_c=0.1, gamma_d=0.1, G_0=0.05,
                                        c_bar=20.0)


@pytest.fixture(scope="session")
def toy_thermal_derived() -> DerivedQuantities:
    """Same optics, with a hot mechanical bath dominating the error growth."""
    return DerivedQuantities.from_rates(omega_m=1.0, omega_s=50.0,
                                        gamma_c=0.1, gamma_d=0.1, G_0=0.05,
                                        c_bar=20.0, gamma_m=1e-6, n_th=1e3)


def random_rates(rng: np.random.Generator) -> DerivedQuantities:
    """A random but regime-respecting rate record (log-uniform draws)."""
    omega_m = 10.0 ** rng.uniform(-1, 1)
    omega_s = omega_m * 10.0 ** rng.uniform(1.2, 3)
    gamma = omega_m * 10.0 ** rng.uniform(-2, -0.5)
    g0 = omega_s * 10.0 ** rng.uniform(-4, -2)
    # keep the spring comfortably stable
    c_max = np.sqrt(omega_m * omega_s) / g0
    c_bar = c_max * 10.0 ** rng.uniform(-2, -0.5)
    return DerivedQuantities.from_rates(omega_m=omega_m, omega_s=omega_s,
                                        gamma_c=gamma, gamma_d=gamma,
                                        G_0=g0, c_bar=c_bar)

"""Frequency-domain response of the radiation-pressure force.

In the frame rotating with the drive, the idle optical mode sits at twice
the tunnelling splitting.  Eliminating it gives the force acting on the
membrane as a filtered combination of the idle-mode input quadratures
(back-action) plus a term proportional to the membrane position itself
(optical spring)::

    F(omega) = [2 sqrt(gamma_d) G_0 c_bar ((gamma_d - i omega) v1 - 2 omega_s v2)
                + 4 G_0^2 c_bar^2 omega_s q]
               / [(omega + 2 omega_s + i gamma_d)(omega - 2 omega_s + i gamma_d)]

with the e^{-i omega t} Fourier convention.  The v1/v2 coefficients build the
back-action spectrum; the q coefficient tends to -G_0^2 c_bar^2 / omega_s at
low frequency, the negative rigidity that softens omega_m to omega_eff.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import DerivedQuantities
from .resolution import lorentzian_spectrum

__all__ = [
    "RpForceResponse",
    "rp_transfer",
    "backaction_spectrum",
    "backaction_coefficients",
    "static_spring_coefficient",
]

#: Two-sided white spectral density assigned to each vacuum input quadrature.
#: Unit density reproduces the golden-rule (normally ordered) rates that the
#: closed-form resolution uses; 0.5 gives the symmetrized Weyl-ordered form.
VACUUM_QUADRATURE_PSD = 1.0


@dataclass(frozen=True)
class RpForceResponse:
    """Coefficients of the radiation-pressure force at frequency ``omega``.

    ``coeff_v1`` and ``coeff_v2`` multiply the idle-mode input quadratures
    (back-action); ``coeff_q`` multiplies the membrane position (spring).
    """

    omega: np.ndarray | float
    coeff_v1: np.ndarray | complex
    coeff_v2: np.ndarray | complex
    coeff_q: np.ndarray | complex


def rp_transfer(omega, derived: DerivedQuantities) -> RpForceResponse:
    """Radiation-pressure transfer coefficients at ``omega`` (scalar or array).

    The common denominator never vanishes for gamma_d > 0, and the response
    obeys the reality symmetry R(-omega) = conj(R(omega)).
    """
    d = derived
    w = np.asarray(omega, dtype=float)
    den = (w + 2 * d.omega_s + 1j * d.gamma_d) * (w - 2 * d.omega_s + 1j * d.gamma_d)
    pre = 2 * np.sqrt(d.gamma_d) * d.G_0 * d.c_bar
    cv1 = pre * (d.gamma_d - 1j * w) / den
    cv2 = pre * (-2 * d.omega_s) / den
    cq = 4 * d.G_0**2 * d.c_bar**2 * d.omega_s / den
    if w.ndim == 0:
        return RpForceResponse(float(w), complex(cv1), complex(cv2), complex(cq))
    return RpForceResponse(w, cv1, cv2, cq)


def backaction_spectrum(omega, derived: DerivedQuantities,
                        psd: float = VACUUM_QUADRATURE_PSD,
                        symmetrized: bool = True):
    """Spectral density of the back-action force at ``omega``.

    Parameters
    ----------
    omega : float or ndarray
        Analysis frequency, rad/s.
    psd : float
        Two-sided density of each vacuum input quadrature.
    symmetrized : bool
        True (default): |coeff_v1|^2 psd + |coeff_v2|^2 psd, an even function
        of omega.  False: the single-wing golden-rule form built on the
        idle-mode spectrum, 2 psd G_0^2 c_bar^2 S_idle(omega); averaging its
        two wings recovers the symmetrized form identically.
    """
    d = derived
    if symmetrized:
        r = rp_transfer(omega, derived)
        return psd * (np.abs(r.coeff_v1) ** 2 + np.abs(r.coeff_v2) ** 2)
    return 2 * psd * d.G_0**2 * d.c_bar**2 * lorentzian_spectrum(omega, d)


def backaction_coefficients(derived: DerivedQuantities) -> tuple[float, float]:
    """Low-frequency force coefficients (a1, a2) multiplying v1, v2.

    These are |coeff_v1(0)| and |coeff_v2(0)|; the time-domain simulator
    drives the slow mechanics with a1*v1 + a2*v2, which carries the exact
    zero-frequency back-action power a1^2 + a2^2 per unit quadrature density.
    """
    d = derived
    den0 = 4 * d.omega_s**2 + d.gamma_d**2
    pre = 2 * np.sqrt(d.gamma_d) * d.G_0 * d.c_bar
    return pre * d.gamma_d / den0, pre * 2 * d.omega_s / den0


def static_spring_coefficient(derived: DerivedQuantities) -> float:
    """Exact zero-frequency spring coefficient, Re coeff_q(0).

    Approaches -G_0^2 c_bar^2 / omega_s for gamma_d << omega_s; the sign
    convention is such that a negative value softens the trap.
    """
    return float(np.real(rp_transfer(0.0, derived).coeff_q))

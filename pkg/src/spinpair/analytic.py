"""Closed-form results used as oracles for the numerical engine.

Covers the single driven atom and the two-atom small-separation limit
(R much smaller than the wavelength, all G replaced by their R -> 0 values).
Every time-dependent function takes physical time ``t`` plus a
:class:`PumpScale`; passing ``scale=None`` means ``t`` is already in units
of 1/gamma_op.

In :func:`coupled_basis_quasistatic` the amplitude r_-1 is O((chi/Delta)^2)
relative to s_1 and is returned as exactly zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

__all__ = [
    "PumpScale",
    "SuperpositionCoeffs",
    "EQUAL",
    "single_atom_generator",
    "single_atom_quasistatic",
    "independent_coherence",
    "coupled_coherence_smallR",
    "coupled_coherence_slope_smallR",
    "coupled_coherence_rate_smallR",
    "coupled_population_smallR",
    "independent_population",
    "independent_population_slope",
    "coupled_basis_quasistatic",
    "swap_rates_smallR",
]


@dataclass(frozen=True)
class PumpScale:
    """Drive scale: amplitude decay rate, Rabi frequency and detuning.

    ``gamma_op = gamma * (chi/delta)**2`` is the optical pumping rate.
    """

    gamma: float
    chi: float
    delta: float

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.delta == 0:
            raise ValueError("delta must be nonzero")

    @classmethod
    def from_ratios(cls, chi_over_delta: float = 0.1, gamma_over_delta: float = 1e-3,
                    delta: float = 1.0) -> PumpScale:
        return cls(gamma=gamma_over_delta * delta, chi=chi_over_delta * delta, delta=delta)

    @property
    def gamma_op(self) -> float:
        return self.gamma * (self.chi / self.delta) ** 2

    def tau(self, t):
        """Dimensionless time gamma_op * t."""
        return self.gamma_op * np.asarray(t, dtype=float)


@dataclass(frozen=True)
class SuperpositionCoeffs:
    """Real amplitudes of a|down> + b|up>."""

    a: float
    b: float

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise ValueError("superposition amplitudes must be nonnegative")
        if abs(self.a**2 + self.b**2 - 1) > 1e-12:
            raise ValueError(f"a^2 + b^2 must equal 1, got {self.a**2 + self.b**2!r}")

    @classmethod
    def normalized(cls, a: float, b: float) -> SuperpositionCoeffs:
        n = math.hypot(a, b)
        return cls(a / n, b / n)

    @property
    def ab(self) -> float:
        return self.a * self.b


EQUAL = SuperpositionCoeffs(math.sqrt(0.5), math.sqrt(0.5))


def _tau(t, scale: PumpScale | None):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be nonnegative")
    return t if scale is None else scale.tau(t)


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


def single_atom_generator(scale: PumpScale, include_stark: bool = False) -> np.ndarray:
    """Rate matrix over (rho_upup, rho_downup, rho_downdown) in physical units.

    With ``include_stark`` the coherence picks up the light-shift phase
    i*chi^2/delta and the matrix becomes complex.
    """
    g = scale.gamma_op
    m = np.array([[0.0, 0.0, 2 * g / 3],
                  [0.0, -g, 0.0],
                  [0.0, 0.0, -2 * g / 3]], dtype=complex if include_stark else float)
    if include_stark:
        m[1, 1] += 1j * scale.chi**2 / scale.delta
    return m


def single_atom_quasistatic(scale: PumpScale, rho_dd: complex, rho_du: complex) -> dict[str, complex]:
    """Leading-order excited-manifold elements driven by the ground density.

    Elements follow rho_ij = b_i b_j^*. Keys: ``aa``, ``bb``, ``ab``, ``au``,
    ``da``, ``ad`` (alpha=a, beta=b, up=u, down=d).
    """
    r = scale.chi / scale.delta
    f = r + 1j * scale.gamma * scale.chi / scale.delta**2
    return {
        "aa": r * r * rho_dd,
        "bb": 0j,
        "ab": 0j,
        "au": f * rho_du,
        "ad": f * rho_dd,
        "da": np.conj(f) * rho_dd,
    }


def independent_coherence(t, coeffs: SuperpositionCoeffs = EQUAL, scale: PumpScale | None = None):
    """Collective coherence of two uncoupled atoms: 2ab e^{-tau}."""
    tau = _tau(t, scale)
    return _out(2 * coeffs.ab * np.exp(-tau))


def coupled_coherence_smallR(t, coeffs: SuperpositionCoeffs = EQUAL, scale: PumpScale | None = None):
    """Collective coherence at R -> 0: 2ab e^{-2tau}(-a^2 + (1+a^2) e^{2tau/3})."""
    tau = _tau(t, scale)
    a2 = coeffs.a**2
    return _out(2 * coeffs.ab * np.exp(-2 * tau) * (-a2 + (1 + a2) * np.exp(2 * tau / 3)))


def coupled_coherence_slope_smallR(t, coeffs: SuperpositionCoeffs = EQUAL, scale: PumpScale | None = None):
    """Time derivative of :func:`coupled_coherence_smallR` (per unit tau)."""
    tau = _tau(t, scale)
    a2 = coeffs.a**2
    return _out(2 * coeffs.ab * (2 * a2 * np.exp(-2 * tau) - (4 / 3) * (1 + a2) * np.exp(-4 * tau / 3)))


def coupled_coherence_rate_smallR(t, coeffs: SuperpositionCoeffs = EQUAL, scale: PumpScale | None = None):
    """Instantaneous decay rate -d ln P / d tau of the small-R coherence."""
    return _out(-np.asarray(coupled_coherence_slope_smallR(t, coeffs, scale))
                / np.asarray(coupled_coherence_smallR(t, coeffs, scale)))


def coupled_population_smallR(t, scale: PumpScale | None = None):
    """Up population at R -> 0 starting from |down,down>."""
    tau = _tau(t, scale)
    return _out(1 - np.exp(-4 * tau / 3) * (3 + 2 * tau) / 3)


def independent_population(t, scale: PumpScale | None = None):
    """Up population of a single pumped atom starting from |down>."""
    tau = _tau(t, scale)
    return _out(1 - np.exp(-2 * tau / 3))


def independent_population_slope(t, scale: PumpScale | None = None):
    """Time derivative of :func:`independent_population` (per unit tau)."""
    tau = _tau(t, scale)
    return _out(2 / 3 * np.exp(-2 * tau / 3))


def coupled_basis_quasistatic(scale: PumpScale, g_m1: complex, g_0: complex
                              ) -> tuple[complex, complex, complex, complex]:
    """Excited symmetric amplitudes (s1, r1, r-1, s-1) at R -> 0.

    ``g_m1`` is the |down,down> amplitude, ``g_0`` the symmetric one-up amplitude.
    """
    g, chi, d = scale.gamma, scale.chi, scale.delta
    z = 5 * g / 3 + 1j * d
    s1 = 1j * math.sqrt(2) * chi * z / (z * z - g * g / 9) * g_m1
    r1 = 1j * chi / (1j * d + 4 * g / 3) * g_0
    return complex(s1), complex(r1), 0j, 0j


def swap_rates_smallR(initial: Literal["up", "down"], coeffs: SuperpositionCoeffs,
                      scale: PumpScale | None = None) -> tuple[float, float]:
    """Initial (out, in) growth rates of atom 1's coherence at R -> 0.

    Atom 1 starts in the z state ``initial``, atom 2 in ``coeffs``. Rates are
    in physical units when ``scale`` is given, else in units of gamma_op.
    """
    g = 1.0 if scale is None else scale.gamma_op
    ab = coeffs.ab
    if initial == "up":
        return -g * ab / 3, 0.0
    if initial == "down":
        return -g * ab / 3, 2 * g * ab / 3
    raise ValueError(f"initial must be 'up' or 'down', got {initial!r}")

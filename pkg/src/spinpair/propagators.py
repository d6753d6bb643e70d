"""Vacuum-mediated exchange propagators G_{qq'} between two dipoles.

``G`` is built from spherical Hankel functions of the first kind and
spherical harmonics of the direction from atom 1 to atom 2. Its real part
(``j_l`` in place of ``h_l``) sets cooperative decay; the imaginary part
(``y_l``) sets the collective level shift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

__all__ = [
    "SphericalPoint",
    "PropagatorMatrix",
    "spherical_hankel_h0",
    "spherical_hankel_h2",
    "spherical_bessel_j2",
    "spherical_harmonic",
    "propagator",
    "propagator_matrix",
    "QS",
]

Part = Literal["full", "dissipative", "reactive"]

#: Helicity labels in matrix order.
QS = (1, 0, -1)

# Below this argument j2 is summed as a power series. The closed form loses
# about 45*eps/x^5 relative accuracy to cancellation, i.e. it only reaches
# 1e-12 for x above ~0.4.
_J2_SERIES_BELOW = 0.5

_SQRT_4PI = math.sqrt(4 * math.pi)


def _check_x(x: float) -> float:
    x = float(x)
    if not x > 0 or not math.isfinite(x):
        raise ValueError(f"propagator argument x = k*R must be finite and > 0, got {x}")
    return x


def spherical_bessel_j2(x: float) -> float:
    """j2(x), switching to its Taylor series for small x."""
    x = _check_x(x)
    if x < _J2_SERIES_BELOW:
        # sum_k (-x^2/2)^k x^2 / (k! (2k+5)!!)
        x2 = x * x
        term = x2 / 15
        total = term
        k = 0
        while abs(term) > 1e-17 * abs(total):
            k += 1
            term *= -x2 / (2 * k * (2 * k + 5))
            total += term
        return total
    s, c = math.sin(x), math.cos(x)
    return (3 / x**3 - 1 / x) * s - 3 * c / x**2


def spherical_hankel_h0(x: float) -> complex:
    """h0(x) = j0(x) + i y0(x) = sin(x)/x - i cos(x)/x."""
    x = _check_x(x)
    return complex(math.sin(x) / x, -math.cos(x) / x)


def spherical_hankel_h2(x: float) -> complex:
    """h2(x) = j2(x) + i y2(x)."""
    x = _check_x(x)
    s, c = math.sin(x), math.cos(x)
    y2 = -(3 / x**3 - 1 / x) * c - 3 * s / x**2
    return complex(spherical_bessel_j2(x), y2)


def spherical_harmonic(l: int, m: int, theta: float, phi: float) -> complex:
    """Orthonormal Y_lm with Condon-Shortley phase, for l=0 and l=2 only."""
    st, ct = math.sin(theta), math.cos(theta)
    if (l, m) == (0, 0):
        return complex(1 / _SQRT_4PI)
    if l == 2 and abs(m) <= 2:
        if m == 0:
            return complex(0.25 * math.sqrt(5 / math.pi) * (3 * ct * ct - 1))
        if abs(m) == 1:
            amp = 0.5 * math.sqrt(15 / (2 * math.pi)) * st * ct
        else:
            amp = 0.25 * math.sqrt(15 / (2 * math.pi)) * st * st
        phase = complex(math.cos(m * phi), math.sin(m * phi))
        # (-1)^m for positive m only
        sign = -1 if m == 1 else 1
        return sign * amp * phase
    raise ValueError(f"unsupported spherical harmonic (l, m) = ({l}, {m})")


@dataclass(frozen=True)
class SphericalPoint:
    """Position of atom 2 relative to atom 1: x = k*R, polar theta, azimuth phi.

    theta is measured from the drive wavevector.
    """

    x: float
    theta: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        _check_x(self.x)
        if not 0 <= self.theta <= math.pi:
            raise ValueError(f"theta must lie in [0, pi], got {self.theta}")
        if not math.isfinite(self.phi):
            raise ValueError("phi must be finite")

    def reflected(self) -> SphericalPoint:
        """The point -R (theta -> pi - theta, phi -> phi + pi)."""
        return SphericalPoint(self.x, math.pi - self.theta, math.fmod(self.phi + math.pi, 2 * math.pi))


def _radial(point: SphericalPoint, part: Part) -> tuple[complex, complex]:
    h0, h2 = spherical_hankel_h0(point.x), spherical_hankel_h2(point.x)
    if part == "dissipative":
        return complex(h0.real), complex(h2.real)
    if part == "reactive":
        return complex(h0.imag), complex(h2.imag)
    if part != "full":
        raise ValueError(f"part must be 'full', 'dissipative' or 'reactive', got {part!r}")
    return h0, h2


def _listed(q: int, qp: int, h0: complex, h2: complex, th: float, ph: float) -> complex:
    Y = lambda l, m: spherical_harmonic(l, m, th, ph)  # noqa: E731
    if q == qp:
        if q == 0:
            return _SQRT_4PI * h0 * Y(0, 0) + math.sqrt(4 * math.pi / 5) * h2 * Y(2, 0)
        return _SQRT_4PI * h0 * Y(0, 0) - 0.5 * math.sqrt(4 * math.pi / 5) * h2 * Y(2, 0)
    if (q, qp) == (1, -1):
        return -1.5 * math.sqrt(8 * math.pi / 15) * h2 * Y(2, -2)
    if (q, qp) == (-1, 1):
        return -1.5 * math.sqrt(8 * math.pi / 15) * h2 * Y(2, 2)
    if (q, qp) == (1, 0):
        return -1.5 * math.sqrt(4 * math.pi / 15) * h2 * Y(2, -1)
    if (q, qp) == (-1, 0):
        return -1.5 * math.sqrt(4 * math.pi / 15) * h2 * Y(2, 1)
    # remaining pairs follow from the symmetry relations
    if (q, qp) == (0, -1):
        return -_listed(1, 0, h0, h2, th, ph)
    if (q, qp) == (0, 1):
        return -_listed(-1, 0, h0, h2, th, ph)
    raise ValueError(f"helicities must be in {{-1, 0, 1}}, got ({q}, {qp})")


def propagator(q: int, q_prime: int, point: SphericalPoint, part: Part = "full") -> complex:
    """Single entry G_{q q'} at ``point``.

    ``part="dissipative"`` replaces h_l by j_l, ``"reactive"`` by y_l.
    """
    h0, h2 = _radial(point, part)
    return complex(_listed(q, q_prime, h0, h2, point.theta, point.phi))


class PropagatorMatrix:
    """3x3 complex matrix G_{qq'} indexed by helicities in {-1, 0, 1}."""

    __slots__ = ("_m",)

    def __init__(self, entries: np.ndarray):
        m = np.array(entries, dtype=complex)
        if m.shape != (3, 3):
            raise ValueError("propagator matrix must be 3x3")
        m.setflags(write=False)
        self._m = m

    @staticmethod
    def index(q: int) -> int:
        return QS.index(q)

    def __getitem__(self, qq: tuple[int, int]) -> complex:
        q, qp = qq
        return complex(self._m[QS.index(q), QS.index(qp)])

    @property
    def array(self) -> np.ndarray:
        """Read-only array with rows/columns ordered as q = +1, 0, -1."""
        return self._m

    def __repr__(self) -> str:
        return f"PropagatorMatrix({self._m!r})"


def propagator_matrix(point: SphericalPoint, part: Part = "full") -> PropagatorMatrix:
    h0, h2 = _radial(point, part)
    m = np.empty((3, 3), dtype=complex)
    for i, q in enumerate(QS):
        for j, qp in enumerate(QS):
            m[i, j] = _listed(q, qp, h0, h2, point.theta, point.phi)
    return PropagatorMatrix(m)

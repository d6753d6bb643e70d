"""Clebsch-Gordan weights for the J=1/2 -> J'=1/2 transition.

Each coefficient is stored exactly as a signed square root of a rational,
``sign * sqrt(p/q)``, and converted to float only on lookup.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

__all__ = [
    "MagneticQN",
    "DOWN",
    "UP",
    "CGEntry",
    "CG_TABLE",
    "cg",
    "cg_exact",
    "gamma_repop",
]


@dataclass(frozen=True, order=True)
class MagneticQN:
    """Magnetic quantum number m = +-1/2 of a ground or excited sublevel."""

    value: Fraction

    def __post_init__(self):
        v = Fraction(self.value)
        if v not in (Fraction(-1, 2), Fraction(1, 2)):
            raise ValueError(f"magnetic quantum number must be +-1/2, got {self.value}")
        object.__setattr__(self, "value", v)

    @classmethod
    def of(cls, m: MagneticQN | Fraction | float | str) -> MagneticQN:
        if isinstance(m, MagneticQN):
            return m
        return cls(Fraction(m))

    @property
    def index(self) -> int:
        """0 for m=-1/2, 1 for m=+1/2 (the basis index used by the engine)."""
        return 0 if self.value < 0 else 1

    def __float__(self) -> float:
        return float(self.value)

    def __repr__(self) -> str:
        return f"MagneticQN({self.value})"


DOWN = MagneticQN(Fraction(-1, 2))
UP = MagneticQN(Fraction(1, 2))


@dataclass(frozen=True)
class CGEntry:
    sign: int
    square: Fraction

    @property
    def value(self) -> float:
        return self.sign * math.sqrt(self.square)


# (ground m, excited m') -> coefficient. Condon-Shortley magnitudes; the phase
# of the m'=-1/2 excited state is chosen so the R->0 symmetric-sector
# cross coupling between s1 and r-1 comes out as -gamma/3.
CG_TABLE: dict[tuple[Fraction, Fraction], CGEntry] = {
    (Fraction(-1, 2), Fraction(-1, 2)): CGEntry(-1, Fraction(1, 3)),
    (Fraction(-1, 2), Fraction(1, 2)): CGEntry(+1, Fraction(2, 3)),
    (Fraction(1, 2), Fraction(-1, 2)): CGEntry(+1, Fraction(2, 3)),
    (Fraction(1, 2), Fraction(1, 2)): CGEntry(-1, Fraction(1, 3)),
}


def cg_exact(m, m_prime) -> CGEntry:
    """Exact (sign, squared value) for ground ``m`` and excited ``m_prime``."""
    return CG_TABLE[(MagneticQN.of(m).value, MagneticQN.of(m_prime).value)]


def cg(m, m_prime) -> float:
    """Signed coefficient {m, m'} coupling ground ``m`` to excited ``m_prime``."""
    return cg_exact(m, m_prime).value


def gamma_repop(a, a_prime, b, b_prime, gamma: float) -> float:
    """Repopulation rate 2*gamma*{a,a'}{b,b'} with photon-helicity selection.

    ``a``/``b`` are ground sublevels and ``a_prime``/``b_prime`` excited ones.
    The rate vanishes unless both decays emit the same helicity.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    a, a_prime, b, b_prime = (MagneticQN.of(v) for v in (a, a_prime, b, b_prime))
    if a_prime.value - a.value != b_prime.value - b.value:
        return 0.0
    ca, cb = cg_exact(a, a_prime), cg_exact(b, b_prime)
    if a == b and a_prime == b_prime:
        return 2 * gamma * float(ca.square)
    return 2 * gamma * ca.value * cb.value

"""Ground-manifold rate generator for two driven J=1/2 -> J'=1/2 atoms.

The one-excitation amplitudes are eliminated quasistatically, leaving a
16x16 generator ``L`` with ``d vec(rho)/dt = L vec(rho)`` on the two-atom
ground manifold.

Conventions
-----------
Ground pair basis, in this order: ``dd, du, ud, uu`` (atom 1 first), so
index = 2*m1 + m2 with down=0, up=1. ``rho[i, j] = <i|rho|j>`` and
``vec(rho)`` is row-major, ``vec(rho)[4*i + j] = rho[i, j]``.

One-excitation basis (8 states): indices 0-3 are ``|e1, g2>`` with
index = 2*e + g, indices 4-7 are ``|g1, e2>`` with index = 4 + 2*g + e,
where beta (m'=-1/2) = 0 and alpha (m'=+1/2) = 1.

The drive couples down -> alpha on both atoms; atom 1 sits at the origin and
atom 2 carries the phase e^{i x cos(theta)}. Generator matrices are stored in
units of gamma_op.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .analytic import PumpScale, SuperpositionCoeffs
from .angular import DOWN, UP, cg
from .errors import NumericError
from .propagators import QS, PropagatorMatrix, SphericalPoint, propagator_matrix

__all__ = [
    "BASIS",
    "DriveParams",
    "PairGeometry",
    "GroundDensity",
    "GeneratorOptions",
    "Generator",
    "ExcitedEliminationMap",
    "build_amplitude_system",
    "quasistatic_eliminate",
    "first_order_eliminate",
    "out_terms",
    "in_terms",
    "assemble_generator",
    "coherence_expectation",
    "population_expectation",
    "one_atom_coherence",
    "OBSERVABLES",
    "load_generator_dump",
]

BASIS = ("dd", "du", "ud", "uu")
_I4 = np.eye(4)
_MG = (DOWN, UP)  # ground sublevels by index
_ME = (DOWN, UP)  # excited: beta, alpha
_COND_LIMIT = 1e12


@dataclass(frozen=True)
class DriveParams:
    """Rabi frequency chi, detuning delta, amplitude decay gamma, wavenumber k_L.

    Only the ratios chi/delta and gamma/delta matter for the dynamics in
    units of 1/gamma_op.
    """

    chi: float = 0.1
    delta: float = 1.0
    gamma: float = 1e-3
    k_L: float = 1.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.k_L > 0:
            raise ValueError("k_L must be positive")
        if self.delta == 0:
            raise ValueError("delta must be nonzero")
        if abs(self.chi) >= abs(self.delta):
            warnings.warn("|chi| >= |delta|: outside the perturbative regime", RuntimeWarning, stacklevel=3)

    @classmethod
    def from_ratios(cls, chi_over_delta: float = 0.1, gamma_over_delta: float = 1e-3,
                    delta: float = 1.0, k_L: float = 1.0) -> DriveParams:
        return cls(chi=chi_over_delta * delta, delta=delta, gamma=gamma_over_delta * delta, k_L=k_L)

    @property
    def gamma_op(self) -> float:
        return self.gamma * (self.chi / self.delta) ** 2

    @property
    def scale(self) -> PumpScale:
        return PumpScale(gamma=self.gamma, chi=self.chi, delta=self.delta)


_X0_MESSAGE = ("x = 0 is singular for the propagators; use separation 'small-r' "
               "(x = 1e-4) or the closed forms in spinpair.analytic")


@dataclass(frozen=True)
class PairGeometry:
    """Position of atom 2 relative to atom 1 (x = k_L R, theta from k_L)."""

    point: SphericalPoint

    @classmethod
    def at(cls, x: float, theta: float = 0.0, phi: float = 0.0) -> PairGeometry:
        if x == 0:
            raise ValueError(_X0_MESSAGE)
        return cls(SphericalPoint(x, theta, phi))

    @classmethod
    def parallel(cls, x: float) -> PairGeometry:
        return cls.at(x, 0.0, 0.0)

    @classmethod
    def perpendicular(cls, x: float, phi: float = 0.0) -> PairGeometry:
        return cls.at(x, math.pi / 2, phi)

    @classmethod
    def from_separation(cls, r: float, k_L: float, theta: float = 0.0, phi: float = 0.0) -> PairGeometry:
        return cls.at(k_L * r, theta, phi)

    @property
    def x(self) -> float:
        return self.point.x

    @property
    def theta(self) -> float:
        return self.point.theta

    @property
    def phi(self) -> float:
        return self.point.phi

    @property
    def drive_phase(self) -> complex:
        """Drive phase e^{i k_L . R} at atom 2."""
        return complex(np.exp(1j * self.x * math.cos(self.theta)))

    def reversed(self) -> PairGeometry:
        """Geometry with atom labels swapped (R -> -R)."""
        return PairGeometry(self.point.reflected())


def _single_atom_ket(state) -> np.ndarray:
    if isinstance(state, str):
        if state == "down":
            return np.array([1.0, 0.0])
        if state == "up":
            return np.array([0.0, 1.0])
        raise ValueError(f"single-atom state must be 'up', 'down' or coefficients, got {state!r}")
    if isinstance(state, SuperpositionCoeffs):
        return np.array([state.a, state.b])
    v = np.asarray(state, dtype=complex)
    if v.shape != (2,):
        raise ValueError("single-atom amplitudes must have length 2")
    return v


class GroundDensity:
    """Two-atom ground-manifold density matrix rho[(m1 m2), (n1 n2)]."""

    __slots__ = ("_m",)

    def __init__(self, matrix, *, atol: float = 1e-10):
        m = np.array(matrix, dtype=complex)
        if m.shape == (16,):
            m = m.reshape(4, 4)
        if m.shape != (4, 4):
            raise ValueError("ground density must be 4x4 (or a length-16 vector)")
        if not np.all(np.isfinite(m)):
            raise ValueError("ground density has nonfinite entries")
        if np.max(np.abs(m - m.conj().T)) > atol:
            raise ValueError("ground density is not Hermitian")
        if abs(np.trace(m) - 1) > atol:
            raise ValueError(f"ground density trace is {np.trace(m).real!r}, expected 1")
        d = np.diag(m).real
        if np.any(d < -atol) or np.any(d > 1 + atol):
            raise ValueError("ground density diagonal outside [0, 1]")
        m.setflags(write=False)
        self._m = m

    @classmethod
    def product(cls, atom1, atom2) -> GroundDensity:
        """Pure product state. Each atom is 'up', 'down', coefficients or a 2-vector."""
        psi = np.kron(_single_atom_ket(atom1), _single_atom_ket(atom2))
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @property
    def matrix(self) -> np.ndarray:
        return self._m

    def vec(self) -> np.ndarray:
        return self._m.reshape(16).copy()

    def element(self, ket: str, bra: str) -> complex:
        """rho_{ket;bra} with labels from ``BASIS``, e.g. ``element('ud', 'dd')``."""
        return complex(self._m[BASIS.index(ket), BASIS.index(bra)])

    def __repr__(self) -> str:
        return f"GroundDensity({self._m!r})"


def _mat(rho) -> np.ndarray:
    if isinstance(rho, GroundDensity):
        return rho.matrix
    m = np.asarray(rho)
    return m.reshape(4, 4) if m.shape == (16,) else m


def coherence_expectation(rho) -> complex:
    """Collective coherence <sum_i |down><up|_i>."""
    m = _mat(rho)
    return complex(m[3, 1] + m[2, 0] + m[3, 2] + m[1, 0])


def population_expectation(rho) -> float:
    """Mean up population (rho_uu;uu + (rho_ud;ud + rho_du;du)/2)."""
    m = _mat(rho)
    return float((2 * m[3, 3] + m[2, 2] + m[1, 1]).real / 2)


def one_atom_coherence(rho) -> complex:
    """Coherence <|down><up|> of atom 1 alone."""
    m = _mat(rho)
    return complex(m[3, 1] + m[2, 0])


OBSERVABLES = {
    "coherence": coherence_expectation,
    "population": population_expectation,
    "one_atom": one_atom_coherence,
}


@dataclass(frozen=True)
class GeneratorOptions:
    """``include_im_shift``: keep Im G (collective level shift) in the excited
    amplitudes. ``include_stark``: keep the single-atom light shift.
    ``far_detuned``: expand the elimination to first order in gamma/delta,
    which reproduces the gamma << delta closed forms exactly.
    """

    include_im_shift: bool = True
    include_stark: bool = False
    far_detuned: bool = False


# ---- amplitude system -----------------------------------------------------

def _e1(e: int, g: int) -> int:
    return 2 * e + g


def _e2(g: int, e: int) -> int:
    return 4 + 2 * g + e


def _lowering(atom: int, q: int) -> np.ndarray:
    """4x8 map taking one-excitation states of ``atom`` to the ground manifold
    by emission of helicity q = m'_e - m_g."""
    low = np.zeros((4, 8))
    for g in range(2):
        for e in range(2):
            if _ME[e].value - _MG[g].value != q:
                continue
            c = cg(_MG[g], _ME[e])
            for o in range(2):
                if atom == 1:
                    low[2 * g + o, _e1(e, o)] = c
                else:
                    low[2 * o + g, _e2(o, e)] = c
    return low


_LOW = {(a, q): _lowering(a, q) for a in (1, 2) for q in QS}
# sigma_{to,q}^dag sigma_{from,q'} restricted to one excitation
_EXCHANGE = {(q, qp): _LOW[1, q].T @ _LOW[2, qp] + _LOW[2, q].T @ _LOW[1, qp] for q in QS for qp in QS}
# down-count operator on the ground pair basis
_N_DOWN = np.diag([2.0, 1.0, 1.0, 0.0])


def _cross_coupling(G: PropagatorMatrix) -> np.ndarray:
    c = np.zeros((8, 8), dtype=complex)
    for q in QS:
        for qp in QS:
            c += G[q, qp] * _EXCHANGE[q, qp]
    return c


def _drive(params: DriveParams, geom: PairGeometry) -> np.ndarray:
    b = np.zeros((8, 4), dtype=complex)
    ph = geom.drive_phase
    for o in range(2):
        b[_e1(1, o), 2 * 0 + o] = 1j * params.chi
        b[_e2(o, 1), 2 * o + 0] = 1j * params.chi * ph
    return b


def _propagators(geom: PairGeometry, include_im_shift: bool) -> PropagatorMatrix:
    return propagator_matrix(geom.point, "full" if include_im_shift else "dissipative")


def build_amplitude_system(params: DriveParams, geom: PairGeometry,
                           include_im_shift: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Matrices (A, B) of the one-excitation equations db_e/dt = A b_e + B b_g.

    Returned in physical rate units. Without ``include_im_shift`` every G is
    replaced by its dissipative part.
    """
    G = _propagators(geom, include_im_shift)
    if include_im_shift:
        shift = params.gamma * np.max(np.abs(G.array.imag))
        if shift > 0.1 * abs(params.delta):
            warnings.warn(
                f"collective level shift gamma*|Im G| = {shift:.3g} is not small against delta; "
                "consider include_im_shift=False", RuntimeWarning, stacklevel=2)
    a = -(params.gamma + 1j * params.delta) * np.eye(8) - params.gamma * _cross_coupling(G)
    return a, _drive(params, geom)


@dataclass(frozen=True)
class ExcitedEliminationMap:
    """Excited amplitudes as a linear map of the ground amplitudes (8x4).

    ``matrix`` enters the field-driven depletion; ``repopulation`` enters the
    spontaneous return terms. They coincide for the exact solve.
    """

    matrix: np.ndarray
    repopulation: np.ndarray
    condition: float
    residual: float
    far_detuned: bool = False


def quasistatic_eliminate(A: np.ndarray, B: np.ndarray) -> ExcitedEliminationMap:
    """Solve A M + B = 0 for M."""
    cond = float(np.linalg.cond(A))
    if not cond < _COND_LIMIT:
        raise NumericError(f"amplitude system is ill-conditioned (cond = {cond:.3g} > {_COND_LIMIT:.0e}); "
                           "check delta and gamma")
    m = -np.linalg.solve(A, B)
    scale = max(np.abs(B).max(), np.finfo(float).tiny)
    res = float(np.abs(A @ m + B).max() / scale)
    return ExcitedEliminationMap(m, m, cond, res)


def first_order_eliminate(A: np.ndarray, B: np.ndarray, delta: float) -> ExcitedEliminationMap:
    """Elimination expanded around A0 = -i delta to first order in (A - A0)/delta.

    The depletion map keeps the first-order term; repopulation uses the
    leading term only, which keeps the generator exactly trace preserving.
    """
    m0 = -B / (-1j * delta)
    a1 = A + 1j * delta * np.eye(A.shape[0])
    m1 = m0 - (1j / delta) * (a1 @ m0)
    return ExcitedEliminationMap(m1, m0, 1.0, 0.0, far_detuned=True)


def _light_shift(params: DriveParams, far_detuned: bool) -> complex:
    d, g, chi = params.delta, params.gamma, params.chi
    if far_detuned:
        return 1j * chi**2 / d
    return 1j * chi**2 * d / (d * d + g * g)


def out_terms(emap: ExcitedEliminationMap, params: DriveParams, geom: PairGeometry,
              include_stark: bool = False) -> np.ndarray:
    """Field-driven depletion part of L, in units of gamma_op."""
    v = -_drive(params, geom).conj().T
    k = v @ emap.matrix
    if not include_stark:
        k = k - _light_shift(params, emap.far_detuned) * _N_DOWN
    return (np.kron(k, _I4) + np.kron(_I4, k.conj())) / params.gamma_op


def in_terms(emap: ExcitedEliminationMap, params: DriveParams, geom: PairGeometry) -> np.ndarray:
    """Spontaneous repopulation part of L, in units of gamma_op.

    Same-atom returns carry the single-atom branching; cross-atom returns
    are weighted by the dissipative propagator.
    """
    m = emap.repopulation
    gr = propagator_matrix(geom.point, "dissipative")
    out = np.zeros((16, 16), dtype=complex)
    low = {key: op @ m for key, op in _LOW.items()}
    for q in QS:
        for i in (1, 2):
            out += np.kron(low[i, q], low[i, q].conj())
        for qp in QS:
            c = gr[qp, q]
            if c == 0:
                continue
            out += c * np.kron(low[1, q], low[2, qp].conj())
            out += c * np.kron(low[2, q], low[1, qp].conj())
    return 2 * params.gamma * out / params.gamma_op


@dataclass(frozen=True)
class Generator:
    """16x16 rate generator in units of gamma_op, acting on row-major vec(rho)."""

    matrix: np.ndarray
    params: DriveParams = field(compare=False)
    geometry: PairGeometry = field(compare=False)
    options: GeneratorOptions = field(compare=False)

    def __post_init__(self):
        self.matrix.setflags(write=False)

    def apply(self, rho) -> np.ndarray:
        """d rho / d(gamma_op t) as a 4x4 matrix."""
        return (self.matrix @ np.asarray(_mat(rho)).reshape(16)).reshape(4, 4)

    def dump(self) -> str:
        """Plain-text dump: metadata comments then 16 rows of 're,im' pairs."""
        p, g, o = self.params, self.geometry, self.options
        head = [
            "# spinpair generator v1",
            "# basis = " + ",".join(BASIS) + " (row-major vec of rho)",
            "# units = gamma_op",
            f"# chi = {p.chi!r}", f"# delta = {p.delta!r}", f"# gamma = {p.gamma!r}",
            f"# x = {g.x!r}", f"# theta = {g.theta!r}", f"# phi = {g.phi!r}",
            f"# include_im_shift = {o.include_im_shift}", f"# include_stark = {o.include_stark}",
            f"# far_detuned = {o.far_detuned}",
        ]
        rows = [" ".join(f"{float(z.real)!r},{float(z.imag)!r}" for z in row) for row in self.matrix]
        return "\n".join(head + rows) + "\n"


def load_generator_dump(text: str) -> np.ndarray:
    """Parse the matrix part of :meth:`Generator.dump` output."""
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        rows.append([complex(float(r), float(i)) for r, i in (tok.split(",") for tok in line.split())])
    m = np.array(rows, dtype=complex)
    if m.shape != (16, 16):
        raise ValueError(f"expected a 16x16 generator dump, got shape {m.shape}")
    return m


def assemble_generator(params: DriveParams, geom: PairGeometry,
                       options: GeneratorOptions | None = None, **overrides) -> Generator:
    """Full generator L = out-terms + in-terms.

    Keyword overrides (``include_im_shift=...`` etc.) patch ``options``.
    """
    options = options or GeneratorOptions()
    if overrides:
        options = GeneratorOptions(**{**options.__dict__, **overrides})
    a, b = build_amplitude_system(params, geom, options.include_im_shift)
    if options.far_detuned:
        emap = first_order_eliminate(a, b, params.delta)
    else:
        emap = quasistatic_eliminate(a, b)
    mat = out_terms(emap, params, geom, options.include_stark) + in_terms(emap, params, geom)
    if not np.all(np.isfinite(mat)):
        raise NumericError("generator has nonfinite entries")
    return Generator(mat, params, geom, options)

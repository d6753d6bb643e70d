import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import liouvillian_generator, random_density
from spinpair.analytic import EQUAL, SuperpositionCoeffs, coupled_basis_quasistatic, single_atom_generator
from spinpair.engine import (
    DriveParams,
    GeneratorOptions,
    GroundDensity,
    PairGeometry,
    assemble_generator,
    build_amplitude_system,
    coherence_expectation,
    first_order_eliminate,
    in_terms,
    load_generator_dump,
    one_atom_coherence,
    out_terms,
    population_expectation,
    quasistatic_eliminate,
)
from spinpair.errors import NumericError
from spinpair.propagators import propagator

P = DriveParams()
GEOMS = [PairGeometry.at(0.7, 0.0, 0.0), PairGeometry.at(0.7, 0.3, 1.1), PairGeometry.at(2.0, 1.5, 0.4),
         PairGeometry.at(1.3, 2.6, 5.0), PairGeometry.perpendicular(4.0)]

# one-excitation indices: |alpha,down>=2, |alpha,up>=3, |beta,up>=1, |down,alpha>=5, |up,alpha>=7, |up,beta>=6
S1 = np.zeros(8)
S1[[2, 5]] = 1 / math.sqrt(2)
R1 = np.zeros(8)
R1[[3, 7]] = 1 / math.sqrt(2)
RM1 = np.zeros(8)
RM1[[1, 6]] = 1 / math.sqrt(2)


def swap_atoms():
    perm = np.eye(4)[[0, 2, 1, 3]]
    return np.kron(perm, perm)


# ---- value types ----------------------------------------------------------

def test_drive_params():
    assert P.gamma_op == pytest.approx(1e-5)
    assert P.scale.gamma_op == P.gamma_op
    with pytest.raises(ValueError):
        DriveParams(gamma=0.0)
    with pytest.raises(ValueError):
        DriveParams(k_L=-1.0)
    with pytest.warns(RuntimeWarning):
        DriveParams(chi=2.0, delta=1.0)


def test_zero_separation_rejected_with_pointer():
    with pytest.raises(ValueError, match="small-r"):
        PairGeometry.parallel(0.0)
    with pytest.raises(ValueError):
        PairGeometry.at(-1.0)


def test_geometry_constructors():
    g = PairGeometry.from_separation(0.5, k_L=2.0, theta=math.pi / 2)
    assert g.x == 1.0 and g.drive_phase == pytest.approx(1.0)
    assert PairGeometry.parallel(0.7).drive_phase == pytest.approx(np.exp(0.7j))


def test_ground_density_validation():
    with pytest.raises(ValueError):
        GroundDensity(np.eye(4))
    with pytest.raises(ValueError):
        GroundDensity(np.diag([1.5, -0.5, 0, 0]))
    bad = np.diag([0.5, 0.5, 0, 0]).astype(complex)
    bad[0, 1] = 0.1
    with pytest.raises(ValueError):
        GroundDensity(bad)
    rho = GroundDensity.product("down", EQUAL)
    assert rho.element("dd", "du") == pytest.approx(0.5)
    with pytest.raises(ValueError):
        rho.matrix[0, 0] = 2


def test_observables():
    up_down = SuperpositionCoeffs(0.6, 0.8)
    assert coherence_expectation(GroundDensity.product(EQUAL, EQUAL)) == pytest.approx(1.0)
    assert coherence_expectation(GroundDensity.product("down", "down")) == 0
    assert coherence_expectation(GroundDensity.product(up_down, up_down)) == pytest.approx(2 * 0.48)
    assert population_expectation(GroundDensity.product("down", "down")) == 0
    assert population_expectation(GroundDensity.product("up", "up")) == 1
    psi = np.array([0, 1, 1, 0]) / math.sqrt(2)
    assert population_expectation(GroundDensity(np.outer(psi, psi))) == pytest.approx(0.5)
    assert one_atom_coherence(GroundDensity.product("up", up_down)) == 0
    assert one_atom_coherence(GroundDensity.product(EQUAL, "down")) == pytest.approx(0.5)


# ---- amplitude system and elimination -------------------------------------

def test_no_drive_no_excitation():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        a, b = build_amplitude_system(DriveParams(chi=0.0), GEOMS[0])
    assert not b.any()
    assert not quasistatic_eliminate(a, b).matrix.any()


def test_far_field_amplitude_system():
    a, _ = build_amplitude_system(P, PairGeometry.at(1e3, 0.7, 0.2))
    assert np.max(np.abs(a - np.diag(np.diag(a)))) < 2e-3 * P.gamma
    assert np.max(np.abs(np.diag(a) + P.gamma + 1j * P.delta)) < 2e-3 * P.gamma


def test_contact_limit_uses_diagonal_coupling_only():
    g = PairGeometry.at(1e-4, 1.1, 0.3)
    a, _ = build_amplitude_system(P, g, include_im_shift=False)
    # at contact the cross blocks are the G = identity exchange
    s = np.array(S1)
    assert s @ a @ s == pytest.approx(-(5 / 3) * P.gamma - 1j * P.delta, abs=1e-4 * P.gamma)
    assert s @ a @ RM1 == pytest.approx(-P.gamma / 3, abs=1e-4 * P.gamma)
    assert R1 @ a @ R1 == pytest.approx(-(4 / 3) * P.gamma - 1j * P.delta, abs=1e-4 * P.gamma)


def test_elimination_residual_and_conditioning():
    for g in GEOMS:
        a, b = build_amplitude_system(P, g)
        m = quasistatic_eliminate(a, b)
        assert m.residual < 1e-12
    with pytest.raises(NumericError, match="ill-conditioned"):
        quasistatic_eliminate(np.zeros((8, 8)), np.ones((8, 4)))


def test_independent_limit_matches_single_atom_steady_state():
    g = PairGeometry.at(1e3, 0.4, 0.0)
    a, b = build_amplitude_system(P, g)
    m = quasistatic_eliminate(a, b).matrix
    single = 1j * P.chi / (P.gamma + 1j * P.delta)
    # atom 1 at the origin, atom 2 carries the drive phase
    assert m[2, 0] == pytest.approx(single, rel=2e-3)
    assert m[5, 0] == pytest.approx(single * g.drive_phase, rel=2e-3)


def test_small_separation_symmetric_amplitudes():
    g = PairGeometry.parallel(1e-4)
    a, b = build_amplitude_system(P, g, include_im_shift=False)
    m = quasistatic_eliminate(a, b).matrix
    s1_ref, r1_ref, _, _ = coupled_basis_quasistatic(P.scale, 1.0, 1.0)
    assert S1 @ m[:, 0] == pytest.approx(s1_ref, rel=2e-4)
    g0 = np.array([0, 1, 1, 0]) / math.sqrt(2)
    assert R1 @ m @ g0 == pytest.approx(r1_ref, rel=2e-4)


# ---- out-terms and in-terms against index-by-index expansions ------------

def _loop_out_terms(m, params, geom):
    """Depletion terms expanded element by element from the amplitude equations."""
    ph = np.conj(geom.drive_phase)

    def excited(e_atom, e, other):
        return 2 * e + other if e_atom == 1 else 4 + 2 * other + e

    def ground_rate(mu, nu):
        # d b_{mu nu}/dt from the drive, as a row over the 4 ground amplitudes
        row = np.zeros(4, complex)
        if mu == 0:
            row += 1j * params.chi * m[excited(1, 1, nu)]
        if nu == 0:
            row += 1j * params.chi * ph * m[excited(2, 1, mu)]
        return row

    out = np.zeros((16, 16), complex)
    for mu in range(2):
        for nu in range(2):
            for mm in range(2):
                for nn in range(2):
                    r = 4 * (2 * mu + nu) + 2 * mm + nn
                    ket, bra = ground_rate(mu, nu), ground_rate(mm, nn)
                    for k in range(4):
                        out[r, 4 * k + 2 * mm + nn] += ket[k]
                        out[r, 4 * (2 * mu + nu) + k] += np.conj(bra[k])
    return out / params.gamma_op


def _loop_in_terms(m, params, geom):
    """Repopulation terms expanded element by element."""
    from spinpair.angular import DOWN, UP, cg

    lv = (DOWN, UP)
    gr = {(q, qp): propagator(q, qp, geom.point, "dissipative") for q in (1, 0, -1) for qp in (1, 0, -1)}

    def amp(atom, e, other):
        return m[2 * e + other] if atom == 1 else m[4 + 2 * other + e]

    out = np.zeros((16, 16), complex)
    for mu in range(2):
        for nu in range(2):
            for mm in range(2):
                for nn in range(2):
                    r = 4 * (2 * mu + nu) + 2 * mm + nn
                    for ek in range(2):
                        for eb in range(2):
                            qk = float(lv[ek].value - lv[mu].value)
                            # atom 1 decays on both sides
                            qb = float(lv[eb].value - lv[mm].value)
                            if qk == qb:
                                c = cg(lv[mu], lv[ek]) * cg(lv[mm], lv[eb])
                                out[r] += c * np.outer(amp(1, ek, nu), np.conj(amp(1, eb, nn))).reshape(16)
                            # atom 2 decays on both sides
                            qk2 = float(lv[ek].value - lv[nu].value)
                            qb2 = float(lv[eb].value - lv[nn].value)
                            if qk2 == qb2:
                                c = cg(lv[nu], lv[ek]) * cg(lv[nn], lv[eb])
                                out[r] += c * np.outer(amp(2, ek, mu), np.conj(amp(2, eb, mm))).reshape(16)
                            # ket via atom 1, bra via atom 2
                            c = gr[int(qb2), int(qk)] * cg(lv[mu], lv[ek]) * cg(lv[nn], lv[eb])
                            out[r] += c * np.outer(amp(1, ek, nu), np.conj(amp(2, eb, mm))).reshape(16)
                            # ket via atom 2, bra via atom 1
                            c = gr[int(qb), int(qk2)] * cg(lv[nu], lv[ek]) * cg(lv[mm], lv[eb])
                            out[r] += c * np.outer(amp(2, ek, mu), np.conj(amp(1, eb, nn))).reshape(16)
    return 2 * params.gamma * out / params.gamma_op


@pytest.mark.parametrize("geom", GEOMS)
def test_out_terms_match_expansion(geom):
    a, b = build_amplitude_system(P, geom)
    emap = quasistatic_eliminate(a, b)
    got = out_terms(emap, P, geom, include_stark=True)
    ref = _loop_out_terms(emap.matrix, P, geom)
    assert np.max(np.abs(got - ref)) < 1e-12 * np.max(np.abs(ref))


@pytest.mark.parametrize("geom", GEOMS)
def test_in_terms_match_expansion(geom):
    a, b = build_amplitude_system(P, geom)
    emap = quasistatic_eliminate(a, b)
    got = in_terms(emap, P, geom)
    ref = _loop_in_terms(emap.matrix, P, geom)
    assert np.max(np.abs(got - ref)) < 1e-12 * np.max(np.abs(ref))


@pytest.mark.parametrize("geom", GEOMS)
@pytest.mark.parametrize("im_shift", [True, False])
def test_generator_matches_master_equation_elimination(geom, im_shift):
    got = assemble_generator(P, geom, include_im_shift=im_shift, include_stark=True).matrix
    ref = liouvillian_generator(P.chi, P.delta, P.gamma, geom.x, geom.theta, geom.phi, im_shift) / P.gamma_op
    assert np.max(np.abs(got - ref)) < 1e-9 * np.max(np.abs(ref))


# ---- generator structure --------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(st.floats(1e-2, 50.0), st.floats(0.0, math.pi), st.floats(0.0, 6.28), st.booleans(), st.booleans())
def test_trace_and_hermiticity_preserved(x, th, ph, im, far):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        L = assemble_generator(P, PairGeometry.at(x, th, ph), include_im_shift=im, far_detuned=far).matrix
    rng = np.random.default_rng(7)
    for _ in range(20):
        rho = random_density(rng)
        d = (L @ rho.reshape(16)).reshape(4, 4)
        assert abs(np.trace(d)) < 1e-10 * max(1.0, np.max(np.abs(L)))
        dd = (L @ rho.conj().T.reshape(16)).reshape(4, 4)
        assert np.max(np.abs(d.conj().T - dd)) < 1e-10 * max(1.0, np.max(np.abs(L)))


def test_diagonal_row_structure():
    for x, th in [(0.7, 0.0), (1.3, 0.9), (2.0, 2.2)]:
        g = PairGeometry.at(x, th, 0.4)
        L = assemble_generator(P, g, include_im_shift=False, far_detuned=True).matrix
        c = math.cos(th)
        g11 = propagator(1, 1, g.point, "dissipative")
        g00 = propagator(0, 0, g.point, "dissipative")
        # row and column 8 = rho_{ud;dd}, column 4 = rho_{du;dd}
        assert L[8, 8] == pytest.approx(-5 / 3 + 4j / 3 * g11 * math.sin(x * c), abs=1e-10)
        assert L[8, 4] == pytest.approx(-g00 / 3 * np.exp(-1j * x * c), abs=1e-10)
        full = assemble_generator(P, g, include_im_shift=False).matrix
        assert full[8, 8].real == pytest.approx(-5 / 3, rel=2e-3)


TWELVE = [4 * k + b for k in range(4) for b in range(3)]
EXCLUDED = [4 * k + 3 for k in range(4)]


@pytest.mark.parametrize("geom", GEOMS)
def test_subset_closure(geom):
    L = assemble_generator(P, geom).matrix
    # the 12 elements with bra != uu never read the bra = uu elements
    assert np.max(np.abs(L[np.ix_(TWELVE, EXCLUDED)])) < 1e-12 * np.max(np.abs(L))
    thirteen = TWELVE + [15]
    rest = [3, 7, 11]
    assert np.max(np.abs(L[np.ix_(thirteen, rest)])) < 1e-12 * np.max(np.abs(L))


@pytest.mark.parametrize("geom", GEOMS)
@pytest.mark.parametrize("im_shift", [True, False])
def test_relabeling_symmetry(geom, im_shift):
    L = assemble_generator(P, geom, include_im_shift=im_shift).matrix
    Lr = assemble_generator(P, geom.reversed(), include_im_shift=im_shift).matrix
    pi = swap_atoms()
    assert np.max(np.abs(Lr - pi @ L @ pi)) < 1e-10 * np.max(np.abs(L))


def _independent_generator():
    one = single_atom_generator(P.scale) / P.gamma_op
    # single-atom superoperator on row-major vec of a 2x2 density (dd, du, ud, uu)
    s = np.zeros((4, 4), complex)
    s[3, 0] = one[0, 2]
    s[0, 0] = one[2, 2]
    s[1, 1] = one[1, 1]
    s[2, 2] = np.conj(one[1, 1])
    eye = np.eye(4)
    # reorder (a, a', b, b') <-> (a, b, a', b')
    perm = np.array([[2 * a + ap, 2 * b + bp] for a in range(2) for b in range(2)
                     for ap in range(2) for bp in range(2)])
    idx = perm[:, 0] * 4 + perm[:, 1]
    full = np.kron(s, eye) + np.kron(eye, s)
    out = np.zeros((16, 16), complex)
    out[np.ix_(idx, idx)] = full
    return out


def test_independent_limit_generator():
    L = assemble_generator(P, PairGeometry.at(1e3, 0.8, 0.3)).matrix
    assert np.max(np.abs(L - _independent_generator())) < 1e-2


def test_options_and_stark():
    g = GEOMS[1]
    base = assemble_generator(P, g, include_im_shift=False)
    stark = assemble_generator(P, g, GeneratorOptions(include_im_shift=False, include_stark=True))
    assert stark.options.include_stark and not base.options.include_stark
    shift = P.chi**2 * P.delta / (P.delta**2 + P.gamma**2) / P.gamma_op
    n_down = np.diag([2.0, 1.0, 1.0, 0.0])
    k = 1j * shift * n_down
    expected = np.kron(k, np.eye(4)) + np.kron(np.eye(4), k.conj())
    assert np.max(np.abs(stark.matrix - base.matrix - expected)) < 1e-9 * shift


def test_first_order_elimination_close_to_exact():
    g = GEOMS[2]
    exact = assemble_generator(P, g).matrix
    far = assemble_generator(P, g, far_detuned=True).matrix
    assert np.max(np.abs(exact - far)) < 1e-2 * np.max(np.abs(exact))
    a, b = build_amplitude_system(P, g)
    emap = first_order_eliminate(a, b, P.delta)
    assert emap.far_detuned and np.allclose(emap.repopulation, -1j * b / P.delta)


def test_generator_dump_round_trip():
    gen = assemble_generator(P, GEOMS[1])
    text = gen.dump()
    assert text.startswith("# spinpair generator v1")
    back = load_generator_dump(text)
    assert np.array_equal(back, gen.matrix)
    with pytest.raises(ValueError):
        load_generator_dump("1,2 3,4\n")


def test_generator_immutable_and_applies():
    gen = assemble_generator(P, GEOMS[0])
    with pytest.raises(ValueError):
        gen.matrix[0, 0] = 1
    rho = GroundDensity.product(EQUAL, EQUAL)
    assert gen.apply(rho).shape == (4, 4)


def test_large_level_shift_warns():
    with pytest.warns(RuntimeWarning, match="level shift"):
        build_amplitude_system(P, PairGeometry.parallel(1e-3), include_im_shift=True)

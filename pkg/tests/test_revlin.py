import numpy as np
import pytest

from kamforge.revlin import (MINUS, PLUS, IllConditionedError,
                             ReversingStructure, SplittingError,
                             StructureError, StructuredMatrix,
                             ad_action, adjoint_matrix, alternating_structure,
                             canonical_structure, check_membership,
                             jordan_chevalley, lcu, lcu_closed_form,
                             normal_frequencies, parity_basis,
                             random_structured, splitting_projection,
                             transversality_defect)

from conftest import (coupled_J_rot, coupled_Omega_entries, span_distance)


# -- structures and membership --------------------------------------------

def test_structure_rejects_non_involution():
    with pytest.raises(StructureError):
        ReversingStructure(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_structure_rejects_wrong_fixed_space_dimension():
    with pytest.raises(StructureError):
        ReversingStructure(np.eye(2))  # Fix(R) is 2-dimensional, not 1


def test_canonical_block_coordinates():
    rng = np.random.default_rng(0)
    # a random involution with 2-dimensional fixed space
    A = rng.standard_normal((4, 4))
    R = A @ np.diag([1.0, 1.0, -1.0, -1.0]) @ np.linalg.inv(A)
    st = ReversingStructure(R)
    D = st.to_canonical(st.R)
    assert np.allclose(D, np.diag([1.0, 1.0, -1.0, -1.0]), atol=1e-10)


def test_membership_oscillator(osc_structure):
    ok, defect = check_membership(np.array([[0.0, 1.0], [0.0, 0.0]]),
                                  osc_structure, MINUS)
    assert ok and defect < 1e-12


def test_membership_coupled_planes(coupled_structure):
    ok, defect = check_membership(coupled_Omega_entries(0.0, 0.0),
                                  coupled_structure, MINUS)
    assert ok and defect < 1e-12
    ok, _ = check_membership(coupled_Omega_entries(0.3, -0.2),
                             coupled_structure, MINUS)
    assert ok


def test_membership_rejects_wrong_parity(osc_structure):
    ok, defect = check_membership(np.eye(2), osc_structure, MINUS)
    assert not ok and defect > 1.0
    ok, _ = check_membership(np.eye(2), osc_structure, PLUS)
    assert ok


def test_coords_matrix_roundtrip():
    st = canonical_structure(2)
    rng = np.random.default_rng(1)
    for parity in (MINUS, PLUS):
        v = rng.standard_normal(2 * st.p ** 2)
        M = st.matrix(v, parity)
        ok, _ = check_membership(M, st, parity)
        assert ok
        assert np.allclose(st.coords(M, parity), v)


def test_projection_idempotent_and_complementary():
    rng = np.random.default_rng(2)
    st = alternating_structure(2)
    M = rng.standard_normal((4, 4))
    Pm = st.project(M, MINUS)
    Pp = st.project(M, PLUS)
    assert np.allclose(Pm + Pp, M)
    assert np.allclose(st.project(Pm, MINUS), Pm)
    assert check_membership(Pm, st, MINUS)[0]
    assert check_membership(Pp, st, PLUS)[0]


def test_random_structured_has_zero_defect():
    rng = np.random.default_rng(3)
    for p in (1, 2, 3):
        st = canonical_structure(p)
        for parity in (MINUS, PLUS):
            sm = random_structured(st, parity, rng)
            assert sm.defect() < 1e-12


# -- Jordan-Chevalley ------------------------------------------------------

def test_jordan_chevalley_resonant_base():
    unf = lcu_closed_form("p_fold_resonance", 2)
    jc = jordan_chevalley(unf.base)
    S, N = jc.semisimple.entries, jc.nilpotent.entries
    assert np.allclose(S + N, unf.base.entries)
    assert np.linalg.norm(S @ N - N @ S) < 1e-9
    assert np.linalg.norm(np.linalg.matrix_power(N, 4)) < 1e-9
    assert np.linalg.norm(N) > 0.5          # genuinely non-semisimple
    assert jc.semisimple.defect() < 1e-9
    assert jc.nilpotent.defect() < 1e-9
    # eigenvalues of S are exactly the clustered +-i pairs
    w = np.linalg.eigvals(S)
    assert np.max(np.abs(w.real)) < 1e-9
    assert np.allclose(np.sort(w.imag), [-1, -1, 1, 1], atol=1e-9)


def test_jordan_chevalley_semisimple_input_gives_zero_nilpotent():
    st = alternating_structure(2)
    O = np.kron(np.diag([1.1, 0.7]), np.array([[0.0, -1.0], [1.0, 0.0]]))
    jc = jordan_chevalley(StructuredMatrix(O, MINUS, st))
    assert np.linalg.norm(jc.nilpotent.entries) < 1e-10


def test_jordan_chevalley_idempotent():
    unf = lcu_closed_form("p_fold_resonance", 3)
    jc = jordan_chevalley(unf.base)
    jc2 = jordan_chevalley(jc.semisimple)
    assert np.linalg.norm(jc2.nilpotent.entries) < 1e-9
    assert np.allclose(jc2.semisimple.entries, jc.semisimple.entries,
                       atol=1e-9)


def test_jordan_chevalley_close_clusters_raise():
    st = alternating_structure(1)
    O = StructuredMatrix(np.array([[0.0, -1.0], [1.0, 0.0]]), MINUS, st)
    # force the ambiguous regime: clusters merge at tol but means stay close
    with pytest.raises(IllConditionedError):
        jordan_chevalley(O, cluster_tol=0.5)


def test_jordan_chevalley_rejects_parity_plus():
    st = canonical_structure(1)
    with pytest.raises(StructureError):
        jordan_chevalley(StructuredMatrix(np.eye(2), PLUS, st))


# -- adjoint operators -----------------------------------------------------

def test_adjoint_matrix_matches_direct_action():
    rng = np.random.default_rng(4)
    st = canonical_structure(2)
    Om = random_structured(st, MINUS, rng)
    for from_parity in (PLUS, MINUS):
        ad = adjoint_matrix(Om, from_parity)
        for _ in range(5):
            A = random_structured(st, from_parity, rng)
            lhs = ad @ st.coords(A.entries, from_parity)
            # ad(Omega).A = Omega A - A Omega lands in the opposite parity
            want = st.coords(Om.entries @ A.entries
                             - A.entries @ Om.entries, -from_parity)
            assert np.allclose(lhs, want, atol=1e-12)


def test_parity_basis_dimensions():
    for p in (1, 2, 3):
        st = canonical_structure(p)
        assert parity_basis(st, MINUS).shape[1] == 2 * p ** 2
        assert parity_basis(st, PLUS).shape[1] == 2 * p ** 2


def test_parity_basis_equivariant_restriction():
    st = ReversingStructure(np.diag([1.0, -1.0, -1.0, 1.0]))
    J = coupled_J_rot()
    B = parity_basis(st, MINUS, equivariants=(J,))
    # every basis element anti-commutes with R and commutes with J
    for i in range(B.shape[1]):
        M = B[:, i].reshape(4, 4)
        assert np.linalg.norm(M @ st.R + st.R @ M) < 1e-10
        assert np.linalg.norm(M @ J - J @ M) < 1e-10
    assert B.shape[1] < parity_basis(st, MINUS).shape[1]


# -- LCU -------------------------------------------------------------------

def test_lcu_closed_form_codimensions():
    for p in (1, 2, 3):
        for kind in ("p_fold_resonance", "nilpotent_zero"):
            unf = lcu_closed_form(kind, p)
            assert unf.codimension == p
            for D in unf.directions:
                assert D.defect() < 1e-12
            assert transversality_defect(unf) == 0


def test_lcu_matches_closed_form_span():
    for p in (1, 2, 3):
        for kind in ("p_fold_resonance", "nilpotent_zero"):
            ref = lcu_closed_form(kind, p)
            unf = lcu(ref.base)
            assert unf.codimension == p
            assert span_distance(unf.direction_span(),
                                 ref.direction_span()) < 1e-8


def test_lcu_generic_semisimple_codimension_p():
    # distinct elliptic frequencies: the centralizer in gl- has dimension p
    for p, freqs in ((1, [1.3]), (2, [1.3, 0.7]), (3, [1.3, 0.7, 0.4])):
        st = alternating_structure(p)
        O = np.kron(np.diag(freqs), np.array([[0.0, -1.0], [1.0, 0.0]]))
        unf = lcu(StructuredMatrix(O, MINUS, st))
        assert unf.codimension == p


def test_lcu_evaluation_and_bad_mu():
    unf = lcu_closed_form("nilpotent_zero", 2)
    M = unf(np.array([0.5, -0.25]))
    assert M.defect() < 1e-12
    with pytest.raises(StructureError):
        unf(np.array([1.0]))


def test_lcu_coupled_planes_equivariant(coupled_Omega_hat0):
    J = coupled_J_rot()
    unf = lcu(coupled_Omega_hat0, equivariants=(J,))
    assert unf.codimension == 2
    # span must match the explicit two-parameter family directions
    E2 = np.zeros((4, 4))
    E2[2, 0] = E2[3, 1] = -1.0
    want = np.column_stack([J.reshape(-1), E2.reshape(-1)])
    got = np.column_stack([D.entries.reshape(-1) for D in unf.directions])
    assert span_distance(got, want) < 1e-8


def test_lcu_coupled_planes_unrestricted_codim_4(coupled_Omega_hat0):
    # without the rotation-commutant restriction the orbit is smaller and
    # the complement larger
    assert lcu(coupled_Omega_hat0).codimension == 4


# -- splitting projection --------------------------------------------------

def test_splitting_projection_properties():
    rng = np.random.default_rng(5)
    st = canonical_structure(2)
    Om = random_structured(st, MINUS, rng)
    pi = splitting_projection(Om)
    # idempotent
    assert np.linalg.norm(pi.matrix @ pi.matrix - pi.matrix) < 1e-8
    for _ in range(10):
        A = random_structured(st, PLUS, rng)
        image_elt = ad_action(Om.entries, A.entries)
        assert np.linalg.norm(pi(image_elt)) < 1e-8 * \
            max(np.linalg.norm(image_elt), 1.0)
    # anything already in the range of the projection is fixed by it
    M = random_structured(st, MINUS, rng).entries
    K = pi(M)
    assert np.allclose(pi(K), K, atol=1e-8)


# -- normal frequencies ----------------------------------------------------

def test_normal_frequencies_coupled_planes(coupled_structure):
    O0 = StructuredMatrix(coupled_Omega_entries(0.0, 0.0), MINUS,
                          coupled_structure)
    assert np.allclose(normal_frequencies(O0), [-1.0, -1.0, 1.0, 1.0],
                       atol=1e-12)
    O1 = StructuredMatrix(coupled_Omega_entries(0.1, -0.04), MINUS,
                          coupled_structure)
    assert np.allclose(normal_frequencies(O1), [-1.1, -1.1, 1.1, 1.1],
                       atol=1e-10)


def test_normal_frequencies_conjugation_invariant():
    rng = np.random.default_rng(6)
    st = canonical_structure(2)
    Om = random_structured(st, MINUS, rng)
    A = np.eye(4) + 0.2 * random_structured(st, PLUS, rng).entries
    conj = StructuredMatrix(A @ Om.entries @ np.linalg.inv(A), MINUS, st)
    assert np.allclose(normal_frequencies(conj), normal_frequencies(Om),
                       atol=1e-8)


def test_unknown_unfolding_kind():
    with pytest.raises(StructureError):
        lcu_closed_form("bogus", 2)

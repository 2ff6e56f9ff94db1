import numpy as np
import pytest

from kamforge.covering import (CoveringData, UnimodularTransform,
                               check_sigma_reversibility, evaluate,
                               lift_floquet, lift_to_cover,
                               normalize_resonance, push_down,
                               pushforward_defect, vanderpol)
from kamforge.fourier import FourierField, ModeJet, random_reversible
from kamforge.revlin import (MINUS, ReversingStructure, StructureError,
                             StructuredMatrix)

from conftest import (GOLDEN, coupled_J_rot, coupled_Omega_entries,
                      coupled_Omega_hat_entries)


# -- integer normalization -------------------------------------------------

@pytest.mark.parametrize("k", [(2, 3), (4, 6), (3, 0, 0), (-6, 10, 15),
                               (1, 0), (0, -5), (7, -3, 2, 9)])
def test_normalize_resonance(k):
    u, g = normalize_resonance(k)
    kv = np.array(k)
    assert g == np.gcd.reduce(np.abs(kv[kv != 0]))
    # unimodular with the primitive vector as first row
    assert abs(round(np.linalg.det(u.sigma.astype(float)))) == 1
    assert np.array_equal(u.sigma[0], kv // g)
    # covectors transform contragradiently: k becomes g * e1
    e1 = np.zeros(len(k), dtype=int)
    e1[0] = g
    assert np.array_equal(u.apply_covector(k), e1)
    # the pairing <k, omega> is preserved
    rng = np.random.default_rng(0)
    omega = rng.standard_normal(len(k))
    assert np.dot(k, omega) == pytest.approx(
        np.dot(u.apply_covector(k), u.apply_frequency(omega)))


def test_normalize_rejects_zero():
    with pytest.raises(StructureError):
        normalize_resonance((0, 0))


def test_unimodular_rejects_singular():
    with pytest.raises(StructureError):
        UnimodularTransform(np.array([[1, 1], [1, 1]]))


# -- covering data ---------------------------------------------------------

def test_covering_validation():
    with pytest.raises(StructureError):
        CoveringData(l=2, j=1, k1=2, p=1)  # k1 not prime to l
    with pytest.raises(StructureError):
        CoveringData(l=2, j=3, k1=1, p=2)  # plane index out of range
    cov = CoveringData(l=2, j=1, k1=1, p=2, blocks=(1, 2))
    assert cov.as_record() == {"l": 2, "j": 1, "k1": 1, "blocks": [1, 2]}


def test_projection_intertwines_deck():
    cov = CoveringData(l=3, j=1, k1=2, p=2)
    rng = np.random.default_rng(1)
    for _ in range(25):
        pt = (rng.uniform(0, 6 * np.pi, 2), rng.standard_normal(1),
              rng.standard_normal(4))
        bx, by, bz = cov.project(pt)
        fx, fy, fz = cov.project(cov.deck(pt))
        assert np.allclose(np.mod(bx, 2 * np.pi), np.mod(fx, 2 * np.pi),
                           atol=1e-12)
        assert np.allclose(bz, fz, atol=1e-12)


def test_deck_has_order_l():
    cov = CoveringData(l=3, j=2, k1=1, p=2)
    pt = (np.array([1.0, 0.3]), np.zeros(1), np.array([1.0, -0.5, 0.2, 2.0]))
    cur = pt
    for _ in range(3):
        cur = cov.deck(cur)
    assert np.allclose(np.mod(cur[0], 2 * np.pi * 3),
                       np.mod(pt[0], 2 * np.pi * 3), atol=1e-12)
    assert np.allclose(cur[2], pt[2], atol=1e-12)


# -- Van der Pol frame -----------------------------------------------------

def _normal_linear(omega, Omega, m=0):
    p = Omega.shape[0] // 2
    fld = FourierField(len(omega), m, p, 2)
    jet = ModeJet.zeros(len(omega), m, p)
    jet.f = np.asarray(omega, dtype=complex)
    jet.h_zeta = Omega.astype(complex)
    fld.coeffs[(0,) * len(omega)] = jet
    return fld


def test_vanderpol_removes_resonant_frequency():
    omega = np.array([1.0, GOLDEN])
    k1 = 2
    alpha = k1 * omega[0]
    J2 = np.array([[0.0, -1.0], [1.0, 0.0]])
    fld = _normal_linear(omega, alpha * J2)
    rotated = vanderpol(fld, 1, k1)
    # the co-rotating Floquet block is exactly zero
    assert np.max(np.abs(rotated.get((0, 0)).h_zeta)) < 1e-14


def test_vanderpol_inverse_roundtrip():
    rng = np.random.default_rng(2)
    st = ReversingStructure(np.diag([1.0, -1.0]))
    fld = random_reversible(2, 1, 1, 2, st, rng)
    back = vanderpol(vanderpol(fld, 1, 3), 1, -3)
    for k in set(fld.modes()) | set(back.modes()):
        assert (fld.get(k) - back.get(k)).max_abs() < 1e-12


# -- lifting ---------------------------------------------------------------

def _coupled_cover():
    return CoveringData(l=2, j=1, k1=1, p=2, blocks=(1, 2))


def test_lift_coupled_planes_matrix():
    cov = _coupled_cover()
    for mu in ((0.0, 0.0), (0.1, -0.04), (-0.2, 0.3)):
        Om = coupled_Omega_entries(*mu)
        fld = _normal_linear(np.array([2.0, GOLDEN]), Om)
        lifted = lift_to_cover(fld, cov)
        got = np.real(lifted.get((0, 0)).h_zeta)
        want = coupled_Omega_hat_entries(*mu)
        assert np.max(np.abs(got - want)) < 1e-13
        # and matches the closed form
        st = ReversingStructure(np.diag([1.0, -1.0, -1.0, 1.0]))
        cf = lift_floquet(StructuredMatrix(Om, MINUS, st), 2.0, cov)
        assert np.max(np.abs(got - cf)) < 1e-13


def test_lift_pushforward_identity():
    cov = _coupled_cover()
    st = ReversingStructure(np.diag([1.0, -1.0, -1.0, 1.0]))
    rng = np.random.default_rng(3)
    fld = random_reversible(2, 1, 2, 2, st, rng)
    lifted = lift_to_cover(fld, cov)
    pts = [(rng.uniform(0, 4 * np.pi, 2), rng.standard_normal(1),
            rng.standard_normal(4)) for _ in range(20)]
    assert pushforward_defect(lifted, fld, cov, pts) < 1e-12


def test_lift_push_down_roundtrip():
    cov = _coupled_cover()
    st = ReversingStructure(np.diag([1.0, -1.0, -1.0, 1.0]))
    rng = np.random.default_rng(4)
    fld = random_reversible(2, 1, 2, 2, st, rng)
    back = push_down(lift_to_cover(fld, cov), cov)
    for k in set(fld.modes()) | set(back.modes()):
        assert (fld.get(k) - back.get(k)).max_abs() < 1e-12


def test_push_down_rejects_non_descending():
    cov = _coupled_cover()
    fld = FourierField(2, 0, 2, 3)
    jet = ModeJet.zeros(2, 0, 2)
    jet.f = np.array([1.0, 0.0], dtype=complex)
    fld.coeffs[(1, 0)] = jet     # odd cover mode: not deck-equivariant
    with pytest.raises(StructureError):
        push_down(fld, cov)


def test_lift_requires_true_cover():
    cov = CoveringData(l=1, j=1, k1=1, p=1)
    with pytest.raises(StructureError):
        lift_to_cover(FourierField(2, 0, 1, 1), cov)


# -- full symmetry check ---------------------------------------------------

def test_sigma_reversibility_of_lifted_normal_form():
    cov = _coupled_cover()
    R = np.diag([1.0, -1.0, -1.0, 1.0])
    S = cov.rotation(2 * np.pi * cov.k1 / cov.l)   # = -Id here
    st = ReversingStructure(R, twist=S, twist_order=2)
    Om = coupled_Omega_entries(0.1, -0.04)
    fld = _normal_linear(np.array([2.0, GOLDEN]), Om)
    lifted = lift_to_cover(fld, cov)
    rec = check_sigma_reversibility(lifted, st)
    assert rec["ok"]
    assert rec["reversibility_defect"] < 1e-12
    assert rec["twist_defect"] < 1e-12


def test_evaluate_constant_field():
    fld = _normal_linear(np.array([1.0, 0.5]),
                         np.array([[0.0, -2.0], [2.0, 0.0]]))
    dx, dy, dz = evaluate(fld, np.array([0.3, 1.7]), np.zeros(0),
                          np.array([1.0, 0.0]))
    assert np.allclose(dx, [1.0, 0.5])
    assert np.allclose(dz, [0.0, 2.0])

"""BHT non-degeneracy conditions for a parametrised family (omega, Omega).

Condition (i) rules out drift directions: no kernel vector of the Floquet
matrix may lie in the fixed space of the reversing involution (the space of
equivariant constant fields).  Condition (ii) asks that the family
(omega(lambda), Omega(lambda)) be transverse to {omega0} x orbit(Omega0).

Verdicts near the rank tolerance are reported as "indeterminate" rather
than coerced to a boolean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .revlin import (MINUS, PLUS, RANK_TOL, ReversingStructure,
                     StructuredMatrix, StructureError, adjoint_matrix)

PASS = "pass"
FAIL = "fail"
INDETERMINATE = "indeterminate"


@dataclass(eq=False)
class Verdict:
    """Structured verdict record {condition, verdict, margin, witness}."""

    condition: str
    verdict: str
    margin: float
    witness: np.ndarray | None = None
    rank_deficit: int = 0

    def __bool__(self) -> bool:
        return self.verdict == PASS

    def as_record(self) -> dict:
        rec = {"condition": self.condition, "verdict": self.verdict,
               "margin": self.margin}
        if self.witness is not None:
            rec["witness"] = list(np.asarray(self.witness, dtype=float))
        if self.rank_deficit:
            rec["rank_deficit"] = self.rank_deficit
        return rec


@dataclass(eq=False)
class FamilyAtPoint:
    """Jet of a parametrised family at lambda0: frequencies, Floquet matrix
    and their first derivatives in the s family parameters."""

    omega0: np.ndarray
    Omega0: StructuredMatrix
    d_omega: np.ndarray            # n x s
    d_Omega: list[StructuredMatrix]  # s matrices, parity minus
    symmetry: ReversingStructure

    def __post_init__(self):
        self.omega0 = np.atleast_1d(np.asarray(self.omega0, dtype=float))
        self.d_omega = np.atleast_2d(np.asarray(self.d_omega, dtype=float))
        n = len(self.omega0)
        s = self.d_omega.shape[1]
        if self.d_omega.shape[0] != n:
            raise StructureError("d_omega row count != len(omega0)")
        if len(self.d_Omega) != s:
            raise StructureError("need one d_Omega per family parameter")
        if s < n:
            raise StructureError(
                f"s = {s} < n = {n}: transversality cannot hold")
        for dO in self.d_Omega:
            if dO.parity != MINUS:
                raise StructureError("d_Omega entries must have parity minus")

    @property
    def n(self) -> int:
        return len(self.omega0)

    @property
    def s(self) -> int:
        return self.d_omega.shape[1]


def _classify(margin: float, tol: float) -> str:
    if margin > 10.0 * tol:
        return PASS
    if margin < 0.1 * tol:
        return FAIL
    return INDETERMINATE


def bht_i(Omega0: StructuredMatrix, symmetry: ReversingStructure,
          tol: float = RANK_TOL) -> Verdict:
    """Drift condition: ker(Omega0) /\\ B+ = {0}, where B+ is the fixed
    space of R (and of the twist, when present).

    The margin is the smallest singular value of Omega0 restricted to B+;
    on failure the witness is a unit kernel vector inside B+.
    """
    if Omega0.parity != MINUS:
        raise StructureError("bht_i expects parity minus")
    B = symmetry.fix_plus_basis()
    if B.shape[1] == 0:
        return Verdict("bht_i", PASS, np.inf)
    M = Omega0.entries @ B
    U, s, Vt = np.linalg.svd(M)
    scale = max(np.linalg.norm(Omega0.entries), 1.0)
    margin = float(s[-1]) / scale
    verdict = _classify(margin, tol)
    witness = None
    if verdict != PASS:
        witness = B @ Vt[-1]
    return Verdict("bht_i", verdict, margin, witness)


def bht_ii(fam: FamilyAtPoint, tol: float = RANK_TOL) -> Verdict:
    """Transversality: image of lam |-> (D omega lam, D Omega lam) plus
    {0} x T_Omega0 O(Omega0) must span R^n x gl-(2p;R)."""
    st = fam.symmetry
    n = fam.n
    dim_gl = 2 * st.p ** 2
    # family block: each column is (d_omega_i; coords of d_Omega_i)
    cols = []
    for i in range(fam.s):
        cols.append(np.concatenate([
            fam.d_omega[:, i], st.coords(fam.d_Omega[i].entries, MINUS)]))
    fam_block = np.column_stack(cols)
    # orbit tangent block: {0} x im(ad+(Omega0))
    ad = adjoint_matrix(fam.Omega0, PLUS)
    orbit_block = np.vstack([np.zeros((n, ad.shape[1])), ad])
    M = np.hstack([fam_block, orbit_block])
    target = n + dim_gl
    s = np.linalg.svd(M, compute_uv=False)
    margin = float(s[target - 1]) / max(s[0], 1.0) if len(s) >= target else 0.0
    verdict = _classify(margin, tol)
    rank = int(np.sum(s > tol * max(s[0], 1.0)))
    return Verdict("bht_ii", verdict, margin,
                   rank_deficit=max(target - rank, 0))


def corollary_gate(fam: FamilyAtPoint, case: str,
                   tol: float = RANK_TOL) -> Verdict:
    """Extra hypothesis of the three stability corollaries, combined with
    bht_ii.

    case "plain": Omega0 invertible.
    case "covering_l2": Omega0 injective on Fix(S) (twist required).
    case "zero_kernel": ker(Omega0) contained in Fix(-R).
    """
    st = fam.symmetry
    O = fam.Omega0.entries
    scale = max(np.linalg.norm(O), 1.0)
    if case == "plain":
        s = np.linalg.svd(O, compute_uv=False)
        margin = float(s[-1]) / scale
        verdict = _classify(margin, tol)
        extra = Verdict("corollary_plain", verdict, margin)
    elif case == "covering_l2":
        if st.twist is None:
            raise StructureError("covering_l2 requires symmetry.twist")
        from .revlin import _fixed_space_basis
        B = _fixed_space_basis(st.twist, +1)
        s = np.linalg.svd(O @ B, compute_uv=False)
        margin = float(s[-1]) / scale
        verdict = _classify(margin, tol)
        witness = None
        if verdict != PASS:
            _, _, Vt = np.linalg.svd(O @ B)
            witness = B @ Vt[-1]
        extra = Verdict("corollary_covering_l2", verdict, margin, witness)
    elif case == "zero_kernel":
        _, s, Vt = np.linalg.svd(O)
        r = int(np.sum(s > tol * max(s[0], 1.0)))
        kernel = Vt[r:].T
        if kernel.shape[1] == 0:
            extra = Verdict("corollary_zero_kernel", PASS, np.inf)
        else:
            R = st.R
            defect = np.linalg.norm((np.eye(len(R)) + R) @ kernel)
            margin = float(defect)
            verdict = PASS if margin < 10.0 * tol else FAIL
            witness = None if verdict == PASS else kernel[:, 0]
            extra = Verdict("corollary_zero_kernel", verdict,
                            margin if verdict == FAIL else 1.0, witness)
    else:
        raise StructureError(f"unknown corollary case {case!r}")
    trans = bht_ii(fam, tol)
    combined = PASS if (bool(extra) and bool(trans)) else FAIL
    if INDETERMINATE in (extra.verdict, trans.verdict):
        combined = INDETERMINATE
    return Verdict(f"corollary[{case}]+bht_ii", combined,
                   min(extra.margin, trans.margin), extra.witness,
                   trans.rank_deficit)


def semicontinuity_margin(Omega0: StructuredMatrix,
                          symmetry: ReversingStructure) -> float:
    """Size of the parity-minus perturbations under which a passing bht_i
    provably keeps passing: the restricted smallest singular value itself
    (a perturbation E changes Omega0|B+ by at most ||E||)."""
    B = symmetry.fix_plus_basis()
    if B.shape[1] == 0:
        return np.inf
    s = np.linalg.svd(Omega0.entries @ B, compute_uv=False)
    return float(s[-1])

"""Structured linear algebra over the infinitesimally reversible and
equivariant matrix spaces gl-(2p;R) and gl+(2p;R).

A linear involution R on R^{2p} with p-dimensional fixed space splits the
matrix algebra into the anti-commuting part gl- (Floquet matrices of
reversible fields) and the commuting part gl+.  This module provides
membership tests, the Jordan-Chevalley decomposition with eigenvalue
clustering, the adjoint operators ad(Omega) between gl+ and gl-, linear
centralizer unfoldings (LCU) and the transversality splitting projection
used by the homological solver.

All rank and null-space decisions go through singular values with a
relative threshold; matrices with an arbitrary involution R are handled by
an explicit change of basis to block coordinates where R = diag(I_p, -I_p).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

MINUS = -1
PLUS = +1

RANK_TOL = 1e-9
CLUSTER_TOL = 1e-7
MEMBERSHIP_TOL = 1e-9


class StructureError(ValueError):
    """Input violates a structural precondition (dimensions, parity, ...)."""


class IllConditionedError(RuntimeError):
    """Eigenvalue clustering or a rank decision is numerically ambiguous."""


class SplittingError(RuntimeError):
    """The direct-sum splitting im(ad+) (+) ker(ad-^T) failed numerically."""


class RankToleranceWarning(UserWarning):
    """A singular value fell close to the rank threshold."""


def _fixed_space_basis(M: np.ndarray, sign: int, tol: float = 1e-8) -> np.ndarray:
    """Orthonormal basis (columns) of the eigenspace of the involution M
    for eigenvalue `sign` (+1 or -1)."""
    P = 0.5 * (np.eye(M.shape[0]) + sign * M)
    U, s, _ = np.linalg.svd(P)
    r = int(np.sum(s > 0.5))
    return U[:, :r]


@dataclass(eq=False)
class ReversingStructure:
    """The involution R on R^{2p} (and optionally the l-fold twist S_l)."""

    R: np.ndarray
    twist: np.ndarray | None = None
    twist_order: int = 1
    tol: float = 1e-9

    def __post_init__(self):
        self.R = np.asarray(self.R, dtype=float)
        d = self.R.shape[0]
        if self.R.shape != (d, d) or d % 2 != 0:
            raise StructureError("R must be a square matrix of even dimension")
        if np.linalg.norm(self.R @ self.R - np.eye(d)) > self.tol * max(1.0, d):
            raise StructureError("R is not an involution")
        self.dim_z = d
        self.p = d // 2
        plus = _fixed_space_basis(self.R, +1)
        minus = _fixed_space_basis(self.R, -1)
        if plus.shape[1] != self.p:
            raise StructureError(
                f"dim Fix(R) = {plus.shape[1]}, expected p = {self.p}")
        # change of basis to block coordinates, Qinv R Q = diag(I_p, -I_p)
        self.Q = np.hstack([plus, minus])
        self.Qinv = np.linalg.inv(self.Q)
        if self.twist is not None:
            self.twist = np.asarray(self.twist, dtype=float)
            if self.twist.shape != (d, d):
                raise StructureError("twist has wrong dimension")
            if self.twist_order < 2:
                raise StructureError("twist requires twist_order >= 2")
            Sl = np.linalg.matrix_power(self.twist, self.twist_order)
            if np.linalg.norm(Sl - np.eye(d)) > 1e-8 * d:
                raise StructureError("twist^l != Id")

    # -- block coordinates ------------------------------------------------

    def to_canonical(self, M: np.ndarray) -> np.ndarray:
        return self.Qinv @ M @ self.Q

    def from_canonical(self, M: np.ndarray) -> np.ndarray:
        return self.Q @ M @ self.Qinv

    def block_mask(self, parity: int) -> np.ndarray:
        """Boolean mask of the entries of gl_parity in block coordinates."""
        top = np.arange(self.dim_z) < self.p
        off = top[:, None] ^ top[None, :]
        return off if parity == MINUS else ~off

    def coords(self, M: np.ndarray, parity: int) -> np.ndarray:
        """Coordinates (length 2p^2) of M in the elementary-matrix basis of
        gl_parity, block convention.  M is given in original coordinates."""
        return self.to_canonical(M)[self.block_mask(parity)]

    def matrix(self, v: np.ndarray, parity: int) -> np.ndarray:
        """Inverse of :meth:`coords`."""
        M = np.zeros((self.dim_z, self.dim_z))
        M[self.block_mask(parity)] = v
        return self.from_canonical(M)

    def project(self, M: np.ndarray, parity: int) -> np.ndarray:
        """Projection of an arbitrary matrix onto gl_parity."""
        return 0.5 * (M + parity * self.R @ M @ self.R)

    def transpose_canonical(self, M: np.ndarray) -> np.ndarray:
        """Transpose taken in block coordinates (where R is symmetric, so
        gl_parity is stable under it), mapped back to original coordinates."""
        return self.from_canonical(self.to_canonical(M).T)

    def fix_plus_basis(self) -> np.ndarray:
        """Orthonormal basis of Fix(R), intersected with Fix(S_l) if a twist
        is present."""
        B = _fixed_space_basis(self.R, +1)
        if self.twist is not None:
            # joint fixed space: null space of [(I - R); (I - S_l)]
            d = self.dim_z
            A = np.vstack([np.eye(d) - self.R, np.eye(d) - self.twist])
            _, s, Vt = np.linalg.svd(A)
            r = int(np.sum(s > 1e-10 * max(s[0], 1.0)))
            B = Vt[r:].T
        return B

    def fix_minus_basis(self) -> np.ndarray:
        return _fixed_space_basis(self.R, -1)


def canonical_structure(p: int) -> ReversingStructure:
    """R = diag(I_p, -I_p)."""
    R = np.diag(np.concatenate([np.ones(p), -np.ones(p)]))
    return ReversingStructure(R)


def alternating_structure(p: int, sign: int = +1) -> ReversingStructure:
    """R = sign * diag(1, -1, 1, -1, ...), as used for the explicit
    unfoldings of resonant and nilpotent Floquet matrices."""
    r = np.array([(-1) ** i for i in range(2 * p)], dtype=float)
    return ReversingStructure(np.diag(sign * r))


@dataclass(eq=False)
class StructuredMatrix:
    """A 2p x 2p real matrix tagged with its parity relative to R."""

    entries: np.ndarray
    parity: int
    structure: ReversingStructure

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=float)
        d = self.structure.dim_z
        if self.entries.shape != (d, d):
            raise StructureError(
                f"matrix is {self.entries.shape}, structure expects {(d, d)}")
        if self.parity not in (MINUS, PLUS):
            raise StructureError("parity must be MINUS or PLUS")

    @property
    def p(self) -> int:
        return self.structure.p

    def defect(self) -> float:
        R = self.structure.R
        M = self.entries
        return float(np.linalg.norm(M @ R - self.parity * R @ M))

    def norm(self) -> float:
        return float(np.linalg.norm(self.entries))


def check_membership(M: np.ndarray, structure: ReversingStructure,
                     parity: int, tol: float = MEMBERSHIP_TOL):
    """Test M in gl_parity.  Returns (verdict, defect_norm); the defect
    ||M R -+ R M|| is reported regardless of the verdict."""
    M = np.asarray(M, dtype=float)
    d = structure.dim_z
    if M.shape != (d, d):
        raise StructureError(f"matrix is {M.shape}, expected {(d, d)}")
    R = structure.R
    defect = float(np.linalg.norm(M @ R - parity * R @ M))
    scale = max(np.linalg.norm(M), 1e-300)
    return defect <= tol * scale, defect


# -- Jordan-Chevalley decomposition ---------------------------------------

@dataclass(eq=False)
class JordanChevalley:
    semisimple: StructuredMatrix
    nilpotent: StructuredMatrix


def _cluster_eigenvalues(w: np.ndarray, ctol: float) -> list[np.ndarray]:
    """Greedy transitive clustering of complex eigenvalues at distance ctol.
    Returns a list of index arrays."""
    n = len(w)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(w[i] - w[j]) <= ctol:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [np.array(g) for g in groups.values()]


def jordan_chevalley(sm: StructuredMatrix,
                     cluster_tol: float | None = None) -> JordanChevalley:
    """Split sm = S0 + N0 into commuting semisimple and nilpotent parts.

    Eigenvalues are clustered at cluster_tol (default 1e-7 * ||Omega||);
    each cluster is replaced by its mean, which defines the semisimple part
    through the associated invariant subspaces.  Clusters whose means end up
    closer than 10 x cluster_tol without having been merged indicate an
    ill-conditioned decomposition and raise IllConditionedError.
    """
    if sm.parity != MINUS:
        raise StructureError("jordan_chevalley expects parity minus")
    A = sm.entries
    d = A.shape[0]
    nrm = np.linalg.norm(A)
    ctol = cluster_tol if cluster_tol is not None else CLUSTER_TOL * max(nrm, 1.0)
    w = np.linalg.eigvals(A)
    clusters = _cluster_eigenvalues(w, ctol)
    means = [np.mean(w[c]) for c in clusters]
    for i in range(len(means)):
        for j in range(i + 1, len(means)):
            if abs(means[i] - means[j]) < 10.0 * ctol:
                raise IllConditionedError(
                    "eigenvalue clusters separated by less than 10x the "
                    f"clustering tolerance ({abs(means[i] - means[j]):.3e})")
    if len(clusters) == 1:
        S = float(np.real(means[0])) * np.eye(d)
    else:
        # invariant subspace of each cluster via sorted complex Schur form
        cols = []
        diag = []
        for mean, c in zip(means, clusters):
            radius = max(np.max(np.abs(w[c] - mean)), ctol) * 1.5
            _, Z, sdim = sla.schur(A, output="complex",
                                   sort=lambda x: abs(x - mean) <= radius)
            if sdim != len(c):
                raise IllConditionedError(
                    "invariant subspace dimension does not match cluster size")
            cols.append(Z[:, :sdim])
            diag.extend([mean] * sdim)
        X = np.hstack(cols)
        S = X @ np.diag(diag) @ np.linalg.inv(X)
        if np.linalg.norm(S.imag) > 1e-7 * max(nrm, 1.0):
            raise IllConditionedError("semisimple part is not real")
        S = S.real
    S = sm.structure.project(S, MINUS)
    N = A - S
    return JordanChevalley(
        semisimple=StructuredMatrix(S, MINUS, sm.structure),
        nilpotent=StructuredMatrix(N, MINUS, sm.structure))


# -- adjoint operators ----------------------------------------------------

def adjoint_matrix(sm: StructuredMatrix, from_parity: int) -> np.ndarray:
    """Matrix of A |-> Omega A - A Omega from gl_{from_parity} to
    gl_{-from_parity}, both in the elementary-matrix block bases.  Square of
    size 2p^2."""
    st = sm.structure
    Oc = st.to_canonical(sm.entries)
    src = st.block_mask(from_parity)
    dst = st.block_mask(-from_parity)
    dim = int(src.sum())
    out = np.zeros((dim, dim))
    idx = np.argwhere(src)
    for col, (i, j) in enumerate(idx):
        E = np.zeros_like(Oc)
        E[i, j] = 1.0
        out[:, col] = (Oc @ E - E @ Oc)[dst]
    return out


def _ad_matrix_canonical(Oc: np.ndarray, structure: ReversingStructure,
                         from_parity: int) -> np.ndarray:
    """Like adjoint_matrix but for a matrix already given in block
    coordinates (used for transposes, which are natural there)."""
    src = structure.block_mask(from_parity)
    dst = structure.block_mask(-from_parity)
    dim = int(src.sum())
    out = np.zeros((dim, dim))
    for col, (i, j) in enumerate(np.argwhere(src)):
        E = np.zeros_like(Oc)
        E[i, j] = 1.0
        out[:, col] = (Oc @ E - E @ Oc)[dst]
    return out


def _null_space(A: np.ndarray, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal null-space basis (columns) with a relative threshold.
    Warns when a singular value falls within a decade of the threshold."""
    U, s, Vt = np.linalg.svd(A)
    if len(s) == 0 or s[0] == 0.0:
        return np.eye(A.shape[1])
    thr = rank_tol * s[0]
    near = (s > 0.1 * thr) & (s < 10.0 * thr)
    if np.any(near):
        warnings.warn("singular value near the rank threshold; null-space "
                      "decision may be unstable", RankToleranceWarning)
    r = int(np.sum(s > thr))
    return Vt[r:].T


def _column_space(A: np.ndarray, rank_tol: float = RANK_TOL) -> np.ndarray:
    U, s, _ = np.linalg.svd(A)
    if len(s) == 0 or s[0] == 0.0:
        return np.zeros((A.shape[0], 0))
    r = int(np.sum(s > rank_tol * s[0]))
    return U[:, :r]


# -- linear centralizer unfoldings ----------------------------------------

@dataclass(eq=False)
class LinearUnfolding:
    """Omega(mu) = Omega0 + sum_i mu_i A_i with the A_i spanning a
    complement of the adjoint orbit's tangent space in gl-."""

    base: StructuredMatrix
    directions: list[StructuredMatrix]
    codimension: int = field(default=-1)

    def __post_init__(self):
        if self.codimension < 0:
            self.codimension = len(self.directions)
        if self.codimension != len(self.directions):
            raise StructureError("codimension != number of directions")

    def __call__(self, mu) -> StructuredMatrix:
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        if mu.shape != (self.codimension,):
            raise StructureError(
                f"mu has shape {mu.shape}, expected ({self.codimension},)")
        M = self.base.entries.copy()
        for mi, D in zip(mu, self.directions):
            M = M + mi * D.entries
        return StructuredMatrix(M, MINUS, self.base.structure)

    def direction_span(self) -> np.ndarray:
        """Coordinates of the directions in the gl- basis, as columns."""
        st = self.base.structure
        return np.column_stack(
            [st.coords(D.entries, MINUS) for D in self.directions])


def _vec_right(B: np.ndarray) -> np.ndarray:
    """Row-major vec operator of M |-> M @ B."""
    return np.kron(np.eye(B.shape[0]), B.T)


def _vec_left(A: np.ndarray) -> np.ndarray:
    """Row-major vec operator of M |-> A @ M."""
    return np.kron(A, np.eye(A.shape[0]))


def _vec_ad(A: np.ndarray) -> np.ndarray:
    """Row-major vec operator of M |-> A M - M A."""
    return _vec_left(A) - _vec_right(A)


def parity_basis(structure: ReversingStructure, parity: int,
                 equivariants: tuple[np.ndarray, ...] = ()) -> np.ndarray:
    """Orthonormal basis (columns, row-major vec coordinates) of gl_parity
    intersected with the commutant of the given equivariant generators."""
    R = structure.R
    rows = [_vec_right(R) - parity * _vec_left(R)]
    for E in equivariants:
        rows.append(_vec_ad(np.asarray(E, dtype=float)))
    A = np.vstack(rows)
    _, s, Vt = np.linalg.svd(A)
    r = int(np.sum(s > 1e-10 * max(s[0], 1.0)))
    return Vt[r:].T


def lcu(sm: StructuredMatrix, rank_tol: float = RANK_TOL,
        equivariants: tuple[np.ndarray, ...] = ()) -> LinearUnfolding:
    """The linear centralizer unfolding of Omega0: directions form an
    orthonormal basis of ker(ad S0) /\\ ker(ad N0^T) /\\ gl-.

    `equivariants` restricts the whole construction to the commutant of the
    given matrices (needed on covering spaces, where only deformations
    commuting with the covering rotation descend to the base).

    The direction basis is orthonormal; it is not unique (any basis of the
    intersection would do).
    """
    if sm.parity != MINUS:
        raise StructureError("lcu expects parity minus")
    st = sm.structure
    jc = jordan_chevalley(sm)
    S0 = jc.semisimple.entries
    N0t = st.transpose_canonical(jc.nilpotent.entries)
    Vm = parity_basis(st, MINUS, equivariants)
    # intersect ker(ad S0) and ker(ad N0^T) inside the constrained gl-
    blocks = []
    for A in (_vec_ad(S0) @ Vm, _vec_ad(N0t) @ Vm):
        nb = np.linalg.norm(A)
        blocks.append(A / nb if nb > rank_tol else A)
    null = _null_space(np.vstack(blocks), rank_tol)
    d = st.dim_z
    dirs = [StructuredMatrix((Vm @ null[:, i]).reshape(d, d), MINUS, st)
            for i in range(null.shape[1])]
    unf = LinearUnfolding(base=sm, directions=dirs)
    defect = transversality_defect(unf, rank_tol, equivariants)
    if defect != 0:
        raise SplittingError(
            f"LCU transversality fails with rank deficit {defect}")
    return unf


def transversality_defect(unf: LinearUnfolding,
                          rank_tol: float = RANK_TOL,
                          equivariants: tuple[np.ndarray, ...] = ()) -> int:
    """Rank deficit of span(directions) + im(ad+(Omega0)) inside gl-
    (restricted to the commutant of `equivariants` when given).  Zero means
    the sum is direct and spans the space."""
    st = unf.base.structure
    Vm = parity_basis(st, MINUS, equivariants)
    Vp = parity_basis(st, PLUS, equivariants)
    # image of ad(Omega0) on the constrained gl+, in constrained gl- coords
    image = _column_space(Vm.T @ _vec_ad(unf.base.entries) @ Vp, rank_tol)
    cols = [image]
    if unf.codimension:
        D = Vm.T @ np.column_stack(
            [X.entries.reshape(-1) for X in unf.directions])
        D = D / np.linalg.norm(D, axis=0, keepdims=True)
        cols.append(D)
    C = np.hstack(cols)
    dim = Vm.shape[1]
    s = np.linalg.svd(C, compute_uv=False)
    rank = int(np.sum(s > rank_tol * max(s[0], 1.0)))
    return dim - rank


def _j2() -> np.ndarray:
    return np.array([[0.0, 1.0], [-1.0, 0.0]])


def lcu_closed_form(kind: str, p: int, fix_sign: int = +1) -> LinearUnfolding:
    """Explicit unfoldings for the two worked-out normal forms.

    kind = "p_fold_resonance": Omega0 with eigenvalues +-i of algebraic
    multiplicity p and geometric multiplicity 1 (block Jordan-like form of
    J2 blocks); the p directions put mu_i J2 on the i-th block subdiagonal.

    kind = "nilpotent_zero": Omega0 a single nilpotent Jordan block of size
    2p; the p directions are (N^T)^(2j-1).  fix_sign selects whether ker N
    lies in Fix(R) (+1) or Fix(-R) (-1).
    """
    if p < 1:
        raise StructureError("p must be >= 1")
    if kind == "p_fold_resonance":
        st = alternating_structure(p)
        J2 = _j2()
        base = np.kron(np.eye(p) + np.diag(np.ones(p - 1), 1), J2)
        dirs = [np.kron(np.diag(np.ones(p - i), -i), J2) for i in range(p)]
    elif kind == "nilpotent_zero":
        if fix_sign not in (+1, -1):
            raise StructureError("fix_sign must be +-1")
        st = alternating_structure(p, sign=fix_sign)
        N = np.diag(np.ones(2 * p - 1), 1)
        dirs = [np.linalg.matrix_power(N.T, 2 * j - 1) for j in range(1, p + 1)]
        base = N
    else:
        raise StructureError(f"unknown unfolding kind {kind!r}")
    base_sm = StructuredMatrix(base, MINUS, st)
    return LinearUnfolding(
        base=base_sm,
        directions=[StructuredMatrix(D, MINUS, st) for D in dirs])


# -- splitting projection -------------------------------------------------

@dataclass(eq=False)
class SplittingProjection:
    """The projection of gl- onto ker(ad-(Omega0^T)) along im(ad+(Omega0)),
    represented on gl- coordinates."""

    structure: ReversingStructure
    matrix: np.ndarray
    rank: int

    def __call__(self, M: np.ndarray) -> np.ndarray:
        v = self.structure.coords(np.asarray(M, dtype=float), MINUS)
        return self.structure.matrix(self.matrix @ v, MINUS)

    def coords(self, M: np.ndarray) -> np.ndarray:
        return self.matrix @ self.structure.coords(np.asarray(M, float), MINUS)


def splitting_projection(sm: StructuredMatrix,
                         rank_tol: float = RANK_TOL) -> SplittingProjection:
    """Build the projector pi with im pi = ker(ad-(Omega0^T)) and
    ker pi = im(ad+(Omega0)).  Raises SplittingError when the two subspaces
    fail to form a direct sum of gl- within tolerance."""
    if sm.parity != MINUS:
        raise StructureError("splitting_projection expects parity minus")
    st = sm.structure
    image = _column_space(adjoint_matrix(sm, PLUS), rank_tol)
    OTc = st.to_canonical(sm.entries).T
    kernel = _null_space(_ad_matrix_canonical(OTc, st, MINUS), rank_tol)
    dim = 2 * st.p ** 2
    if image.shape[1] + kernel.shape[1] != dim:
        raise SplittingError(
            f"dim im(ad+) + dim ker(ad-^T) = "
            f"{image.shape[1]} + {kernel.shape[1]} != {dim}")
    C = np.hstack([image, kernel])
    if np.linalg.cond(C) > 1.0 / rank_tol:
        raise SplittingError("splitting is not direct within tolerance")
    sel = np.zeros(dim)
    sel[image.shape[1]:] = 1.0
    pi = C @ np.diag(sel) @ np.linalg.inv(C)
    return SplittingProjection(structure=st, matrix=pi, rank=kernel.shape[1])


# -- normal frequencies ---------------------------------------------------

def normal_frequencies(sm: StructuredMatrix) -> np.ndarray:
    """Imaginary parts of all 2p eigenvalues, with multiplicity, sorted
    ascending.  Invariant under conjugation by GL+ elements."""
    if sm.parity != MINUS:
        raise StructureError("normal_frequencies expects parity minus")
    return np.sort(np.imag(np.linalg.eigvals(sm.entries)))


# -- helpers for tests and callers ----------------------------------------

def random_structured(structure: ReversingStructure, parity: int,
                      rng: np.random.Generator,
                      scale: float = 1.0) -> StructuredMatrix:
    """Random matrix in gl_parity with iid normal block coordinates."""
    v = rng.normal(size=2 * structure.p ** 2, scale=scale)
    return StructuredMatrix(structure.matrix(v, parity), parity, structure)


def ad_action(A: np.ndarray, Omega: np.ndarray) -> np.ndarray:
    """ad(A).Omega = A Omega - Omega A."""
    return A @ Omega - Omega @ A

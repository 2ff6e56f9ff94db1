"""Per-mode solver for the linearized conjugacy equation over truncated
Fourier series.

Given the normal-linear data (sigma, Omega(nu)) and a right-hand side that
is affine in (eta, zeta), the generator Psi = U d/dx + V d/dy + W d/dz and
the parameter shifts (Lambda1, Lambda2) are determined mode by mode:

    k != 0:  i<k,sigma> U_k                    = f_k
             i<k,sigma> V0_k                   = g_k          (V1 alike)
             V2_k (i<k,sigma> Id + Omega)      = (g_zeta)_k
             (i<k,sigma> Id - Omega) W0_k      = h_k          (W1 alike)
             (i<k,sigma> Id - ad Omega) W2_k   = (h_zeta)_k

    k == 0:  Lambda1 = -f_0
             V2_0 Omega = (g_zeta)_0,  -Omega W0_0 = h_0,  -Omega W1_0 =
             (h_eta)_0, solved on the symmetry-restricted subspaces, and
             -ad Omega W2_0 - sum_i Lambda2_i A_i = (h_zeta)_0
             with the unfolding directions A_i spanning the complement of
             im(ad_+) — Lambda2 is unique, W2_0 unique up to the
             centralizer.

Every divisor (|<k,sigma>| and the smallest singular values of the shifted
operators) must stay above 0.5 * gamma * |k|^-tau; otherwise the solver
refuses with the offending mode.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .diophantine import DiophantineSpec
from .fourier import FourierField, ModeJet
from .revlin import (MINUS, PLUS, LinearUnfolding, ReversingStructure,
                     StructuredMatrix, StructureError, _vec_ad, parity_basis)


class SmallDivisorError(StructureError):
    def __init__(self, k, divisor, bound):
        super().__init__(
            f"divisor {divisor:.3e} at mode {k} below safety bound "
            f"{bound:.3e}")
        self.k, self.divisor, self.bound = k, divisor, bound


class UnsolvableError(StructureError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


@dataclass(eq=False)
class HomologicalSolution:
    psi: FourierField          # jets (U; V0, V1, V2; W0, W1, W2) per mode
    Lambda1: np.ndarray        # R^n
    Lambda2: np.ndarray        # R^c
    residual_norm: float
    min_divisor: float


def _restricted_solve(A: np.ndarray, rhs: np.ndarray, B: np.ndarray,
                      label: str, tol: float = 1e-8):
    """Least-squares solve A x = rhs with x constrained to the column span
    of B; raises UnsolvableError (with a kernel witness) when the residual
    is not negligible."""
    AB = A @ B
    x, *_ = np.linalg.lstsq(AB, rhs, rcond=None)
    res = AB @ x - rhs
    scale = max(float(np.max(np.abs(rhs))), 1.0)
    if np.max(np.abs(res)) > tol * scale:
        U, s, Vt = np.linalg.svd(AB)
        raise UnsolvableError(
            f"restricted solve for {label} failed "
            f"(residual {float(np.max(np.abs(res))):.2e}); "
            "drift non-degeneracy violated",
            witness=B @ Vt[-1] if B.shape[1] else None)
    return B @ x


def solve(sigma, Omega: StructuredMatrix, unfolding: LinearUnfolding,
          rhs: FourierField, spec: DiophantineSpec,
          rho: float = 0.0) -> HomologicalSolution:
    sigma = np.asarray(sigma, dtype=float)
    st = Omega.structure
    O = Omega.entries
    d = O.shape[0]
    n, m = rhs.n, rhs.m
    if len(sigma) != n:
        raise StructureError("sigma length != rhs.n")
    ad_full = _vec_ad(O)                       # (d^2, d^2), row-major vec
    dirs = np.column_stack([A.entries.reshape(-1)
                            for A in unfolding.directions]) \
        if unfolding.codimension else np.zeros((d * d, 0))
    psi = FourierField(n, m, rhs.p, rhs.K)
    min_div = np.inf
    zero = (0,) * n

    for k in rhs.modes():
        c = rhs.get(k)
        if k == zero:
            continue
        a = float(np.dot(k, sigma))
        bound = 0.5 * spec.gamma * sum(abs(x) for x in k) ** (-spec.tau)
        op_w = 1j * a * np.eye(d) - O
        op_v = 1j * a * np.eye(d) + O
        op_w2 = 1j * a * np.eye(d * d) - ad_full
        divisors = [abs(a),
                    float(np.linalg.svd(op_w, compute_uv=False)[-1]),
                    float(np.linalg.svd(op_v, compute_uv=False)[-1]),
                    float(np.linalg.svd(op_w2, compute_uv=False)[-1])]
        worst = min(divisors)
        min_div = min(min_div, worst)
        if worst < bound:
            raise SmallDivisorError(k, worst, bound)
        jet = ModeJet.zeros(n, m, rhs.p)
        jet.f = c.f / (1j * a)                       # U_k
        jet.g = c.g / (1j * a)                       # V0_k
        jet.g_eta = c.g_eta / (1j * a)               # V1_k
        if m:
            jet.g_zeta = np.linalg.solve(op_v.T, c.g_zeta.T).T
        jet.h = np.linalg.solve(op_w, c.h)           # W0_k
        if m:
            jet.h_eta = np.linalg.solve(op_w, c.h_eta)
        jet.h_zeta = np.linalg.solve(op_w2, c.h_zeta.reshape(-1)) \
            .reshape(d, d)
        psi.coeffs[k] = jet

    # k = 0
    c0 = rhs.get(zero)
    Lambda1 = -np.real(c0.f)
    jet0 = ModeJet.zeros(n, m, rhs.p)
    Bp = st.fix_plus_basis()                 # Fix(R), target space of W
    # row space for V2_0: v with v R = v  <=>  R^T v^T = v^T
    from .revlin import _fixed_space_basis
    Brow = _fixed_space_basis(st.R.T, +1)
    if m:
        V2T = np.column_stack([
            _restricted_solve(O.T, np.real(c0.g_zeta[i]), Brow, "V2_0")
            for i in range(m)]) if np.max(np.abs(c0.g_zeta)) > 0 else \
            np.zeros((d, m))
        jet0.g_zeta = V2T.T.astype(complex)
    jet0.h = _restricted_solve(-O, np.real(c0.h), Bp, "W0_0") \
        .astype(complex)
    if m:
        W1 = np.column_stack([
            _restricted_solve(-O, np.real(c0.h_eta[:, i]), Bp, "W1_0")
            for i in range(m)]) if np.max(np.abs(c0.h_eta)) > 0 else \
            np.zeros((d, m))
        jet0.h_eta = W1.astype(complex)
    # combined solve for (W2_0, Lambda2)
    Vp = parity_basis(st, PLUS)              # gl_+ coordinates (canonical)
    A_w = -(ad_full @ Vp)
    M = np.hstack([A_w, -dirs])
    rhs_vec = np.real(c0.h_zeta).reshape(-1)
    x, *_ = np.linalg.lstsq(M, rhs_vec, rcond=None)
    res = M @ x - rhs_vec
    if np.max(np.abs(res)) > 1e-8 * max(np.max(np.abs(rhs_vec)), 1.0):
        raise UnsolvableError(
            "mean Floquet defect not in im(ad_+) + direction span; "
            "transversality violated at this parameter")
    nw = Vp.shape[1]
    jet0.h_zeta = (Vp @ x[:nw]).reshape(d, d).astype(complex)
    Lambda2 = np.real(x[nw:])
    psi.coeffs[zero] = jet0

    sol = HomologicalSolution(psi=psi, Lambda1=Lambda1, Lambda2=Lambda2,
                              residual_norm=0.0, min_divisor=float(min_div))
    sol.residual_norm = residual(sigma, Omega, unfolding, sol, rhs, rho)
    return sol


def residual(sigma, Omega: StructuredMatrix, unfolding: LinearUnfolding,
             sol: HomologicalSolution, rhs: FourierField,
             rho: float = 0.0) -> float:
    """Weighted sup norm over modes of the componentwise defect of the
    per-mode equations."""
    sigma = np.asarray(sigma, dtype=float)
    O = Omega.entries
    d = O.shape[0]
    zero = (0,) * rhs.n
    shift = sum((sol.Lambda2[i] * unfolding.directions[i].entries
                 for i in range(unfolding.codimension)),
                start=np.zeros((d, d)))
    worst = 0.0
    for k in set(rhs.modes()) | set(sol.psi.modes()):
        a = float(np.dot(k, sigma))
        c = rhs.get(k)
        s = sol.psi.get(k)
        is0 = (k == zero)
        def_f = 1j * a * s.f - c.f - (sol.Lambda1 if is0 else 0.0)
        def_g = 1j * a * s.g - c.g
        def_ge = 1j * a * s.g_eta - c.g_eta
        def_gz = s.g_zeta @ (1j * a * np.eye(d) + O) - c.g_zeta
        def_h = (1j * a * np.eye(d) - O) @ s.h - c.h
        def_he = (1j * a * np.eye(d) - O) @ s.h_eta - c.h_eta
        def_hz = 1j * a * s.h_zeta - (O @ s.h_zeta - s.h_zeta @ O) \
            - c.h_zeta - (shift if is0 else 0.0)
        w = np.exp(rho * sum(abs(x) for x in k))
        for D in (def_f, def_g, def_ge, def_gz, def_h, def_he, def_hz):
            if D.size:
                worst = max(worst, w * float(np.max(np.abs(D))))
    return worst

"""Truncated Fourier representation of vector fields on T^n x R^m x R^2p
that are affine in (y, z).

A field  X = f(x) d/dx + (g + g_eta y + g_zeta z)(x) d/dy
            + (h + h_eta y + h_zeta z)(x) d/dz
is stored as a table of jets indexed by k in Z^n with |k|_1 <= K.  Reality
of the field corresponds to coefficient(-k) = conj(coefficient(k)).

Reversibility under G: (x, y, z) -> (-x, y, Rz) translates into per-mode
identities (with reality already imposed):

    f_k real,   g_k and (g_eta)_k imaginary,
    conj((g_zeta)_k) = -(g_zeta)_k R,
    h_k = a + i b with a in Fix(-R), b in Fix(R),
    conj((h_eta)_k) = -R (h_eta)_k,
    conj((h_zeta)_k) = -R (h_zeta)_k R.

Equivariance under the order-l twist F_l: (x1, x_*, z) -> (x1 - 2pi/l,
x_*, S z) translates into  e^{2 pi i k1 / l} * (S-action on the jet) = jet,
which selects admissible modes componentwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .revlin import ReversingStructure, StructureError


@dataclass(eq=False)
class ModeJet:
    """Affine jet of one Fourier mode, evaluated at (xi, 0, 0)."""

    f: np.ndarray        # (n,)
    g: np.ndarray        # (m,)
    g_eta: np.ndarray    # (m, m)
    g_zeta: np.ndarray   # (m, 2p)
    h: np.ndarray        # (2p,)
    h_eta: np.ndarray    # (2p, m)
    h_zeta: np.ndarray   # (2p, 2p)

    @classmethod
    def zeros(cls, n: int, m: int, p: int) -> "ModeJet":
        d = 2 * p
        return cls(f=np.zeros(n, complex), g=np.zeros(m, complex),
                   g_eta=np.zeros((m, m), complex),
                   g_zeta=np.zeros((m, d), complex),
                   h=np.zeros(d, complex), h_eta=np.zeros((d, m), complex),
                   h_zeta=np.zeros((d, d), complex))

    def copy(self) -> "ModeJet":
        return ModeJet(*(np.array(getattr(self, name))
                         for name in _JET_FIELDS))

    def conj(self) -> "ModeJet":
        return ModeJet(*(np.conj(getattr(self, name))
                         for name in _JET_FIELDS))

    def __add__(self, other: "ModeJet") -> "ModeJet":
        return ModeJet(*(getattr(self, name) + getattr(other, name)
                         for name in _JET_FIELDS))

    def __sub__(self, other: "ModeJet") -> "ModeJet":
        return ModeJet(*(getattr(self, name) - getattr(other, name)
                         for name in _JET_FIELDS))

    def __mul__(self, scalar) -> "ModeJet":
        return ModeJet(*(scalar * getattr(self, name)
                         for name in _JET_FIELDS))

    __rmul__ = __mul__

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(getattr(self, name))))
                   if getattr(self, name).size else 0.0
                   for name in _JET_FIELDS)


_JET_FIELDS = ("f", "g", "g_eta", "g_zeta", "h", "h_eta", "h_zeta")


@dataclass(eq=False)
class FourierField:
    """Sparse table k -> ModeJet with |k|_1 <= K."""

    n: int
    m: int
    p: int
    K: int
    coeffs: dict = field(default_factory=dict)

    def get(self, k) -> ModeJet:
        k = tuple(int(c) for c in k)
        if k in self.coeffs:
            return self.coeffs[k]
        return ModeJet.zeros(self.n, self.m, self.p)

    def set(self, k, jet: ModeJet) -> None:
        k = tuple(int(c) for c in k)
        if sum(abs(c) for c in k) > self.K:
            raise StructureError(f"mode {k} beyond truncation K={self.K}")
        self.coeffs[k] = jet

    def modes(self) -> list:
        return sorted(self.coeffs.keys())

    def copy(self) -> "FourierField":
        return FourierField(self.n, self.m, self.p, self.K,
                            {k: j.copy() for k, j in self.coeffs.items()})

    def symmetrize_reality(self) -> "FourierField":
        """Average each (k, -k) pair so that c(-k) = conj(c(k)) exactly."""
        out = FourierField(self.n, self.m, self.p, self.K)
        for k in self.modes():
            mk = tuple(-c for c in k)
            jet = 0.5 * (self.get(k) + self.get(mk).conj())
            if jet.max_abs() > 0.0:
                out.coeffs[k] = jet
                out.coeffs[mk] = jet.conj()
        return out

    def reality_defect(self) -> float:
        worst = 0.0
        for k in self.modes():
            mk = tuple(-c for c in k)
            worst = max(worst, (self.get(mk) - self.get(k).conj()).max_abs())
        return worst

    def norm(self, rho: float = 0.0) -> float:
        """Weighted sup norm: max_k e^{rho |k|_1} * max-abs of the jet."""
        worst = 0.0
        for k, jet in self.coeffs.items():
            w = np.exp(rho * sum(abs(c) for c in k))
            worst = max(worst, w * jet.max_abs())
        return worst

    def __add__(self, other: "FourierField") -> "FourierField":
        out = self.copy()
        for k, jet in other.coeffs.items():
            out.coeffs[k] = out.get(k) + jet
        return out

    def __sub__(self, other: "FourierField") -> "FourierField":
        return self + (-1.0) * other

    def __mul__(self, scalar) -> "FourierField":
        return FourierField(self.n, self.m, self.p, self.K,
                            {k: scalar * j for k, j in self.coeffs.items()})

    __rmul__ = __mul__


def reversibility_defect(fld: FourierField,
                         structure: ReversingStructure) -> float:
    """Largest violation of the per-mode reversibility identities (the field
    should change sign under pushforward by G)."""
    R = structure.R
    worst = fld.reality_defect()
    for k, c in fld.coeffs.items():
        worst = max(
            worst,
            float(np.max(np.abs(np.imag(c.f)))) if c.f.size else 0.0,
            float(np.max(np.abs(np.real(c.g)))) if c.g.size else 0.0,
            float(np.max(np.abs(np.real(c.g_eta)))) if c.g_eta.size else 0.0,
            float(np.max(np.abs(np.conj(c.g_zeta) + c.g_zeta @ R)))
            if c.g_zeta.size else 0.0,
            float(np.max(np.abs(np.conj(c.h) + R @ c.h))),
            float(np.max(np.abs(np.conj(c.h_eta) + R @ c.h_eta)))
            if c.h_eta.size else 0.0,
            float(np.max(np.abs(np.conj(c.h_zeta) + R @ c.h_zeta @ R))))
    return worst


def generator_defect(fld: FourierField,
                     structure: ReversingStructure) -> float:
    """Largest violation of the equivariance identities for a generator
    field (fixed by pushforward under G): f_k imaginary, g parts real /
    conj(g_zeta) = +g_zeta R, conj(h)=R h, conj(h_eta)=R h_eta,
    conj(h_zeta)=R h_zeta R."""
    R = structure.R
    worst = fld.reality_defect()
    for k, c in fld.coeffs.items():
        worst = max(
            worst,
            float(np.max(np.abs(np.real(c.f)))) if c.f.size else 0.0,
            float(np.max(np.abs(np.imag(c.g)))) if c.g.size else 0.0,
            float(np.max(np.abs(np.imag(c.g_eta)))) if c.g_eta.size else 0.0,
            float(np.max(np.abs(np.conj(c.g_zeta) - c.g_zeta @ R)))
            if c.g_zeta.size else 0.0,
            float(np.max(np.abs(np.conj(c.h) - R @ c.h))),
            float(np.max(np.abs(np.conj(c.h_eta) - R @ c.h_eta)))
            if c.h_eta.size else 0.0,
            float(np.max(np.abs(np.conj(c.h_zeta) - R @ c.h_zeta @ R))))
    return worst


def twist_equivariance_report(fld: FourierField,
                              structure: ReversingStructure) -> list:
    """Violations of F_l-equivariance, one record per offending jet entry
    block: (k, component-name, defect).  Requires structure.twist."""
    if structure.twist is None:
        raise StructureError("twist equivariance needs structure.twist")
    S = structure.twist
    ell = structure.twist_order
    out = []
    for k, c in fld.coeffs.items():
        phase = np.exp(2j * np.pi * k[0] / ell)
        checks = {
            "f": phase * c.f - c.f,
            "g": phase * c.g - c.g,
            "g_eta": phase * c.g_eta - c.g_eta,
            "g_zeta": phase * c.g_zeta @ np.linalg.inv(S) - c.g_zeta,
            "h": phase * S @ c.h - c.h,
            "h_eta": phase * S @ c.h_eta - c.h_eta,
            "h_zeta": phase * S @ c.h_zeta @ np.linalg.inv(S) - c.h_zeta,
        }
        for name, defect in checks.items():
            d = float(np.max(np.abs(defect))) if defect.size else 0.0
            if d > 1e-12:
                out.append((k, name, d))
    return out


def _half_lattice(n: int, K: int) -> list:
    """One representative per {k, -k} pair, 0 < |k|_1 <= K."""
    import itertools
    out = []
    for k in itertools.product(range(-K, K + 1), repeat=n):
        if 0 < sum(abs(c) for c in k) <= K:
            for c in k:
                if c != 0:
                    if c > 0:
                        out.append(k)
                    break
    return out


def random_reversible(n: int, m: int, p: int, K: int,
                      structure: ReversingStructure, rng,
                      amplitude: float = 1.0) -> FourierField:
    """Random field satisfying all reversibility identities exactly: each
    jet entry is drawn i.i.d. and then projected onto the identity's
    solution space (all the projections below are idempotent)."""
    R = structure.R
    d = 2 * p
    fld = FourierField(n, m, p, K)

    def cplx(*shape):
        return amplitude * (rng.standard_normal(shape)
                            + 1j * rng.standard_normal(shape))

    # k = 0: jets are real with the R-parity constraints
    j0 = ModeJet.zeros(n, m, p)
    j0.f = rng.standard_normal(n) * amplitude + 0j
    C = rng.standard_normal((m, d)) * amplitude
    j0.g_zeta = (0.5 * (C - C @ R)).astype(complex)
    j0.h = (0.5 * (np.eye(d) - R) @ rng.standard_normal(d)
            * amplitude).astype(complex)
    C = rng.standard_normal((d, m)) * amplitude
    j0.h_eta = (0.5 * (C - R @ C)).astype(complex)
    C = rng.standard_normal((d, d)) * amplitude
    j0.h_zeta = (0.5 * (C - R @ C @ R)).astype(complex)
    fld.coeffs[(0,) * n] = j0

    for k in _half_lattice(n, K):
        c = ModeJet.zeros(n, m, p)
        c.f = rng.standard_normal(n) * amplitude + 0j
        c.g = 1j * rng.standard_normal(m) * amplitude
        c.g_eta = 1j * rng.standard_normal((m, m)) * amplitude
        C = cplx(m, d)
        c.g_zeta = 0.5 * (C - np.conj(C) @ R)
        a = 0.5 * (np.eye(d) - R) @ rng.standard_normal(d) * amplitude
        b = 0.5 * (np.eye(d) + R) @ rng.standard_normal(d) * amplitude
        c.h = a + 1j * b
        C = cplx(d, m)
        c.h_eta = 0.5 * (C - R @ np.conj(C))
        C = cplx(d, d)
        c.h_zeta = 0.5 * (C - R @ np.conj(C) @ R)
        fld.coeffs[k] = c
        fld.coeffs[tuple(-x for x in k)] = c.conj()
    return fld

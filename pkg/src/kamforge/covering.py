"""Co-rotating coordinates: integer normalization of resonance vectors,
angle-dependent rotations of a normal plane (Van der Pol transformations),
and l:1 covering spaces with their deck transformations.

Conventions (fixed here, asserted by tests):
  - A frequency vector transforms as omega -> sigma @ omega; integer
    covectors transform by the inverse transpose, so <k, omega> is
    preserved.
  - `vanderpol(field, j, k1)` passes to the frame rotating with angle
    -k1*x1 on the selected normal plane, so a resonant block with normal
    frequency alpha_j = k1*omega_1 becomes alpha_j = 0.  The inverse is
    k1 -> -k1.
  - On an l-fold cover the first angle has period 2*pi*l and the same
    rotation rate as downstairs; Fourier modes in the first angle are
    stored in units of 1/l of the cover angle, i.e. mode q stands for
    e^{i q xi_1 / l}.  A base mode k1 lifts to q = l*k1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fourier import FourierField, ModeJet
from .revlin import ReversingStructure, StructureError, StructuredMatrix
from . import fourier as _fourier

_J2 = np.array([[0.0, -1.0], [1.0, 0.0]])


@dataclass(eq=False)
class UnimodularTransform:
    sigma: np.ndarray  # n x n integer, det = +-1

    def __post_init__(self):
        self.sigma = np.asarray(self.sigma, dtype=int)
        d = int(round(np.linalg.det(self.sigma.astype(float))))
        if abs(d) != 1:
            raise StructureError(f"det sigma = {d}, not unimodular")

    def apply_frequency(self, omega) -> np.ndarray:
        return self.sigma @ np.asarray(omega, dtype=float)

    def apply_covector(self, k) -> np.ndarray:
        inv = np.linalg.inv(self.sigma.astype(float))
        out = inv.T @ np.asarray(k, dtype=float)
        return np.rint(out).astype(int)


def normalize_resonance(k) -> tuple:
    """Unimodular sigma bringing the resonance covector to (k1, 0, ..., 0)
    with k1 = gcd of the entries; <k, omega> = <(k1,0,..), sigma omega>.

    Built by integer row operations: M is accumulated so that
    M @ (k/gcd) = e1, and sigma = (M^{-1})^T, making k/gcd the first row of
    sigma.
    """
    k = np.asarray(k, dtype=int)
    if not np.any(k):
        raise StructureError("resonance vector must be nonzero")
    g = int(np.gcd.reduce(np.abs(k[k != 0])))
    v = (k // g).astype(object)
    n = len(k)
    M = np.eye(n, dtype=object)
    if v[0] < 0:
        M[0] = -M[0]
        v[0] = -v[0]
    for i in range(1, n):
        if v[i] == 0:
            continue
        a, b = int(v[0]), int(v[i])
        gg = math.gcd(a, b)
        # Bezout: x*a + y*b = gg; rows: r0 <- x r0 + y ri, ri <- -b/g r0 + a/g ri
        x, y = _bezout(a, b)
        if x * a + y * b != gg:      # extended Euclid may return -gcd
            x, y = -x, -y
        r0, ri = M[0].copy(), M[i].copy()
        M[0] = x * r0 + y * ri
        M[i] = (-b // gg) * r0 + (a // gg) * ri
        v[0], v[i] = gg, 0
    Minv = np.linalg.inv(M.astype(float))
    sigma = np.rint(Minv.T).astype(int)
    return UnimodularTransform(sigma), g


def _bezout(a: int, b: int) -> tuple:
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r != 0:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    return old_s, old_t


@dataclass(eq=False)
class CoveringData:
    """l:1 covering of the angle x1 with co-rotation of selected normal
    planes.  `blocks` lists the complexified planes (1-based: plane i is
    (z_{2i-1}, z_{2i})) that pick up the phase; by default only the
    resonant plane j."""

    l: int
    j: int
    k1: int
    p: int
    blocks: tuple = ()

    def __post_init__(self):
        if self.l < 1:
            raise StructureError("covering order l must be >= 1")
        if not (1 <= self.j <= self.p):
            raise StructureError("resonant plane index out of range")
        if not self.blocks:
            self.blocks = (self.j,)
        if self.l >= 2 and self.k1 % self.l == 0:
            raise StructureError(
                "k1 must be prime to the covering order (k1 odd for l=2)")

    def rotation_generator(self) -> np.ndarray:
        """Real generator J_rot: the block-diagonal matrix with the 2x2
        rotation generator on each co-rotating plane."""
        G = np.zeros((2 * self.p, 2 * self.p))
        for b in self.blocks:
            G[2 * b - 2: 2 * b, 2 * b - 2: 2 * b] = _J2
        return G

    def rotation(self, theta: float) -> np.ndarray:
        from scipy.linalg import expm
        return expm(theta * self.rotation_generator())

    def project(self, point) -> tuple:
        """Pi: cover -> base, (xi1, x_*, y, zeta) with xi1 of period
        2*pi*l."""
        x, y, z = point
        x = np.asarray(x, dtype=float)
        base_x = np.array(x)
        base_x[0] = np.mod(x[0], 2.0 * np.pi)
        T = self.rotation((self.k1 / self.l) * x[0])
        return (base_x, np.asarray(y, dtype=float), T @ np.asarray(z, float))

    def deck(self, point) -> tuple:
        """F: cover -> cover, xi1 -> xi1 - 2*pi (mod 2*pi*l), co-rotating
        planes multiplied by e^{2*pi*i*k1/l}."""
        x, y, z = point
        x = np.asarray(x, dtype=float).copy()
        x[0] = np.mod(x[0] - 2.0 * np.pi, 2.0 * np.pi * self.l)
        T = self.rotation(2.0 * np.pi * self.k1 / self.l)
        return (x, np.asarray(y, dtype=float).copy(),
                T @ np.asarray(z, float))

    def as_record(self) -> dict:
        return {"l": self.l, "j": self.j, "k1": self.k1,
                "blocks": list(self.blocks)}


def _shift_ops(p: int, blocks) -> tuple:
    """Decompose the plane rotation Rot(theta) = D + E e^{i theta}
    + conj(E) e^{-i theta} acting on R^{2p}: D is the identity off the
    rotating planes and E = (P - i J P)/2 on them."""
    d = 2 * p
    P = np.zeros((d, d))
    J = np.zeros((d, d))
    for b in blocks:
        P[2 * b - 2: 2 * b, 2 * b - 2: 2 * b] = np.eye(2)
        J[2 * b - 2: 2 * b, 2 * b - 2: 2 * b] = _J2
    D = np.eye(d) - P
    E = 0.5 * (P - 1j * J @ P)
    return D, E


def _conjugate_field(field: FourierField, p: int, blocks, shift: int,
                     rate_term: float, mode_scale: int = 1) -> FourierField:
    """Push the field through z = Rot(s * x1) * w with Rot having mode
    shift `shift` on the first angle index (in the field's own mode
    units): left action on h-parts, right inverse action on g_zeta and
    h_zeta, plus the rotation-rate term -rate * f1(x) * J_rot on h_zeta.

    `rate_term` multiplies f1; `mode_scale` is unused scaling hook kept for
    clarity of call sites.
    """
    D, E = _shift_ops(p, blocks)
    Ec = np.conj(E)
    Jrot = np.zeros((2 * p, 2 * p))
    for b in blocks:
        Jrot[2 * b - 2: 2 * b, 2 * b - 2: 2 * b] = _J2
    out = FourierField(field.n, field.m, field.p,
                       field.K + 2 * abs(shift))
    e1 = np.zeros(field.n, dtype=int)
    e1[0] = 1

    def shifted(k, s):
        return tuple(np.asarray(k, int) + s * e1)

    # collect all target modes
    targets = set()
    for k in field.modes():
        for s in (-2 * shift, -shift, 0, shift, 2 * shift):
            targets.add(shifted(k, s))
    for k in targets:
        jet = ModeJet.zeros(field.n, field.m, field.p)
        c0 = field.get(k)
        jet.f = c0.f.copy()
        jet.g = c0.g.copy()
        jet.g_eta = c0.g_eta.copy()
        cp = field.get(shifted(k, +shift))   # contributes via e^{-i s x1}
        cm = field.get(shifted(k, -shift))
        # left action (Rot(-s x1)): D c + E c_{k+shift} + conj(E) c_{k-shift}
        jet.h = D @ c0.h + E @ cp.h + Ec @ cm.h
        jet.h_eta = D @ c0.h_eta + E @ cp.h_eta + Ec @ cm.h_eta
        # right action by the inverse rotation Rot(+s x1):
        jet.g_zeta = c0.g_zeta @ D + cm.g_zeta @ E + cp.g_zeta @ Ec
        # both-sided action on h_zeta
        acc = np.zeros_like(jet.h_zeta)
        for sl, L in ((0, D), (+shift, E), (-shift, Ec)):
            for sr, Rm in ((0, D), (-shift, E), (+shift, Ec)):
                acc += L @ field.get(shifted(k, sl + sr)).h_zeta @ Rm
        # rotation-rate coupling: -rate * f1(x) * J_rot
        acc += -rate_term * c0.f[0] * Jrot
        jet.h_zeta = acc
        if jet.max_abs() > 0.0:
            out.coeffs[k] = jet
    return out


def vanderpol(field: FourierField, j: int, k1: int) -> FourierField:
    """Pass to the frame w = Rot(-k1*x1) z on the plane (z_{2j-1},z_{2j}).

    A resonant block with normal frequency alpha_j = k1 * omega_1 (omega_1
    = the constant part of f_1) is left with alpha_j = 0; applying again
    with -k1 restores the original field.
    """
    if not (1 <= j <= field.p):
        raise StructureError("plane index out of range")
    if k1 == 0:
        return field.copy()
    return _conjugate_field(field, field.p, (j,), shift=k1, rate_term=k1)


def lift_to_cover(field: FourierField, cov: CoveringData) -> FourierField:
    """Lift a field from the base to the l:1 cover and pass to co-rotating
    coordinates zeta = Rot(-(k1/l) xi_1) z.

    Base mode k1 becomes cover mode l*k1 (cover modes are stored in units
    of 1/l of the 2*pi*l-periodic angle); the co-rotation then shifts modes
    by +-k1 in those units.  For a normal-linear field the Floquet matrix
    becomes Omega - (k1*omega_1/l) * J_rot on the co-rotating planes.
    """
    if cov.l < 2:
        raise StructureError("lift requires covering order l >= 2")
    lifted = FourierField(field.n, field.m, field.p, field.K * cov.l)
    e1 = np.zeros(field.n, dtype=int)
    e1[0] = 1
    for k in field.modes():
        kk = tuple(np.asarray(k, int) + (cov.l - 1) * k[0] * e1)
        lifted.coeffs[kk] = field.get(k).copy()
    return _conjugate_field(lifted, field.p, cov.blocks, shift=cov.k1,
                            rate_term=cov.k1 / cov.l)


def push_down(field: FourierField, cov: CoveringData) -> FourierField:
    """Inverse of lift_to_cover; raises if the field has modes that do not
    descend (not deck-equivariant)."""
    undone = _conjugate_field(field, field.p, cov.blocks, shift=-cov.k1,
                              rate_term=-cov.k1 / cov.l)
    out = FourierField(field.n, field.m, field.p,
                       max(undone.K // cov.l, 1))
    e1 = np.zeros(field.n, dtype=int)
    e1[0] = 1
    for k in undone.modes():
        jet = undone.get(k)
        if jet.max_abs() <= 1e-13:
            continue
        if k[0] % cov.l != 0:
            raise StructureError(
                f"mode {k} does not descend through the {cov.l}:1 cover")
        kk = tuple(np.asarray(k, int) - (cov.l - 1) * (k[0] // cov.l) * e1)
        out.coeffs[kk] = jet
    return out


def lift_floquet(Omega: StructuredMatrix, omega1: float,
                 cov: CoveringData) -> np.ndarray:
    """Closed form of the lifted Floquet matrix:
    Omega_hat = Omega - (k1*omega_1/l) * J_rot."""
    return Omega.entries - (cov.k1 * omega1 / cov.l) * \
        cov.rotation_generator()


def evaluate(field: FourierField, x, y, z, angle_period: int = 1) -> tuple:
    """Numerical value (dx, dy, dz) of the field at a point; the first
    angle's modes are interpreted in units of 1/angle_period (use
    angle_period = l for fields living on an l-fold cover)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    dx = np.zeros(field.n, complex)
    dy = np.zeros(field.m, complex)
    dz = np.zeros(2 * field.p, complex)
    for k, c in field.coeffs.items():
        kk = np.asarray(k, dtype=float)
        kk[0] /= angle_period
        ph = np.exp(1j * float(kk @ x))
        dx += ph * c.f
        dy += ph * (c.g + c.g_eta @ y + c.g_zeta @ z)
        dz += ph * (c.h + c.h_eta @ y + c.h_zeta @ z)
    return np.real(dx), np.real(dy), np.real(dz)


def pushforward_defect(field_cover: FourierField, field_base: FourierField,
                       cov: CoveringData, points) -> float:
    """max over sample points of |Pi_* X_hat - X| evaluated numerically."""
    worst = 0.0
    rate = cov.k1 / cov.l
    Jrot = cov.rotation_generator()
    for (x, y, z) in points:
        dx, dy, dz = evaluate(field_cover, x, y, z, angle_period=cov.l)
        T = cov.rotation(rate * x[0])
        bx, by, bz = cov.project((x, y, z))
        ex, ey, ez = evaluate(field_base, bx, by, bz)
        push_z = rate * Jrot @ T @ z * dx[0] + T @ dz
        worst = max(worst,
                    float(np.max(np.abs(dx - ex))),
                    float(np.max(np.abs(dy - ey))) if len(dy) else 0.0,
                    float(np.max(np.abs(push_z - ez))))
    return worst


def check_sigma_reversibility(field: FourierField,
                              structure: ReversingStructure,
                              rng=None) -> dict:
    """Verdict record for the full symmetry group: G-reversibility of the
    coefficients, twist equivariance when a twist is present, and the
    vanishing of the x-averaged y-component on Fix(R) and Fix(S R)."""
    rng = rng or np.random.default_rng(0)
    rec = {"reversibility_defect":
           _fourier.reversibility_defect(field, structure)}
    if structure.twist is not None and structure.twist_order >= 2:
        viol = _fourier.twist_equivariance_report(field, structure)
        rec["twist_violations"] = viol
        rec["twist_defect"] = max((v[2] for v in viol), default=0.0)
    g_worst = 0.0
    c0 = field.get((0,) * field.n)
    spaces = [structure.fix_plus_basis()]
    if structure.twist is not None:
        from .revlin import _fixed_space_basis
        spaces.append(_fixed_space_basis(structure.twist @ structure.R, +1))
    for B in spaces:
        for _ in range(20):
            yv = rng.standard_normal(field.m)
            zv = B @ rng.standard_normal(B.shape[1]) if B.shape[1] else \
                np.zeros(2 * field.p)
            val = c0.g + c0.g_eta @ yv + c0.g_zeta @ zv
            if val.size:
                g_worst = max(g_worst, float(np.max(np.abs(val))))
    rec["g_on_fixed_spaces"] = g_worst
    rec["ok"] = (rec["reversibility_defect"] < 1e-9
                 and rec.get("twist_defect", 0.0) < 1e-9
                 and g_worst < 1e-9)
    return rec

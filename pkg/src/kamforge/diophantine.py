"""Diophantine condition checking, Mel'nikov resonance detection and
Monte-Carlo estimation of the measure of the Diophantine parameter set.

The condition |<k,omega> + <l,alpha>| >= gamma |k|^-tau is tested over the
finite truncation 0 < |k|_1 <= K and |l|_1 <= 2; verdicts are explicitly
truncated verdicts, margins for |k| > K are not certified.  |k| uses the
1-norm throughout (the choice is configurable).

Monte-Carlo sampling uses a SplitMix64 stream (the 64-bit generator with
increment 0x9E3779B97F4A7C15 and the usual two xor-multiply finalizer
rounds), so the sampled points and the resulting fraction are
bit-reproducible across platforms for a fixed seed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .revlin import LinearUnfolding, StructureError, normal_frequencies

KIND_INTERNAL = "internal"
KIND_FIRST = "first_melnikov"
KIND_SUM_DIFF = "sum_difference"
KIND_DOUBLING = "doubling"


@dataclass(eq=False)
class DiophantineSpec:
    gamma: float
    tau: float
    K: int
    ell_max: int = 2

    def validate(self, n: int) -> None:
        if self.gamma <= 0:
            raise StructureError("gamma must be positive")
        if self.tau <= n - 1:
            raise StructureError(f"tau must exceed n-1 = {n - 1}")
        if self.K < 1:
            raise StructureError("truncation order K must be >= 1")
        if self.ell_max != 2:
            raise StructureError("the Melnikov range is fixed to |l| <= 2")


@dataclass(eq=False)
class ResonanceReport:
    k: tuple
    ell: tuple
    value: float
    kind: str


@dataclass(eq=False)
class DiophantineVerdict:
    satisfied: bool
    margin: float          # min over the truncation of |res| - gamma |k|^-tau
    worst_k: tuple
    worst_ell: tuple
    truncated: bool = True  # verdicts only cover |k| <= K

    def __bool__(self) -> bool:
        return self.satisfied


def classify_ell(ell) -> str:
    """Resonance type from the structure of the normal multi-index."""
    ell = np.asarray(ell, dtype=int)
    nz = np.nonzero(ell)[0]
    total = int(np.sum(np.abs(ell)))
    if total == 0:
        return KIND_INTERNAL
    if total == 1:
        return KIND_FIRST
    if total == 2 and len(nz) == 1:
        return KIND_DOUBLING
    if total == 2 and len(nz) == 2:
        return KIND_SUM_DIFF
    raise StructureError(f"|ell| = {total} outside the Melnikov range")


def _k_lattice(n: int, K: int) -> np.ndarray:
    """All k with 0 < |k|_1 <= K and first nonzero entry positive (one
    representative per +-k pair)."""
    out = []
    for k in itertools.product(range(-K, K + 1), repeat=n):
        if sum(abs(c) for c in k) == 0 or sum(abs(c) for c in k) > K:
            continue
        for c in k:
            if c != 0:
                if c > 0:
                    out.append(k)
                break
    return np.array(out, dtype=int)


def _ell_lattice(dim: int) -> np.ndarray:
    """All l in Z^dim with |l|_1 <= 2 (including l = 0)."""
    out = [np.zeros(dim, dtype=int)]
    for i in range(dim):
        for s in (+1, -1):
            e = np.zeros(dim, dtype=int)
            e[i] = s
            out.append(e.copy())
            e[i] = 2 * s
            out.append(e)
    for i in range(dim):
        for j in range(i + 1, dim):
            for si, sj in itertools.product((+1, -1), repeat=2):
                e = np.zeros(dim, dtype=int)
                e[i], e[j] = si, sj
                out.append(e)
    return np.array(out, dtype=int)


@dataclass(eq=False)
class _Tables:
    """Precomputed lattices for repeated checks with fixed (n, dim, K)."""
    ks: np.ndarray
    ells: np.ndarray
    bounds_scale: np.ndarray  # |k|_1^-tau column, filled per spec

    @classmethod
    def build(cls, n: int, dim: int, K: int, tau: float) -> "_Tables":
        ks = _k_lattice(n, K)
        ells = _ell_lattice(dim)
        knorm = np.sum(np.abs(ks), axis=1).astype(float)
        return cls(ks=ks, ells=ells, bounds_scale=knorm ** (-tau))


_table_cache: dict = {}


def _tables(n: int, dim: int, K: int, tau: float) -> _Tables:
    key = (n, dim, K, tau)
    if key not in _table_cache:
        _table_cache[key] = _Tables.build(n, dim, K, tau)
    return _table_cache[key]


def dioph_check(omega, alpha, spec: DiophantineSpec) -> DiophantineVerdict:
    """Exhaustive truncated test of the Diophantine inequality.

    Returns the worst margin |<k,omega> + <l,alpha>| - gamma |k|^-tau over
    the truncation together with the (k, l) attaining it.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    alpha = np.asarray(alpha, dtype=float).reshape(-1)
    n = len(omega)
    spec.validate(n)
    t = _tables(n, len(alpha), spec.K, spec.tau)
    komega = t.ks @ omega
    lalpha = t.ells @ alpha if len(alpha) else np.zeros(1)
    res = np.abs(komega[:, None] + lalpha[None, :])
    margins = res - spec.gamma * t.bounds_scale[:, None]
    flat = int(np.argmin(margins))
    i, j = np.unravel_index(flat, margins.shape)
    worst = float(margins[i, j])
    return DiophantineVerdict(
        satisfied=bool(worst >= 0.0),
        margin=worst,
        worst_k=tuple(int(c) for c in t.ks[i]),
        worst_ell=tuple(int(c) for c in t.ells[j]))


def detect_resonances(omega, alpha, tol: float, K: int) -> list[ResonanceReport]:
    """All (k, l) pairs with |<k,omega> + <l,alpha>| <= tol, classified and
    sorted by |residual|, then |k|_1."""
    if tol <= 0:
        raise StructureError("tol must be positive")
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    alpha = np.asarray(alpha, dtype=float).reshape(-1)
    t = _tables(len(omega), len(alpha), K, 1.0)
    komega = t.ks @ omega
    lalpha = t.ells @ alpha if len(alpha) else np.zeros(1)
    res = komega[:, None] + lalpha[None, :]
    hits = np.argwhere(np.abs(res) <= tol)
    reports = [ResonanceReport(
        k=tuple(int(c) for c in t.ks[i]),
        ell=tuple(int(c) for c in t.ells[j]),
        value=float(res[i, j]),
        kind=classify_ell(t.ells[j])) for i, j in hits]
    reports.sort(key=lambda r: (abs(r.value), sum(abs(c) for c in r.k)))
    return reports


# -- reproducible sampling -------------------------------------------------

_MASK = (1 << 64) - 1


class SplitMix64:
    """Deterministic 64-bit stream; documented constants, bit-reproducible."""

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        u = self.next_u64() >> 11  # 53 random bits
        return lo + (hi - lo) * (u * 2.0 ** -53)


@dataclass(eq=False)
class MeasureEstimate:
    fraction: float
    ci_low: float
    ci_high: float
    samples: int
    hits: int
    rows: list = field(default_factory=list)  # per-sample CSV rows


def measure_estimate(box, unfolding: LinearUnfolding | None,
                     spec: DiophantineSpec, samples: int, seed: int,
                     keep_rows: bool = False) -> MeasureEstimate:
    """Monte-Carlo fraction of a parameter box lying in the Diophantine set.

    `box` is a list of (lo, hi) intervals: the first n for omega, the rest
    for the unfolding parameters mu.  The normal frequencies are those of
    Omega(mu).  Deterministic for a fixed seed; the per-sample work is pure
    so samples may be evaluated in any order.
    """
    if samples < 100:
        raise StructureError("need at least 100 samples")
    box = [(float(lo), float(hi)) for lo, hi in box]
    for lo, hi in box:
        if not hi > lo:
            raise StructureError("degenerate sampling box")
    c = unfolding.codimension if unfolding is not None else 0
    n = len(box) - c
    if n < 1:
        raise StructureError("box must cover at least the frequency vector")
    gen = SplitMix64(seed)
    hits = 0
    rows = []
    for _ in range(samples):
        point = np.array([gen.uniform(lo, hi) for lo, hi in box])
        omega, mu = point[:n], point[n:]
        if unfolding is not None:
            alpha = normal_frequencies(unfolding(mu))
        else:
            alpha = np.zeros(0)
        v = dioph_check(omega, alpha, spec)
        hits += bool(v)
        if keep_rows:
            rows.append(list(point) + [int(bool(v)), v.worst_k, v.worst_ell,
                                       v.margin])
    frac = hits / samples
    # normal-approximation binomial interval (3 sigma)
    sig = np.sqrt(max(frac * (1.0 - frac), 1e-12) / samples)
    return MeasureEstimate(fraction=frac,
                           ci_low=max(0.0, frac - 3 * sig),
                           ci_high=min(1.0, frac + 3 * sig),
                           samples=samples, hits=hits, rows=rows)

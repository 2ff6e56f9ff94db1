import itertools

import numpy as np
import pytest

from kamforge.diophantine import (KIND_DOUBLING, KIND_FIRST, KIND_INTERNAL,
                                  KIND_SUM_DIFF, DiophantineSpec, SplitMix64,
                                  classify_ell, detect_resonances,
                                  dioph_check, measure_estimate)
from kamforge.revlin import (MINUS, StructuredMatrix, StructureError,
                             canonical_structure, lcu, normal_frequencies,
                             random_structured)

from conftest import GOLDEN


def brute_force_margin(omega, alpha, spec):
    """Independent double-loop oracle for the worst truncated margin."""
    n = len(omega)
    worst = np.inf
    ells = [np.zeros(len(alpha), dtype=int)]
    for i in range(len(alpha)):
        for s in (1, -1):
            e = np.zeros(len(alpha), dtype=int)
            e[i] = s
            ells.append(e.copy())
            e[i] = 2 * s
            ells.append(e.copy())
    for i, j2 in itertools.combinations(range(len(alpha)), 2):
        for si, sj in itertools.product((1, -1), repeat=2):
            e = np.zeros(len(alpha), dtype=int)
            e[i], e[j2] = si, sj
            ells.append(e)
    for k in itertools.product(range(-spec.K, spec.K + 1), repeat=n):
        norm = sum(abs(c) for c in k)
        if norm == 0 or norm > spec.K:
            continue
        for ell in ells:
            val = abs(np.dot(k, omega) + np.dot(ell, alpha))
            worst = min(worst, val - spec.gamma * norm ** (-spec.tau))
    return worst


def test_golden_mean_satisfied():
    spec = DiophantineSpec(gamma=0.1, tau=1.5, K=50)
    omega = np.array([1.0, GOLDEN])
    v = dioph_check(omega, np.zeros(0), spec)
    assert v.satisfied and v.truncated
    oracle = brute_force_margin(omega, np.zeros(0),
                                DiophantineSpec(0.1, 1.5, 12))
    # margins over the smaller truncation agree with the brute-force oracle
    v12 = dioph_check(omega, np.zeros(0), DiophantineSpec(0.1, 1.5, 12))
    assert abs(v12.margin - oracle) < 1e-14


def test_rational_frequency_violated():
    spec = DiophantineSpec(gamma=0.01, tau=1.5, K=10)
    v = dioph_check(np.array([1.0, 0.5]), np.zeros(0), spec)
    assert not v.satisfied
    # the worst pair is the exact resonance k = (1, -2)
    assert v.worst_k in ((1, -2), (-1, 2))
    assert abs(np.dot(v.worst_k, [1.0, 0.5])) < 1e-15


def test_melnikov_resonance_detected():
    # alpha_j = <k, omega>: a first Melnikov resonance by construction
    omega = np.array([1.0, GOLDEN])
    alpha = np.array([np.dot([2, 1], omega)])
    spec = DiophantineSpec(gamma=1e-3, tau=1.5, K=10)
    v = dioph_check(omega, alpha, spec)
    assert not v.satisfied
    assert abs(sum(abs(c) for c in v.worst_ell)) == 1


def test_coupled_planes_double_resonance():
    # both a doubling and a sum-difference resonance at the same k
    omega = np.array([2.0, GOLDEN])
    alpha = np.array([-1.0, -1.0, 1.0, 1.0])
    reports = detect_resonances(omega, alpha, tol=1e-12, K=5)
    kinds = {(r.k, r.kind) for r in reports}
    assert ((1, 0), KIND_DOUBLING) in kinds
    assert ((1, 0), KIND_SUM_DIFF) in kinds


def test_detect_resonances_sorted():
    omega = np.array([1.0, 0.5])
    reports = detect_resonances(omega, np.zeros(0), tol=0.3, K=4)
    vals = [abs(r.value) for r in reports]
    assert vals == sorted(vals)
    assert all(r.kind == KIND_INTERNAL for r in reports)


def test_classify_ell():
    assert classify_ell((0, 0)) == KIND_INTERNAL
    assert classify_ell((1, 0)) == KIND_FIRST
    assert classify_ell((0, -1)) == KIND_FIRST
    assert classify_ell((2, 0)) == KIND_DOUBLING
    assert classify_ell((1, -1)) == KIND_SUM_DIFF
    with pytest.raises(StructureError):
        classify_ell((2, 1))


def test_spec_validation():
    with pytest.raises(StructureError):
        DiophantineSpec(gamma=-1.0, tau=1.5, K=5).validate(2)
    with pytest.raises(StructureError):
        DiophantineSpec(gamma=0.1, tau=0.5, K=5).validate(2)  # tau <= n-1
    with pytest.raises(StructureError):
        DiophantineSpec(gamma=0.1, tau=1.5, K=0).validate(2)


def test_margin_monotone_in_gamma():
    omega = np.array([1.0, GOLDEN])
    margins = [dioph_check(omega, np.zeros(0),
                           DiophantineSpec(g, 1.5, 20)).margin
               for g in (1e-4, 1e-3, 1e-2, 1e-1)]
    assert all(a >= b for a, b in zip(margins, margins[1:]))


def test_splitmix64_reference_vector():
    # published reference outputs for seed 0
    g = SplitMix64(0)
    assert [g.next_u64() for _ in range(3)] == [
        0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


def test_splitmix64_uniform_range_and_determinism():
    a = SplitMix64(42)
    b = SplitMix64(42)
    xs = [a.uniform(-1.0, 3.0) for _ in range(1000)]
    ys = [b.uniform(-1.0, 3.0) for _ in range(1000)]
    assert xs == ys
    assert all(-1.0 <= x < 3.0 for x in xs)
    assert abs(np.mean(xs) - 1.0) < 0.2


def test_measure_estimate_reproducible():
    spec = DiophantineSpec(gamma=1e-3, tau=1.5, K=10)
    box = [(1.0, 2.0), (0.3, 0.9)]
    e1 = measure_estimate(box, None, spec, samples=200, seed=9)
    e2 = measure_estimate(box, None, spec, samples=200, seed=9)
    assert e1.fraction == e2.fraction and e1.hits == e2.hits
    assert 0.0 <= e1.ci_low <= e1.fraction <= e1.ci_high <= 1.0


def test_measure_estimate_with_unfolding_rows():
    rng = np.random.default_rng(4)
    st = canonical_structure(1)
    unf = lcu(StructuredMatrix(st.matrix(np.array([1.0, -1.0]), MINUS),
                               MINUS, st))
    spec = DiophantineSpec(gamma=1e-4, tau=1.5, K=8)
    box = [(1.0, 2.0), (0.3, 0.9)] + [(-0.1, 0.1)] * unf.codimension
    est = measure_estimate(box, unf, spec, samples=150, seed=1,
                           keep_rows=True)
    assert len(est.rows) == 150
    assert len(est.rows[0]) == len(box) + 4


def test_measure_estimate_validation():
    spec = DiophantineSpec(gamma=1e-3, tau=1.5, K=5)
    with pytest.raises(StructureError):
        measure_estimate([(0.0, 1.0)], None, spec, samples=10, seed=0)
    with pytest.raises(StructureError):
        measure_estimate([(1.0, 1.0)], None, spec, samples=200, seed=0)

import itertools

import numpy as np
import pytest

from mpmcmc.core import ContractError, DegenerateChainError, EnumerationSizeError
from mpmcmc.exact import (
    KernelMatrix,
    build_exact_kernel,
    conductance,
    detailed_balance_check,
    gap_domination_check,
    peskun_check,
    random_reversible_chain,
    read_matrix_csv,
    scale_off_diagonal,
    spectral_gap,
    write_matrix_csv,
)
from mpmcmc.samplers import GMH, MH, MTM, SamplerSpec
from mpmcmc.selection import LOCALLY_BALANCED_SQRT, WeightRule
from mpmcmc.stencil import StencilProposal
from mpmcmc.targets import DiscreteTarget

MASSES = [1.0, 2.5, 1.5, 3.0, 2.0]


def two_state(a, b):
    return KernelMatrix.from_matrix([[1 - a, a], [b, 1 - b]])


def test_two_state_mh_closed_form():
    # offset +1 has probability 0.2; accepted surely uphill, with prob 1/3 downhill
    t = DiscreteTarget.from_masses([1.0, 3.0])
    km = build_exact_kernel(SamplerSpec(MH, StencilProposal("iid", 1), t), t)
    np.testing.assert_allclose(km.P, [[0.8, 0.2], [0.2 / 3, 1 - 0.2 / 3]], atol=1e-15)


def test_mtm_single_candidate_equals_mh():
    t = DiscreteTarget.from_masses(MASSES)
    mh = build_exact_kernel(SamplerSpec(MH, StencilProposal("iid", 1), t), t)
    for rule in (WeightRule(), WeightRule(LOCALLY_BALANCED_SQRT)):
        mtm = build_exact_kernel(SamplerSpec(MTM, StencilProposal("iid", 1), t, rule), t)
        np.testing.assert_allclose(mtm.P, mh.P, atol=1e-12, rtol=0)


@pytest.mark.parametrize("algorithm,kind,K", [(MTM, "iid", 2), (MTM, "antithetic", 3), (MTM, "star", 2),
                                              (GMH, "star", 3), (MTM, "iid", 3)])
def test_built_kernels_are_stochastic_and_reversible(algorithm, kind, K):
    t = DiscreteTarget.from_masses(MASSES)
    km = build_exact_kernel(SamplerSpec(algorithm, StencilProposal(kind, K), t), t)
    assert km.row_sum_defect() <= 1e-12
    assert km.P.min() >= 0.0
    assert km.stationarity_defect() <= 1e-10
    assert detailed_balance_check(km)


def test_spectral_gap_examples():
    assert spectral_gap(two_state(0.5, 0.5)) == pytest.approx(1.0, abs=1e-12)
    assert spectral_gap(two_state(0.2, 0.3)) == pytest.approx(0.5, abs=1e-12)
    assert spectral_gap(KernelMatrix.from_matrix(np.eye(2), [0.5, 0.5])) == pytest.approx(0.0, abs=1e-12)


def test_gap_scales_with_move_probability():
    rng = np.random.default_rng(0)
    for c in (0.1, 0.37, 0.9):
        km = random_reversible_chain(6, rng, laziness=0.5)
        assert spectral_gap(scale_off_diagonal(km, c)) == pytest.approx(c * spectral_gap(km), abs=1e-10)


def test_non_reversible_is_rejected():
    cyc = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    km = KernelMatrix.from_matrix(0.5 * np.eye(3) + 0.5 * cyc)
    res = detailed_balance_check(km)
    assert not res and res.where is not None
    with pytest.raises(ContractError):
        spectral_gap(km)


def test_balance_detects_small_perturbation():
    km = random_reversible_chain(5, np.random.default_rng(1))
    P = km.P.copy()
    P[0, 1] += 1e-6
    P[0, 0] -= 1e-6
    res = detailed_balance_check(KernelMatrix(km.states, P, km.stationary))
    assert not res and set(res.where) == {0, 1}


def test_peskun_identical_kernels():
    km = random_reversible_chain(4, np.random.default_rng(2))
    assert peskun_check(km, km, 1)


def test_peskun_violation_reports_pair():
    base = two_state(0.1, 0.1)
    big = two_state(0.5, 0.1)
    res = peskun_check(big, base, 2)
    assert not res and res.where == (0, 1)


def test_gap_domination_degenerate_baseline():
    flat = KernelMatrix.from_matrix(np.eye(2), [0.5, 0.5])
    with pytest.raises(DegenerateChainError):
        gap_domination_check(two_state(0.5, 0.5), flat, 2)


def test_conductance_examples():
    assert conductance(two_state(0.2, 0.3)).phi == pytest.approx(0.3, abs=1e-12)
    c = conductance(two_state(0.25, 0.25))
    assert c.phi == pytest.approx(0.25, abs=1e-12)


def _brute_conductance(km):
    n, best = km.size, np.inf
    for r in range(1, n):
        for A in itertools.combinations(range(n), r):
            mass = km.stationary[list(A)].sum()
            if mass <= 0.5 + 1e-15:
                B = [j for j in range(n) if j not in A]
                flow = (km.stationary[list(A), None] * km.P[np.ix_(A, B)]).sum()
                best = min(best, flow / mass)
    return best


def test_conductance_matches_brute_force_and_cheeger():
    rng = np.random.default_rng(3)
    for _ in range(100):
        km = random_reversible_chain(int(rng.integers(2, 7)), rng, laziness=float(rng.random()))
        c = conductance(km, chunk=7)
        assert c.phi == pytest.approx(_brute_conductance(km), abs=1e-12)
        assert spectral_gap(km) <= 2 * c.phi + 1e-12


def test_size_guards():
    t = DiscreteTarget.from_masses(MASSES)
    with pytest.raises(EnumerationSizeError):
        build_exact_kernel(SamplerSpec(MTM, StencilProposal("iid", 6), t), t)
    with pytest.raises(EnumerationSizeError):
        conductance(random_reversible_chain(26, np.random.default_rng(0)))


def test_matrix_csv_roundtrip(tmp_path):
    t = DiscreteTarget.from_masses(MASSES, start=3)
    km = build_exact_kernel(SamplerSpec(GMH, StencilProposal("star", 2), t), t)
    write_matrix_csv(km, tmp_path / "p.csv")
    back = read_matrix_csv(tmp_path / "p.csv")
    assert back.states == km.states
    np.testing.assert_array_equal(back.P, km.P)
    np.testing.assert_array_equal(back.stationary, km.stationary)

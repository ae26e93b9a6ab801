import math

import numpy as np
import pytest

from mpmcmc.core import InvalidConfigurationError, InvalidStateError, TargetModel
from mpmcmc.proposals import ANTITHETIC, IID, LANGEVIN, SIMPLICIAL, STAR, ProposalFamily
from mpmcmc.rng import ChainStreams
from mpmcmc.samplers import (
    GMH,
    MH,
    MTM,
    ChainStepError,
    EvaluationPool,
    SamplerSpec,
    mh_baseline_mixture,
    run_chain,
    step,
)
from mpmcmc.selection import LOCALLY_BALANCED_SQRT, WeightRule
from mpmcmc.stencil import StencilProposal
from mpmcmc.targets import DiscreteTarget, gaussian_target

MASSES = [1.0, 2.5, 1.5, 3.0, 2.0]


def test_mh_needs_one_candidate():
    with pytest.raises(InvalidConfigurationError):
        SamplerSpec(MH, ProposalFamily(IID, 1.0, 2), gaussian_target(1))


def test_evals_per_iteration():
    t = gaussian_target(3)
    assert SamplerSpec(MTM, ProposalFamily(IID, 1.0, 8), t).evals_per_iteration() == 15
    assert SamplerSpec(GMH, ProposalFamily(STAR, 1.0, 8), t).evals_per_iteration() == 8
    assert SamplerSpec(MH, ProposalFamily(IID, 1.0, 1), t).evals_per_iteration() == 1


@pytest.mark.parametrize("algorithm,kind,K", [(MTM, IID, 4), (MTM, ANTITHETIC, 3), (MTM, STAR, 2),
                                              (GMH, STAR, 4), (GMH, SIMPLICIAL, 3), (MH, IID, 1)])
def test_budget_matches_declared_count(algorithm, kind, K):
    spec = SamplerSpec(algorithm, ProposalFamily(kind, 0.8, K), gaussian_target(3))
    tr = run_chain(spec, np.zeros(3), 200, 5)
    assert tr.budget.density_evals == 200 * spec.evals_per_iteration()
    assert tr.budget.gradient_evals == 0


def test_langevin_gradient_counts():
    t = gaussian_target(2)
    mala = SamplerSpec(MH, ProposalFamily(LANGEVIN, 0.5, 1), t)
    assert run_chain(mala, np.zeros(2), 50, 1).budget.gradient_evals == 100
    corrected = SamplerSpec(MTM, ProposalFamily(LANGEVIN, 0.5, 4), t, WeightRule(proposal_corrected=True))
    assert run_chain(corrected, np.zeros(2), 50, 1).budget.gradient_evals == 50 * 8
    plain = SamplerSpec(MTM, ProposalFamily(LANGEVIN, 0.5, 4), t)
    assert run_chain(plain, np.zeros(2), 50, 1).budget.gradient_evals == 50 * 2


def test_next_state_is_current_or_candidate():
    spec = SamplerSpec(MTM, ProposalFamily(ANTITHETIC, 1.0, 4), gaussian_target(2))
    src = ChainStreams(9)
    x = np.zeros(2)
    for t in range(300):
        res = step(spec, x, src.iteration(t))
        options = np.vstack([x, res.candidates])
        assert np.any(np.all(options == res.state, axis=1))
        assert np.array_equal(options[res.index], res.state)
        x = res.state


def test_one_step_chain_equals_step():
    spec = SamplerSpec(MTM, ProposalFamily(IID, 1.0, 3), gaussian_target(2))
    x0 = np.array([0.5, -0.5])
    tr = run_chain(spec, x0, 1, 42)
    res = step(spec, x0, ChainStreams(42).iteration(0))
    np.testing.assert_array_equal(tr.states[1], res.state)
    assert tr.selected_index[0] == res.index


def test_mtm_single_candidate_reproduces_mh_trajectory():
    t = gaussian_target(2)
    mh = run_chain(SamplerSpec(MH, ProposalFamily(IID, 1.2, 1), t), np.zeros(2), 500, 3)
    for rule in (WeightRule(), WeightRule(LOCALLY_BALANCED_SQRT)):
        mtm = run_chain(SamplerSpec(MTM, ProposalFamily(IID, 1.2, 1), t, rule), np.zeros(2), 500, 3)
        np.testing.assert_array_equal(mh.states, mtm.states)


def test_seed_determinism_and_pool_invariance():
    spec = SamplerSpec(MTM, ProposalFamily(IID, 0.7, 40), gaussian_target(4))
    a = run_chain(spec, np.zeros(4), 100, 7)
    b = run_chain(spec, np.zeros(4), 100, 7)
    with EvaluationPool(3, chunk_size=4) as pool:
        c = run_chain(spec, np.zeros(4), 100, 7, pool=pool)
    np.testing.assert_array_equal(a.states, b.states)
    np.testing.assert_array_equal(a.states, c.states)
    assert not np.array_equal(a.states, run_chain(spec, np.zeros(4), 100, 8).states)


def test_small_step_acceptance():
    tr = run_chain(SamplerSpec(MH, ProposalFamily(IID, 1e-3, 1), gaussian_target(1)), np.zeros(1), 10_000, 0)
    assert tr.acceptance_rate() > 0.99


def test_start_outside_support():
    t = DiscreteTarget.from_masses(MASSES)
    spec = SamplerSpec(MH, StencilProposal("iid", 1), t)
    with pytest.raises(InvalidStateError):
        step(spec, np.array([10.0]), np.random.default_rng(0))


def test_step_error_carries_iteration():
    t = TargetModel(1, lambda x: math.nan if x[0] > 3 else -0.5 * x[0] ** 2)
    spec = SamplerSpec(MH, ProposalFamily(IID, 2.0, 1), t)
    with pytest.raises(ChainStepError) as info:
        run_chain(spec, np.zeros(1), 10_000, 0)
    assert info.value.iteration >= 0


def test_baseline_mixture():
    t = gaussian_target(2)
    base = mh_baseline_mixture(SamplerSpec(MTM, ProposalFamily(ANTITHETIC, 0.4, 6), t))
    assert base.algorithm == MH and base.proposal == ProposalFamily(IID, 0.4, 1)


@pytest.mark.slow
@pytest.mark.parametrize("algorithm,kind", [(MTM, "antithetic"), (GMH, "star")])
def test_stationary_histogram(algorithm, kind):
    t = DiscreteTarget.from_masses(MASSES)
    spec = SamplerSpec(algorithm, StencilProposal(kind, 2), t)
    tr = run_chain(spec, np.array([2.0]), 1_000_000, np.random.default_rng(17))
    idx = tr.states[1:, 0].astype(int)
    freq = np.bincount(idx, minlength=5) / len(idx)
    assert 0.5 * np.abs(freq - t.probabilities).sum() <= 0.01

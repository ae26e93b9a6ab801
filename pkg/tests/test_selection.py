import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mpmcmc.core import CandidateSet, CapabilityError, EvalBudget, SelectionProbabilities, validate_selection
from mpmcmc.proposals import IID, ProposalFamily
from mpmcmc.selection import (
    CUSTOM_G,
    GLOBALLY_BALANCED,
    LOCALLY_BALANCED_SQRT,
    WeightRule,
    gmh_condition_check,
    gmh_probabilities,
    gmh_rule,
    mh_acceptance,
    mtm_acceptance,
    mtm_select_and_accept,
    normalized_weights,
)
from mpmcmc.stencil import StencilProposal
from mpmcmc.targets import DiscreteTarget, gaussian_target


def _cs(lp_x, lp_y):
    lp_y = np.asarray(lp_y, dtype=float)
    return CandidateSet(np.zeros(1), lp_x, np.arange(1, len(lp_y) + 1, dtype=float)[:, None], lp_y)


def test_sqrt_rule_is_balanced():
    assert WeightRule(LOCALLY_BALANCED_SQRT).balance_defect() <= 1e-12


def test_barker_custom_rule_is_balanced():
    barker = WeightRule(CUSTOM_G, g=lambda t: t / (1.0 + t))
    assert barker.balance_defect() <= 1e-12
    assert WeightRule(CUSTOM_G, g=lambda t: 1.0).balance_defect() > 0.5


def test_globally_balanced_weights():
    w = normalized_weights(WeightRule(GLOBALLY_BALANCED).log_weights(0.0, np.log([1.0, 3.0])))
    np.testing.assert_allclose(w, [0.25, 0.75], atol=1e-15)


def test_mtm_acceptance_hand_case():
    # pi(x)=1, pi(y1)=2, pi(y2)=1, shadow pi=4: forward 2/3, reverse (1/2)/(1/2+2) = 0.2
    cs = _cs(0.0, [math.log(2.0), 0.0])
    a = mtm_acceptance(cs, 0, None, WeightRule(), shadow_logpi=[math.log(4.0)], log_q_ratio=0.0)
    assert a == pytest.approx(0.6, abs=1e-15)


def test_mtm_k1_is_mh_bitwise():
    rng = np.random.default_rng(0)
    for _ in range(200):
        lp_x, lp_y, lqr = rng.normal(size=3) * 3
        cs = _cs(lp_x, [lp_y])
        for rule in (GLOBALLY_BALANCED, LOCALLY_BALANCED_SQRT):
            a = mtm_acceptance(cs, 0, None, WeightRule(rule), shadow_logpi=[], log_q_ratio=lqr)
            assert a == mh_acceptance(lp_x, lp_y, lqr)


def test_weights_invariant_to_log_density_shift():
    # dyadic values keep every subtraction exact, so shifting log pi by a constant
    # must leave the normalized weights and the acceptance bit-for-bit unchanged
    lp_x, lp_y, sh = 0.25, np.array([1.5, -0.75, 2.0]), np.array([0.5, -1.25])
    for rule in (GLOBALLY_BALANCED, LOCALLY_BALANCED_SQRT):
        wr = WeightRule(rule)
        base = normalized_weights(wr.log_weights(lp_x, lp_y))
        a0 = mtm_acceptance(_cs(lp_x, lp_y), 2, None, wr, shadow_logpi=sh, log_q_ratio=0.0)
        for c in (8.0, -64.0, 1024.0):
            shifted = normalized_weights(wr.log_weights(lp_x + c, lp_y + c))
            assert np.array_equal(base, shifted)
            a1 = mtm_acceptance(_cs(lp_x + c, lp_y + c), 2, None, wr, shadow_logpi=sh + c, log_q_ratio=0.0)
            assert a0 == a1


def test_gmh_probabilities_hand_case():
    p = gmh_probabilities(_cs(0.0, np.log([2.0, 1.0])))
    assert p.stay == pytest.approx(0.25)
    np.testing.assert_allclose(p.move, [0.5, 0.25])


def test_gmh_rejects_non_exchangeable():
    with pytest.raises(CapabilityError):
        gmh_probabilities(_cs(0.0, [0.0]), ProposalFamily(IID, 1.0, 1))


@settings(max_examples=300, deadline=None)
@given(st.floats(-50, 50), st.lists(st.one_of(st.floats(-50, 50), st.just(-math.inf)), min_size=1, max_size=8))
def test_gmh_mass_conservation(lp_x, lp_y):
    res = validate_selection(gmh_probabilities(_cs(lp_x, lp_y)))
    assert res, res.detail


def test_gmh_condition_holds_for_star():
    t = DiscreteTarget.from_masses([1.0, 2.5, 1.5, 3.0, 2.0])
    for K in (1, 2, 3):
        res = gmh_condition_check(gmh_rule(t), t, StencilProposal("star", K))
        assert res, res.detail


def test_gmh_condition_fails_for_iid():
    t = DiscreteTarget.from_masses([1.0, 2.5, 1.5, 3.0, 2.0])
    res = gmh_condition_check(gmh_rule(t), t, StencilProposal("iid", 2))
    assert not res and res.where is not None


def test_select_and_accept_budget_and_index():
    t = gaussian_target(2)
    pf = ProposalFamily(IID, 0.5, 4)
    rng = np.random.default_rng(3)
    x = np.zeros(2)
    ys = pf.draw(x, rng).candidates
    cs = CandidateSet(x, t.log_density(x), ys, t.logpdf_many(ys))
    b = EvalBudget()
    out = mtm_select_and_accept(cs, WeightRule(), pf, rng, target=t, budget=b)
    assert b.density_evals == 3
    assert out.index in (0, out.selected + 1)
    assert out.shadows.shape == (3, 2)


def test_selection_probabilities_as_array():
    assert SelectionProbabilities(0.5, np.array([0.5])).as_array().tolist() == [0.5, 0.5]

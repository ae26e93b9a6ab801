import math
from collections import Counter

import numpy as np
import pytest

from mpmcmc.core import InvalidConfigurationError
from mpmcmc.stencil import StencilProposal


def test_iid_joint_is_product():
    off, p = StencilProposal("iid", 2).joint()
    assert len(off) == 25
    assert math.fsum(p) == pytest.approx(1.0, abs=1e-15)
    row = [i for i, o in enumerate(off) if tuple(o) == (-2, 1)][0]
    assert p[row] == pytest.approx(0.1 * 0.2, abs=1e-15)


def test_antithetic_joint_sums_to_zero():
    off, p = StencilProposal("antithetic", 2).joint()
    assert np.all(off.sum(axis=1) == 0)
    table = {tuple(o): q for o, q in zip(off, p)}
    assert table[(0, 0)] == pytest.approx(0.16 / 0.26, abs=1e-15)
    assert table[(-2, 2)] == pytest.approx(0.01 / 0.26, abs=1e-15)


def test_star_marginal_is_convolution():
    pf = StencilProposal("star", 3)
    np.testing.assert_allclose(pf.marginal_pmf, np.array([1, 4, 6, 4, 1]) / 16, atol=1e-15)
    assert pf.exchangeable and pf.symmetric


def test_star_shadow_table_hand_case():
    # first offset = 2 forces u = 1 and e_1 = 1; the other is 1 + e with e in {-1, 0, 1}
    rest, p = StencilProposal("star", 2).shadow_table(0, 2)
    table = {int(r[0]): q for r, q in zip(rest, p)}
    assert table == pytest.approx({0: 0.25, 1: 0.5, 2: 0.25})


def test_shadow_table_empty_for_unreachable():
    rest, p = StencilProposal("iid", 2).shadow_table(1, 3)
    assert len(p) == 0


def test_antithetic_requires_two():
    with pytest.raises(InvalidConfigurationError):
        StencilProposal("antithetic", 1)


def test_only_integer_line():
    with pytest.raises(InvalidConfigurationError):
        StencilProposal("iid", 1).check_dim(2)


@pytest.mark.parametrize("kind,K", [("iid", 2), ("antithetic", 3), ("star", 2)])
def test_draws_follow_joint(kind, K):
    pf = StencilProposal(kind, K)
    rng = np.random.default_rng(11)
    n = 60_000
    counts = Counter(tuple(int(v) for v in pf.draw(np.zeros(1), rng).candidates[:, 0]) for _ in range(n))
    off, p = pf.joint()
    for o, q in zip(off, p):
        se = math.sqrt(q * (1 - q) / n)
        assert abs(counts.get(tuple(o), 0) / n - q) <= 5 * se + 1e-12


@pytest.mark.parametrize("kind,K,pinned", [("antithetic", 3, 1), ("star", 3, -2), ("iid", 2, 0)])
def test_shadows_follow_shadow_table(kind, K, pinned):
    pf = StencilProposal(kind, K)
    rng = np.random.default_rng(12)
    y = np.array([5.0])
    x = y + pinned
    n = 40_000
    counts = Counter(tuple(int(v - y[0]) for v in pf.shadows(x, y, 0, rng)[:, 0]) for _ in range(n))
    rest, p = pf.shadow_table(0, pinned)
    assert math.fsum(p) == pytest.approx(1.0)
    for o, q in zip(rest, p):
        se = math.sqrt(q * (1 - q) / n)
        assert abs(counts.get(tuple(o), 0) / n - q) <= 5 * se + 1e-12


def test_marginal_kernel_uses_marginal_pmf():
    pf = StencilProposal("antithetic", 2)
    m = pf.marginal()
    assert m.num_candidates == 1
    np.testing.assert_allclose(m.marginal_pmf, pf.marginal_pmf)

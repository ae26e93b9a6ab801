"""Rules that turn a candidate set into the next state.

Multiple-try Metropolis: pick a candidate with probability proportional to
its weight, draw shadow points from the reversed conditional, accept with a
ratio of normalized weights. Generalised Metropolis-Hastings (Tjelmeland's
rule): select among the current point and the candidates with probability
proportional to the target density, valid for exchangeable proposals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import (
    CandidateSet,
    CapabilityError,
    CheckResult,
    EvalBudget,
    InvalidConfigurationError,
    InvalidStateError,
    SelectionProbabilities,
    categorical_from_log,
    log_normalize,
)
from .rng import ACCEPT, SELECT, SHADOWS, as_streams

GLOBALLY_BALANCED = "globally-balanced"
LOCALLY_BALANCED_SQRT = "locally-balanced-sqrt"
CUSTOM_G = "custom-g"


@dataclass(frozen=True)
class WeightRule:
    """Weight w(x, y) = g(pi(y) / pi(x)).

    Globally balanced: g(t) = t. Locally balanced: g(t) = sqrt(t), which
    satisfies g(t) / g(1/t) = t. A custom ``g`` maps positive reals to
    positive reals. With ``proposal_corrected`` the argument becomes
    pi(y) q(y, x) / (pi(x) q(x, y)), which differs only for non-symmetric
    proposals.
    """

    kind: str = GLOBALLY_BALANCED
    g: Optional[Callable[[float], float]] = None
    proposal_corrected: bool = False

    def __post_init__(self):
        if self.kind not in (GLOBALLY_BALANCED, LOCALLY_BALANCED_SQRT, CUSTOM_G):
            raise InvalidConfigurationError(f"unknown weight rule {self.kind!r}")
        if self.kind == CUSTOM_G and self.g is None:
            raise InvalidConfigurationError("custom weight rule needs g")

    def log_weights(self, logpi_from: float, logpi_to, log_q_ratio=None) -> np.ndarray:
        log_t = np.asarray(logpi_to, dtype=float) - logpi_from
        if self.proposal_corrected and log_q_ratio is not None:
            log_t = log_t + log_q_ratio
        if self.kind == GLOBALLY_BALANCED:
            return log_t
        if self.kind == LOCALLY_BALANCED_SQRT:
            return 0.5 * log_t
        with np.errstate(divide="ignore"):
            return np.log([self.g(t) for t in np.exp(log_t)])

    def balance_function(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == GLOBALLY_BALANCED:
            return t
        if self.kind == LOCALLY_BALANCED_SQRT:
            return np.sqrt(t)
        return np.array([self.g(v) for v in np.atleast_1d(t)])

    def balance_defect(self, grid=None) -> float:
        """max over the grid of |g(t) / g(1/t) / t - 1|."""
        if grid is None:
            grid = 10.0 ** (np.arange(-24, 25) / 4.0)
        grid = np.asarray(grid, dtype=float)
        ratio = self.balance_function(grid) / self.balance_function(1.0 / grid)
        return float(np.max(np.abs(ratio / grid - 1.0)))


def normalized_weights(logw) -> np.ndarray:
    """w_i / sum_j w_j from log weights; raises ZeroMassError if all are zero."""
    return np.exp(log_normalize(logw))


def mh_log_ratio(logpi_x: float, logpi_y: float, log_q_ratio: float = 0.0) -> float:
    return (logpi_y - logpi_x) + log_q_ratio


def mh_acceptance(logpi_x: float, logpi_y: float, log_q_ratio: float = 0.0) -> float:
    """min(1, pi(y) Q(y, x) / (pi(x) Q(x, y)))."""
    if logpi_x == -math.inf:
        raise InvalidStateError("current point has zero target density")
    if logpi_y == -math.inf:
        return 0.0
    return math.exp(min(0.0, mh_log_ratio(logpi_x, logpi_y, log_q_ratio)))


def mtm_acceptance(cs: CandidateSet, i: int, shadows, wr: WeightRule, pf=None, *,
                   shadow_logpi, log_q_ratio: Optional[float] = None,
                   forward_log_q=None, reverse_log_q=None) -> float:
    """Acceptance probability of candidate ``i`` given its shadow points.

    ``log_q_ratio`` is log Q_i(y_i, x) - log Q_i(x, y_i); it defaults to the
    proposal's own value, which is zero for symmetric kernels. For
    proposal-corrected weights, ``forward_log_q`` holds the ratios from x to
    each candidate and ``reverse_log_q`` those from y_i to x and then to
    each shadow.
    """
    lp_x = cs.current_logpi
    if lp_x == -math.inf:
        raise InvalidStateError("current point has zero target density")
    lp_y = float(cs.candidate_logpi[i])
    if lp_y == -math.inf:
        return 0.0
    if log_q_ratio is None:
        log_q_ratio = 0.0 if pf is None else pf.log_q_ratio(cs.current, cs.candidates[i])
    fwd = log_normalize(wr.log_weights(lp_x, cs.candidate_logpi, forward_log_q))[i]
    rev_targets = np.concatenate([[lp_x], np.asarray(shadow_logpi, dtype=float)])
    rev = log_normalize(wr.log_weights(lp_y, rev_targets, reverse_log_q))[0]
    log_ratio = mh_log_ratio(lp_x, lp_y, (rev - fwd) + log_q_ratio)
    return math.exp(min(0.0, log_ratio))


@dataclass
class MTMOutcome:
    index: int                 # 0 = stay, otherwise 1-based candidate index
    selected: Optional[int]    # 0-based candidate drawn in the selection stage
    alpha: float
    shadows: Optional[np.ndarray] = None
    zero_mass: bool = False


def mtm_select_and_accept(cs: CandidateSet, wr: WeightRule, pf, rng, *, target,
                          budget: Optional[EvalBudget] = None, center_x=None,
                          evaluate=None) -> MTMOutcome:
    """Selection and acceptance stages of one multiple-try Metropolis step.

    Charges K - 1 density evaluations for the shadow points. When every
    candidate has zero weight the chain stays and ``zero_mass`` is flagged.
    """
    streams = as_streams(rng)
    K = cs.num_candidates
    x = cs.current
    corrected = wr.proposal_corrected and not pf.symmetric
    fwd_q = centers = None
    if corrected:
        centers = pf.centers(cs.candidates, target, budget)
        fwd_q = pf.log_q_ratios(x, cs.candidates, center_x, centers)
    lw = wr.log_weights(cs.current_logpi, cs.candidate_logpi, fwd_q)
    if np.max(lw) == -math.inf:
        return MTMOutcome(0, None, 0.0, zero_mass=True)
    i = categorical_from_log(lw, streams(SELECT).random())
    y_i = cs.candidates[i]
    center_y = centers[i] if corrected else pf.center(y_i, target, budget)
    shadows = pf.shadows(x, y_i, i, streams(SHADOWS), center_y)
    if evaluate is None:
        evaluate = target.logpdf_many
    shadow_lp = evaluate(shadows) if K > 1 else np.empty(0)
    if budget is not None:
        budget.charge(density=K - 1)
    lqr = pf.log_q_ratio(x, y_i, center_x, center_y)
    rev_q = None
    if corrected:
        rev_q = np.empty(K)
        rev_q[0] = -lqr
        if K > 1:
            rev_q[1:] = pf.log_q_ratios(y_i, shadows, center_y, pf.centers(shadows, target, budget))
    alpha = mtm_acceptance(cs, i, shadows, wr, pf, shadow_logpi=shadow_lp, log_q_ratio=lqr,
                           forward_log_q=fwd_q, reverse_log_q=rev_q)
    accepted = streams(ACCEPT).random() < alpha
    return MTMOutcome(i + 1 if accepted else 0, i, alpha, shadows)


def gmh_probabilities(cs: CandidateSet, proposal=None) -> SelectionProbabilities:
    """h_i = pi(y_i) / (pi(x) + sum_j pi(y_j)), stay = pi(x) / (same).

    Only valid for exchangeable proposals; pass ``proposal`` to have that
    checked.
    """
    if proposal is not None and not proposal.exchangeable:
        raise CapabilityError(f"{proposal!r} is not exchangeable; the simplified GMH rule does not apply")
    if cs.current_logpi == -math.inf:
        raise InvalidStateError("current point has zero target density")
    p = np.exp(log_normalize(np.concatenate([[cs.current_logpi], cs.candidate_logpi])))
    return SelectionProbabilities(float(p[0]), p[1:])


# ---------------------------------------------------------------------------
# pointwise reversibility condition on finite spaces
# ---------------------------------------------------------------------------

def gmh_rule(target):
    """Simplified GMH selection as a function of integer states."""
    def h(x, ys):
        cs = CandidateSet(np.array([x], float), target.logpi(x), np.array(ys, float)[:, None],
                          np.array([target.logpi(y) for y in ys]))
        return gmh_probabilities(cs).move
    return h


def mh_rule(target, proposal):
    """K = 1 Metropolis-Hastings acceptance as a selection function."""
    def h(x, ys):
        (y,) = ys
        lqr = proposal.log_q_ratio(np.array([x], float), np.array([y], float))
        return np.array([mh_acceptance(target.logpi(x), target.logpi(y), lqr)])
    return h


def gmh_condition_check(h, target, proposal, tol: float = 1e-12) -> CheckResult:
    """Verify h_i(x, y) = r_i(x, y) h_i(y_i, (x, y_{-i})) at every configuration.

    ``r_i`` is the ratio pi(y_i) q(y_i, (x, y_{-i})) / (pi(x) q(x, y)). Where
    the reverse configuration has zero mass, h_i(x, y) must vanish.
    Returns the first violation found.
    """
    offsets, probs = proposal.joint()
    K = proposal.num_candidates
    worst = 0.0
    for x in target.points:
        lp_x = target.logpi(x)
        for off, q_fwd in zip(offsets, probs):
            ys = tuple(int(x + o) for o in off)
            hx = np.asarray(h(int(x), ys), dtype=float)
            for i in range(K):
                swapped = list(ys)
                swapped[i] = int(x)
                y_i = ys[i]
                q_rev = proposal.joint_prob([s - y_i for s in swapped])
                lp_y = target.logpi(y_i)
                if q_rev == 0.0 or lp_y == -math.inf:
                    err = abs(hx[i])
                else:
                    r = math.exp(lp_y - lp_x) * q_rev / q_fwd
                    hy = np.asarray(h(y_i, tuple(swapped)), dtype=float)
                    err = abs(hx[i] - r * hy[i])
                worst = max(worst, err)
                if err > tol:
                    return CheckResult(False, err, (int(x), ys, i),
                                       f"condition fails at x={x}, y={ys}, i={i}: defect {err:.3e}")
    return CheckResult(True, worst)

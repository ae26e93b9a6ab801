"""Chain drivers: one transition and full runs for MTM, GMH and MH."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (
    CandidateSet,
    CapabilityError,
    EvalBudget,
    InvalidConfigurationError,
    InvalidStateError,
    MPMCMCError,
    TargetModel,
    categorical,
)
from .rng import ACCEPT, CANDIDATES, SELECT, ChainStreams, as_streams
from .selection import WeightRule, gmh_probabilities, mh_acceptance, mtm_select_and_accept

MTM = "mtm"
GMH = "gmh"
MH = "mh"


@dataclass(frozen=True)
class SamplerSpec:
    algorithm: str
    proposal: object
    target: TargetModel
    weights: Optional[WeightRule] = None

    def __post_init__(self):
        if hasattr(self.target, "as_target") and not isinstance(self.target, TargetModel):
            object.__setattr__(self, "target", self.target.as_target())
        if self.algorithm not in (MTM, GMH, MH):
            raise InvalidConfigurationError(f"unknown algorithm {self.algorithm!r}")
        K = self.proposal.num_candidates
        if self.algorithm == MH and K != 1:
            raise InvalidConfigurationError("MH takes exactly one candidate")
        if self.algorithm == GMH and not self.proposal.exchangeable:
            raise CapabilityError("GMH selection needs an exchangeable proposal (star or simplicial)")
        if self.algorithm == MTM and self.weights is None:
            object.__setattr__(self, "weights", WeightRule())
        self.proposal.check_dim(self.target.dim)

    @property
    def num_candidates(self) -> int:
        return self.proposal.num_candidates

    def evals_per_iteration(self) -> int:
        K = self.num_candidates
        return {MTM: 2 * K - 1, GMH: K, MH: 1}[self.algorithm]


class EvaluationPool:
    """Evaluates candidate densities in fixed-size chunks.

    Chunk boundaries depend only on ``chunk_size``, never on ``workers``, and
    results are concatenated by chunk index, so the numbers are the same for
    any worker count.
    """

    def __init__(self, workers: int = 1, chunk_size: int = 16):
        self.workers = max(1, int(workers))
        self.chunk_size = max(1, int(chunk_size))
        self._executor = ThreadPoolExecutor(self.workers) if self.workers > 1 else None

    def evaluate(self, target: TargetModel, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        chunks = [points[s:s + self.chunk_size] for s in range(0, len(points), self.chunk_size)]
        if self._executor is None:
            parts = [target.logpdf_many(c) for c in chunks]
        else:
            parts = list(self._executor.map(target.logpdf_many, chunks))
        return np.concatenate(parts) if parts else np.empty(0)

    def close(self):
        if self._executor is not None:
            self._executor.shutdown()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


@dataclass
class StepResult:
    state: np.ndarray
    index: int
    logpi: float
    budget: EvalBudget
    candidates: np.ndarray
    zero_mass: bool = False


def step(spec: SamplerSpec, x, rng, *, logpi_x: Optional[float] = None,
         pool: Optional[EvaluationPool] = None) -> StepResult:
    """One transition: propose K candidates from x, then select one or stay.

    ``index`` is 0 for staying at x and i for moving to candidate i.
    """
    streams = as_streams(rng)
    target, pf = spec.target, spec.proposal
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if logpi_x is None:
        logpi_x = target.log_density(x)
    if logpi_x == -math.inf:
        raise InvalidStateError("current point lies outside the target support")
    if pool is None:
        evaluate = target.logpdf_many
    else:
        def evaluate(pts):
            return pool.evaluate(target, pts)

    budget = EvalBudget()
    draw = pf.draw(x, streams(CANDIDATES), target, budget)
    ys = draw.candidates
    lp_y = evaluate(ys)
    budget.charge(density=len(ys))

    if spec.algorithm == MH:
        y, lp = ys[0], float(lp_y[0])
        alpha = 0.0
        if lp > -math.inf:
            center_y = pf.center(y, target, budget)
            alpha = mh_acceptance(logpi_x, lp, pf.log_q_ratio(x, y, draw.center, center_y))
        if streams(ACCEPT).random() < alpha:
            return StepResult(y, 1, lp, budget, ys)
        return StepResult(x, 0, logpi_x, budget, ys)

    cs = CandidateSet(x, logpi_x, ys, lp_y)
    if spec.algorithm == GMH:
        probs = gmh_probabilities(cs)
        idx = categorical(probs.as_array(), streams(SELECT).random())
    else:
        out = mtm_select_and_accept(cs, spec.weights, pf, streams, target=target, budget=budget,
                                    center_x=draw.center, evaluate=evaluate)
        if out.zero_mass:
            return StepResult(x, 0, logpi_x, budget, ys, zero_mass=True)
        idx = out.index
    if idx == 0:
        return StepResult(x, 0, logpi_x, budget, ys)
    return StepResult(ys[idx - 1], idx, float(lp_y[idx - 1]), budget, ys)


class ChainStepError(MPMCMCError):
    def __init__(self, iteration: int, error: Exception):
        super().__init__(f"iteration {iteration}: {type(error).__name__}: {error}")
        self.iteration = iteration
        self.error = error


@dataclass
class ChainTrace:
    states: np.ndarray            # (T + 1, d)
    accepted: np.ndarray          # (T,) bool
    selected_index: np.ndarray    # (T,) in {0, ..., K}
    budget: EvalBudget = field(default_factory=EvalBudget)
    seed: Optional[int] = None
    zero_mass: int = 0

    @property
    def num_steps(self) -> int:
        return len(self.accepted)

    def acceptance_rate(self, burn_in: int = 0) -> float:
        return float(np.mean(self.accepted[burn_in:]))


def run_chain(spec: SamplerSpec, x0, T: int, rng, *, chain: int = 0,
              pool: Optional[EvaluationPool] = None) -> ChainTrace:
    """Run T transitions from x0.

    With an integer ``rng`` every iteration draws from its own substream
    (seed, chain, t, role), so the trace is reproducible from the seed.
    """
    if T < 1:
        raise InvalidConfigurationError("need at least one iteration")
    if isinstance(rng, (int, np.integer)):
        source = ChainStreams(int(rng), chain)
        seed = int(rng)

        def streams_at(t):
            return source.iteration(t)
    else:
        shared = as_streams(rng)
        seed = None

        def streams_at(t):
            return shared

    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    states = np.empty((T + 1, x.size))
    states[0] = x
    index = np.zeros(T, dtype=np.int64)
    budget = EvalBudget()
    zero_mass = 0
    lp = spec.target.log_density(x)
    for t in range(T):
        try:
            res = step(spec, x, streams_at(t), logpi_x=lp, pool=pool)
        except (MPMCMCError, ValueError, FloatingPointError) as err:
            raise ChainStepError(t, err) from err
        x, lp = res.state, res.logpi
        states[t + 1] = x
        index[t] = res.index
        budget.charge(res.budget.density_evals, res.budget.gradient_evals)
        zero_mass += res.zero_mass
    return ChainTrace(states, index > 0, index, budget, seed, zero_mass)


def mh_baseline_mixture(spec: SamplerSpec) -> SamplerSpec:
    """Single-proposal MH whose proposal is the average of the K marginals."""
    return SamplerSpec(MH, spec.proposal.marginal(), spec.target)

"""Multiproposal MCMC: multiple-try Metropolis, generalised
Metropolis-Hastings, exact finite-state analysis and spectral-gap bounds."""

from .core import (
    CandidateSet,
    CapabilityError,
    CheckResult,
    ContractError,
    DegenerateChainError,
    DomainError,
    EnumerationSizeError,
    EvalBudget,
    InvalidConfigurationError,
    InvalidStateError,
    MalformedRuleError,
    MPMCMCError,
    SelectionProbabilities,
    TargetModel,
    ZeroMassError,
    log_sum_exp,
    validate_selection,
)
from .proposals import ProposalFamily
from .samplers import ChainTrace, SamplerSpec, mh_baseline_mixture, run_chain, step
from .selection import WeightRule
from .stencil import StencilProposal
from .targets import DiscreteTarget, LogisticRegressionPosterior, gaussian_target

__version__ = "0.1.0"

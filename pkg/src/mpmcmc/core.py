"""Shared domain types and log-space probability helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np


class MPMCMCError(Exception):
    """Base class for library errors."""


class ZeroMassError(MPMCMCError):
    """All weights or densities are zero, nothing can be normalized."""


class MalformedRuleError(MPMCMCError, ValueError):
    pass


class InvalidConfigurationError(MPMCMCError, ValueError):
    pass


class CapabilityError(MPMCMCError):
    """The requested operation is not supported by this target or proposal."""


class InvalidStateError(MPMCMCError):
    """The chain sits at a point with zero target density."""


class EnumerationSizeError(MPMCMCError):
    pass


class ContractError(MPMCMCError):
    pass


class DegenerateChainError(MPMCMCError):
    pass


class DomainError(MPMCMCError, ValueError):
    pass


@dataclass(frozen=True)
class CheckResult:
    """Outcome of a verification routine.

    ``value`` is the measured quantity (a max violation, a ratio, ...);
    ``where`` locates the worst offender when there is one.
    """

    ok: bool
    value: float = 0.0
    where: Optional[tuple] = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.ok


# ---------------------------------------------------------------------------
# log-space arithmetic
# ---------------------------------------------------------------------------

def log_sum_exp(values) -> float:
    """Return ``log(sum(exp(values)))`` without overflow.

    Raises ZeroMassError when every entry is ``-inf``.
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ZeroMassError("log_sum_exp of an empty sequence")
    if np.isnan(v).any():
        raise ValueError("NaN in log_sum_exp input")
    m = v.max()
    if m == -np.inf:
        raise ZeroMassError("all terms are -inf")
    if m == np.inf:
        raise ValueError("+inf in log_sum_exp input")
    return float(m + math.log(np.exp(v - m).sum()))


def log_normalize(values) -> np.ndarray:
    """Log of ``exp(v) / sum(exp(v))``.

    The maximum is subtracted before anything else so that adding a
    constant to every entry leaves the result unchanged whenever that
    addition is itself exact.
    """
    v = np.asarray(values, dtype=float)
    m = v.max()
    if m == -np.inf:
        raise ZeroMassError("all terms are -inf")
    shifted = v - m
    return shifted - math.log(np.exp(shifted).sum())


def categorical(p, u: float) -> int:
    """Inverse-CDF draw from probabilities ``p`` using one uniform ``u``."""
    cum = np.cumsum(p)
    i = int(np.searchsorted(cum, u * cum[-1], side="right"))
    return min(i, len(cum) - 1)


def categorical_from_log(logp, u: float) -> int:
    """Index drawn from unnormalized log-probabilities using one uniform ``u``."""
    return categorical(np.exp(log_normalize(logp)), u)


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TargetModel:
    """Unnormalized target density on R^d.

    ``log_density`` may be off by an additive constant. ``log_density_batch``
    maps an ``(n, d)`` array to ``n`` values; it defaults to a row loop.
    ``strong_convexity`` (m) and ``smoothness`` (L) are only needed by the
    bound calculators.
    """

    dim: int
    log_density: Callable[[np.ndarray], float]
    grad_log_density: Optional[Callable[[np.ndarray], np.ndarray]] = None
    strong_convexity: Optional[float] = None
    smoothness: Optional[float] = None
    log_density_batch: Optional[Callable[[np.ndarray], np.ndarray]] = None
    exact_sampler: Optional[Callable[[np.random.Generator, int], np.ndarray]] = None
    name: str = "target"
    grad_log_density_batch: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if int(self.dim) < 1:
            raise InvalidConfigurationError("dim must be a positive integer")
        m, L = self.strong_convexity, self.smoothness
        if m is not None and m <= 0:
            raise InvalidConfigurationError("strong convexity constant must be positive")
        if L is not None and L <= 0:
            raise InvalidConfigurationError("smoothness constant must be positive")
        if m is not None and L is not None and m > L:
            raise InvalidConfigurationError(f"need m <= L, got m={m}, L={L}")

    def logpdf_many(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.log_density_batch is not None:
            out = np.asarray(self.log_density_batch(points), dtype=float)
        else:
            out = np.array([self.log_density(p) for p in points], dtype=float)
        if not (out < np.inf).all():     # catches NaN and +inf in one pass
            raise ValueError(f"{self.name}: log density returned NaN or +inf")
        return out

    def grad(self, point: np.ndarray) -> np.ndarray:
        if self.grad_log_density is None:
            raise CapabilityError(f"{self.name} has no gradient")
        return np.asarray(self.grad_log_density(point), dtype=float)

    def grad_many(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.grad_log_density_batch is not None:
            return np.asarray(self.grad_log_density_batch(points), dtype=float)
        return np.array([self.grad(p) for p in points]).reshape(points.shape)


@dataclass
class EvalBudget:
    """Counts of target density and gradient evaluations.

    Per iteration: GMH = K densities, MTM = 2K - 1 (K candidates plus K - 1
    shadows; the current point's density is carried over from the previous
    iteration), MH = 1. Langevin proposals add one gradient at the current
    point and one at the selected candidate; MTM with proposal-corrected
    weights needs the gradient at every candidate and shadow instead (2K).
    """

    density_evals: int = 0
    gradient_evals: int = 0

    def charge(self, density: int = 0, gradient: int = 0) -> None:
        self.density_evals += density
        self.gradient_evals += gradient

    def __add__(self, other: "EvalBudget") -> "EvalBudget":
        return EvalBudget(self.density_evals + other.density_evals,
                          self.gradient_evals + other.gradient_evals)

    @classmethod
    def merge(cls, budgets) -> "EvalBudget":
        total = cls()
        for b in budgets:
            total = total + b
        return total


@dataclass(frozen=True)
class CandidateSet:
    """Current point and the K proposed points with cached log densities."""

    current: np.ndarray
    current_logpi: float
    candidates: np.ndarray
    candidate_logpi: np.ndarray
    shadows: Optional[np.ndarray] = None
    shadow_logpi: Optional[np.ndarray] = None

    def __post_init__(self):
        if len(self.candidates) != len(self.candidate_logpi):
            raise ValueError("candidates and candidate_logpi differ in length")

    @property
    def num_candidates(self) -> int:
        return len(self.candidates)

    def with_shadows(self, shadows, shadow_logpi) -> "CandidateSet":
        return replace(self, shadows=np.asarray(shadows), shadow_logpi=np.asarray(shadow_logpi, dtype=float))


@dataclass(frozen=True)
class SelectionProbabilities:
    stay: float
    move: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def as_array(self) -> np.ndarray:
        return np.concatenate([[self.stay], np.asarray(self.move, dtype=float)])


def validate_selection(p: SelectionProbabilities, tol: float = 1e-12) -> CheckResult:
    """Check that (stay, h_1..h_K) lies in [0, 1] and sums to one."""
    entries = p.as_array()
    if np.isnan(entries).any():
        raise MalformedRuleError("selection probabilities contain NaN")
    names = ["stay"] + [f"move[{i}]" for i in range(len(entries) - 1)]
    for name, v in zip(names, entries):
        if v < -tol or v > 1 + tol:
            return CheckResult(False, float(v), (name,), f"{name}={v} outside [0, 1]")
    total = math.fsum(entries)
    if abs(total - 1.0) > tol:
        return CheckResult(False, total, ("total",), f"mass {total} != 1")
    return CheckResult(True, total)

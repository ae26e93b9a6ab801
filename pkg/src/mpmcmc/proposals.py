"""Proposal kernels from R^d to (R^d)^K.

Each ``sample_*`` function returns a :class:`CandidateDraw` whose rows are
the K candidates. :class:`ProposalFamily` bundles a kind with its step size
and number of candidates and exposes what the samplers need: joint draws,
the shadow conditional used by multiple-try Metropolis, and the marginal
density ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import CapabilityError, EvalBudget, InvalidConfigurationError, TargetModel

IID = "iid-gaussian"
ANTITHETIC = "antithetic-gaussian"
STAR = "star"
LANGEVIN = "langevin"
SIMPLICIAL = "simplicial"
KINDS = (IID, ANTITHETIC, STAR, LANGEVIN, SIMPLICIAL)


@dataclass(frozen=True)
class CandidateDraw:
    candidates: np.ndarray
    latent: Optional[np.ndarray] = None
    rotation: Optional[np.ndarray] = None
    # mean of each marginal Q_i(x, .); only set for drifted (Langevin) kernels
    center: Optional[np.ndarray] = None


def _point(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=float))


def _check_step(sigma):
    if sigma < 0:
        raise InvalidConfigurationError(f"step size must be nonnegative, got {sigma}")


def sample_iid_gaussian(x, sigma: float, K: int, rng: np.random.Generator) -> CandidateDraw:
    """K independent draws from N(x, sigma^2 I)."""
    _check_step(sigma)
    x = _point(x)
    noise = rng.standard_normal((K, x.size))
    return CandidateDraw(x + sigma * noise)


def sample_antithetic_gaussian(x, sigma: float, K: int, rng: np.random.Generator) -> CandidateDraw:
    """Jointly Gaussian candidates with marginals N(x, sigma^2 I) and
    cross-covariance -sigma^2/(K-1) I between any two of them.

    Centering K iid N(0, sigma^2 K/(K-1)) vectors gives exactly this law.
    """
    if K < 2:
        raise InvalidConfigurationError("antithetic proposals need K >= 2")
    _check_step(sigma)
    x = _point(x)
    inflated = sigma * math.sqrt(K / (K - 1))
    eps = inflated * rng.standard_normal((K, x.size))
    return CandidateDraw(x + (eps - eps.mean(axis=0)))


def sample_star(x, sigma: float, K: int, rng: np.random.Generator) -> CandidateDraw:
    """Latent z ~ N(x, sigma^2/2 I), then candidates iid N(z, sigma^2/2 I)."""
    _check_step(sigma)
    x = _point(x)
    half = sigma / math.sqrt(2.0)
    z = x + half * rng.standard_normal(x.size)
    return CandidateDraw(z + half * rng.standard_normal((K, x.size)), latent=z)


def langevin_center(y, sigma: float, target: TargetModel, budget: Optional[EvalBudget] = None) -> np.ndarray:
    y = _point(y)
    g = target.grad(y)
    if budget is not None:
        budget.charge(gradient=1)
    return y + 0.5 * sigma ** 2 * g


def sample_langevin(x, sigma: float, K: int, target: TargetModel, rng: np.random.Generator,
                    budget: Optional[EvalBudget] = None) -> CandidateDraw:
    """K iid draws from N(x + sigma^2/2 grad log pi(x), sigma^2 I).

    One gradient evaluation at x is charged to ``budget``.
    """
    if target is None or target.grad_log_density is None:
        raise CapabilityError("Langevin proposals need a target gradient")
    _check_step(sigma)
    c = langevin_center(x, sigma, target, budget)
    noise = rng.standard_normal((K, c.size))
    return CandidateDraw(c + sigma * noise, center=c)


def simplex_vertices(K: int, d: int, lam: float) -> np.ndarray:
    """K points in R^d that, together with the origin, form a regular simplex
    of side ``lam``: every vertex has norm ``lam`` and every pairwise distance
    is ``lam``. Only the first K coordinates are nonzero.
    """
    if K > d:
        raise InvalidConfigurationError(f"simplicial proposals need K <= d, got K={K}, d={d}")
    a = lam / math.sqrt(2.0)
    b = a * (math.sqrt(K + 1.0) - 1.0) / K
    v = np.zeros((K, d))
    v[:, :K] = b
    v[np.arange(K), np.arange(K)] += a
    return v


def haar_orthogonal(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed element of O(d) via QR with sign-corrected R diagonal."""
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def sample_simplicial(x, lam: float, K: int, rng: np.random.Generator) -> CandidateDraw:
    x = _point(x)
    if lam <= 0:
        raise InvalidConfigurationError("simplex side must be positive")
    v = simplex_vertices(K, x.size, lam)
    R = haar_orthogonal(x.size, rng)
    return CandidateDraw(x + v @ R.T, rotation=R)


def shadow_conditional(kind: str, x, y_i, i: int, sigma: float, K: int, rng: np.random.Generator,
                       center_y: Optional[np.ndarray] = None) -> np.ndarray:
    """Draw the K-1 shadow points: Y_{-i} given Y_i = x, where Y ~ Q(y_i, .).

    ``center_y`` is the Langevin mean at ``y_i`` (required for that kind).
    """
    x, y_i = _point(x), _point(y_i)
    d = x.size
    if K == 1:
        return np.empty((0, d))
    if kind == IID:
        return y_i + sigma * rng.standard_normal((K - 1, d))
    if kind == LANGEVIN:
        if center_y is None:
            raise CapabilityError("Langevin shadows need the drifted mean at y_i")
        return center_y + sigma * rng.standard_normal((K - 1, d))
    if kind == ANTITHETIC:
        # remaining increments are iid N(0, s~^2) conditioned on summing to -(x - y_i)
        pinned = x - y_i
        inflated = sigma * math.sqrt(K / (K - 1))
        eps = inflated * rng.standard_normal((K - 1, d))
        return y_i + (eps - eps.mean(axis=0)) - pinned / (K - 1)
    if kind == STAR:
        # latent posterior given one endpoint: N((x + y_i)/2, sigma^2/4 I)
        z = 0.5 * (x + y_i) + 0.5 * sigma * rng.standard_normal(d)
        return z + (sigma / math.sqrt(2.0)) * rng.standard_normal((K - 1, d))
    raise CapabilityError(f"no shadow conditional for kind {kind!r}")


@dataclass(frozen=True)
class ProposalFamily:
    """A proposal kernel Q: kind, step (sigma, or simplex side lambda) and K."""

    kind: str
    step: float
    num_candidates: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidConfigurationError(f"unknown proposal kind {self.kind!r}")
        if self.num_candidates < 1:
            raise InvalidConfigurationError("need at least one candidate")
        if self.step < 0 or (self.kind == SIMPLICIAL and self.step == 0):
            raise InvalidConfigurationError(f"invalid step {self.step}")
        if self.kind == ANTITHETIC and self.num_candidates < 2:
            raise InvalidConfigurationError("antithetic proposals need K >= 2")

    @property
    def antithetic_cross(self) -> Optional[float]:
        if self.kind != ANTITHETIC:
            return None
        return -self.step ** 2 / (self.num_candidates - 1)

    @property
    def symmetric(self) -> bool:
        return self.kind != LANGEVIN

    @property
    def exchangeable(self) -> bool:
        return self.kind in (STAR, SIMPLICIAL)

    def check_dim(self, d: int) -> None:
        if self.kind == SIMPLICIAL and self.num_candidates > d:
            raise InvalidConfigurationError(f"simplicial proposals need K <= d, got K={self.num_candidates}, d={d}")

    def draw(self, x, rng, target=None, budget=None) -> CandidateDraw:
        K, s = self.num_candidates, self.step
        if self.kind == IID:
            return sample_iid_gaussian(x, s, K, rng)
        if self.kind == ANTITHETIC:
            return sample_antithetic_gaussian(x, s, K, rng)
        if self.kind == STAR:
            return sample_star(x, s, K, rng)
        if self.kind == LANGEVIN:
            return sample_langevin(x, s, K, target, rng, budget)
        return sample_simplicial(x, s, K, rng)

    def center(self, y, target=None, budget=None) -> Optional[np.ndarray]:
        """Mean of Q_i(y, .) when it is not y itself."""
        if self.kind == LANGEVIN:
            return langevin_center(y, self.step, target, budget)
        return None

    def centers(self, ys, target=None, budget=None) -> Optional[np.ndarray]:
        """Row-wise :meth:`center` for a block of points, one gradient each."""
        if self.kind != LANGEVIN:
            return None
        ys = np.atleast_2d(ys)
        g = target.grad_many(ys)
        if budget is not None:
            budget.charge(gradient=len(ys))
        return ys + 0.5 * self.step ** 2 * g

    def shadows(self, x, y_i, i, rng, center_y=None) -> np.ndarray:
        return shadow_conditional(self.kind, x, y_i, i, self.step, self.num_candidates, rng, center_y)

    def log_q_ratio(self, x, y, center_x=None, center_y=None) -> float:
        """log Q_i(y, x) - log Q_i(x, y) for the marginal kernel."""
        if self.symmetric:
            return 0.0
        if center_x is None or center_y is None:
            raise CapabilityError("Langevin density ratio needs both drifted means")
        s2 = self.step ** 2
        fwd = float(np.sum((_point(y) - center_x) ** 2))
        rev = float(np.sum((_point(x) - center_y) ** 2))
        return (fwd - rev) / (2.0 * s2)

    def log_q_ratios(self, x, ys, center_x=None, centers_y=None) -> np.ndarray:
        """:meth:`log_q_ratio` from x to every row of ``ys``."""
        ys = np.atleast_2d(ys)
        if self.symmetric:
            return np.zeros(len(ys))
        if center_x is None or centers_y is None:
            raise CapabilityError("Langevin density ratio needs both drifted means")
        fwd = np.sum((ys - center_x) ** 2, axis=1)
        rev = np.sum((_point(x) - centers_y) ** 2, axis=1)
        return (fwd - rev) / (2.0 * self.step ** 2)

    def marginal(self) -> "ProposalFamily":
        """Single-candidate kernel equal to the average of the K marginals.

        Every kind here has identical N(x, sigma^2 I) marginals (drifted for
        Langevin); the simplicial marginal is uniform on a sphere and has no
        Gaussian stand-in.
        """
        if self.kind == SIMPLICIAL:
            raise CapabilityError("simplicial marginal is not a Gaussian random walk")
        kind = LANGEVIN if self.kind == LANGEVIN else IID
        return ProposalFamily(kind, self.step, 1)

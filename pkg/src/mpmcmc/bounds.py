"""Upper bounds on the spectral gap of multiproposal kernels.

Closed forms for Gaussian random-walk proposals on m-convex, L-smooth
targets, the moment-generating-function bound, and a Monte Carlo estimate
of the Dirichlet-form term E max_i (nu'(Y_i - X))^2 / (2 Var(nu'X)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import CapabilityError, DegenerateChainError, DomainError, InvalidConfigurationError

SUP_CONSTANT = 4.0 * math.exp(1.04)
ONE_MINUS_INV_E = 1.0 - math.exp(-1.0)


@dataclass(frozen=True)
class BoundQuery:
    K: int
    d: int
    sigma: float
    m: Optional[float] = None
    L: Optional[float] = None
    direction: Optional[np.ndarray] = None
    mgf_point: Optional[float] = None
    mgf_value: Optional[float] = None
    variance: Optional[float] = None    # lower bound on Var(nu'X); 1/L when omitted
    gaussian: bool = True

    def __post_init__(self):
        if self.K < 1 or self.d < 1:
            raise InvalidConfigurationError("K and d must be positive")
        if self.sigma < 0:
            raise InvalidConfigurationError("sigma must be nonnegative")
        if self.direction is not None:
            nu = np.asarray(self.direction, dtype=float)
            if not math.isclose(float(np.linalg.norm(nu)), 1.0, rel_tol=1e-12, abs_tol=1e-12):
                raise InvalidConfigurationError("direction must be a unit vector")
        if self.gaussian and self.mgf_point is not None and self.sigma > 0:
            if self.mgf_point >= 1.0 / (2.0 * self.sigma ** 2):
                raise DomainError("MGF of a squared Gaussian increment is infinite for s >= 1/(2 sigma^2)")


def grw_bound(q: BoundQuery) -> float:
    """2 min(K / (1 + m sigma^2)^{d/2}, sigma^2 L (1/2 + log K))."""
    if q.m is None or q.L is None:
        raise CapabilityError("grw_bound needs m and L")
    first = q.K / (1.0 + q.m * q.sigma ** 2) ** (q.d / 2.0)
    second = q.sigma ** 2 * q.L * (0.5 + math.log(q.K))
    return 2.0 * min(first, second)


def grw_sup_bound(K: int, d: int, m: float, L: float) -> float:
    """Step-size-free bound c (L/m) (log K + log d)^2 / d with c = 4 e^{1.04}.

    Holds for d > 2 and K > 2.
    """
    if d <= 2 or K <= 2:
        raise DomainError(f"needs d > 2 and K > 2, got d={d}, K={K}")
    return SUP_CONSTANT * (L / m) * (math.log(K) + math.log(d)) ** 2 / d


def gaussian_mgf_point(sigma: float) -> float:
    """s = (1 - e^{-1}) / (2 sigma^2)."""
    return ONE_MINUS_INV_E / (2.0 * sigma ** 2)


def gaussian_log_mgf(s: float, sigma: float) -> float:
    """log E exp(s (sigma Z)^2) = -log(1 - 2 s sigma^2) / 2; equals 0.5 at
    the point returned by :func:`gaussian_mgf_point`."""
    if s >= 1.0 / (2.0 * sigma ** 2):
        raise DomainError("MGF diverges")
    return -0.5 * math.log1p(-2.0 * s * sigma ** 2)


def mgf_gap_bound(q: BoundQuery, essinf_accept: Optional[float] = None) -> float:
    """(1/2s)(log K + log M(s)) / Var, and its min with 2 K essinf_accept
    when a lower estimate of the acceptance mass is supplied."""
    if q.mgf_point is None or q.mgf_value is None:
        raise CapabilityError("mgf_gap_bound needs mgf_point and mgf_value")
    var = q.variance
    if var is None:
        if q.L is None:
            raise CapabilityError("need a variance lower bound or L")
        var = 1.0 / q.L
    second = (math.log(q.K) + q.mgf_value) / (2.0 * q.mgf_point * var)
    if essinf_accept is None:
        return second
    return min(2.0 * q.K * essinf_accept, second)


def gaussian_mgf_query(K: int, d: int, sigma: float, L: float, variance: Optional[float] = None) -> BoundQuery:
    s = gaussian_mgf_point(sigma)
    return BoundQuery(K, d, sigma, L=L, mgf_point=s, mgf_value=gaussian_log_mgf(s, sigma), variance=variance)


@dataclass(frozen=True)
class DirichletEstimate:
    value: float
    stderr: float
    variance: float
    samples: int


def estimate_dirichlet_term(spec, direction, samples: int, seed: int, blocks: int = 10,
                            variance: Optional[float] = None) -> DirichletEstimate:
    """Monte Carlo estimate of E max_i (nu'(Y_i - X))^2 / (2 Var(nu'X)) with
    X ~ pi drawn exactly and Y ~ Q(X, .).

    Each block has its own substream; the standard error comes from the
    spread of block means. ``variance`` overrides the sample variance of
    nu'X (useful when it is known exactly).
    """
    target, pf = spec.target, spec.proposal
    if target.exact_sampler is None:
        raise CapabilityError(f"{target.name} has no exact sampler")
    nu = np.atleast_1d(np.asarray(direction, dtype=float))
    if nu.size != target.dim:
        raise InvalidConfigurationError("direction has the wrong dimension")
    sizes = [samples // blocks + (b < samples % blocks) for b in range(blocks)]
    sq_means, proj = [], []
    for b, n in enumerate(sizes):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, b])))
        X = target.exact_sampler(rng, n)
        jumps = np.empty(n)
        for r in range(n):
            Y = pf.draw(X[r], rng, target).candidates
            jumps[r] = np.max(((Y - X[r]) @ nu) ** 2)
        sq_means.append(jumps.mean())
        proj.append(X @ nu)
    proj = np.concatenate(proj)
    var = float(np.var(proj, ddof=1)) if variance is None else float(variance)
    if not var > 0.0:
        raise DegenerateChainError("Var(nu'X) is not positive in this direction")
    sq_means = np.array(sq_means)
    w = np.array(sizes, dtype=float) / samples
    mean = float(w @ sq_means)
    se = float(np.std(sq_means, ddof=1) / math.sqrt(blocks)) if blocks > 1 else math.nan
    return DirichletEstimate(mean / (2.0 * var), se / (2.0 * var), var, samples)


def golden_section_max(f, lo: float, hi: float, tol: float = 1e-10, max_iter: int = 200) -> tuple[float, float]:
    """Maximize a unimodal f on [lo, hi]; returns (argmax, max)."""
    ratio = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - ratio * (b - a), a + ratio * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol * max(1.0, abs(a) + abs(b)):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - ratio * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + ratio * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def bounds_table(k_grid, d: int, m: float, L: float, sigma_grid):
    """Rows of (K, d, sigma, grw_bound, sup_bound or None, mgf second term)."""
    rows = []
    for K in k_grid:
        for sigma in sigma_grid:
            q = BoundQuery(int(K), int(d), float(sigma), m=m, L=L)
            sup = grw_sup_bound(int(K), int(d), m, L) if K > 2 and d > 2 else None
            mgf = mgf_gap_bound(gaussian_mgf_query(int(K), int(d), float(sigma), L)) if sigma > 0 else None
            rows.append((int(K), int(d), float(sigma), grw_bound(q), sup, mgf))
    return rows

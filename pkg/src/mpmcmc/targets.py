"""Target distributions: Gaussian, Bayesian logistic regression, finite
targets on the integer line."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize

from .core import CapabilityError, InvalidConfigurationError, TargetModel


class _GaussianDensity:
    # callable object rather than a closure so targets pickle across processes
    def __init__(self, variance):
        self.precision = 1.0 / variance

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        return -0.5 * self.precision * float(x @ x)

    def batch(self, xs):
        return -0.5 * self.precision * np.einsum("ij,ij->i", xs, xs)

    def grad(self, x):
        return -self.precision * np.asarray(x, dtype=float)

    def grad_batch(self, xs):
        return -self.precision * np.asarray(xs, dtype=float)

    def sample(self, rng, n, d):
        return rng.standard_normal((n, d)) / math.sqrt(self.precision)


def gaussian_target(dim: int, variance: float = 1.0) -> TargetModel:
    """Centered isotropic Gaussian N(0, variance * I); m = L = 1/variance."""
    g = _GaussianDensity(variance)
    return TargetModel(
        dim=dim,
        log_density=g.log_density,
        grad_log_density=g.grad,
        strong_convexity=1.0 / variance,
        smoothness=1.0 / variance,
        log_density_batch=g.batch,
        grad_log_density_batch=g.grad_batch,
        exact_sampler=lambda rng, n: g.sample(rng, n, dim),
        name=f"gaussian(d={dim}, s2={variance})",
    )


def _softplus(a):
    return np.maximum(a, 0.0) + np.log1p(np.exp(-np.abs(a)))


def power_iteration(matrix: np.ndarray, rtol: float = 1e-8, max_iter: int = 100_000, seed: int = 0) -> float:
    """Largest eigenvalue of a symmetric positive semidefinite matrix."""
    v = np.random.default_rng(seed).standard_normal(matrix.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = matrix @ v
        lam = float(v @ w)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        # for symmetric matrices the residual bounds the distance to an eigenvalue
        if np.linalg.norm(w - lam * v) <= rtol * abs(lam):
            return lam
        v = w / norm
    return lam


@dataclass
class LogisticRegressionPosterior:
    """Posterior of theta under z_i ~ Bernoulli(sigmoid(b_i . theta)) and
    theta ~ N(0, prior_variance * I), with prior_variance = 25/d by default."""

    design: np.ndarray
    responses: np.ndarray
    prior_variance: float | None = None
    _L: float | None = field(default=None, repr=False)

    def __post_init__(self):
        self.design = np.asarray(self.design, dtype=float)
        self.responses = np.asarray(self.responses, dtype=float)
        n, d = self.design.shape
        if self.responses.shape != (n,):
            raise InvalidConfigurationError("responses must have one entry per design row")
        if self.prior_variance is None:
            self.prior_variance = 25.0 / d
        self._Bz = self.design.T @ self.responses

    @property
    def dim(self) -> int:
        return self.design.shape[1]

    @property
    def strong_convexity(self) -> float:
        return 1.0 / self.prior_variance

    @property
    def smoothness(self) -> float:
        if self._L is None:
            lam = power_iteration(self.design.T @ self.design, rtol=1e-8)
            self._L = lam / 4.0 + 1.0 / self.prior_variance
        return self._L

    def log_density(self, theta) -> float:
        theta = np.asarray(theta, dtype=float)
        a = self.design @ theta
        return float(self._Bz @ theta - _softplus(a).sum() - 0.5 * (theta @ theta) / self.prior_variance)

    def log_density_batch(self, thetas) -> np.ndarray:
        thetas = np.asarray(thetas, dtype=float)
        a = thetas @ self.design.T
        return thetas @ self._Bz - _softplus(a).sum(axis=1) - 0.5 * np.einsum("ij,ij->i", thetas, thetas) / self.prior_variance

    def grad_log_density(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        p = 1.0 / (1.0 + np.exp(-(self.design @ theta)))
        return self.design.T @ (self.responses - p) - theta / self.prior_variance

    def grad_log_density_batch(self, thetas) -> np.ndarray:
        thetas = np.asarray(thetas, dtype=float)
        p = 1.0 / (1.0 + np.exp(-(thetas @ self.design.T)))
        return (self.responses - p) @ self.design - thetas / self.prior_variance

    def hessian(self, theta) -> np.ndarray:
        """Hessian of U = -log pi."""
        p = 1.0 / (1.0 + np.exp(-(self.design @ np.asarray(theta, dtype=float))))
        w = p * (1.0 - p)
        return (self.design.T * w) @ self.design + np.eye(self.dim) / self.prior_variance

    def mode(self) -> np.ndarray:
        """Posterior mode by deterministic quasi-Newton ascent from the origin."""
        res = optimize.minimize(
            lambda t: -self.log_density(t),
            np.zeros(self.dim),
            jac=lambda t: -self.grad_log_density(t),
            method="L-BFGS-B",
            options={"gtol": 1e-10, "ftol": 1e-14, "maxiter": 10_000},
        )
        return res.x

    def as_target(self) -> TargetModel:
        return TargetModel(
            dim=self.dim,
            log_density=self.log_density,
            grad_log_density=self.grad_log_density,
            strong_convexity=self.strong_convexity,
            smoothness=self.smoothness,
            log_density_batch=self.log_density_batch,
            grad_log_density_batch=self.grad_log_density_batch,
            name=f"logistic(n={self.design.shape[0]}, d={self.dim})",
        )


def logistic_log_density(posterior: LogisticRegressionPosterior, theta):
    """Log density (up to a constant) and its gradient at ``theta``."""
    return posterior.log_density(theta), posterior.grad_log_density(theta)


def generate_experiment_data(seed: int, n: int = 50, d: int = 50):
    """Synthetic logistic-regression data: b_i ~ N(0, I_d), theta0 ~ N(0, I/4),
    z_i ~ Bernoulli(sigmoid(b_i . theta0))."""
    rng = np.random.default_rng(seed)
    design = rng.standard_normal((n, d))
    theta0 = 0.5 * rng.standard_normal(d)
    prob = 1.0 / (1.0 + np.exp(-(design @ theta0)))
    responses = (rng.random(n) < prob).astype(float)
    return design, responses, theta0


def write_dataset(path, design, responses) -> None:
    """CSV with one row per observation: the covariates then the response."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for b, z in zip(design, responses):
            w.writerow([repr(float(v)) for v in b] + [str(int(z))])


def read_dataset(path):
    rows = [r for r in csv.reader(Path(path).read_text().splitlines()) if r]
    data = np.array([[float(v) for v in r] for r in rows])
    return data[:, :-1], data[:, -1]


def convexity_constants(target) -> tuple[float, float]:
    """Global (m, L) with m I <= Hessian(-log pi) <= L I."""
    if isinstance(target, LogisticRegressionPosterior):
        return target.strong_convexity, target.smoothness
    if isinstance(target, TargetModel) and target.strong_convexity is not None and target.smoothness is not None:
        return target.strong_convexity, target.smoothness
    raise CapabilityError(f"no convexity constants known for {target!r}")


class DiscreteTarget:
    """Finite target on consecutive integers ``start, start+1, ...``.

    Points off the listed states have zero mass.
    """

    def __init__(self, logmass, start: int = 0):
        logmass = np.asarray(logmass, dtype=float)
        if logmass.ndim != 1 or logmass.size < 2:
            raise InvalidConfigurationError("need at least two states")
        if not np.isfinite(logmass).all():
            raise InvalidConfigurationError("all state masses must be finite and positive")
        self.logmass = logmass
        self.start = int(start)
        self.points = np.arange(self.start, self.start + logmass.size)

    @classmethod
    def from_masses(cls, masses, start: int = 0) -> "DiscreteTarget":
        return cls(np.log(np.asarray(masses, dtype=float)), start)

    @property
    def dim(self) -> int:
        return 1

    @property
    def size(self) -> int:
        return self.logmass.size

    @property
    def probabilities(self) -> np.ndarray:
        w = np.exp(self.logmass - self.logmass.max())
        return w / w.sum()

    def index(self, state) -> int | None:
        s = int(round(float(np.asarray(state).ravel()[0])))
        k = s - self.start
        return k if 0 <= k < self.size else None

    def logpi(self, state: int) -> float:
        k = int(state) - self.start
        return float(self.logmass[k]) if 0 <= k < self.size else -math.inf

    def log_density(self, point) -> float:
        k = self.index(point)
        return float(self.logmass[k]) if k is not None else -math.inf

    def log_density_batch(self, points) -> np.ndarray:
        k = np.rint(np.asarray(points, dtype=float)[:, 0]).astype(int) - self.start
        inside = (k >= 0) & (k < self.size)
        out = np.full(k.shape, -np.inf)
        out[inside] = self.logmass[k[inside]]
        return out

    def as_target(self) -> TargetModel:
        return TargetModel(
            dim=1,
            log_density=self.log_density,
            log_density_batch=self.log_density_batch,
            name=f"discrete({self.size} states)",
        )

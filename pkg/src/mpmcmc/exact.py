"""Exact transition matrices on finite state spaces and their spectral
quantities: gap, detailed balance, Peskun ordering, conductance."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    CheckResult,
    ContractError,
    DegenerateChainError,
    EnumerationSizeError,
    InvalidConfigurationError,
    log_normalize,
)
from .samplers import GMH, MH, MTM, SamplerSpec
from .selection import mh_acceptance

MAX_CONFIGURATIONS = 10_000_000
MAX_CONDUCTANCE_STATES = 25
BALANCE_TOL = 1e-10


@dataclass(frozen=True)
class KernelMatrix:
    states: list
    P: np.ndarray
    stationary: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] != len(self.states):
            raise InvalidConfigurationError("P must be square with one row per state")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "stationary", np.asarray(self.stationary, dtype=float))

    @classmethod
    def from_matrix(cls, P, stationary=None, states=None) -> "KernelMatrix":
        P = np.asarray(P, dtype=float)
        n = P.shape[0]
        if stationary is None:
            stationary = stationary_distribution(P)
        return cls(list(range(n)) if states is None else list(states), P, stationary)

    @property
    def size(self) -> int:
        return len(self.states)

    def row_sum_defect(self) -> float:
        return float(np.max(np.abs(self.P.sum(axis=1) - 1.0)))

    def stationarity_defect(self) -> float:
        return float(np.max(np.abs(self.stationary @ self.P - self.stationary)))


def stationary_distribution(P) -> np.ndarray:
    """Solve pi P = pi, sum(pi) = 1 by least squares."""
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    A = np.vstack([P.T - np.eye(n), np.ones(n)])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    return pi


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def _configuration_count(spec: SamplerSpec, n_states: int) -> int:
    offsets, _ = spec.proposal.joint()
    per_x = len(offsets)
    if spec.algorithm == MTM and spec.num_candidates > 1:
        K = spec.num_candidates
        widest = max(len(spec.proposal.shadow_table(i, 0)[1]) for i in range(K))
        per_x *= K * max(widest, 1)
    return n_states * per_x


def build_exact_kernel(spec: SamplerSpec, target) -> KernelMatrix:
    """Exact P^(K) on a DiscreteTarget by enumerating every candidate tuple
    (and for MTM every shadow tuple) of a stencil proposal."""
    pf = spec.proposal
    if not hasattr(pf, "joint"):
        raise InvalidConfigurationError("exact kernels need an enumerable (stencil) proposal")
    n = target.size
    count = _configuration_count(spec, n)
    if count > MAX_CONFIGURATIONS:
        raise EnumerationSizeError(f"{count} configurations exceed the limit of {MAX_CONFIGURATIONS}")

    offsets, probs = pf.joint()
    K = pf.num_candidates
    points = [int(s) for s in target.points]
    logpi = np.array([target.logpi(s) for s in points])
    rev_cache: dict = {}
    P = np.zeros((n, n))

    for a, x in enumerate(points):
        lp_x = logpi[a]
        terms: list[list[float]] = [[] for _ in range(n)]
        for off, q in zip(offsets, probs):
            ys = [x + int(o) for o in off]
            lp_y = np.array([target.logpi(y) for y in ys])
            h = _selection(spec, pf, target, x, lp_x, ys, lp_y, rev_cache)
            for i, hi in enumerate(h):
                if hi > 0.0:
                    b = target.index(ys[i])
                    if b != a:
                        terms[b].append(q * hi)
        for b in range(n):
            if b != a:
                P[a, b] = math.fsum(terms[b])
        P[a, a] = 1.0 - math.fsum(P[a, c] for c in range(n) if c != a)
    return KernelMatrix(points, P, target.probabilities)


def _selection(spec, pf, target, x, lp_x, ys, lp_y, rev_cache) -> np.ndarray:
    """Move probabilities h_1..h_K for one candidate tuple."""
    K = len(ys)
    if spec.algorithm == MH:
        lqr = pf.log_q_ratio(np.array([x], float), np.array([ys[0]], float))
        return np.array([mh_acceptance(lp_x, lp_y[0], lqr)])
    if spec.algorithm == GMH:
        return np.exp(log_normalize(np.concatenate([[lp_x], lp_y])))[1:]
    wr = spec.weights
    lw = wr.log_weights(lp_x, lp_y)
    if np.max(lw) == -math.inf:
        return np.zeros(K)
    fwd = log_normalize(lw)
    h = np.zeros(K)
    for i in range(K):
        if lp_y[i] == -math.inf:
            continue
        rev, qs = _reverse_weights(spec, pf, target, x, lp_x, ys[i], float(lp_y[i]), i, rev_cache)
        if len(qs) == 0:
            continue
        lqr = pf.log_q_ratio(np.array([x], float), np.array([ys[i]], float))
        log_ratio = (lp_y[i] - lp_x) + ((rev - fwd[i]) + lqr)
        alpha = np.exp(np.minimum(0.0, log_ratio))
        h[i] = math.exp(fwd[i]) * math.fsum(qs * alpha)
    return h


def _reverse_weights(spec, pf, target, x, lp_x, y, lp_y, i, cache):
    """Normalized reverse weight of x among (x, shadows) for every shadow
    tuple, with the shadow tuple probabilities."""
    key = (x, y, i)
    if key not in cache:
        rest, qs = pf.shadow_table(i, x - y)
        rev = np.empty(len(qs))
        for r, row in enumerate(rest):
            sh = np.array([target.logpi(y + int(o)) for o in row])
            lw = spec.weights.log_weights(lp_y, np.concatenate([[lp_x], sh]))
            rev[r] = log_normalize(lw)[0]
        cache[key] = (rev, qs)
    return cache[key]


# ---------------------------------------------------------------------------
# spectral quantities
# ---------------------------------------------------------------------------

def detailed_balance_check(km: KernelMatrix, tol: float = BALANCE_TOL) -> CheckResult:
    """max |pi(x) P(x, y) - pi(y) P(y, x)| over pairs, with the worst pair."""
    flow = km.stationary[:, None] * km.P
    defect = np.abs(flow - flow.T)
    a, b = np.unravel_index(int(np.argmax(defect)), defect.shape)
    worst = float(defect[a, b])
    if worst <= tol:
        return CheckResult(True, worst)
    return CheckResult(False, worst, (km.states[a], km.states[b]),
                       f"pi(x)P(x,y) - pi(y)P(y,x) = {worst:.3e} at x={km.states[a]}, y={km.states[b]}")


def spectral_gap(km: KernelMatrix) -> float:
    """1 - lambda_2 of the pi-symmetrized kernel D^{1/2} P D^{-1/2}."""
    check = detailed_balance_check(km)
    if not check:
        raise ContractError(f"kernel is not reversible: {check.detail}")
    root = np.sqrt(km.stationary)
    S = root[:, None] * km.P / root[None, :]
    eig = np.linalg.eigvalsh(0.5 * (S + S.T))
    return float(1.0 - eig[-2])


def peskun_check(pk: KernelMatrix, pt: KernelMatrix, K: int, tol: float = 1e-12) -> CheckResult:
    """P^(K)(x, y) <= K P~(x, y) + tol for every x != y."""
    if list(pk.states) != list(pt.states):
        raise InvalidConfigurationError("kernels live on different state sets")
    excess = pk.P - K * pt.P
    np.fill_diagonal(excess, -np.inf)
    a, b = np.unravel_index(int(np.argmax(excess)), excess.shape)
    worst = float(excess[a, b])
    if worst <= tol:
        return CheckResult(True, worst)
    return CheckResult(False, worst, (pk.states[a], pk.states[b]),
                       f"P(x,y) exceeds {K} P~(x,y) by {worst:.3e} at x={pk.states[a]}, y={pk.states[b]}")


def gap_domination_check(pk: KernelMatrix, pt: KernelMatrix, K: int, tol: float = 1e-9) -> CheckResult:
    """Reports Gap(P^(K)) / Gap(P~) and checks it is at most K."""
    g_tilde = spectral_gap(pt)
    if g_tilde <= 0.0:
        raise DegenerateChainError("baseline kernel has zero spectral gap")
    ratio = spectral_gap(pk) / g_tilde
    ok = 0.0 <= ratio + tol and ratio <= K + tol
    return CheckResult(ok, ratio, None, "" if ok else f"gap ratio {ratio:.6f} exceeds K={K}")


@dataclass(frozen=True)
class Conductance:
    phi: float
    worst_set: tuple
    essinf_form: float      # 2 min_x P(x, X \ {x}), informational only


def conductance(km: KernelMatrix, chunk: int = 1 << 15) -> Conductance:
    """Exact min over sets A with 0 < pi(A) <= 1/2 of flow(A, A^c) / pi(A)."""
    n = km.size
    if n > MAX_CONDUCTANCE_STATES:
        raise EnumerationSizeError(f"{n} states exceed the conductance limit of {MAX_CONDUCTANCE_STATES}")
    pi = km.stationary
    F = pi[:, None] * km.P
    bits = 1 << np.arange(n)
    best, best_mask = math.inf, 0
    for start in range(1, 1 << n, chunk):
        masks = np.arange(start, min(start + chunk, 1 << n))
        member = (masks[:, None] & bits[None, :]) != 0
        mass = member @ pi
        keep = mass <= 0.5 + 1e-15
        if not keep.any():
            continue
        member, mass, masks = member[keep], mass[keep], masks[keep]
        flow = ((member @ F) * ~member).sum(axis=1)
        ratio = flow / mass
        j = int(np.argmin(ratio))
        if ratio[j] < best:
            best, best_mask = float(ratio[j]), int(masks[j])
    worst = tuple(km.states[k] for k in range(n) if best_mask >> k & 1)
    leave = 1.0 - np.diag(km.P)
    return Conductance(best, worst, float(2.0 * leave.min()))


def random_reversible_chain(n: int, rng: np.random.Generator, laziness: float = 0.0) -> KernelMatrix:
    """Random reversible kernel: symmetric positive flows normalized by row."""
    W = rng.random((n, n))
    W = W + W.T
    pi = W.sum(axis=1) / W.sum()
    P = W / W.sum(axis=1, keepdims=True)
    if laziness:
        P = laziness * np.eye(n) + (1.0 - laziness) * P
    return KernelMatrix(list(range(n)), P, pi)


def scale_off_diagonal(km: KernelMatrix, c: float) -> KernelMatrix:
    """I + c (P - I): same stationary law, every move probability times c."""
    n = km.size
    return KernelMatrix(km.states, np.eye(n) + c * (km.P - np.eye(n)), km.stationary)


def write_matrix_csv(km: KernelMatrix, path) -> None:
    """First row: state labels; then one row per state; last row: pi."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["state"] + [str(s) for s in km.states])
        for s, row in zip(km.states, km.P):
            w.writerow([str(s)] + [repr(float(v)) for v in row])
        w.writerow(["pi"] + [repr(float(v)) for v in km.stationary])


def read_matrix_csv(path) -> KernelMatrix:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    states = [int(s) for s in rows[0][1:]]
    P = np.array([[float(v) for v in r[1:]] for r in rows[1:-1]])
    pi = np.array([float(v) for v in rows[-1][1:]])
    return KernelMatrix(states, P, pi)

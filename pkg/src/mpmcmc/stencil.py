"""Discrete analogues of the Gaussian proposal kinds on the integer line.

Candidates are ``x + offset`` with offsets in ``{-2, ..., 2}``:

* ``iid``        offsets iid from a symmetric base pmf;
* ``antithetic`` iid base offsets conditioned on summing to zero, the
                 lattice counterpart of centering Gaussian increments;
* ``star``       a shared latent step ``u`` plus iid steps ``e_i``, both from
                 a symmetric pmf on ``{-1, 0, 1}``.

Sampling uses the constructive description of each kind; :meth:`joint` and
:meth:`shadow_table` enumerate the same laws exhaustively for exact
transition matrices.
"""

from __future__ import annotations

import itertools
import math
from functools import cached_property

import numpy as np

from .core import InvalidConfigurationError
from .proposals import CandidateDraw

STENCIL_IID = "iid"
STENCIL_ANTITHETIC = "antithetic"
STENCIL_STAR = "star"

DEFAULT_BASE = (0.1, 0.2, 0.4, 0.2, 0.1)      # offsets -2..2
DEFAULT_HALF = (0.25, 0.5, 0.25)              # offsets -1..1


def _offsets(pmf) -> np.ndarray:
    r = (len(pmf) - 1) // 2
    return np.arange(-r, r + 1)


class _Sampler:
    """Inverse-CDF sampler for an offset pmf, cdf precomputed."""

    def __init__(self, pmf):
        self.cdf = np.cumsum(pmf)
        self.cdf /= self.cdf[-1]
        self.values = _offsets(pmf)
        self.last = len(pmf) - 1

    def __call__(self, n, rng) -> np.ndarray:
        idx = np.searchsorted(self.cdf, rng.random(n), side="right")
        return self.values[np.minimum(idx, self.last)]


def _draw_offsets(pmf, n, rng) -> np.ndarray:
    return _Sampler(pmf)(n, rng)


class StencilProposal:
    """Proposal kernel from Z to Z^K built from small offset pmfs."""

    def __init__(self, kind: str, num_candidates: int, base=DEFAULT_BASE, half=DEFAULT_HALF):
        if kind not in (STENCIL_IID, STENCIL_ANTITHETIC, STENCIL_STAR):
            raise InvalidConfigurationError(f"unknown stencil kind {kind!r}")
        if num_candidates < 1:
            raise InvalidConfigurationError("need at least one candidate")
        if kind == STENCIL_ANTITHETIC and num_candidates < 2:
            raise InvalidConfigurationError("antithetic proposals need K >= 2")
        base = np.asarray(base, dtype=float)
        half = np.asarray(half, dtype=float)
        for p in (base, half):
            if len(p) % 2 != 1 or (p < 0).any() or not math.isclose(p.sum(), 1.0):
                raise InvalidConfigurationError("offset pmf must have odd length, be nonnegative and sum to 1")
        self.kind = kind
        self.num_candidates = int(num_candidates)
        self.base = base
        self.half = half
        self._base_draw = _Sampler(base)
        self._half_draw = _Sampler(half)

    def __repr__(self):
        return f"StencilProposal({self.kind!r}, K={self.num_candidates})"

    # -- protocol shared with ProposalFamily --------------------------------

    @property
    def exchangeable(self) -> bool:
        return self.kind == STENCIL_STAR

    @property
    def symmetric(self) -> bool:
        m = self.marginal_pmf
        return bool(np.allclose(m, m[::-1], rtol=0, atol=1e-15))

    def check_dim(self, d: int) -> None:
        if d != 1:
            raise InvalidConfigurationError("stencil proposals live on the integer line (d = 1)")

    def draw(self, x, rng, target=None, budget=None) -> CandidateDraw:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        K = self.num_candidates
        if self.kind == STENCIL_IID:
            off = self._base_draw(K, rng)
            return CandidateDraw(x + off[:, None].astype(float))
        if self.kind == STENCIL_ANTITHETIC:
            while True:
                off = self._base_draw(K, rng)
                if off.sum() == 0:
                    return CandidateDraw(x + off[:, None].astype(float))
        u = self._half_draw(1, rng)[0]
        e = self._half_draw(K, rng)
        return CandidateDraw(x + (u + e)[:, None].astype(float), latent=x + u)

    def center(self, y, target=None, budget=None):
        return None

    def shadows(self, x, y_i, i, rng, center_y=None) -> np.ndarray:
        """Y'_{-i} given Y'_i = x under Y' ~ Q(y_i, .)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y_i = np.atleast_1d(np.asarray(y_i, dtype=float))
        K = self.num_candidates
        if K == 1:
            return np.empty((0, 1))
        pinned = int(round(x[0] - y_i[0]))
        if self.kind == STENCIL_IID:
            off = self._base_draw(K - 1, rng)
        elif self.kind == STENCIL_ANTITHETIC:
            while True:
                off = self._base_draw(K - 1, rng)
                if off.sum() == -pinned:
                    break
        else:
            lat = _offsets(self.half)
            post = self.half * np.array([self._half_pmf(pinned - u) for u in lat])
            u = _draw_offsets(post / post.sum(), 1, rng)[0]
            off = u + self._half_draw(K - 1, rng)
        return y_i + off[:, None].astype(float)

    def log_q_ratio(self, x, y, center_x=None, center_y=None) -> float:
        """log Q_i(y, x) - log Q_i(x, y) from the marginal offset pmf."""
        fwd = int(round(float(np.asarray(y).ravel()[0] - np.asarray(x).ravel()[0])))
        return math.log(self.marginal_prob(-fwd)) - math.log(self.marginal_prob(fwd))

    def marginal(self) -> "StencilProposal":
        """Single-candidate kernel whose offsets follow the common marginal."""
        return StencilProposal(STENCIL_IID, 1, base=self.marginal_pmf)

    # -- exhaustive enumeration ---------------------------------------------

    def _half_pmf(self, u: int) -> float:
        r = (len(self.half) - 1) // 2
        return float(self.half[u + r]) if -r <= u <= r else 0.0

    @cached_property
    def _table(self):
        K = self.num_candidates
        probs = {}
        if self.kind in (STENCIL_IID, STENCIL_ANTITHETIC):
            offs = _offsets(self.base)
            for tup in itertools.product(range(len(offs)), repeat=K):
                off = tuple(int(offs[t]) for t in tup)
                if self.kind == STENCIL_ANTITHETIC and sum(off) != 0:
                    continue
                probs[off] = math.prod(float(self.base[t]) for t in tup)
        else:
            lat = _offsets(self.half)
            for ui, u in enumerate(lat):
                for tup in itertools.product(range(len(lat)), repeat=K):
                    off = tuple(int(u + lat[t]) for t in tup)
                    p = float(self.half[ui]) * math.prod(float(self.half[t]) for t in tup)
                    probs[off] = probs.get(off, 0.0) + p
        total = math.fsum(probs.values())
        keys = sorted(k for k, v in probs.items() if v > 0)
        inc = np.array(keys, dtype=int).reshape(len(keys), K)
        pr = np.array([probs[k] / total for k in keys])
        return inc, pr

    def joint(self):
        """All offset tuples with positive mass, as ``(offsets (M, K), probs (M,))``."""
        return self._table

    def joint_prob(self, offsets) -> float:
        return self._lookup.get(tuple(int(o) for o in offsets), 0.0)

    @cached_property
    def _lookup(self):
        inc, pr = self._table
        return {tuple(int(v) for v in row): float(p) for row, p in zip(inc, pr)}

    @cached_property
    def marginal_pmf(self) -> np.ndarray:
        inc, pr = self._table
        r = int(np.abs(inc).max()) if inc.size else 0
        r = max(r, 2)
        out = np.zeros(2 * r + 1)
        for o, p in zip(inc[:, 0], pr):
            out[o + r] += p
        return out

    def marginal_prob(self, offset: int) -> float:
        m = self.marginal_pmf
        r = (len(m) - 1) // 2
        return float(m[offset + r]) if -r <= offset <= r else 0.0

    def shadow_table(self, i: int, pinned: int):
        """Law of the other K-1 offsets given offset ``i`` equals ``pinned``.

        Returns ``(offsets (M, K-1), probs (M,))``; empty when ``pinned`` has
        zero marginal mass.
        """
        inc, pr = self._table
        K = self.num_candidates
        mask = inc[:, i] == pinned
        if not mask.any():
            return np.empty((0, K - 1), dtype=int), np.empty(0)
        rest = np.delete(inc[mask], i, axis=1)
        p = pr[mask]
        return rest, p / math.fsum(p)

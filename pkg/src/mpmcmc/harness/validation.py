"""Self-checks of the library against exact finite-state computations and
closed-form values.

``quick`` runs the discrete and arithmetic checks in seconds; ``full`` adds
the simulation-versus-matrix comparison and the Monte Carlo bound check.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from ..bounds import (
    BoundQuery,
    estimate_dirichlet_term,
    gaussian_mgf_query,
    grw_bound,
    grw_sup_bound,
    mgf_gap_bound,
)
from ..core import DomainError, SelectionProbabilities, validate_selection
from ..exact import (
    KernelMatrix,
    build_exact_kernel,
    conductance,
    detailed_balance_check,
    gap_domination_check,
    peskun_check,
    random_reversible_chain,
    spectral_gap,
)
from ..proposals import IID, ProposalFamily, haar_orthogonal, sample_antithetic_gaussian, sample_simplicial
from ..samplers import GMH, MH, MTM, SamplerSpec, mh_baseline_mixture, step
from ..selection import GLOBALLY_BALANCED, LOCALLY_BALANCED_SQRT, WeightRule
from ..stencil import StencilProposal
from ..targets import DiscreteTarget, gaussian_target

FIVE_STATE_MASSES = (1.0, 2.5, 1.5, 3.0, 2.0)


@dataclass
class Check:
    name: str
    ok: bool
    value: float = 0.0
    detail: str = ""
    seconds: float = 0.0


def five_state_target() -> DiscreteTarget:
    return DiscreteTarget.from_masses(FIVE_STATE_MASSES)


def exact_sampler_set(target, k_values=(1, 2, 3)):
    """(label, spec) for MTM {iid, antithetic} x {global, local} and GMH star.

    Antithetic candidates need a partner, so that family starts at K = 2.
    """
    out = []
    for K in k_values:
        for kind in ("iid", "antithetic"):
            if kind == "antithetic" and K < 2:
                continue
            for rule in (GLOBALLY_BALANCED, LOCALLY_BALANCED_SQRT):
                spec = SamplerSpec(MTM, StencilProposal(kind, K), target, WeightRule(rule))
                out.append((f"mtm-{kind}-{rule} K={K}", spec))
        out.append((f"gmh-star K={K}", SamplerSpec(GMH, StencilProposal("star", K), target)))
    return out


def _matrices(target):
    for label, spec in exact_sampler_set(target):
        pk = build_exact_kernel(spec, target)
        pt = build_exact_kernel(mh_baseline_mixture(spec), target)
        yield label, spec.num_candidates, pk, pt


# ---------------------------------------------------------------------------
# individual checks; each returns (ok, value, detail)
# ---------------------------------------------------------------------------

def check_reversibility(target=None):
    target = target or five_state_target()
    worst, where = 0.0, ""
    for label, _, pk, _ in _matrices(target):
        res = detailed_balance_check(pk)
        if res.value >= worst:
            worst, where = res.value, label
    return worst <= 1e-10, worst, f"max detailed-balance defect {worst:.2e} ({where})"


def check_peskun(target=None):
    target = target or five_state_target()
    worst, ratio, where = -math.inf, 0.0, ""
    for label, K, pk, pt in _matrices(target):
        res = peskun_check(pk, pt, K)
        worst = max(worst, res.value)
        moves = ~np.eye(pk.size, dtype=bool) & (pt.P > 0)
        r = float(np.max(pk.P[moves] / (K * pt.P[moves])))
        if r > ratio:
            ratio, where = r, label
    return worst <= 1e-12, worst, f"max excess {worst:.2e}; largest P(x,y) / (K P~(x,y)) = {ratio:.4f} ({where})"


def check_gap_domination(target=None):
    target = target or five_state_target()
    worst, where, ok = -math.inf, "", True
    for label, K, pk, pt in _matrices(target):
        res = gap_domination_check(pk, pt, K)
        ok &= res.ok
        if res.value - K > worst:
            worst, where = res.value - K, label
    return ok, worst, f"max of Gap ratio - K is {worst:.4f} ({where})"


def check_conductance(target=None, random_chains=100, seed=0):
    target = target or five_state_target()
    worst = -math.inf
    for _, _, pk, _ in _matrices(target):
        worst = max(worst, spectral_gap(pk) - 2.0 * conductance(pk).phi)
    rng = np.random.default_rng(seed)
    for j in range(random_chains):
        km = random_reversible_chain(int(rng.integers(2, 9)), rng, laziness=float(rng.random()) * 0.5)
        worst = max(worst, spectral_gap(km) - 2.0 * conductance(km).phi)
    return worst <= 1e-12, worst, f"max of Gap - 2 Phi is {worst:.4f} over sampler set and {random_chains} random chains"


def check_mh_degeneracy(target=None):
    target = target or five_state_target()
    pf = StencilProposal("iid", 1)
    mh = build_exact_kernel(SamplerSpec(MH, pf, target), target)
    worst = 0.0
    for rule in (GLOBALLY_BALANCED, LOCALLY_BALANCED_SQRT):
        mtm = build_exact_kernel(SamplerSpec(MTM, pf, target, WeightRule(rule)), target)
        worst = max(worst, float(np.max(np.abs(mtm.P - mh.P))))
    return worst <= 1e-12, worst, f"max |P_mtm - P_mh| = {worst:.2e}"


def check_geometry(draws=100_000, seed=0):
    rng = np.random.default_rng(seed)
    dist_err = orth_err = 0.0
    for d, K, lam in ((3, 3, 0.7), (5, 2, 1.3), (8, 4, 2.0), (50, 16, 0.1)):
        for _ in range(20):
            x = rng.standard_normal(d)
            draw = sample_simplicial(x, lam, K, rng)
            pts = np.vstack([x, draw.candidates])
            diff = pts[:, None, :] - pts[None, :, :]
            dist = np.sqrt((diff ** 2).sum(axis=2))
            off = ~np.eye(K + 1, dtype=bool)
            dist_err = max(dist_err, float(np.max(np.abs(dist[off] - lam))))
            R = draw.rotation
            orth_err = max(orth_err, float(np.max(np.abs(R.T @ R - np.eye(d)))))
        R = haar_orthogonal(d, rng)
        orth_err = max(orth_err, float(np.max(np.abs(R @ R.T - np.eye(d)))))

    sum_err = 0.0
    inc = np.empty((draws, 3))
    for r in range(draws):
        y = sample_antithetic_gaussian(np.zeros(1), 1.0, 3, rng).candidates[:, 0]
        inc[r] = y
        sum_err = max(sum_err, abs(float(y.sum())))
    corr = np.corrcoef(inc.T)
    worst_z = 0.0
    for a, b in ((0, 1), (0, 2), (1, 2)):
        r = corr[a, b]
        se = (1.0 - r * r) / math.sqrt(draws)
        worst_z = max(worst_z, abs(r + 0.5) / se)
    ok = dist_err <= 1e-10 and orth_err <= 1e-12 and sum_err <= 1e-12 and worst_z <= 3.0
    detail = (f"simplex distance error {dist_err:.1e}; orthogonality error {orth_err:.1e}; "
              f"antithetic sum {sum_err:.1e}; correlation off -1/2 by {worst_z:.2f} stderr")
    return ok, max(dist_err, orth_err, sum_err), detail


def check_balancing():
    grid = 10.0 ** (np.arange(-24, 25) / 4.0)
    defect = WeightRule(LOCALLY_BALANCED_SQRT).balance_defect(grid)
    return defect <= 1e-12, defect, f"max |g(t)/g(1/t)/t - 1| = {defect:.1e} on t in [1e-6, 1e6]"


def check_bound_arithmetic():
    a = grw_bound(BoundQuery(K=2, d=2, sigma=1.0, m=1.0, L=1.0))
    b = grw_sup_bound(3, 3, 1.0, 1.0)
    expected = 4.0 * math.exp(1.04) * (2.0 * math.log(3.0)) ** 2 / 3.0
    raised = 0
    for K, d in ((3, 2), (2, 3), (1, 10), (10, 1)):
        try:
            grw_sup_bound(K, d, 1.0, 1.0)
        except DomainError:
            raised += 1
    ok = a == 2.0 and abs(b - expected) <= 1e-12 and raised == 4
    return ok, abs(b - expected), f"grw_bound={a!r}; sup bound {b!r} vs {expected!r}; domain errors {raised}/4"


def transition_frequencies(spec, target, x, steps, seed):
    """Empirical next-state distribution from ``steps`` independent transitions out of x."""
    rng = np.random.default_rng(seed)
    point = np.array([float(x)])
    lp = target.logpi(x)
    counts = np.zeros(target.size)
    for _ in range(steps):
        counts[target.index(step(spec, point, rng, logpi_x=lp).state)] += 1
    return counts / steps


def equivalence_specs(target):
    return [
        ("mh", SamplerSpec(MH, StencilProposal("iid", 1), target)),
        ("mtm-iid-global K=2", SamplerSpec(MTM, StencilProposal("iid", 2), target, WeightRule())),
        ("gmh-star K=2", SamplerSpec(GMH, StencilProposal("star", 2), target)),
    ]


def check_equivalence(steps=1_000_000, seed=0, target=None, specs=None, tol=0.005):
    target = target or five_state_target()
    worst, where = 0.0, ""
    for j, (label, spec) in enumerate(specs or equivalence_specs(target)):
        km = build_exact_kernel(spec, target)
        for a, x in enumerate(target.points):
            freq = transition_frequencies(spec, target, int(x), steps, seed + 1000 * j + a)
            dev = float(np.max(np.abs(freq - km.P[a])))
            if dev > worst:
                worst, where = dev, f"{label}, x={x}"
    return worst <= tol, worst, f"max |empirical - exact| = {worst:.4f} ({where}) at {steps} steps per state"


def check_mgf_consistency(samples=100_000, seed=0, sigmas=(0.5, 1.0, 2.0), ks=(1, 4, 16)):
    target = gaussian_target(1, 1.0)
    worst, where = -math.inf, ""
    for sigma in sigmas:
        for K in ks:
            spec = SamplerSpec(MTM, ProposalFamily(IID, sigma, K), target)
            est = estimate_dirichlet_term(spec, [1.0], samples, seed + K, blocks=20, variance=1.0)
            bound = mgf_gap_bound(gaussian_mgf_query(K, 1, sigma, L=1.0, variance=1.0))
            margin = est.value - (bound + 3.0 * est.stderr)
            if margin > worst:
                worst, where = margin, f"sigma={sigma}, K={K}: estimate {est.value:.4f} +- {est.stderr:.4f}, bound {bound:.4f}"
    return worst <= 0.0, worst, f"largest estimate - (bound + 3 se) = {worst:.4f} ({where})"


# fault fixtures: each must be caught

def fault_asymmetric_perturbation():
    km = build_exact_kernel(SamplerSpec(MH, StencilProposal("iid", 1), five_state_target()), five_state_target())
    P = km.P.copy()
    P[0, 1] += 0.01
    P[0, 0] -= 0.01
    res = detailed_balance_check(KernelMatrix(km.states, P, km.stationary))
    return not res.ok, res.value, f"perturbation detected at {res.where}"


def fault_peskun_violation():
    target = five_state_target()
    spec = SamplerSpec(MTM, StencilProposal("iid", 2), target, WeightRule())
    pk = build_exact_kernel(spec, target)
    pt = build_exact_kernel(mh_baseline_mixture(spec), target)
    P = pk.P.copy()
    P[1, 2] = 2.0 * (2 * pt.P[1, 2]) + 1e-3
    P[1, 1] = 1.0 - (P[1].sum() - P[1, 1])
    res = peskun_check(KernelMatrix(pk.states, P, pk.stationary), pt, 2)
    return not res.ok, res.value, f"violation reported at {res.where}"


def fault_malformed_selection():
    res = validate_selection(SelectionProbabilities(-0.1, np.array([0.6, 0.5])))
    return not res.ok and res.where == ("stay",), res.value, f"violation at {res.where}"


QUICK = [
    ("reversibility", check_reversibility),
    ("peskun", check_peskun),
    ("gap-domination", check_gap_domination),
    ("conductance", check_conductance),
    ("mh-degeneracy", check_mh_degeneracy),
    ("geometry", check_geometry),
    ("balancing", check_balancing),
    ("bound-arithmetic", check_bound_arithmetic),
    ("fault:asymmetric", fault_asymmetric_perturbation),
    ("fault:peskun", fault_peskun_violation),
    ("fault:selection", fault_malformed_selection),
]
FULL = QUICK + [
    ("equivalence", check_equivalence),
    ("mgf-consistency", check_mgf_consistency),
]


def validate(level: str = "quick") -> dict:
    if level not in ("quick", "full"):
        raise ValueError("level must be 'quick' or 'full'")
    checks = []
    for name, fn in (QUICK if level == "quick" else FULL):
        start = time.perf_counter()
        try:
            ok, value, detail = fn()
        except Exception as err:   # a crashing check is a failed check
            ok, value, detail = False, math.nan, f"{type(err).__name__}: {err}"
        checks.append(Check(name, bool(ok), float(value), detail, round(time.perf_counter() - start, 3)))
    return {"level": level, "ok": all(c.ok for c in checks), "checks": [asdict(c) for c in checks]}


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, allow_nan=True)

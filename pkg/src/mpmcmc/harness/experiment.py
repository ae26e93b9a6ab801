"""ESJD benchmark: tune each sampler's step size, run replicate chains,
emit one row per (sampler, K) with reference growth curves."""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from ..core import InvalidConfigurationError, MPMCMCError
from ..proposals import ANTITHETIC, IID, LANGEVIN, SIMPLICIAL, STAR, ProposalFamily
from ..rng import derive_seed
from ..samplers import GMH, MH, MTM, ChainTrace, SamplerSpec, run_chain
from ..selection import GLOBALLY_BALANCED, LOCALLY_BALANCED_SQRT, WeightRule
from ..targets import LogisticRegressionPosterior, gaussian_target, generate_experiment_data, read_dataset
from .config import ExperimentConfig

SCHEMA = "#schema=v1"
RW_SCALE = 2.3

# id -> (algorithm, proposal kind, weight rule, single-proposal baseline)
SAMPLERS = {
    "mh-rw": (MH, IID, None, True),
    "mala": (MH, LANGEVIN, None, True),
    "mtm-iid-global": (MTM, IID, GLOBALLY_BALANCED, False),
    "mtm-iid-local": (MTM, IID, LOCALLY_BALANCED_SQRT, False),
    "mtm-anti-global": (MTM, ANTITHETIC, GLOBALLY_BALANCED, False),
    "mtm-anti-local": (MTM, ANTITHETIC, LOCALLY_BALANCED_SQRT, False),
    "gmh-star": (GMH, STAR, None, False),
    "gmh-simplicial": (GMH, SIMPLICIAL, None, False),
    "mtm-langevin-global": (MTM, LANGEVIN, GLOBALLY_BALANCED, False),
    "mtm-langevin-local": (MTM, LANGEVIN, LOCALLY_BALANCED_SQRT, False),
}
RANDOM_WALK = ("mtm-iid-global", "mtm-iid-local", "mtm-anti-global", "mtm-anti-local", "gmh-star")
LANGEVIN_IDS = ("mtm-langevin-global", "mtm-langevin-local")


class TuningError(MPMCMCError):
    pass


def make_spec(sampler: str, K: int, sigma: float, target) -> SamplerSpec:
    if sampler not in SAMPLERS:
        raise InvalidConfigurationError(f"unknown sampler {sampler!r}")
    algorithm, kind, weights, baseline = SAMPLERS[sampler]
    if baseline and K != 1:
        raise InvalidConfigurationError(f"{sampler} is a single-proposal sampler")
    if kind == ANTITHETIC and K == 1:
        kind = IID      # a single candidate has no partner to be antithetic to
    # drifted proposals are weighted by the full MH ratio pi(y) q(y, x) / (pi(x) q(x, y))
    wr = WeightRule(weights, proposal_corrected=kind == LANGEVIN) if weights else None
    return SamplerSpec(algorithm, ProposalFamily(kind, sigma, K), target, wr)


def is_baseline(sampler: str) -> bool:
    return SAMPLERS[sampler][3]


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------

def esjd(trace, d: Optional[int] = None, burn_in: int = 0) -> tuple[float, float]:
    """Mean squared jump per coordinate after burn-in, with a batch-means
    standard error over ceil(sqrt(T)) batches."""
    states = trace.states if isinstance(trace, ChainTrace) else np.asarray(trace, dtype=float)
    if states.ndim == 1:
        states = states[:, None]
    d = states.shape[1] if d is None else d
    jumps = np.sum(np.diff(states[burn_in:], axis=0) ** 2, axis=1) / d
    T = len(jumps)
    if T == 0:
        raise InvalidConfigurationError("need at least two states after burn-in")
    value = float(jumps.sum() / T)
    B = math.ceil(math.sqrt(T))
    if B < 2:
        return value, math.nan
    means = np.array([b.mean() for b in np.array_split(jumps, B)])
    return value, float(np.std(means, ddof=1) / math.sqrt(B))


# ---------------------------------------------------------------------------
# targets (cached per process)
# ---------------------------------------------------------------------------

_TARGETS: dict = {}


def build_target(cfg: ExperimentConfig):
    """(TargetModel, starting point) for the configured target."""
    key = (cfg.target, cfg.data_seed, cfg.n, cfg.d, cfg.dataset, cfg.gaussian_variance)
    if key not in _TARGETS:
        if cfg.target == "gaussian":
            _TARGETS[key] = (gaussian_target(cfg.d, cfg.gaussian_variance), np.zeros(cfg.d))
        else:
            if cfg.dataset:
                design, responses = read_dataset(cfg.dataset)
            else:
                design, responses, _ = generate_experiment_data(cfg.data_seed, cfg.n, cfg.d)
            post = LogisticRegressionPosterior(design, responses)
            _TARGETS[key] = (post.as_target(), post.mode())
    return _TARGETS[key]


def sigma_grid(cfg: ExperimentConfig, target) -> np.ndarray:
    if cfg.sigma_grid is not None:
        return np.array(sorted(cfg.sigma_grid), dtype=float)
    center = cfg.tune_center
    if center is None:
        L = target.smoothness if target.smoothness is not None else 1.0
        center = 2.38 / math.sqrt(L * target.dim)
    n = int(round(cfg.tune_points_per_decade * cfg.tune_decades)) + 1
    half = cfg.tune_decades / 2.0
    return center * 10.0 ** np.linspace(-half, half, n)


@dataclass
class TuneResult:
    sigma: float
    grid: np.ndarray
    esjd: np.ndarray


def tune_step(cfg: ExperimentConfig, sampler: str, K: int) -> TuneResult:
    """Step size maximizing ESJD over the grid; every grid point reuses the
    same seed (common random numbers) and ties go to the smaller step."""
    target, x0 = build_target(cfg)
    grid = sigma_grid(cfg, target)
    T = max(2, int(cfg.iterations * cfg.tune_fraction))
    burn = T // 10
    seed = derive_seed(cfg.seed, sampler, K, "tune")
    values = np.zeros(len(grid))
    for j, s in enumerate(grid):
        trace = run_chain(make_spec(sampler, K, float(s), target), x0, T, seed)
        values[j] = esjd(trace, target.dim, burn)[0]
    if not values.max() > 0.0:
        raise TuningError(f"{sampler} K={K}: every step size in [{grid[0]:.3g}, {grid[-1]:.3g}] froze the chain")
    return TuneResult(float(grid[int(np.argmax(values))]), grid, values)


# ---------------------------------------------------------------------------
# rows
# ---------------------------------------------------------------------------

@dataclass
class ExperimentRow:
    sampler: str
    K: int
    sigma: Optional[float] = None
    esjd: Optional[float] = None
    esjd_stderr: Optional[float] = None
    accept_rate: Optional[float] = None
    iterations: Optional[int] = None
    density_evals: Optional[int] = None
    gradient_evals: Optional[int] = None
    evals_per_iter: Optional[float] = None
    seed: Optional[int] = None
    ref_rw: Optional[float] = None
    ref_mala: Optional[float] = None
    status: str = "ok"
    wall_ms: Optional[int] = field(default=None, compare=False)


CSV_FIELDS = [f.name for f in fields(ExperimentRow) if f.name != "wall_ms"]
_INT_FIELDS = {"K", "iterations", "density_evals", "gradient_evals", "seed"}
_STR_FIELDS = {"sampler", "status"}


def run_row(cfg: ExperimentConfig, sampler: str, K: int) -> ExperimentRow:
    start = time.perf_counter()
    row = ExperimentRow(sampler, K, seed=derive_seed(cfg.seed, sampler, K))
    try:
        target, x0 = build_target(cfg)
        sigma = tune_step(cfg, sampler, K).sigma
        spec = make_spec(sampler, K, sigma, target)
        vals, ses, acc, dens, grads = [], [], [], 0, 0
        for r in range(cfg.replicates):
            trace = run_chain(spec, x0, cfg.iterations, derive_seed(cfg.seed, sampler, K, r))
            v, se = esjd(trace, target.dim, cfg.burn_in)
            vals.append(v)
            ses.append(se)
            acc.append(trace.acceptance_rate(cfg.burn_in))
            dens += trace.budget.density_evals
            grads += trace.budget.gradient_evals
        R = cfg.replicates
        iters = R * cfg.iterations
        row.sigma = sigma
        row.esjd = float(np.mean(vals))
        row.esjd_stderr = float(math.sqrt(sum(s * s for s in ses)) / R)
        row.accept_rate = float(np.mean(acc))
        row.iterations = iters
        row.density_evals = dens
        row.gradient_evals = grads
        row.evals_per_iter = dens / iters
    except MPMCMCError as err:
        row.status = f"error: {type(err).__name__}: {err}"
    row.wall_ms = int(round(1000 * (time.perf_counter() - start)))
    return row


def _run_row_task(args):
    return run_row(*args)


def experiment_tasks(cfg: ExperimentConfig) -> list[tuple[str, int]]:
    tasks = []
    for sampler in cfg.samplers:
        if sampler not in SAMPLERS:
            raise InvalidConfigurationError(f"unknown sampler {sampler!r}")
        ks = [1] if is_baseline(sampler) else [int(k) for k in cfg.k_grid]
        tasks.extend((sampler, k) for k in ks)
    return tasks


def attach_references(rows: list[ExperimentRow]) -> tuple[Optional[float], Optional[float]]:
    """c1 (1 + log K) with c1 = 2.3 E_RW and c2 sqrt(1 + log K) with c2 = E_MALA,
    where E_RW and E_MALA are this run's K = 1 baselines."""
    def baseline(name):
        for r in rows:
            if r.sampler == name and r.K == 1 and r.status == "ok":
                return r.esjd
        return None

    e_rw, e_mala = baseline("mh-rw"), baseline("mala")
    for r in rows:
        lk = 1.0 + math.log(r.K)
        r.ref_rw = None if e_rw is None else RW_SCALE * e_rw * lk
        r.ref_mala = None if e_mala is None else e_mala * math.sqrt(lk)
    return e_rw, e_mala


def run_experiment(cfg: ExperimentConfig, workers: Optional[int] = None) -> list[ExperimentRow]:
    """All (sampler, K) rows in task order. Row contents do not depend on
    the worker count: every chain draws from substreams addressed by the
    base seed, sampler, K and replicate."""
    workers = cfg.workers if workers is None else workers
    tasks = experiment_tasks(cfg)
    if workers <= 1:
        rows = [run_row(cfg, s, k) for s, k in tasks]
    else:
        # longest tasks first for load balance; results are put back by index
        order = sorted(range(len(tasks)), key=lambda j: -tasks[j][1])
        rows = [None] * len(tasks)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {j: pool.submit(_run_row_task, (cfg, *tasks[j])) for j in order}
            for j, fut in futures.items():
                rows[j] = fut.result()
    attach_references(rows)
    return rows


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_csv(rows: list[ExperimentRow]) -> str:
    buf = io.StringIO()
    buf.write(SCHEMA + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in rows:
        w.writerow([_fmt(getattr(r, f)) for f in CSV_FIELDS])
    return buf.getvalue()


def parse_csv(text: str) -> list[ExperimentRow]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != SCHEMA:
        raise InvalidConfigurationError(f"missing schema tag {SCHEMA!r}")
    reader = csv.DictReader(lines[1:])
    if reader.fieldnames != CSV_FIELDS:
        raise InvalidConfigurationError("unexpected CSV header")
    rows = []
    for rec in reader:
        kw = {}
        for name, text_value in rec.items():
            if name in _STR_FIELDS:
                kw[name] = text_value
            elif text_value == "":
                kw[name] = None
            elif name in _INT_FIELDS:
                kw[name] = int(text_value)
            else:
                kw[name] = float(text_value)
        rows.append(ExperimentRow(**kw))
    return rows


def write_results(rows: list[ExperimentRow], path) -> None:
    """Results CSV plus a ``.timing.csv`` sidecar holding wall-clock times,
    which are kept out of the main file so reruns compare byte for byte."""
    path = Path(path)
    path.write_text(emit_csv(rows))
    timing = path.with_name(path.stem + ".timing.csv")
    timing.write_text("sampler,K,wall_ms\n" + "".join(f"{r.sampler},{r.K},{_fmt(r.wall_ms)}\n" for r in rows))


def plot_data(rows: list[ExperimentRow]) -> str:
    """x = K, one ESJD column per sampler and the two reference curves."""
    samplers = [s for s in dict.fromkeys(r.sampler for r in rows)]
    ks = sorted({r.K for r in rows})
    table = {(r.sampler, r.K): r for r in rows}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["K"] + samplers + ["ref_rw", "ref_mala"])
    for k in ks:
        vals = [_fmt(table[(s, k)].esjd) if (s, k) in table else "" for s in samplers]
        ref = next((table[key] for key in table if key[1] == k), None)
        w.writerow([k] + vals + [_fmt(ref.ref_rw if ref else None), _fmt(ref.ref_mala if ref else None)])
    return buf.getvalue()

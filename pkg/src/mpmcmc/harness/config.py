"""Flat ``key = value`` experiment configuration.

Lines are ``dotted.key = value``; ``#`` starts a comment; list values are
comma separated. Unknown keys are errors. See docs/config.md.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

from ..core import InvalidConfigurationError

DEFAULT_SAMPLERS = (
    "mh-rw", "mala",
    "mtm-iid-global", "mtm-iid-local", "mtm-anti-global", "mtm-anti-local",
    "gmh-star",
    "mtm-langevin-global", "mtm-langevin-local",
)


@dataclass(frozen=True)
class ExperimentConfig:
    target: str = "logistic"            # logistic | gaussian
    data_seed: int = 2024
    n: int = 50
    d: int = 50
    dataset: Optional[str] = None       # CSV written by `mpmcmc dataset`
    gaussian_variance: float = 1.0
    samplers: tuple = DEFAULT_SAMPLERS
    k_grid: tuple = (1, 2, 4, 8, 16, 32, 64)
    sigma_grid: Optional[tuple] = None  # fixed grid; otherwise auto range
    tune_points_per_decade: int = 12
    tune_decades: float = 2.0
    tune_center: Optional[float] = None  # defaults to 2.38 / sqrt(L d)
    tune_fraction: float = 0.25
    iterations: int = 20_000
    burn_in: int = 2_000
    replicates: int = 5
    seed: int = 1
    workers: int = 1
    output: str = "results.csv"
    plot_data: Optional[str] = None

    def __post_init__(self):
        if not self.samplers or not self.k_grid:
            raise InvalidConfigurationError("sampler list and K grid must be nonempty")
        if self.sigma_grid is not None and not self.sigma_grid:
            raise InvalidConfigurationError("sigma grid must be nonempty")
        if self.iterations <= self.burn_in:
            raise InvalidConfigurationError("iterations must exceed burn-in")
        if self.replicates < 1:
            raise InvalidConfigurationError("need at least one replicate")
        if self.target not in ("logistic", "gaussian"):
            raise InvalidConfigurationError(f"unknown target {self.target!r}")
        if not 0 < self.tune_fraction <= 1:
            raise InvalidConfigurationError("tune.fraction must lie in (0, 1]")
        if any(int(k) < 1 for k in self.k_grid):
            raise InvalidConfigurationError("K values must be positive")

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)


# file key -> (attribute, parser)
def _ints(v):
    return tuple(int(s) for s in v.split(",") if s.strip())


def _floats(v):
    return tuple(float(s) for s in v.split(",") if s.strip())


def _names(v):
    return tuple(s.strip() for s in v.split(",") if s.strip())


def _opt(parse):
    return lambda v: None if v.strip().lower() in ("", "none", "auto") else parse(v)


KEYS = {
    "target.kind": ("target", str),
    "target.data_seed": ("data_seed", int),
    "target.n": ("n", int),
    "target.d": ("d", int),
    "target.dataset": ("dataset", _opt(str)),
    "target.variance": ("gaussian_variance", float),
    "samplers": ("samplers", _names),
    "k_grid": ("k_grid", _ints),
    "sigma.grid": ("sigma_grid", _opt(_floats)),
    "tune.points_per_decade": ("tune_points_per_decade", int),
    "tune.decades": ("tune_decades", float),
    "tune.center": ("tune_center", _opt(float)),
    "tune.fraction": ("tune_fraction", float),
    "run.iterations": ("iterations", int),
    "run.burn_in": ("burn_in", int),
    "run.replicates": ("replicates", int),
    "run.seed": ("seed", int),
    "run.workers": ("workers", int),
    "output.csv": ("output", str),
    "output.plot_data": ("plot_data", _opt(str)),
}


def parse_config(text: str) -> ExperimentConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfigurationError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise InvalidConfigurationError(f"line {lineno}: unknown key {key!r}")
        attr, parse = KEYS[key]
        try:
            values[attr] = parse(value)
        except ValueError as err:
            raise InvalidConfigurationError(f"line {lineno}: bad value for {key}: {err}") from None
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def dump_config(cfg: ExperimentConfig) -> str:
    by_attr = {attr: key for key, (attr, _) in KEYS.items()}
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if v is None:
            text = "none"
        elif isinstance(v, tuple):
            text = ", ".join(str(x) for x in v)
        else:
            text = str(v)
        lines.append(f"{by_attr[f.name]} = {text}")
    return "\n".join(lines) + "\n"


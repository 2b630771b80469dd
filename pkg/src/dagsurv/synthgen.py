"""Synthetic survival data drawn from a weighted DAG, censoring, binning and splits.

Node ``L`` of the DAG is the event time; nodes ``0..L-1`` are covariates.
Values are drawn ancestrally (parents before children):

    x_i = sum_{j in pa(i)} A[j, i] cos(x_j + 1) + z_i,             z_i ~ N(0, 1)
    t   = max(0, c exp(sum_{j in pa(t)} A[j, t] cos(x_j + 1)) + z_t)
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateRangeError,
    DimensionError,
    FormatError,
    TargetNotSinkWarning,
    TooSmallError,
)
from .graph import Dag


@dataclass(frozen=True, eq=False)
class SurvivalDataset:
    """Covariates, event/censoring times and event indicators.

    ``time_bins`` and ``horizon`` are ``None`` until :func:`discretize` runs.
    ``max_time`` is the raw time that maps to bin ``horizon``.
    """

    covariates: np.ndarray
    raw_times: np.ndarray
    events: np.ndarray
    time_bins: np.ndarray | None = None
    horizon: int | None = None
    max_time: float | None = None

    def __post_init__(self):
        x = np.asarray(self.covariates, dtype=np.float64)
        if x.ndim == 1:
            x = x[:, None]
        t = np.asarray(self.raw_times, dtype=np.float64).ravel()
        e = np.asarray(self.events).ravel().astype(np.int64)
        if x.shape[0] < 1 or x.shape[1] < 1:
            raise DimensionError("need at least one instance and one covariate")
        if t.shape[0] != x.shape[0] or e.shape[0] != x.shape[0]:
            raise DimensionError("covariates, times and events disagree on N")
        if not np.all(np.isfinite(t)) or np.any(t < 0):
            raise ValueError("raw times must be finite and nonnegative")
        if not np.all((e == 0) | (e == 1)):
            raise ValueError("events must be 0 or 1")
        object.__setattr__(self, "covariates", x)
        object.__setattr__(self, "raw_times", t)
        object.__setattr__(self, "events", e)
        if self.time_bins is not None:
            b = np.asarray(self.time_bins).ravel().astype(np.int64)
            if b.shape[0] != x.shape[0]:
                raise DimensionError("time_bins length disagrees with N")
            if self.horizon is None or np.any(b < 0) or np.any(b > self.horizon):
                raise ValueError("time_bins must lie in [0, horizon]")
            object.__setattr__(self, "time_bins", b)

    def __len__(self):
        return self.covariates.shape[0]

    @property
    def num_covariates(self) -> int:
        return self.covariates.shape[1]

    @property
    def censored_fraction(self) -> float:
        return 1.0 - float(self.events.mean())

    def subset(self, index) -> "SurvivalDataset":
        index = np.asarray(index)
        return replace(
            self,
            covariates=self.covariates[index],
            raw_times=self.raw_times[index],
            events=self.events[index],
            time_bins=None if self.time_bins is None else self.time_bins[index],
        )


@dataclass(frozen=True)
class GenConfig:
    """Generator settings.

    ``target_noise_spread`` is read as a variance unless
    ``target_noise_spread_is_std`` is set, in which case it is the standard
    deviation. A spread of zero gives a deterministic target.
    """

    n_samples: int = 10_000
    scale_c: float = 90.0
    covariate_noise_std: float = 1.0
    target_noise_mean: float = 30.0
    target_noise_spread: float = 70.0
    target_noise_spread_is_std: bool = False
    censor_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be positive")
        if self.scale_c <= 0:
            raise ValueError("scale_c must be positive")
        if self.covariate_noise_std < 0 or self.target_noise_spread < 0:
            raise ValueError("noise spreads must be nonnegative")
        if not 0 <= self.censor_fraction < 1:
            raise ValueError("censor_fraction must lie in [0, 1)")

    @property
    def target_noise_std(self) -> float:
        if self.target_noise_spread_is_std:
            return float(self.target_noise_spread)
        return math.sqrt(self.target_noise_spread)


def generate(dag: Dag, config: GenConfig) -> SurvivalDataset:
    """Draw ``config.n_samples`` uncensored instances from the DAG's SEM."""
    L = dag.num_nodes - 1
    if L < 1:
        raise DimensionError("the DAG needs at least one covariate node plus the target")
    target = dag.target
    if dag.children(target).size:
        warnings.warn(
            f"target node {target} has children {dag.children(target).tolist()}; "
            "those covariates depend on the event time",
            TargetNotSinkWarning,
            stacklevel=2,
        )
    rng = np.random.default_rng(config.seed)
    n = config.n_samples
    # one standard-normal draw per (instance, node), consumed by node index
    noise = rng.standard_normal((n, dag.num_nodes))
    values = np.zeros((n, dag.num_nodes))
    a = dag.adjacency
    for node in dag.topo_order:
        pa = dag.parents(node)
        drive = np.cos(values[:, pa] + 1.0) @ a[pa, node] if pa.size else np.zeros(n)
        if node == target:
            z_t = config.target_noise_mean + config.target_noise_std * noise[:, node]
            values[:, node] = np.maximum(0.0, config.scale_c * np.exp(drive) + z_t)
        else:
            values[:, node] = drive + config.covariate_noise_std * noise[:, node]
    return SurvivalDataset(
        covariates=values[:, :L],
        raw_times=values[:, target],
        events=np.ones(n, dtype=np.int64),
    )


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def apply_censoring(
    dataset: SurvivalDataset, fraction: float, seed=0, mode: str = "subset"
) -> SurvivalDataset:
    """Right-censor part of an all-event dataset.

    ``mode="subset"`` picks exactly ``round(fraction * N)`` instances and moves
    each one's time to ``U(0, t_n)``. ``mode="global"`` draws a censoring time
    ``U(0, max t)`` for every instance and censors wherever it falls before
    the event; ``fraction`` is ignored and the censored share is random.
    """
    if not 0 <= fraction < 1:
        raise ValueError("fraction must lie in [0, 1)")
    if np.any(dataset.events != 1):
        raise ValueError("censoring expects a dataset in which every event is observed")
    rng = np.random.default_rng(seed)
    times = dataset.raw_times.copy()
    events = dataset.events.copy()
    n = len(dataset)
    if mode == "subset":
        k = _round_half_up(fraction * n)
        if k == 0:
            return dataset
        chosen = np.sort(rng.choice(n, size=k, replace=False))
        times[chosen] = rng.uniform(0.0, times[chosen])
        events[chosen] = 0
    elif mode == "global":
        cens = rng.uniform(0.0, times.max(), size=n)
        hit = cens < times
        times[hit] = cens[hit]
        events[hit] = 0
    else:
        raise ValueError(f"unknown censoring mode {mode!r}")
    return replace(dataset, raw_times=times, events=events, time_bins=None, horizon=None,
                   max_time=None)


def discretize(dataset: SurvivalDataset, num_bins: int | None = None,
               max_time: float | None = None) -> SurvivalDataset:
    """Bin raw times onto the grid ``{0, ..., M}``.

    With ``num_bins=M`` the interval ``[0, max_time]`` is cut into equal
    widths and ``max_time`` (default: the largest raw time) lands in bin M;
    larger times are clipped to M. With ``num_bins=None`` bins have unit
    width, ``M = floor(max raw time)``.
    """
    t = dataset.raw_times
    if max_time is None:
        if np.all(t == t[0]):
            raise DegenerateRangeError("all raw times are equal; cannot bin")
        if num_bins is None:
            num_bins = int(math.floor(t.max()))
            max_time = float(num_bins)
        else:
            max_time = float(t.max())
    if num_bins is None or num_bins < 2:
        raise ValueError("need at least 2 bins (max raw time below 2 in unit mode?)")
    if max_time <= 0:
        raise DegenerateRangeError("max_time must be positive")
    bins = np.floor(t * (num_bins / max_time)).astype(np.int64)
    bins[t >= max_time] = num_bins  # guard against rounding just below M
    bins = np.clip(bins, 0, num_bins)
    return replace(dataset, time_bins=bins, horizon=int(num_bins), max_time=float(max_time))


def split(dataset: SurvivalDataset, train_frac=0.8, val_frac_of_train=0.2, seed=0):
    """Random train/validation/test partition.

    Sizes are ``round(train_frac*(1-val_frac_of_train)*N)``,
    ``round(train_frac*val_frac_of_train*N)`` and the remainder.
    """
    n = len(dataset)
    n_train = _round_half_up(train_frac * (1 - val_frac_of_train) * n)
    n_val = _round_half_up(train_frac * val_frac_of_train * n)
    n_test = n - n_train - n_val
    if min(n_train, n_val, n_test) < 1:
        raise TooSmallError(f"N={n} gives split sizes {n_train}/{n_val}/{n_test}")
    perm = np.random.default_rng(seed).permutation(n)
    parts = np.split(perm, [n_train, n_train + n_val])
    return tuple(dataset.subset(np.sort(p)) for p in parts)


def write_dataset(dataset: SurvivalDataset, path) -> None:
    """Write ``x1,...,xL,time,event`` CSV; floats are written round-trip exact."""
    L = dataset.num_covariates
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{i + 1}" for i in range(L)] + ["time", "event"])
        for x, t, e in zip(dataset.covariates, dataset.raw_times, dataset.events):
            w.writerow([repr(float(v)) for v in x] + [repr(float(t)), int(e)])


def read_dataset(path) -> SurvivalDataset:
    """Read a dataset CSV. The last two columns must be ``time`` and ``event``."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError("empty file", path) from None
        header = [h.strip() for h in header]
        if len(header) < 3 or header[-2:] != ["time", "event"]:
            raise FormatError("header must end with 'time,event' after >= 1 covariate",
                              path, 1)
        rows, times, events = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise FormatError(f"expected {len(header)} fields, got {len(row)}",
                                  path, lineno)
            try:
                vals = [float(c) for c in row[:-1]]
                ev = int(float(row[-1]))
            except ValueError as exc:
                raise FormatError(f"non-numeric field ({exc})", path, lineno) from None
            if ev not in (0, 1):
                raise FormatError(f"event must be 0 or 1, got {row[-1]!r}", path, lineno)
            if not math.isfinite(vals[-1]) or vals[-1] < 0:
                raise FormatError(f"time must be finite and >= 0, got {row[-2]!r}",
                                  path, lineno)
            rows.append(vals[:-1])
            times.append(vals[-1])
            events.append(ev)
    if not rows:
        raise FormatError("no data rows", path)
    return SurvivalDataset(np.array(rows), np.array(times), np.array(events))


@dataclass(frozen=True)
class SyntheticPreset:
    """Everything needed to rebuild one of the named synthetic datasets."""

    num_covariates: int
    expected_degree: float = 3.0
    gen: GenConfig = GenConfig(target_noise_spread_is_std=True)
    censor_mode: str = "subset"


# N(30, 70) is read with 70 as the standard deviation: only that reading gives
# maximum event times in the high 300s (377 and 395 are the targets).
SYNTHETIC_PRESETS = {
    "synthetic-small": SyntheticPreset(num_covariates=9),
    "synthetic-large": SyntheticPreset(num_covariates=49),
}


def derive_seeds(seed: int, n: int = 4) -> list[int]:
    """Independent child seeds (DAG, generation, censoring, split) from one seed."""
    children = np.random.SeedSequence(int(seed)).spawn(n)
    return [int(c.generate_state(1)[0]) for c in children]


def make_synthetic(preset, seed: int = 0):
    """Sample a DAG and a censored, unit-binned dataset for a preset.

    ``preset`` is a name from ``SYNTHETIC_PRESETS`` or a ``SyntheticPreset``.
    Returns ``(dag, dataset, split_seed)``; pass ``split_seed`` to :func:`split`.
    """
    from .graph import DagSampleConfig, sample_erdos_renyi_dag

    if isinstance(preset, str):
        try:
            preset = SYNTHETIC_PRESETS[preset]
        except KeyError:
            raise ValueError(f"unknown synthetic preset {preset!r}; "
                             f"choose from {sorted(SYNTHETIC_PRESETS)}") from None
    dag_seed, gen_seed, censor_seed, split_seed = derive_seeds(seed)
    dag = sample_erdos_renyi_dag(DagSampleConfig(
        preset.num_covariates + 1, preset.expected_degree, seed=dag_seed))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TargetNotSinkWarning)
        ds = generate(dag, replace(preset.gen, seed=gen_seed))
    ds = apply_censoring(ds, preset.gen.censor_fraction, seed=censor_seed,
                         mode=preset.censor_mode)
    return dag, discretize(ds), split_seed

"""Time-dependent concordance and bootstrap notches for it."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, NoComparablePairsError

NOTCH_FACTOR = 1.57


def _pair_matrices(cdf, times, events):
    cdf = np.atleast_2d(np.asarray(cdf, dtype=np.float64))
    t = np.asarray(times, dtype=np.int64).ravel()
    d = np.asarray(events).ravel()
    if cdf.shape[0] != t.shape[0] or d.shape[0] != t.shape[0]:
        raise ValueError("cdf rows, times and events must have the same length")
    own = cdf[np.arange(t.shape[0]), t]      # F(t_i | x_i)
    other = cdf[:, t].T                      # other[i, j] = F(t_i | x_j)
    comparable = (t[:, None] < t[None, :]) & (d[:, None] == 1)
    # scores doubled so ties count as 1 and everything stays integer
    score2 = 2 * (own[:, None] > other) + (own[:, None] == other)
    return comparable, np.where(comparable, score2, 0)


def ctd(cdf, times, events) -> float:
    """Time-dependent concordance index.

    ``cdf[j, k]`` is the predicted ``F(k | x_j)``. A pair ``(i, j)`` is
    comparable when ``t_i < t_j`` and ``i`` had an observed event; it is
    concordant when ``F(t_i | x_i) > F(t_i | x_j)``. Ties in F count one half.
    """
    comparable, score2 = _pair_matrices(cdf, times, events)
    pairs = int(comparable.sum())
    if pairs == 0:
        raise NoComparablePairsError("no comparable pairs")
    return int(score2.sum()) / (2 * pairs)


@dataclass
class CtdReport:
    point_estimate: float
    bootstrap_median: float
    iqr: float
    notch_low: float
    notch_high: float
    b: int
    values: np.ndarray = field(repr=False)

    @property
    def half_width(self) -> float:
        return (self.notch_high - self.notch_low) / 2

    def to_csv(self) -> str:
        lines = ["resample_id,ctd"]
        lines += [f"{i},{float(v)!r}" for i, v in enumerate(self.values)]
        for key in ("point_estimate", "bootstrap_median", "iqr", "notch_low", "notch_high"):
            lines.append(f"{key},{float(getattr(self, key))!r}")
        lines.append(f"b,{self.b}")
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def from_csv(cls, text: str, path=None) -> "CtdReport":
        lines = text.strip().split("\n")
        if not lines or lines[0] != "resample_id,ctd":
            raise FormatError("expected header 'resample_id,ctd'", path, 1)
        values, summary = [], {}
        for lineno, line in enumerate(lines[1:], start=2):
            key, _, val = line.partition(",")
            try:
                if key.isdigit():
                    values.append(float(val))
                else:
                    summary[key] = int(val) if key == "b" else float(val)
            except ValueError:
                raise FormatError(f"bad value {val!r}", path, lineno) from None
        try:
            return cls(values=np.array(values), **summary)
        except TypeError as exc:
            raise FormatError(f"incomplete summary: {exc}", path) from None


def notch(values, b: int | None = None):
    """``(median, iqr, low, high)`` with ``median -/+ 1.57 IQR / sqrt(b)``."""
    values = np.asarray(values, dtype=np.float64)
    b = len(values) if b is None else b
    q1, med, q3 = np.percentile(values, [25, 50, 75])
    iqr = q3 - q1
    half = NOTCH_FACTOR * iqr / np.sqrt(b)
    return float(med), float(iqr), float(med - half), float(med + half)


def bootstrap(cdf, times, events, b: int = 1000, seed=0, max_redraws: int = 100) -> CtdReport:
    """Resample the test set with replacement ``b`` times and summarise C_td.

    Resample ``r`` draws its indices from ``default_rng([seed, r, attempt])``;
    a resample without comparable pairs is redrawn up to ``max_redraws`` times.
    """
    comparable, score2 = _pair_matrices(cdf, times, events)
    if not comparable.any():
        raise NoComparablePairsError("no comparable pairs in the test set")
    n = comparable.shape[0]
    comparable = comparable.astype(np.float64)
    score2 = score2.astype(np.float64)
    values = np.empty(b)
    for r in range(b):
        for attempt in range(max_redraws + 1):
            idx = np.random.default_rng([seed, r, attempt]).integers(0, n, n)
            w = np.bincount(idx, minlength=n).astype(np.float64)
            pairs = w @ comparable @ w
            if pairs > 0:
                values[r] = (w @ score2 @ w) / (2 * pairs)
                break
        else:
            raise NoComparablePairsError(f"resample {r}: no comparable pairs after redraws")
    med, iqr, lo, hi = notch(values, b)
    return CtdReport(ctd(cdf, times, events), med, iqr, lo, hi, b, values)

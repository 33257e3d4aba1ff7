"""Sliding-window datasets, z-score normalisation and chronological splits."""
from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timedelta

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConstantSeries, InvalidConfig, SeriesTooShort, TooFewWindows
from .ingest import LoadSeries


@dataclass(frozen=True)
class NormStats:
    mean: float
    sd: float

    def __post_init__(self):
        if not (math.isfinite(self.mean) and math.isfinite(self.sd)) or self.sd <= 0:
            raise ConstantSeries(f"invalid normalisation stats mean={self.mean}, sd={self.sd}")


IDENTITY = NormStats(0.0, 1.0)


def compute_stats(values) -> NormStats:
    """Mean and population standard deviation (two-pass)."""
    x = np.asarray(values.values if isinstance(values, LoadSeries) else values, dtype=np.float64)
    if x.size < 2:
        raise SeriesTooShort("need at least two values for normalisation stats")
    mean = float(x.mean())
    sd = float(np.sqrt(np.mean((x - mean) ** 2)))
    if sd == 0.0:
        raise ConstantSeries("cannot normalise a constant series")
    return NormStats(mean, sd)


def normalize(values, stats: NormStats) -> np.ndarray:
    return (np.asarray(values, dtype=np.float64) - stats.mean) / stats.sd


def denormalize(values, stats: NormStats) -> np.ndarray:
    return np.asarray(values, dtype=np.float64) * stats.sd + stats.mean


@dataclass(frozen=True, eq=False)
class WindowedDataset:
    inputs: np.ndarray          # (N, W), normalised
    targets: np.ndarray         # (N, h), normalised
    stats: NormStats
    W: int
    h: int
    origin_indices: np.ndarray  # (N,) window start slots in the source series
    start: datetime             # start of slot 0 of the source series
    step_minutes: int = 15

    def __len__(self) -> int:
        return int(self.origin_indices.size)

    def subset(self, idx) -> "WindowedDataset":
        return WindowedDataset(self.inputs[idx], self.targets[idx], self.stats, self.W, self.h,
                               self.origin_indices[idx], self.start, self.step_minutes)

    def forecast_origin(self, i: int) -> datetime:
        """End of the input window of sample ``i``, i.e. start of its first target slot."""
        return self.start + timedelta(minutes=self.step_minutes * int(self.origin_indices[i] + self.W))

    def forecast_origins(self) -> list[datetime]:
        return [self.forecast_origin(i) for i in range(len(self))]

    def raw_inputs(self) -> np.ndarray:
        return denormalize(self.inputs, self.stats)

    def raw_targets(self) -> np.ndarray:
        return denormalize(self.targets, self.stats)


def window_count(length: int, W: int, h: int) -> int:
    return length - W - h + 1


def make_windows(series: LoadSeries, W: int, h: int, stats: NormStats) -> WindowedDataset:
    """All stride-1 (input, target) pairs of the normalised series."""
    if W < 1 or h < 1:
        raise InvalidConfig("W and h must be positive")
    n = window_count(len(series), W, h)
    if n < 1:
        raise SeriesTooShort(f"series of length {len(series)} is shorter than W + h = {W + h}")
    z = normalize(series.values, stats)
    z.setflags(write=False)
    inputs = sliding_window_view(z[: n + W - 1], W)
    targets = sliding_window_view(z[W:], h)[:n]
    return WindowedDataset(inputs, targets, stats, W, h, np.arange(n), series.start,
                           series.step_minutes)


@dataclass(frozen=True)
class SplitSpec:
    val_fraction: float = 0.2
    mode: str = "CHRONOLOGICAL"

    def __post_init__(self):
        if not 0 < self.val_fraction < 1:
            raise InvalidConfig("val_fraction must lie in (0, 1)")
        if self.mode != "CHRONOLOGICAL":
            raise InvalidConfig("only chronological splits are supported")


def split_counts(n_windows: int, spec: SplitSpec) -> tuple[int, int]:
    if n_windows < 2:
        raise TooFewWindows(f"{n_windows} window(s) cannot be split")
    n_val = math.ceil(spec.val_fraction * n_windows)
    n_val = min(max(n_val, 1), n_windows - 1)
    return n_windows - n_val, n_val


def training_region_end(length: int, W: int, h: int, spec: SplitSpec) -> int:
    """One past the last slot touched by any training window."""
    n_train, _ = split_counts(window_count(length, W, h), spec)
    return n_train - 1 + W + h


def split(dataset: WindowedDataset, spec: SplitSpec = SplitSpec()):
    """The last ``ceil(val_fraction * N)`` windows by origin form the validation set."""
    n_train, _ = split_counts(len(dataset), spec)
    order = np.argsort(dataset.origin_indices, kind="stable")
    return dataset.subset(order[:n_train]), dataset.subset(order[n_train:])


def prepare(series: LoadSeries, W: int, h: int, spec: SplitSpec = SplitSpec()):
    """Window and split a series with stats taken from the training region only."""
    n = window_count(len(series), W, h)
    if n < 1:
        raise SeriesTooShort(f"series of length {len(series)} is shorter than W + h = {W + h}")
    end = training_region_end(len(series), W, h, spec)
    stats = compute_stats(series.values[:end])
    return split(make_windows(series, W, h, stats), spec)


def batches(n: int, batch_size: int, seed: int, epoch: int) -> list[np.ndarray]:
    """Seeded permutation of ``range(n)`` cut into chunks; the last may be short."""
    if batch_size < 1:
        raise InvalidConfig("batch_size must be >= 1")
    rng = np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, epoch])
    perm = rng.permutation(n)
    return [perm[i:i + batch_size] for i in range(0, n, batch_size)]

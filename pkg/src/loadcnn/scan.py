"""Grid scan over kernel size, filter count and dense size.

Each cell trains one network with a seed derived from ``(seed, k, F, D)`` alone,
so results do not depend on execution order, worker count, or which other grid
points are present.
"""
from __future__ import annotations

import enum
import hashlib
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from .dataset import WindowedDataset
from .errors import AllFailedRow, InvalidConfig, NumericError
from .nn import NetworkConfig
from .train import TrainingConfig, TrainReport, train

log = logging.getLogger(__name__)

OK = "OK"
FAILED = "FAILED"


class Axis(enum.Enum):
    K = "kernel_size"
    F = "n_filters"
    D = "dense_size"


AXES = (Axis.K, Axis.F, Axis.D)


def _sorted_unique(values: Iterable[int], name: str) -> tuple[int, ...]:
    out = tuple(sorted({int(v) for v in values}))
    if not out:
        raise InvalidConfig(f"{name} must not be empty")
    return out


@dataclass(frozen=True)
class ScanGrid:
    kernel_sizes: tuple[int, ...] = (3, 5, 9, 15, 25)
    filter_counts: tuple[int, ...] = (2, 4, 8, 16, 32)
    dense_sizes: tuple[int, ...] = (1, 2, 4, 6, 8, 16)
    seeds: tuple[int, ...] = (0,)

    def __post_init__(self):
        for name in ("kernel_sizes", "filter_counts", "dense_sizes"):
            vals = _sorted_unique(getattr(self, name), name)
            if vals[0] < 1:
                raise InvalidConfig(f"{name} must be >= 1")
            object.__setattr__(self, name, vals)
        seeds = tuple(dict.fromkeys(int(s) for s in self.seeds))
        if not seeds:
            raise InvalidConfig("seeds must not be empty")
        object.__setattr__(self, "seeds", seeds)

    def axis_values(self, axis: Axis) -> tuple[int, ...]:
        return {Axis.K: self.kernel_sizes, Axis.F: self.filter_counts, Axis.D: self.dense_sizes}[axis]

    def keys(self) -> list[tuple[int, int, int, int]]:
        return [(k, f, d, s) for k in self.kernel_sizes for f in self.filter_counts
                for d in self.dense_sizes for s in self.seeds]

    def __len__(self) -> int:
        return (len(self.kernel_sizes) * len(self.filter_counts) * len(self.dense_sizes)
                * len(self.seeds))


@dataclass
class CellResult:
    kernel_size: int
    n_filters: int
    dense_size: int
    seed: int
    status: str
    val_mse_norm: float = math.nan
    val_mse_phys: float = math.nan
    wall_time_s: float | None = field(default=None, compare=False)
    reason: str = ""
    report: TrainReport | None = field(default=None, compare=False, repr=False)

    @property
    def key(self) -> tuple[int, int, int, int]:
        return (self.kernel_size, self.n_filters, self.dense_size, self.seed)

    @property
    def ok(self) -> bool:
        return self.status == OK


@dataclass
class ScanResult:
    grid: ScanGrid
    cells: dict[tuple[int, int, int, int], CellResult]

    @property
    def failed_count(self) -> int:
        return sum(not c.ok for c in self.cells.values())

    def ordered_cells(self) -> list[CellResult]:
        return [self.cells[key] for key in sorted(self.cells)]


def cell_seed(seed: int, k: int, f: int, d: int) -> int:
    digest = hashlib.blake2b(f"{seed}:{k}:{f}:{d}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") & (2 ** 63 - 1)


def run_cell(key, tcfg: TrainingConfig, train_data: WindowedDataset,
             val_data: WindowedDataset) -> CellResult:
    k, f, d, s = key
    config = NetworkConfig(train_data.W, k, f, d, train_data.h)
    t0 = time.perf_counter()
    try:
        _, report = train(config, replace(tcfg, seed=cell_seed(s, k, f, d)), train_data, val_data)
    except NumericError as exc:
        log.warning("cell k=%d F=%d D=%d seed=%d failed: %s", k, f, d, s, exc)
        return CellResult(k, f, d, s, FAILED, wall_time_s=time.perf_counter() - t0,
                          reason=str(exc))
    return CellResult(k, f, d, s, OK, report.final_val_mse, report.final_val_mse_phys,
                      time.perf_counter() - t0, report=report)


_WORKER: dict = {}


def _init_worker(tcfg, train_data, val_data):
    _WORKER.update(tcfg=tcfg, train=train_data, val=val_data)


def _worker_cell(key):
    return run_cell(key, _WORKER["tcfg"], _WORKER["train"], _WORKER["val"])


def run_scan(grid: ScanGrid, tcfg: TrainingConfig, train_data: WindowedDataset,
             val_data: WindowedDataset, workers: int = 1) -> ScanResult:
    """Train one network per grid cell; failures are recorded, not raised."""
    for k in grid.kernel_sizes:
        if k > train_data.W:
            raise InvalidConfig(f"kernel size {k} exceeds window length {train_data.W}")
    keys = grid.keys()
    if workers <= 1:
        results = [run_cell(key, tcfg, train_data, val_data) for key in keys]
    else:
        # the arrays may be read-only views; workers receive compact copies
        train_copy = train_data.subset(np.arange(len(train_data)))
        val_copy = val_data.subset(np.arange(len(val_data)))
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                 initargs=(tcfg, train_copy, val_copy)) as pool:
            results = list(pool.map(_worker_cell, keys))
    return ScanResult(grid, {r.key: r for r in results})


def _aggregate(result: ScanResult, keep: tuple[Axis, ...]) -> np.ndarray:
    grid = result.grid
    shape = tuple(len(grid.axis_values(a)) for a in keep)
    sums: dict[tuple[int, ...], list[float]] = {}
    index = {a: {v: i for i, v in enumerate(grid.axis_values(a))} for a in AXES}
    for (k, f, d, _s), cell in result.cells.items():
        vals = {Axis.K: k, Axis.F: f, Axis.D: d}
        pos = tuple(index[a][vals[a]] for a in keep)
        bucket = sums.setdefault(pos, [])
        if cell.ok:
            bucket.append(cell.val_mse_norm)
    out = np.empty(shape)
    for pos in np.ndindex(*shape):
        bucket = sums.get(pos, [])
        if not bucket:
            labels = ", ".join(f"{a.value}={grid.axis_values(a)[i]}" for a, i in zip(keep, pos))
            raise AllFailedRow(f"no successful cells for {labels}")
        out[pos] = math.fsum(bucket) / len(bucket)
    return out


def heatmap_axes(collapse: Axis) -> tuple[Axis, Axis]:
    """(row axis, column axis) of the heatmap that averages over ``collapse``."""
    return {Axis.K: (Axis.D, Axis.F), Axis.F: (Axis.D, Axis.K), Axis.D: (Axis.K, Axis.F)}[collapse]


def marginal_heatmap(result: ScanResult, collapse: Axis) -> np.ndarray:
    """Mean normalised validation MSE over ``collapse`` and seeds.

    Rows and columns follow :func:`heatmap_axes`; failed cells are skipped.
    """
    return _aggregate(result, heatmap_axes(collapse))


def marginal_curve(result: ScanResult, keep: Axis) -> np.ndarray:
    return _aggregate(result, (keep,))

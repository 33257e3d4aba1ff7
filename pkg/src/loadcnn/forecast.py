"""Direct and iterative forecasts, the standard-load-profile baseline, and
physical-scale evaluation.

A *forecaster* is any callable ``f(raw_inputs, origins) -> predictions`` taking
an ``(N, W)`` array of input windows in kWh/slot plus the ``N`` forecast origins
(start of the first predicted slot) and returning ``(N, h)`` predictions in
kWh/slot.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from typing import Callable, Sequence

import numpy as np

from .dataset import NormStats, WindowedDataset, denormalize, normalize
from .errors import DataError, InsufficientData, ModeMismatch, ShapeMismatch
from .ingest import LoadSeries
from .nn import Network, predict
from .train import predict_batched

DIRECT_HORIZON = 144
SLOTS_PER_DAY = 96
SLOT = timedelta(minutes=15)
MIN_SLP_DAYS = 28

Forecaster = Callable[[np.ndarray, Sequence[datetime]], np.ndarray]


class ForecastMode(enum.Enum):
    DIRECT = "direct"
    ITERATIVE = "iterative"


class DayType(enum.IntEnum):
    WEEKDAY = 0
    SATURDAY = 1
    SUNDAY = 2


@dataclass(frozen=True, eq=False)
class ForecastResult:
    origin: datetime | None
    values: np.ndarray
    mode: ForecastMode
    step_minutes: int = 15

    def timestamps(self) -> list[datetime]:
        """Slot-start instants of the forecast values."""
        if self.origin is None:
            raise ValueError("forecast has no origin")
        step = timedelta(minutes=self.step_minutes)
        return [self.origin + i * step for i in range(len(self.values))]


def _window(net: Network, window) -> np.ndarray:
    w = np.asarray(window, dtype=np.float64)
    if w.shape != (net.config.input_len,):
        raise ShapeMismatch(f"window of shape {w.shape}, network expects {net.config.input_len}")
    return w


def predict_direct(net: Network, window, stats: NormStats, origin: datetime | None = None,
                   horizon: int = DIRECT_HORIZON) -> ForecastResult:
    """All ``horizon`` values from a single forward pass."""
    if net.config.horizon != horizon:
        raise ModeMismatch(f"direct forecasting needs h={horizon}, network has h={net.config.horizon}")
    z = normalize(_window(net, window), stats)
    out = predict(net, z[None, :])[0]
    return ForecastResult(origin, denormalize(out, stats), ForecastMode.DIRECT)


def iterate_normalized(net: Network, inputs: np.ndarray, steps: int,
                       on_step: Callable[[int, np.ndarray], None] | None = None) -> np.ndarray:
    """Roll a one-step network forward ``steps`` times on a batch of normalised windows.

    After each prediction the point is appended to the window and the oldest
    point dropped.  ``on_step(s, windows)`` sees the windows fed at step ``s``.
    """
    if net.config.horizon != 1:
        raise ModeMismatch(f"iterative forecasting needs h=1, network has h={net.config.horizon}")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    windows = np.array(inputs, dtype=np.float64, ndmin=2)
    out = np.empty((windows.shape[0], steps))
    for s in range(steps):
        if on_step is not None:
            on_step(s, windows.copy())
        nxt = predict_batched(net, windows)[:, 0]
        out[:, s] = nxt
        windows = np.concatenate([windows[:, 1:], nxt[:, None]], axis=1)
    return out


def predict_iterative(net: Network, window, stats: NormStats, steps: int = DIRECT_HORIZON,
                      origin: datetime | None = None,
                      on_step: Callable[[int, np.ndarray], None] | None = None) -> ForecastResult:
    if net.config.horizon != 1:
        raise ModeMismatch(f"iterative forecasting needs h=1, network has h={net.config.horizon}")
    z = normalize(_window(net, window), stats)
    out = iterate_normalized(net, z[None, :], steps, on_step)[0]
    return ForecastResult(origin, denormalize(out, stats), ForecastMode.ITERATIVE)


def day_type(ts: datetime) -> DayType:
    wd = ts.astimezone(timezone.utc).weekday()
    if wd == 5:
        return DayType.SATURDAY
    if wd == 6:
        return DayType.SUNDAY
    return DayType.WEEKDAY


def quarter_hour(ts: datetime) -> int:
    ts = ts.astimezone(timezone.utc)
    return (ts.hour * 60 + ts.minute) // 15


@dataclass(frozen=True, eq=False)
class StandardLoadProfile:
    """Mean kWh/slot per day type (weekday, Saturday, Sunday) and quarter hour."""
    profile: np.ndarray  # (3, 96)

    def value(self, ts: datetime) -> float:
        return float(self.profile[day_type(ts), quarter_hour(ts)])


def _calendar(start: datetime, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Day-type and quarter-hour indices of ``n`` consecutive slots from ``start``."""
    start = start.astimezone(timezone.utc)
    slot = quarter_hour(start) + np.arange(n)
    weekday = (start.weekday() + slot // SLOTS_PER_DAY) % 7
    dt = np.where(weekday == 5, int(DayType.SATURDAY),
                  np.where(weekday == 6, int(DayType.SUNDAY), int(DayType.WEEKDAY)))
    return dt, slot % SLOTS_PER_DAY


def _check_grid(ts: datetime):
    ts = ts.astimezone(timezone.utc)
    if ts.second or ts.microsecond or ts.minute % 15:
        raise DataError(f"{ts.isoformat()} is not on the 15-minute grid")


def build_slp(series: LoadSeries) -> StandardLoadProfile:
    """Group-by mean of a 15-minute series over (day type, quarter hour).

    Calendar fields are taken in UTC; holidays are not treated specially.
    """
    if series.step_minutes != 15:
        raise DataError("the load profile needs a 15-minute series")
    _check_grid(series.start)
    if len(series) < MIN_SLP_DAYS * SLOTS_PER_DAY:
        raise InsufficientData(
            f"{len(series)} slots; at least {MIN_SLP_DAYS} days are needed for a load profile")
    dt, q = _calendar(series.start, len(series))
    key = dt * SLOTS_PER_DAY + q
    cells = 3 * SLOTS_PER_DAY
    counts = np.bincount(key, minlength=cells)
    if np.any(counts == 0):
        raise InsufficientData("some (day type, quarter hour) cell has no data")
    # mean as first value plus mean offset: exact for cells holding a single value
    ref = np.empty(cells)
    ref[key[::-1]] = series.values[::-1]
    offsets = np.bincount(key, weights=series.values - ref[key], minlength=cells)
    return StandardLoadProfile((ref + offsets / counts).reshape(3, SLOTS_PER_DAY))


def slp_forecast(slp: StandardLoadProfile, origin: datetime, steps: int = DIRECT_HORIZON) -> ForecastResult:
    """Profile values for the ``steps`` slots starting at ``origin``."""
    _check_grid(origin)
    dt, q = _calendar(origin, steps)
    return ForecastResult(origin, slp.profile[dt, q], ForecastMode.DIRECT)


def direct_forecaster(net: Network, stats: NormStats) -> Forecaster:
    def f(raw_inputs, origins):
        return denormalize(predict_batched(net, normalize(raw_inputs, stats)), stats)
    return f


def iterative_forecaster(net: Network, stats: NormStats, steps: int = DIRECT_HORIZON) -> Forecaster:
    def f(raw_inputs, origins):
        return denormalize(iterate_normalized(net, normalize(raw_inputs, stats), steps), stats)
    return f


def slp_forecaster(slp: StandardLoadProfile, steps: int = DIRECT_HORIZON) -> Forecaster:
    def f(raw_inputs, origins):
        return np.stack([slp_forecast(slp, o, steps).values for o in origins])
    return f


def evaluate(forecaster: Forecaster, windows: WindowedDataset, stats: NormStats | None = None) -> float:
    """Mean squared error in (kWh/slot)^2 over all windows and horizon steps."""
    stats = stats or windows.stats
    raw_inputs = denormalize(windows.inputs, stats)
    raw_targets = denormalize(windows.targets, stats)
    pred = np.asarray(forecaster(raw_inputs, windows.forecast_origins()), dtype=np.float64)
    if pred.shape != raw_targets.shape:
        raise ShapeMismatch(f"forecaster returned {pred.shape}, targets are {raw_targets.shape}")
    return float(np.mean((pred - raw_targets) ** 2))

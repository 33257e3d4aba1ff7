"""Smart-meter ingestion: parsing, gap handling, resampling, household selection
and sum-load aggregation.

Timestamp conventions
---------------------
A :class:`MeterReading` is stamped with the *end* of the slot it measures, as
meters report.  A :class:`LoadSeries` stores ``start`` as the *beginning* of its
first slot, so slot ``i`` covers ``[start + i*step, start + (i+1)*step)``.
:func:`assemble_series` and :func:`format_simple_csv` convert between the two.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    BadTimestamp,
    DataError,
    DuplicateTimestamp,
    Gap,
    GapTooLarge,
    MalformedRow,
    Misaligned,
    NegativeEnergy,
    PoolTooSmall,
    UnsupportedStep,
)

UNIT = "kWh/slot"
DEFAULT_EPOCH = date(2009, 1, 1)
MAX_FILL_SLOTS = 4


class ReadingFormat(enum.Enum):
    SIMPLE_CSV = "simple"
    CODE_CSV = "code"


class GapPolicy(enum.Enum):
    ERROR = "error"
    LINEAR_FILL = "linear"


@dataclass(frozen=True)
class MeterReading:
    meter_id: str
    timestamp: datetime
    energy_kwh: float


@dataclass(frozen=True, eq=False)
class LoadSeries:
    label: str
    start: datetime
    step_minutes: int
    values: np.ndarray = field(repr=False)
    unit: str = UNIT

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.step_minutes not in (15, 30):
            raise UnsupportedStep(f"step of {self.step_minutes} minutes")
        if values.ndim != 1 or values.size < 1:
            raise DataError("a series needs at least one value")
        if not np.all(np.isfinite(values)):
            raise DataError(f"series {self.label!r} contains non-finite values")
        if np.any(values < 0):
            raise DataError(f"series {self.label!r} contains negative values")
        if self.start.tzinfo is None:
            object.__setattr__(self, "start", self.start.replace(tzinfo=timezone.utc))

    def __len__(self) -> int:
        return self.values.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, LoadSeries):
            return NotImplemented
        return (
            self.label == other.label
            and self.start == other.start
            and self.step_minutes == other.step_minutes
            and np.array_equal(self.values, other.values)
        )

    @property
    def step(self) -> timedelta:
        return timedelta(minutes=self.step_minutes)

    def slot_start(self, i: int) -> datetime:
        return self.start + i * self.step

    def slice(self, lo: int, hi: int) -> "LoadSeries":
        return LoadSeries(self.label, self.slot_start(lo), self.step_minutes, self.values[lo:hi])


@dataclass(frozen=True)
class HouseholdSelection:
    pool: tuple[str, ...]
    n: int
    seed: int
    chosen: tuple[str, ...]


def _parse_iso_utc(raw: str) -> datetime:
    raw = raw.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    ts = datetime.fromisoformat(raw)
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def decode_day_slot(code: int, epoch: date = DEFAULT_EPOCH) -> datetime:
    """Timestamp (slot end) for a 5-digit ``DDDSS`` day/half-hour code."""
    day, slot = divmod(code, 100)
    if not 0 <= code <= 99999 or not 1 <= slot <= 48:
        raise ValueError(f"invalid day/slot code {code}")
    base = datetime(epoch.year, epoch.month, epoch.day, tzinfo=timezone.utc)
    return base + timedelta(days=day, minutes=30 * slot)


def _looks_like_header(fields: list[str]) -> bool:
    try:
        float(fields[-1])
    except ValueError:
        return True
    return False


def parse_readings(
    text: str,
    fmt: ReadingFormat = ReadingFormat.SIMPLE_CSV,
    epoch: date = DEFAULT_EPOCH,
) -> list[MeterReading]:
    """Parse meter readings from CSV text.

    A non-numeric first data line is treated as a header and skipped; blank
    lines are ignored.  The first offending line raises with its 1-based number.
    """
    readings = []
    seen_data = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(",")]
        if not seen_data and len(fields) == 3 and _looks_like_header(fields):
            seen_data = True
            continue
        seen_data = True
        if len(fields) != 3:
            raise MalformedRow(lineno, f"expected 3 columns, got {len(fields)}")
        meter_id, ts_raw, kwh_raw = fields
        if not meter_id:
            raise MalformedRow(lineno, "empty meter id")
        try:
            kwh = float(kwh_raw)
        except ValueError:
            raise MalformedRow(lineno, f"bad number {kwh_raw!r}") from None
        if not math.isfinite(kwh):
            raise MalformedRow(lineno, f"non-finite number {kwh_raw!r}")
        if kwh < 0:
            raise NegativeEnergy(lineno, f"negative energy {kwh_raw}")

        if fmt is ReadingFormat.CODE_CSV:
            if len(ts_raw) != 5 or not ts_raw.isdigit():
                raise BadTimestamp(lineno, f"bad day/slot code {ts_raw!r}")
            try:
                ts = decode_day_slot(int(ts_raw), epoch)
            except ValueError as exc:
                raise BadTimestamp(lineno, str(exc)) from None
        else:
            try:
                ts = _parse_iso_utc(ts_raw)
            except ValueError:
                raise BadTimestamp(lineno, f"bad timestamp {ts_raw!r}") from None
            if ts.second or ts.microsecond or ts.minute % 15:
                raise BadTimestamp(lineno, f"{ts_raw!r} is not on a 15-minute grid")
        readings.append(MeterReading(meter_id, ts, kwh))
    return readings


def read_readings(path, fmt: ReadingFormat = ReadingFormat.SIMPLE_CSV,
                  epoch: date = DEFAULT_EPOCH) -> list[MeterReading]:
    return parse_readings(Path(path).read_text(encoding="utf-8"), fmt, epoch)


def infer_step_minutes(readings: Iterable[MeterReading]) -> int:
    """Smallest spacing between consecutive timestamps of any single meter."""
    by_meter: dict[str, list[datetime]] = {}
    for r in readings:
        by_meter.setdefault(r.meter_id, []).append(r.timestamp)
    best = None
    for stamps in by_meter.values():
        stamps.sort()
        for a, b in zip(stamps, stamps[1:]):
            d = int((b - a).total_seconds() // 60)
            if d > 0 and (best is None or d < best):
                best = d
    if best is None:
        return 15
    if best not in (15, 30):
        raise UnsupportedStep(f"inferred step of {best} minutes")
    return best


def assemble_series(
    readings: Sequence[MeterReading],
    meter_id: str,
    step_minutes: int = 15,
    gap_policy: GapPolicy = GapPolicy.LINEAR_FILL,
) -> LoadSeries:
    """Build a contiguous series for one meter.

    Under ``LINEAR_FILL`` runs of up to four missing slots are interpolated
    between their neighbours; anything longer raises :class:`GapTooLarge`.
    Error positions are slot indices into the assembled series.
    """
    if step_minutes not in (15, 30):
        raise UnsupportedStep(f"step of {step_minutes} minutes")
    own = sorted((r for r in readings if r.meter_id == meter_id), key=lambda r: r.timestamp)
    if not own:
        raise DataError(f"no readings for meter {meter_id!r}")

    step_s = 60 * step_minutes
    t0 = own[0].timestamp
    slots = []
    for r in own:
        offset = (r.timestamp - t0).total_seconds()
        idx, rem = divmod(offset, step_s)
        if rem:
            raise Misaligned(r.timestamp.isoformat(), f"not on the {step_minutes}-minute grid")
        slots.append(int(idx))
    n_slots = slots[-1] + 1

    values = np.full(n_slots, np.nan)
    for idx, r in zip(slots, own):
        if not np.isnan(values[idx]):
            raise DuplicateTimestamp(idx, r.timestamp.isoformat())
        values[idx] = r.energy_kwh

    missing = np.flatnonzero(np.isnan(values))
    if missing.size:
        # runs of consecutive missing slots
        breaks = np.flatnonzero(np.diff(missing) > 1)
        starts = np.concatenate(([missing[0]], missing[breaks + 1]))
        ends = np.concatenate((missing[breaks], [missing[-1]]))
        for lo, hi in zip(starts, ends):
            if gap_policy is GapPolicy.ERROR:
                raise Gap(int(lo), f"{hi - lo + 1} missing slot(s)")
            if hi - lo + 1 > MAX_FILL_SLOTS:
                raise GapTooLarge(int(lo), f"{hi - lo + 1} missing slots")
            left, right = values[lo - 1], values[hi + 1]
            span = hi - lo + 2
            for i in range(lo, hi + 1):
                frac = (i - lo + 1) / span
                values[i] = left + (right - left) * frac

    start = t0 - timedelta(minutes=step_minutes)
    return LoadSeries(meter_id, start, step_minutes, values)


def resample_to_15min(series: LoadSeries) -> LoadSeries:
    """Split each 30-minute slot into two equal 15-minute slots."""
    if series.step_minutes == 15:
        return series
    if series.step_minutes != 30:
        raise UnsupportedStep(f"step of {series.step_minutes} minutes")
    halves = np.repeat(series.values * 0.5, 2)
    return LoadSeries(series.label, series.start, 15, halves, series.unit)


def select_households(pool: Iterable[str], n: int, seed: int) -> HouseholdSelection:
    """Seeded partial Fisher-Yates draw of ``n`` distinct ids.

    The pool is de-duplicated and sorted first, so the result does not depend
    on the order ids were discovered in.
    """
    ordered = sorted(set(pool))
    if n < 1:
        raise ValueError("n must be positive")
    if n > len(ordered):
        raise PoolTooSmall(f"requested {n} households from a pool of {len(ordered)}")
    rng = np.random.default_rng(seed & 0xFFFFFFFFFFFFFFFF)
    items = list(ordered)
    for i in range(n):
        j = int(rng.integers(i, len(items)))
        items[i], items[j] = items[j], items[i]
    return HouseholdSelection(tuple(ordered), n, seed, tuple(items[:n]))


def aggregate(series_list: Sequence[LoadSeries], label: str | None = None) -> LoadSeries:
    """Slot-wise sum of aligned series.

    Each slot is summed with :func:`math.fsum`, so the result is the correctly
    rounded sum and does not depend on the order of ``series_list``.
    """
    if not series_list:
        raise DataError("nothing to aggregate")
    first = series_list[0]
    for i, s in enumerate(series_list):
        if s.start != first.start or s.step_minutes != first.step_minutes or len(s) != len(first):
            raise Misaligned(i, f"series {s.label!r} does not match {first.label!r}")
    stacked = np.stack([s.values for s in series_list])
    totals = np.fromiter((math.fsum(col) for col in stacked.T), dtype=np.float64, count=len(first))
    return LoadSeries(label or f"sum{len(series_list)}", first.start, first.step_minutes, totals)


def align(series_list: Sequence[LoadSeries]) -> list[LoadSeries]:
    """Trim series sharing a step to their common time range."""
    if not series_list:
        return []
    step = series_list[0].step_minutes
    if any(s.step_minutes != step for s in series_list):
        raise Misaligned(0, "series have different steps")
    lo = max(s.start for s in series_list)
    hi = min(s.slot_start(len(s)) for s in series_list)
    if hi <= lo:
        raise Misaligned(0, "series do not overlap")
    out = []
    for s in series_list:
        a = int((lo - s.start) / s.step)
        b = int((hi - s.start) / s.step)
        if s.slot_start(a) != lo:
            raise Misaligned(s.label, "slot grids are offset")
        out.append(s.slice(a, b))
    return out


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def format_simple_csv(series: LoadSeries, header: bool = True) -> str:
    """Render a series as SIMPLE_CSV, one row per slot stamped with its end."""
    lines = ["meter_id,timestamp,kwh"] if header else []
    for i, v in enumerate(series.values):
        lines.append(f"{series.label},{format_timestamp(series.slot_start(i + 1))},{float(v)!r}")
    return "\n".join(lines) + "\n"


def load_series(path, meter_id: str | None = None, fmt: ReadingFormat = ReadingFormat.SIMPLE_CSV,
                epoch: date = DEFAULT_EPOCH,
                gap_policy: GapPolicy = GapPolicy.LINEAR_FILL) -> LoadSeries:
    """Read one meter's series from a file and put it on the 15-minute grid."""
    readings = read_readings(path, fmt, epoch)
    if not readings:
        raise DataError(f"{path}: no readings")
    meters = sorted({r.meter_id for r in readings})
    if meter_id is None:
        if len(meters) != 1:
            raise DataError(f"{path}: {len(meters)} meters present, choose one")
        meter_id = meters[0]
    step = infer_step_minutes(r for r in readings if r.meter_id == meter_id)
    return resample_to_15min(assemble_series(readings, meter_id, step, gap_policy))

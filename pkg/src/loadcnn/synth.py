"""Synthetic household load generator.

Each household draws power (kW) as a standby base plus a morning and an evening
Gaussian activity bump, rectangular appliance spikes at Poisson times and white
noise, clipped at zero and converted to kWh per 15-minute slot.  Activity on
weekends is scaled by ``weekend_scale`` and starts later in the morning.

All households share two day-level activity modulations that survive
aggregation: an annual cycle peaking at the winter solstice (lighting and
heating use) and an AR(1) factor in log space standing in for weather.  The
evening bump follows the seasonal sunset time, and households are
occasionally absent for several days with activity cut to a tenth.
"""
from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .errors import InvalidConfig
from .ingest import LoadSeries

SLOTS_PER_DAY = 96
SLOT_HOURS = 0.25


@dataclass(frozen=True)
class SynthConfig:
    n_households: int = 40
    days: int = 120
    seed: int = 0
    base_kw: float = 0.12
    morning_peak_kw: float = 0.4
    evening_peak_kw: float = 0.8
    spike_rate_per_day: float = 6.0
    spike_kw: float = 1.5
    noise_sd_kw: float = 0.05
    weekend_scale: float = 1.15
    # shared day-level activity factor: log-AR(1) coefficient and innovation sd
    activity_ar: float = 0.85
    activity_sd: float = 0.12
    # relative amplitude of the annual activity cycle
    seasonal_amplitude: float = 0.3
    # hours the evening bump moves per hour of sunset shift
    daylight_shift: float = 0.4
    # multi-day absences per household per year, and their mean length in days
    absences_per_year: float = 6.0
    absence_days: float = 5.0
    start: datetime = datetime(2009, 7, 13, tzinfo=timezone.utc)  # a Monday

    def __post_init__(self):
        if self.n_households < 1:
            raise InvalidConfig("n_households must be >= 1")
        if self.days < 2:
            raise InvalidConfig("days must be >= 2")
        positive = ("base_kw", "spike_kw", "weekend_scale")
        nonneg = ("morning_peak_kw", "evening_peak_kw", "spike_rate_per_day",
                  "noise_sd_kw", "activity_sd", "seasonal_amplitude", "daylight_shift",
                  "absences_per_year", "absence_days")
        for name in positive + nonneg + ("activity_ar",):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise InvalidConfig(f"{name} must be finite")
        for name in positive:
            if getattr(self, name) <= 0:
                raise InvalidConfig(f"{name} must be positive")
        for name in nonneg:
            if getattr(self, name) < 0:
                raise InvalidConfig(f"{name} must be non-negative")
        if self.seasonal_amplitude >= 1:
            raise InvalidConfig("seasonal_amplitude must be < 1")
        if not -1 < self.activity_ar < 1:
            raise InvalidConfig("activity_ar must lie in (-1, 1)")
        if self.start.tzinfo is None:
            object.__setattr__(self, "start", self.start.replace(tzinfo=timezone.utc))


def _rng(config: SynthConfig, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(config.seed & 0xFFFFFFFFFFFFFFFF, spawn_key=key)
    return np.random.default_rng(ss)


def shared_activity(config: SynthConfig) -> np.ndarray:
    """Per-day multiplicative activity factor common to every household."""
    rng = _rng(config, 1)
    eps = rng.normal(0.0, config.activity_sd, size=config.days)
    log_f = np.empty(config.days)
    # stationary start
    log_f[0] = eps[0] / np.sqrt(1 - config.activity_ar ** 2)
    for d in range(1, config.days):
        log_f[d] = config.activity_ar * log_f[d - 1] + eps[d]
    day0 = config.start.astimezone(timezone.utc).timetuple().tm_yday
    doy = day0 + np.arange(config.days)
    season = 1.0 + config.seasonal_amplitude * np.cos(2 * np.pi * (doy - 355) / 365.25)
    return season * np.exp(log_f)


def sunset_hour(config: SynthConfig) -> np.ndarray:
    """Approximate UTC sunset hour per day at Irish latitude."""
    day0 = config.start.astimezone(timezone.utc).timetuple().tm_yday
    doy = day0 + np.arange(config.days)
    return 18.5 + 2.4 * np.cos(2 * np.pi * (doy - 172) / 365.25)


def _absence_days(config: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    away = np.zeros(config.days, dtype=bool)
    if config.absences_per_year <= 0 or config.absence_days <= 0:
        return away
    count = rng.poisson(config.absences_per_year * config.days / 365.25)
    for first in rng.integers(0, config.days, size=count):
        length = 1 + rng.poisson(config.absence_days - 1) if config.absence_days > 1 else 1
        away[first:first + length] = True
    return away


def _weekend_mask(config: SynthConfig) -> np.ndarray:
    start = config.start.astimezone(timezone.utc)
    first_slot = (start.hour * 60 + start.minute) // 15
    n = config.days * SLOTS_PER_DAY
    day_index = (first_slot + np.arange(n)) // SLOTS_PER_DAY
    weekday = (start.weekday() + day_index) % 7
    return weekday >= 5, day_index


def _household_power(config: SynthConfig, index: int, activity: np.ndarray) -> np.ndarray:
    rng = _rng(config, 0, index)
    n = config.days * SLOTS_PER_DAY
    start = config.start.astimezone(timezone.utc)
    # hour of day at slot midpoints
    minutes = start.hour * 60 + start.minute + 15 * np.arange(n) + 7.5
    hour = (minutes / 60.0) % 24.0
    weekend, day_index = _weekend_mask(config)
    day_index = day_index - day_index[0]

    # per-household habits
    morning_c = 7.5 + rng.normal(0.0, 0.5)
    evening_c = 19.0 + rng.normal(0.0, 0.75)
    morning_w = 1.0 + 0.3 * rng.random()
    evening_w = 1.5 + 0.5 * rng.random()
    amp = 0.6 + 0.8 * rng.random()
    own_day = np.exp(rng.normal(0.0, 0.2, size=config.days))
    away = _absence_days(config, rng)
    own_day[away] *= 0.1
    evening_c = evening_c + config.daylight_shift * (sunset_hour(config) - 18.5)[day_index]

    morning_shift = np.where(weekend, 1.5, 0.0)
    morning = config.morning_peak_kw * np.exp(-0.5 * ((hour - morning_c - morning_shift) / morning_w) ** 2)
    evening = config.evening_peak_kw * np.exp(-0.5 * ((hour - evening_c) / evening_w) ** 2)
    day_factor = activity[day_index] * own_day[day_index]
    bumps = amp * day_factor * (morning + evening)

    spikes = np.zeros(n)
    if config.spike_rate_per_day > 0:
        count = rng.poisson(config.spike_rate_per_day * config.days)
        begins = rng.integers(0, n, size=count)
        lengths = rng.integers(1, 5, size=count)
        for b, ln in zip(begins, lengths):
            spikes[b:b + ln] += config.spike_kw
        spikes[away[day_index]] *= 0.1

    activity_kw = np.where(weekend, config.weekend_scale, 1.0) * (bumps + spikes)
    noise = rng.normal(0.0, config.noise_sd_kw, size=n) if config.noise_sd_kw > 0 else 0.0
    return config.base_kw + activity_kw + noise


def generate_household(config: SynthConfig, index: int) -> LoadSeries:
    """Series of ``days * 96`` quarter-hour energies for household ``index``."""
    if not 0 <= index < config.n_households:
        raise IndexError(f"household index {index} outside [0, {config.n_households})")
    power = _household_power(config, index, shared_activity(config))
    kwh = np.maximum(power, 0.0) * SLOT_HOURS
    return LoadSeries(f"h{index:04d}", config.start, 15, kwh)


def generate_fleet(config: SynthConfig) -> list[LoadSeries]:
    activity = shared_activity(config)
    out = []
    for i in range(config.n_households):
        kwh = np.maximum(_household_power(config, i, activity), 0.0) * SLOT_HOURS
        out.append(LoadSeries(f"h{i:04d}", config.start, 15, kwh))
    return out


def coefficient_of_variation(values) -> float:
    values = np.asarray(values, dtype=np.float64)
    return float(values.std() / values.mean())

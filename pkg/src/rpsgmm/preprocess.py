"""Raw satellite observations to regular daily feature series.

The pipeline for one lake:

1. difference lake and background HV backscatter on days where both exist,
2. convert water / total pixel counts to a water percentage,
3. linearly interpolate every feature onto the daily window,
4. smooth ``hv_anom`` with a centered moving average.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .data import TimeSeries, _parse_day, _parse_float
from .errors import (
    DomainError,
    DuplicateSampleError,
    InsufficientDataError,
    ParseError,
    SchemaError,
)

RAW_HEADER = ("series_id", "day", "channel", "value")
RAW_CHANNELS = ("hv_lake", "hv_background", "n_water", "n_total")
# May 1 .. Dec 31
DEFAULT_WINDOW = (0, 244)
DEFAULT_SMOOTH_DAYS = 12


@dataclass
class RawObservations:
    """Irregular per-channel observations of one series.

    ``samples`` holds ``(day, channel, value)`` triples; each channel may be
    observed on its own set of days.
    """

    id: str
    samples: list[tuple[int, str, float]] = field(default_factory=list)
    label: str | None = None

    def channel_names(self):
        return list(dict.fromkeys(ch for _, ch, _ in self.samples))

    def observations(self, channel):
        """Sorted ``(days, values)`` arrays for one channel."""
        pairs = sorted((d, v) for d, ch, v in self.samples if ch == channel)
        days = np.array([p[0] for p in pairs], dtype=np.int64)
        if days.size > 1 and np.any(np.diff(days) == 0):
            dup = int(days[np.flatnonzero(np.diff(days) == 0)[0]])
            raise DuplicateSampleError(
                f"series {self.id!r}: channel {channel!r} observed twice on day {dup}"
            )
        return days, np.array([p[1] for p in pairs], dtype=float)


def hv_anomaly(hv_lake, hv_background):
    """Backscatter anomaly in dB: lake minus background."""
    a = np.asarray(hv_lake, dtype=float)
    b = np.asarray(hv_background, dtype=float)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise DomainError("backscatter values must be finite")
    out = a - b
    return float(out) if out.ndim == 0 else out


def water_percentage(n_water, n_total):
    """Percentage of lake pixels classified as water, in [0, 100]."""
    w = np.asarray(n_water, dtype=float)
    t = np.asarray(n_total, dtype=float)
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(t))):
        raise DomainError("pixel counts must be finite")
    if np.any(t <= 0):
        raise DomainError("total pixel count must be positive")
    if np.any(w < 0) or np.any(w > t):
        raise DomainError("water pixel count must lie in [0, n_total]")
    out = 100.0 * w / t
    return float(out) if out.ndim == 0 else out


def interpolate_daily(raw: RawObservations, window=DEFAULT_WINDOW, channels=None) -> TimeSeries:
    """Linearly interpolate each channel onto the days of ``window``.

    Days outside the observed range hold the nearest observation. The output
    timestamps are re-based so that ``window[0]`` becomes day 0.
    """
    start, end = int(window[0]), int(window[1])
    if end < start:
        raise DomainError(f"empty window [{start}, {end}]")
    channels = list(channels) if channels is not None else raw.channel_names()
    grid = np.arange(start, end + 1)
    cols = []
    for ch in channels:
        days, vals = raw.observations(ch)
        if days.size < 2:
            raise InsufficientDataError(
                f"series {raw.id!r}: channel {ch!r} has {days.size} observation(s), need at least 2"
            )
        # np.interp holds the end values outside [days[0], days[-1]]
        cols.append(np.interp(grid, days, vals))
    return TimeSeries(raw.id, grid - start, channels, np.column_stack(cols), raw.label)


def _window_bounds(window_days):
    left = window_days // 2
    return left, window_days - left - 1


def moving_average(x, window_days):
    """Centered moving average truncated at the boundaries.

    For an even window the extra day falls on the past side, so a 12-day
    window at day t spans t-6 .. t+5.
    """
    x = np.asarray(x, dtype=float)
    left, right = _window_bounds(window_days)
    n = x.size
    csum = np.concatenate([[0.0], np.cumsum(x)])
    idx = np.arange(n)
    lo = np.maximum(idx - left, 0)
    hi = np.minimum(idx + right, n - 1) + 1
    return (csum[hi] - csum[lo]) / (hi - lo)


def smooth(series: TimeSeries, channel: str, window_days: int = DEFAULT_SMOOTH_DAYS) -> TimeSeries:
    """Replace ``channel`` by its centered moving average."""
    if channel not in series.channels:
        raise SchemaError(f"series {series.id!r} has no channel {channel!r}")
    if int(window_days) < 1:
        raise DomainError("smoothing window must be at least one day")
    if len(series) > 1 and np.any(np.diff(series.timestamps) != 1):
        raise DomainError(f"series {series.id!r} is not on a regular daily grid")
    return series.with_channel(channel, moving_average(series.channel(channel), int(window_days)))


def _paired(raw, a, b):
    da, va = raw.observations(a)
    db, vb = raw.observations(b)
    common, ia, ib = np.intersect1d(da, db, assume_unique=True, return_indices=True)
    return common, va[ia], vb[ib]


def derive_features(raw: RawObservations) -> RawObservations:
    """Turn the four raw channels into ``hv_anom`` and ``p_water`` observations.

    Lake and background (and water and total) are paired on shared
    observation days; unpaired observations are dropped.
    """
    names = set(raw.channel_names())
    missing = [c for c in RAW_CHANNELS if c not in names]
    if missing:
        raise SchemaError(f"series {raw.id!r} lacks raw channel(s) {missing}")
    samples = []
    days, lake, bg = _paired(raw, "hv_lake", "hv_background")
    samples += [(int(d), "hv_anom", float(v)) for d, v in zip(days, hv_anomaly(lake, bg))]
    days, nw, nt = _paired(raw, "n_water", "n_total")
    samples += [(int(d), "p_water", float(v)) for d, v in zip(days, water_percentage(nw, nt))]
    return RawObservations(raw.id, samples, raw.label)


def preprocess_lake(
    raw: RawObservations,
    window=DEFAULT_WINDOW,
    smooth_days: int = DEFAULT_SMOOTH_DAYS,
    smooth_water: bool = False,
) -> TimeSeries:
    """Full pipeline: derive features, interpolate daily, smooth."""
    series = interpolate_daily(derive_features(raw), window, channels=("hv_anom", "p_water"))
    if smooth_days > 1:
        series = smooth(series, "hv_anom", smooth_days)
        if smooth_water:
            series = smooth(series, "p_water", smooth_days)
    return series


def load_raw(path) -> list[RawObservations]:
    """Read a raw-observation CSV (``series_id,day,channel,value[,label]``)."""
    out: dict[str, RawObservations] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header[:4] != list(RAW_HEADER) or header[4:] not in ([], ["label"]):
            raise ParseError(f"expected header {','.join(RAW_HEADER)}[,label]", 1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header) and not (len(header) == 5 and len(row) == 4):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", lineno)
            sid = row[0].strip()
            day = _parse_day(row[1].strip(), lineno)
            chan = row[2].strip()
            if chan not in RAW_CHANNELS:
                raise SchemaError(f"line {lineno}: unknown raw channel {chan!r}")
            value = _parse_float(row[3].strip(), lineno)
            label = (row[4].strip() if len(row) == 5 else "") or None
            obs = out.setdefault(sid, RawObservations(sid, [], label))
            if label is not None and obs.label is None:
                obs.label = label
            elif label is not None and obs.label != label:
                raise ParseError(f"series {sid!r} has conflicting labels", lineno)
            obs.samples.append((day, chan, value))
    return list(out.values())


__all__ = [
    "RawObservations",
    "hv_anomaly",
    "water_percentage",
    "interpolate_daily",
    "moving_average",
    "smooth",
    "derive_features",
    "preprocess_lake",
    "load_raw",
]

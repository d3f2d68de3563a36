"""Domain types and the long-format dataset CSV.

Dataset files have one observation per row::

    series_id,day,channel,value,label

``day`` is an integer index on the series' daily grid (0 = May 1 for the
lake data), ``label`` is repeated on every row of a series or left empty.
"""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import DuplicateSampleError, ParseError, SchemaError

DATASET_HEADER = ("series_id", "day", "channel", "value", "label")
DEFAULT_CHANNELS = ("hv_anom", "p_water")


class LakeClass(str, Enum):
    """Seasonal fate of a supraglacial lake.

    Labels are plain strings everywhere in the package; this enum only names
    the three glaciology classes so other datasets can use any label text.
    """

    REFREEZE = "refreeze"
    DRAIN = "drain"
    BURIED = "buried"

    def __str__(self):
        return self.value


def _frozen(a, ndim):
    arr = np.array(a, dtype=float if ndim == 2 else np.int64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """A regularly gridded multichannel series.

    ``values`` has one row per timestamp and one column per channel. NaN is
    only allowed when ``raw`` is set (pre-interpolation data).
    """

    id: str
    timestamps: np.ndarray
    channels: tuple[str, ...]
    values: np.ndarray
    label: str | None = None
    raw: bool = False

    def __post_init__(self):
        ts = _frozen(self.timestamps, 1)
        vals = np.array(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        vals.setflags(write=False)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "channels", tuple(self.channels))
        if self.label is not None:
            object.__setattr__(self, "label", str(self.label))

        if ts.ndim != 1:
            raise SchemaError(f"series {self.id!r}: timestamps must be one-dimensional")
        if ts.size > 1 and np.any(np.diff(ts) <= 0):
            raise SchemaError(f"series {self.id!r}: timestamps must be strictly increasing")
        if vals.ndim != 2 or vals.shape[0] != ts.size:
            raise SchemaError(
                f"series {self.id!r}: {vals.shape[0]} value rows for {ts.size} timestamps"
            )
        if vals.shape[1] != len(self.channels):
            raise SchemaError(
                f"series {self.id!r}: {vals.shape[1]} value columns for "
                f"{len(self.channels)} channels"
            )
        if len(set(self.channels)) != len(self.channels):
            raise SchemaError(f"series {self.id!r}: duplicate channel names")
        if not self.raw and not np.all(np.isfinite(vals)):
            raise SchemaError(f"series {self.id!r}: missing or non-finite values")

    def __len__(self):
        return self.timestamps.size

    @property
    def n_channels(self):
        return len(self.channels)

    def channel(self, name):
        """Return one channel as a 1-D array."""
        try:
            j = self.channels.index(name)
        except ValueError:
            raise SchemaError(f"series {self.id!r} has no channel {name!r}") from None
        return self.values[:, j]

    def select(self, channels: Sequence[str]) -> TimeSeries:
        """Return a copy restricted to ``channels`` (in the given order)."""
        cols = [self.channels.index(c) if c in self.channels else None for c in channels]
        missing = [c for c, j in zip(channels, cols) if j is None]
        if missing:
            raise SchemaError(f"series {self.id!r} has no channel(s) {missing}")
        return TimeSeries(self.id, self.timestamps, tuple(channels),
                          self.values[:, cols], self.label, self.raw)

    def with_channel(self, name, data) -> TimeSeries:
        """Return a copy with channel ``name`` replaced by ``data``."""
        j = self.channels.index(name)
        vals = self.values.copy()
        vals[:, j] = data
        return TimeSeries(self.id, self.timestamps, self.channels, vals, self.label, self.raw)

    def equals(self, other: TimeSeries) -> bool:
        return (
            self.id == other.id
            and self.channels == other.channels
            and self.label == other.label
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.values, other.values, equal_nan=True)
        )


@dataclass(frozen=True, eq=False)
class Dataset:
    """A collection of series sharing one channel schema and grid length."""

    series: tuple[TimeSeries, ...]
    channels: tuple[str, ...]
    label_set: tuple[str, ...] | None = None
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        series = tuple(self.series)
        object.__setattr__(self, "series", series)
        object.__setattr__(self, "channels", tuple(self.channels))
        lengths = {len(s) for s in series}
        if len(lengths) > 1:
            raise SchemaError(f"series have differing grid lengths: {sorted(lengths)}")
        for s in series:
            if s.channels != self.channels:
                raise SchemaError(
                    f"series {s.id!r} channels {list(s.channels)} do not match "
                    f"schema {list(self.channels)}"
                )
            if s.id in self._index:
                raise DuplicateSampleError(f"duplicate series id {s.id!r}")
            self._index[s.id] = s

        seen = [s.label for s in series if s.label is not None]
        if self.label_set is None:
            object.__setattr__(self, "label_set", tuple(dict.fromkeys(seen)))
        else:
            labels = tuple(str(x) for x in self.label_set)
            object.__setattr__(self, "label_set", labels)
            unknown = sorted(set(seen) - set(labels))
            if unknown:
                raise SchemaError(f"labels {unknown} not in declared label set {list(labels)}")

    def __len__(self):
        return len(self.series)

    def __iter__(self):
        return iter(self.series)

    def __getitem__(self, series_id) -> TimeSeries:
        try:
            return self._index[series_id]
        except KeyError:
            raise KeyError(f"unknown series id {series_id!r}") from None

    def __contains__(self, series_id):
        return series_id in self._index

    @property
    def labels(self):
        return [s.label for s in self.series]

    @property
    def ids(self):
        return [s.id for s in self.series]

    def class_counts(self):
        counts = {lab: 0 for lab in self.label_set}
        for s in self.series:
            if s.label is not None:
                counts[s.label] += 1
        return counts

    def select_channels(self, channels: Sequence[str]) -> Dataset:
        return Dataset([s.select(channels) for s in self.series], channels, self.label_set)

    def subset(self, ids: Iterable[str]) -> Dataset:
        return Dataset([self[i] for i in ids], self.channels, self.label_set)

    def first_of_each_class(self):
        """Map label -> first series of that class in dataset order."""
        reps = {}
        for s in self.series:
            if s.label is not None and s.label not in reps:
                reps[s.label] = s
        return {lab: reps[lab] for lab in self.label_set if lab in reps}


def _parse_float(text, line):
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"non-numeric value {text!r}", line) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite value {text!r}", line)
    return v


def _parse_day(text, line):
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"day must be an integer, got {text!r}", line) from None


def load_dataset(path, schema: Sequence[str] | None = None, label_set=None) -> Dataset:
    """Read a long-format dataset CSV.

    Parameters
    ----------
    path : str or Path
        CSV file with header ``series_id,day,channel,value,label``.
    schema : sequence of str, optional
        Expected channels, in column order. When omitted the channels are
        taken in order of first appearance in the file.
    label_set : sequence of str, optional
        Declared labels; defaults to labels in order of first appearance.

    Returns
    -------
    Dataset
        Series ordered by first appearance of their id, rows sorted by day.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        return _read_dataset(fh, schema, label_set)


def _read_dataset(fh, schema, label_set):
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty file", 1) from None
    header = [h.strip() for h in header]
    if header[:4] != list(DATASET_HEADER[:4]) or len(header) > 5 or (
        len(header) == 5 and header[4] != "label"
    ):
        raise ParseError(f"expected header {','.join(DATASET_HEADER)}, got {','.join(header)}", 1)

    cells: dict[str, dict[int, dict[str, float]]] = {}
    labels: dict[str, str | None] = {}
    channels_seen: dict[str, None] = {}
    allowed = set(schema) if schema is not None else None
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header) and not (len(header) == 5 and len(row) == 4):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", lineno)
        sid = row[0].strip()
        if not sid:
            raise ParseError("empty series_id", lineno)
        day = _parse_day(row[1].strip(), lineno)
        chan = row[2].strip()
        value = _parse_float(row[3].strip(), lineno)
        label = row[4].strip() if len(row) == 5 else ""
        label = label or None

        if allowed is not None and chan not in allowed:
            raise SchemaError(f"line {lineno}: channel {chan!r} not in schema {list(schema)}")
        channels_seen.setdefault(chan)
        per_day = cells.setdefault(sid, {}).setdefault(day, {})
        if chan in per_day:
            raise DuplicateSampleError(
                f"line {lineno}: duplicate sample (series {sid!r}, day {day}, channel {chan!r})"
            )
        per_day[chan] = value
        if sid in labels and labels[sid] != label:
            raise ParseError(
                f"series {sid!r} has conflicting labels {labels[sid]!r} and {label!r}", lineno
            )
        labels[sid] = label

    channels = tuple(schema) if schema is not None else tuple(channels_seen)
    series = []
    for sid, by_day in cells.items():
        days = sorted(by_day)
        vals = np.empty((len(days), len(channels)))
        for i, day in enumerate(days):
            row = by_day[day]
            if len(row) != len(channels):
                missing = [c for c in channels if c not in row]
                raise SchemaError(
                    f"series {sid!r} day {day}: expected {len(channels)} channels, "
                    f"got {len(row)} (missing {missing})"
                )
            vals[i] = [row[c] for c in channels]
        series.append(TimeSeries(sid, days, channels, vals, labels[sid]))
    return Dataset(series, channels, label_set)


def format_float(x):
    """Shortest repr that round-trips, used for every float written to CSV."""
    return repr(float(x))


def dataset_rows(dataset: Dataset):
    for s in dataset:
        label = s.label or ""
        for i, day in enumerate(s.timestamps):
            for j, chan in enumerate(s.channels):
                yield (s.id, int(day), chan, format_float(s.values[i, j]), label)


def write_dataset(dataset: Dataset, path):
    """Write ``dataset`` in the long CSV format (atomically)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DATASET_HEADER)
    w.writerows(dataset_rows(dataset))
    atomic_write_text(path, buf.getvalue())


def atomic_write_text(path, text):
    """Write ``text`` to ``path`` via a temp file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise

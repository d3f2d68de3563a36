"""Time-delay embedding into a reconstructed phase space."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import TimeSeries
from .errors import DomainError, SeriesTooShortError

GRID_RANGE = (2, 30)


@dataclass(frozen=True, order=True)
class EmbeddingParams:
    """Delay ``tau`` (in samples) and embedding dimension ``d``."""

    tau: int
    d: int

    def __post_init__(self):
        for name in ("tau", "d"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise DomainError(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))

    @property
    def span(self):
        """Samples consumed before the first complete delay vector."""
        return (self.d - 1) * self.tau

    def min_length(self):
        return self.span + 1

    def n_points(self, n):
        return n - self.span


@dataclass(frozen=True, eq=False)
class PhaseSpace:
    """Delay vectors, one per row.

    Columns are grouped by channel; within a channel the order is
    ``x[n], x[n - tau], ..., x[n - (d - 1) tau]``.
    """

    points: np.ndarray
    params: EmbeddingParams
    n_channels: int
    source_len: int

    @property
    def point_dim(self):
        return self.n_channels * self.params.d

    def __len__(self):
        return self.points.shape[0]


def delay_matrix(x, tau, d):
    """Embed a 1-D or (N, c) array; returns the (N - (d-1) tau, c d) matrix."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    span = (d - 1) * tau
    if n <= span:
        raise SeriesTooShortError(
            f"series of length {n} is too short for tau={tau}, d={d}: "
            f"need at least {span + 1} samples",
            required=span + 1,
        )
    rows = np.arange(span, n)
    lags = np.arange(d) * tau
    # (rows, d, c) -> channel-major columns
    idx = rows[:, None] - lags[None, :]
    return x[idx].transpose(0, 2, 1).reshape(rows.size, -1)


def embed(series: TimeSeries, params: EmbeddingParams) -> PhaseSpace:
    """Reconstruct the phase space of ``series`` with delay ``params``."""
    try:
        pts = delay_matrix(series.values, params.tau, params.d)
    except SeriesTooShortError as exc:
        raise SeriesTooShortError(f"series {series.id!r}: {exc}", exc.required) from None
    pts.setflags(write=False)
    return PhaseSpace(pts, params, series.n_channels, len(series))


def grid(lo=GRID_RANGE[0], hi=GRID_RANGE[1]):
    """All (tau, d) pairs of the square search grid, tau-major."""
    return [EmbeddingParams(t, d) for t in range(lo, hi + 1) for d in range(lo, hi + 1)]

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rpsgmm.data import TimeSeries
from rpsgmm.embedding import EmbeddingParams, delay_matrix, embed, grid
from rpsgmm.errors import DomainError, SeriesTooShortError


def ts(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    return TimeSeries("s", np.arange(len(x)), [f"c{j}" for j in range(x.shape[1])], x)


@pytest.mark.parametrize("x,tau,d,rows", [
    ([1, 2, 3, 4, 5], 1, 2, [[2, 1], [3, 2], [4, 3], [5, 4]]),
    ([1, 2, 3, 4, 5], 1, 1, [[1], [2], [3], [4], [5]]),
    ([10, 20, 30, 40, 50, 60], 2, 3, [[50, 30, 10], [60, 40, 20]]),
])
def test_examples(x, tau, d, rows):
    ps = embed(ts(x), EmbeddingParams(tau, d))
    assert ps.points.tolist() == rows
    assert ps.point_dim == d
    assert ps.source_len == len(x)


def test_multichannel_concatenates_in_schema_order():
    x = np.column_stack([np.arange(6.0), 100 + np.arange(6.0)])
    ps = embed(ts(x), EmbeddingParams(2, 2))
    assert ps.point_dim == 4
    assert ps.points.tolist() == [
        [2, 0, 102, 100], [3, 1, 103, 101], [4, 2, 104, 102], [5, 3, 105, 103],
    ]


def test_train_sized_example():
    x = np.random.default_rng(0).normal(size=(245, 2))
    ps = embed(ts(x), EmbeddingParams(2, 5))
    assert ps.points.shape == (237, 10)


def test_too_short_names_minimum():
    with pytest.raises(SeriesTooShortError, match="at least 7") as exc:
        embed(ts(np.arange(6.0)), EmbeddingParams(3, 3))
    assert exc.value.required == 7


def test_params_validation():
    with pytest.raises(DomainError):
        EmbeddingParams(0, 2)
    with pytest.raises(DomainError):
        EmbeddingParams(2, 1.5)


def test_grid_cardinality():
    g = grid()
    assert len(g) == 841
    assert g[0] == EmbeddingParams(2, 2) and g[-1] == EmbeddingParams(30, 30)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 30), st.integers(1, 30), st.integers(1, 400))
def test_row_count_and_column_shift(tau, d, n):
    x = np.arange(n, dtype=float) * 1.5 - 7
    if n <= (d - 1) * tau:
        with pytest.raises(SeriesTooShortError):
            delay_matrix(x, tau, d)
        return
    m = delay_matrix(x, tau, d)
    rows = n - (d - 1) * tau
    assert m.shape == (rows, d)
    span = (d - 1) * tau
    for j in range(d):
        assert np.array_equal(m[:, j], x[span - j * tau: n - j * tau])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=100))
def test_d1_is_identity(values):
    ps = embed(ts(values), EmbeddingParams(3, 1))
    assert ps.points[:, 0].tolist() == values


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(40, 120))
def test_reconstruction_from_first_column_and_first_row(tau, d, n):
    x = np.random.default_rng(n).normal(size=n)
    m = delay_matrix(x, tau, d)
    span = (d - 1) * tau
    out = np.full(n, np.nan)
    out[span:] = m[:, 0]
    # the earliest row holds x[span], x[span - tau], ..., x[0]
    for j in range(d):
        out[span - j * tau] = m[0, j]
    # remaining gaps come from later rows' lagged coordinates
    for j in range(1, d):
        out[span - j * tau: n - j * tau] = m[:, j]
    assert np.array_equal(out, x)


def test_points_are_copies_of_source():
    x = np.random.default_rng(1).normal(size=(50, 2))
    ps = embed(ts(x), EmbeddingParams(4, 3))
    assert set(np.unique(ps.points)) <= set(np.unique(x))

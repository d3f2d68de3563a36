import numpy as np
import pytest

from rpsgmm.data import Dataset, LakeClass, TimeSeries, load_dataset, write_dataset
from rpsgmm.errors import DuplicateSampleError, ParseError, SchemaError


def write_csv(path, rows, header="series_id,day,channel,value,label"):
    path.write_text(header + "\n" + "\n".join(rows) + "\n")
    return path


def lake_rows(sid, label, n_days=245, channels=("hv_anom", "p_water")):
    for day in range(n_days):
        for j, ch in enumerate(channels):
            yield f"{sid},{day},{ch},{np.sin(day / 10 + j):.6f},{label}"


def test_two_lakes_full_season(tmp_path):
    rows = list(lake_rows("a", "refreeze")) + list(lake_rows("b", "drain"))
    ds = load_dataset(write_csv(tmp_path / "d.csv", rows), ["hv_anom", "p_water"])
    assert len(ds) == 2
    for s in ds:
        assert s.values.shape == (245, 2)
        assert s.timestamps.tolist() == list(range(245))
    assert ds.labels == ["refreeze", "drain"]


def test_rows_sorted_by_day_and_grouped(tmp_path):
    rows = [
        "x,2,c,3.0,", "y,0,c,10.0,", "x,0,c,1.0,", "x,1,c,2.0,",
        "y,2,c,12.0,", "y,1,c,11.0,",
    ]
    ds = load_dataset(write_csv(tmp_path / "d.csv", rows))
    assert ds.ids == ["x", "y"]
    assert ds["x"].channel("c").tolist() == [1.0, 2.0, 3.0]
    assert ds["y"].label is None


def test_non_numeric_value_names_line(tmp_path):
    rows = ["a,0,c,1.0,", "a,1,c,oops,"]
    with pytest.raises(ParseError, match="line 3") as exc:
        load_dataset(write_csv(tmp_path / "d.csv", rows))
    assert exc.value.line == 3


def test_bad_day_is_parse_error(tmp_path):
    with pytest.raises(ParseError, match="line 2"):
        load_dataset(write_csv(tmp_path / "d.csv", ["a,1.5,c,1.0,"]))


def test_duplicate_sample(tmp_path):
    rows = ["a,0,c,1.0,", "a,0,c,2.0,"]
    with pytest.raises(DuplicateSampleError, match="line 3"):
        load_dataset(write_csv(tmp_path / "d.csv", rows))


def test_missing_channel_is_schema_error(tmp_path):
    rows = ["a,0,u,1.0,", "a,0,v,1.0,", "a,1,u,1.0,"]
    with pytest.raises(SchemaError):
        load_dataset(write_csv(tmp_path / "d.csv", rows))


def test_channel_outside_schema(tmp_path):
    with pytest.raises(SchemaError, match="not in schema"):
        load_dataset(write_csv(tmp_path / "d.csv", ["a,0,zz,1.0,"]), ["hv_anom"])


def test_conflicting_labels(tmp_path):
    with pytest.raises(ParseError):
        load_dataset(write_csv(tmp_path / "d.csv", ["a,0,c,1.0,drain", "a,1,c,1.0,buried"]))


def test_bad_header(tmp_path):
    with pytest.raises(ParseError, match="header"):
        load_dataset(write_csv(tmp_path / "d.csv", ["a,0,c,1.0"], header="id,t,ch,v"))


def test_undeclared_label(tmp_path):
    with pytest.raises(SchemaError):
        load_dataset(write_csv(tmp_path / "d.csv", ["a,0,c,1.0,melt"]),
                     label_set=["refreeze", "drain", "buried"])


def test_lake_class_counts(tmp_path):
    # 777 lakes: 189 refreeze, 392 drained, 196 buried
    counts = {"refreeze": 189, "drain": 392, "buried": 196}
    rows = []
    k = 0
    for label, n in counts.items():
        for _ in range(n):
            rows += [f"L{k},{d},hv_anom,{-d * 0.01:.3f},{label}" for d in range(3)]
            k += 1
    ds = load_dataset(write_csv(tmp_path / "d.csv", rows), ["hv_anom"],
                      label_set=[c.value for c in LakeClass])
    assert len(ds) == 777
    assert ds.class_counts() == counts


def test_load_is_deterministic(tmp_path, small_synth):
    p = tmp_path / "s.csv"
    write_dataset(small_synth, p)
    a, b = load_dataset(p), load_dataset(p)
    assert all(x.equals(y) for x, y in zip(a, b))
    assert all(x.equals(y) for x, y in zip(a, small_synth))


def test_timeseries_invariants():
    with pytest.raises(SchemaError):
        TimeSeries("a", [0, 2, 1], ["c"], [[1.0], [2.0], [3.0]])
    with pytest.raises(SchemaError):
        TimeSeries("a", [0, 1], ["c"], [[1.0], [2.0], [3.0]])
    with pytest.raises(SchemaError):
        TimeSeries("a", [0, 1], ["c"], [[1.0], [np.nan]])
    raw = TimeSeries("a", [0, 1], ["c"], [[1.0], [np.nan]], raw=True)
    assert np.isnan(raw.values[1, 0])


def test_timeseries_is_read_only():
    s = TimeSeries("a", [0, 1], ["c"], [[1.0], [2.0]])
    with pytest.raises(ValueError):
        s.values[0, 0] = 5.0


def test_dataset_requires_common_grid():
    a = TimeSeries("a", [0, 1], ["c"], [[1.0], [2.0]])
    b = TimeSeries("b", [0, 1, 2], ["c"], [[1.0], [2.0], [3.0]])
    with pytest.raises(SchemaError):
        Dataset([a, b], ["c"])


def test_lake_class_values_are_strings():
    assert LakeClass.DRAIN == "drain"
    assert str(LakeClass.BURIED) == "buried"

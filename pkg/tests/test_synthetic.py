import numpy as np
import pytest

from rpsgmm.errors import DomainError
from rpsgmm.synthetic import SyntheticSpec, generate_synthetic


def test_cardinality():
    ds = generate_synthetic(SyntheticSpec(n_per_class=20, length=245, seed=0))
    assert len(ds) == 60
    assert ds.class_counts() == {"refreeze": 20, "drain": 20, "buried": 20}
    assert all(s.values.shape == (245, 2) for s in ds)


def test_noise_free_members_identical():
    ds = generate_synthetic(SyntheticSpec(n_per_class=3, noise=0.0))
    for label in ds.label_set:
        members = [s for s in ds if s.label == label]
        assert all(np.array_equal(members[0].values, m.values) for m in members[1:])


def test_deterministic():
    a = generate_synthetic(SyntheticSpec(seed=5, n_per_class=4))
    b = generate_synthetic(SyntheticSpec(seed=5, n_per_class=4))
    assert all(x.equals(y) for x, y in zip(a, b))
    c = generate_synthetic(SyntheticSpec(seed=6, n_per_class=4))
    assert not all(x.equals(y) for x, y in zip(a, c))


def test_archetype_signatures():
    ds = generate_synthetic(SyntheticSpec(n_per_class=1, noise=0.0))
    late = slice(200, 245)
    assert np.all(ds["buried-000"].channel("hv_anom")[late] < -4)
    assert np.all(np.abs(ds["refreeze-000"].channel("hv_anom")[late]) < 0.5)
    assert np.all(ds["drain-000"].channel("p_water")[90:120] < 1)
    assert np.all(ds["refreeze-000"].channel("p_water")[90:120] > 50)


def test_water_stays_in_percent_range():
    ds = generate_synthetic(SyntheticSpec(noise=3.0, n_per_class=5))
    for s in ds:
        w = s.channel("p_water")
        assert w.min() >= 0 and w.max() <= 100


def test_spec_validation():
    with pytest.raises(DomainError):
        SyntheticSpec(noise=-1)
    with pytest.raises(DomainError):
        SyntheticSpec(classes=("melt",))
    with pytest.raises(DomainError):
        SyntheticSpec.from_dict({"noise": 1.0, "bogus": 2})

"""Synthetic lake-like series for tests and demos.

Three archetypes on a May 1 .. Dec 31 style grid, two channels
(``hv_anom`` in dB, ``p_water`` in percent):

refreeze
    water fills early in the season, then both the water fraction and the
    backscatter anomaly return to zero in autumn.
drain
    same filling, but the water fraction collapses mid-season and the
    anomaly recovers soon after.
buried
    the water fraction falls to zero in autumn like a refreezing lake, while
    the anomaly stays strongly negative to the end of the year.

Every random perturbation (onset jitter, amplitude, additive noise) is
proportional to ``noise``, so ``noise=0`` yields identical members per class.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .data import DEFAULT_CHANNELS, Dataset, LakeClass, TimeSeries
from .errors import DomainError

ARCHETYPES = (LakeClass.REFREEZE.value, LakeClass.DRAIN.value, LakeClass.BURIED.value)

# reference timings in days of a 245-day season; rescaled for other lengths
_FILL_DAY = 35.0
_DRAIN_DAY = 75.0
_FREEZE_DAY = 130.0
_REFERENCE_LEN = 245


@dataclass(frozen=True)
class SyntheticSpec:
    classes: tuple[str, ...] = ARCHETYPES
    n_per_class: int = 20
    length: int = 245
    noise: float = 1.0
    seed: int = 0
    hv_depth: float = 8.0
    water_peak: float = 80.0

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        unknown = [c for c in self.classes if c not in ARCHETYPES]
        if unknown:
            raise DomainError(f"unknown archetype(s) {unknown}; choose from {list(ARCHETYPES)}")
        if self.n_per_class < 1:
            raise DomainError("n_per_class must be >= 1")
        if self.length < 2:
            raise DomainError("length must be >= 2")
        if self.noise < 0:
            raise DomainError("noise must be >= 0")

    @classmethod
    def from_dict(cls, d):
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        extra = set(d) - set(known)
        if extra:
            raise DomainError(f"unknown synthetic spec field(s) {sorted(extra)}")
        return cls(**known)

    @classmethod
    def from_json(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        d = asdict(self)
        d["classes"] = list(self.classes)
        return d


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def archetype(kind, t, fill, drain, freeze, hv_depth, water_peak):
    """Noise-free ``(hv_anom, p_water)`` curves for one archetype."""
    rise = _sigmoid((t - fill) / 3.0)
    if kind == "drain":
        # abrupt water loss; the anomaly recovers over a couple of weeks
        water = rise * _sigmoid(-(t - drain) / 0.7)
        hv = -hv_depth * rise * _sigmoid(-(t - drain - 8.0) / 4.0)
    elif kind == "refreeze":
        water = rise * _sigmoid(-(t - freeze) / 5.0)
        hv = -hv_depth * rise * _sigmoid(-(t - freeze - 10.0) / 6.0)
    elif kind == "buried":
        water = rise * _sigmoid(-(t - freeze) / 5.0)
        # partial recovery only: liquid water stays below the surface
        hv = -hv_depth * rise * (0.75 + 0.25 * _sigmoid(-(t - freeze - 10.0) / 6.0))
    else:
        raise DomainError(f"unknown archetype {kind!r}")
    return hv, water_peak * water


def generate_synthetic(spec: SyntheticSpec = SyntheticSpec()) -> Dataset:
    """Labelled two-channel dataset, deterministic in ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    t = np.arange(spec.length, dtype=float)
    scale = spec.length / _REFERENCE_LEN
    eta = spec.noise
    series = []
    for kind in spec.classes:
        for i in range(spec.n_per_class):
            jitter = rng.normal(0.0, 3.0 * eta * scale, size=3)
            amp = 1.0 + 0.05 * eta * rng.standard_normal(2)
            hv, water = archetype(
                kind, t,
                fill=_FILL_DAY * scale + jitter[0],
                drain=_DRAIN_DAY * scale + jitter[1],
                freeze=_FREEZE_DAY * scale + jitter[2],
                hv_depth=spec.hv_depth * amp[0],
                water_peak=spec.water_peak * amp[1],
            )
            hv = hv + rng.normal(0.0, 0.5 * eta, spec.length)
            water = np.clip(water + rng.normal(0.0, 3.0 * eta, spec.length), 0.0, 100.0)
            series.append(TimeSeries(f"{kind}-{i:03d}", t.astype(int), DEFAULT_CHANNELS,
                                     np.column_stack([hv, water]), kind))
    return Dataset(series, DEFAULT_CHANNELS, spec.classes)

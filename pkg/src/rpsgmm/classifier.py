"""Maximum-likelihood classification with one mixture per class.

Each class is represented by a single training series. Its phase space is
modelled by a GMM, and an unseen series goes to the class whose GMM gives
its embedded points the largest total log-likelihood. ``grid_search``
repeats train + classify over a square grid of (tau, d).
"""

from __future__ import annotations

import logging
import math
import time
from collections.abc import Mapping
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from types import MappingProxyType

import numpy as np

from .data import Dataset, TimeSeries
from .embedding import GRID_RANGE, EmbeddingParams, embed, grid
from .errors import DomainError, NumericalError, SchemaError, SeriesTooShortError
from .gmm import FitConfig, GmmModel, fit_em, log_mixture_density

log = logging.getLogger(__name__)


def derive_seed(seed, class_index, tau, d):
    """Per-fit seed from the global seed, class position and grid cell."""
    ss = np.random.SeedSequence([int(seed), int(class_index), int(tau), int(d)])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


@dataclass(frozen=True, eq=False)
class ClassifierBundle:
    """Per-class mixtures sharing one embedding.

    ``class_order`` fixes iteration order and breaks likelihood ties (the
    first class wins).
    """

    params: EmbeddingParams
    models: Mapping[str, GmmModel]
    channels: tuple[str, ...]
    class_order: tuple[str, ...] = ()
    representatives: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        order = tuple(self.class_order) or tuple(self.models)
        if set(order) != set(self.models) or len(order) != len(self.models):
            raise SchemaError(f"class_order {list(order)} does not match models {list(self.models)}")
        object.__setattr__(self, "class_order", order)
        object.__setattr__(self, "channels", tuple(self.channels))
        object.__setattr__(self, "models", MappingProxyType({c: self.models[c] for c in order}))
        object.__setattr__(self, "representatives", MappingProxyType(dict(self.representatives)))
        if len(order) < 2:
            raise SchemaError("a classifier needs at least two classes")
        dim = len(self.channels) * self.params.d
        for label, model in self.models.items():
            if model.dim != dim:
                raise SchemaError(
                    f"class {label!r}: model dimension {model.dim} != "
                    f"{len(self.channels)} channels x d={self.params.d}"
                )


def _prepare(series: TimeSeries, channels):
    if series.channels == tuple(channels):
        return series
    return series.select(channels)


def train(
    representatives: Mapping[str, TimeSeries],
    params: EmbeddingParams,
    config: FitConfig = FitConfig(),
    channels=None,
) -> ClassifierBundle:
    """Fit one mixture per class on the phase space of its representative.

    The EM seed of class ``i`` is derived from ``(config.seed, i, tau, d)``
    so bundles are reproducible and cells of a grid search independent.
    """
    reps = dict(representatives)
    if len(reps) < 2:
        raise SchemaError("need a representative series for at least two classes")
    if channels is None:
        channels = next(iter(reps.values())).channels
    models = {}
    for i, (label, series) in enumerate(reps.items()):
        s = _prepare(series, channels)
        try:
            ps = embed(s, params)
        except SeriesTooShortError as exc:
            raise SeriesTooShortError(f"class {label!r}: {exc}", exc.required) from None
        cfg = replace(config, seed=derive_seed(config.seed, i, params.tau, params.d))
        try:
            models[label] = fit_em(ps, cfg)
        except NumericalError as exc:
            raise type(exc)(f"class {label!r}: {exc}") from exc
    return ClassifierBundle(params, models, channels, tuple(reps),
                            {lab: s.id for lab, s in reps.items()})


def sequence_log_likelihood(series: TimeSeries, model: GmmModel, params: EmbeddingParams):
    """Sum of per-point log mixture densities over the embedded series."""
    ps = embed(series, params)
    return float(np.sum(log_mixture_density(ps.points, model)))


def _argmax_first(scores, order):
    best, best_score = None, -math.inf
    for label in order:
        s = scores[label]
        if best is None or s > best_score:
            best, best_score = label, s
    return best


def classify(series: TimeSeries, bundle: ClassifierBundle):
    """Return ``(label, {label: log-likelihood})`` for ``series``."""
    s = _prepare(series, bundle.channels)
    ps = embed(s, bundle.params)
    scores = {}
    for label in bundle.class_order:
        ll = float(np.sum(log_mixture_density(ps.points, bundle.models[label])))
        scores[label] = ll if not math.isnan(ll) else -math.inf
    return _argmax_first(scores, bundle.class_order), scores


def self_consistency(bundle: ClassifierBundle, representatives: Mapping[str, TimeSeries]):
    """Labels whose representative is not classified back to its own class."""
    return [lab for lab, s in representatives.items() if classify(s, bundle)[0] != lab]


def select_representatives(dataset: Dataset, ids: Mapping[str, str] | None = None):
    """Resolve ``{label: series id}`` to series; default is the first of each class."""
    if not ids:
        reps = dataset.first_of_each_class()
        if len(reps) < len(dataset.label_set):
            missing = [lab for lab in dataset.label_set if lab not in reps]
            raise SchemaError(f"no series for class(es) {missing}")
        return reps
    out = {}
    for label, sid in ids.items():
        if sid not in dataset:
            raise SchemaError(f"unknown representative series id {sid!r} for class {label!r}")
        out[label] = dataset[sid]
    return out


@dataclass(frozen=True)
class CellResult:
    tau: int
    d: int
    accuracy: float
    skipped: bool
    seconds: float
    status: str = "ok"
    message: str = ""
    n_correct: int = 0
    n_total: int = 0
    fits: tuple = ()

    @property
    def params(self):
        return EmbeddingParams(self.tau, self.d)


@dataclass(frozen=True, eq=False)
class GridSearchResult:
    cells: tuple[CellResult, ...]
    lo: int
    hi: int
    best: EmbeddingParams | None
    best_accuracy: float

    def table(self):
        """``{(tau, d): accuracy}``; NaN for skipped or failed cells."""
        return {(c.tau, c.d): c.accuracy for c in self.cells}

    def cell(self, tau, d):
        for c in self.cells:
            if c.tau == tau and c.d == d:
                return c
        raise KeyError((tau, d))

    def to_csv(self, timing=True):
        cols = ["tau", "d", "accuracy", "skipped"] + (["seconds"] if timing else [])
        lines = [",".join(cols)]
        for c in self.cells:
            acc = "" if math.isnan(c.accuracy) else repr(c.accuracy)
            row = [str(c.tau), str(c.d), acc, "true" if c.skipped else "false"]
            if timing:
                row.append(f"{c.seconds:.6f}")
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"

    def summary(self):
        failed = [
            {"tau": c.tau, "d": c.d, "reason": c.message}
            for c in self.cells if c.status == "failed"
        ]
        return {
            "range": [self.lo, self.hi],
            "n_cells": len(self.cells),
            "n_skipped": sum(c.skipped for c in self.cells),
            "n_failed": len(failed),
            "best": None if self.best is None else {"tau": self.best.tau, "d": self.best.d},
            "best_accuracy": None if self.best is None else self.best_accuracy,
            "failed_cells": failed,
        }


def pick_best(cells):
    """Highest accuracy; ties go to smaller d, then smaller tau."""
    scored = [c for c in cells if c.status == "ok"]
    if not scored:
        return None, math.nan
    best = min(scored, key=lambda c: (-c.accuracy, c.d, c.tau))
    return best.params, best.accuracy


_WORKER_STATE = {}


def _init_worker(reps, eval_series, config, channels):
    _WORKER_STATE.update(reps=reps, eval_series=eval_series, config=config, channels=channels)


def _run_cell(params: EmbeddingParams):
    st = _WORKER_STATE
    return evaluate_cell(st["reps"], st["eval_series"], params, st["config"], st["channels"])


def evaluate_cell(reps, eval_series, params, config, channels):
    """Train at ``params`` and score every eval series."""
    t0 = time.perf_counter()
    shortest = min(len(s) for s in reps.values())
    if shortest <= params.span:
        return CellResult(params.tau, params.d, math.nan, True, time.perf_counter() - t0,
                          "skipped", f"representative length {shortest} <= {params.span}")
    try:
        bundle = train(reps, params, config, channels)
        correct = sum(classify(s, bundle)[0] == s.label for s in eval_series)
    except NumericalError as exc:
        return CellResult(params.tau, params.d, math.nan, False, time.perf_counter() - t0,
                          "failed", str(exc))
    fits = tuple(
        (lab, m.meta.log_likelihood, m.meta.n_iter, m.meta.converged)
        for lab, m in bundle.models.items()
    )
    n = len(eval_series)
    return CellResult(params.tau, params.d, correct / n, False, time.perf_counter() - t0,
                      "ok", "", correct, n, fits)


def grid_search(
    representatives: Mapping[str, TimeSeries],
    eval_set: Dataset,
    lo: int = GRID_RANGE[0],
    hi: int = GRID_RANGE[1],
    config: FitConfig = FitConfig(),
    workers: int = 1,
    channels=None,
    progress=None,
) -> GridSearchResult:
    """Accuracy of train + classify for every (tau, d) in ``[lo, hi]^2``.

    Cells where a representative is too short to embed are marked skipped;
    cells whose fit fails numerically are kept with NaN accuracy. With
    ``workers > 1`` cells run in a process pool; results are merged in grid
    order so the table does not depend on the worker count.
    """
    if len(eval_set) == 0:
        raise DomainError("evaluation set is empty")
    if lo < 1 or hi < lo:
        raise DomainError(f"invalid grid range [{lo}, {hi}]")
    unlabeled = [s.id for s in eval_set if s.label is None]
    if unlabeled:
        raise DomainError(f"evaluation series without labels: {unlabeled[:5]}")
    reps = dict(representatives)
    if channels is None:
        channels = eval_set.channels
    channels = tuple(channels)
    eval_series = [_prepare(s, channels) for s in eval_set]
    reps = {lab: _prepare(s, channels) for lab, s in reps.items()}
    cells_params = grid(lo, hi)

    if workers <= 1:
        results = []
        for p in cells_params:
            results.append(evaluate_cell(reps, eval_series, p, config, channels))
            if progress:
                progress(results[-1])
    else:
        with ProcessPoolExecutor(
            max_workers=workers,
            initializer=_init_worker,
            initargs=(reps, eval_series, config, channels),
        ) as pool:
            results = []
            for r in pool.map(_run_cell, cells_params, chunksize=max(1, len(cells_params) // (4 * workers))):
                results.append(r)
                if progress:
                    progress(r)

    best, best_acc = pick_best(results)
    if best is not None:
        log.info("best cell tau=%d d=%d accuracy=%.4f", best.tau, best.d, best_acc)
    return GridSearchResult(tuple(results), lo, hi, best, best_acc)


def holdout_split(dataset: Dataset, fraction: float, seed=0, keep=()):
    """Split into (search, report) sets, stratified by class.

    ``fraction`` of each class (rounded) goes to the report set; ids in
    ``keep`` always stay in the search set.
    """
    if not 0 < fraction < 1:
        raise DomainError("holdout fraction must lie strictly between 0 and 1")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x401D]))
    keep = set(keep)
    report = set()
    for label in dataset.label_set:
        ids = [s.id for s in dataset if s.label == label and s.id not in keep]
        k = int(round(fraction * len(ids)))
        if k:
            report.update(ids[i] for i in rng.permutation(len(ids))[:k])
    search = [s.id for s in dataset if s.id not in report]
    held = [s.id for s in dataset if s.id in report]
    if not held:
        raise DomainError("holdout fraction leaves the report set empty")
    return dataset.subset(search), dataset.subset(held)

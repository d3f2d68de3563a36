"""Lloyd's k-means with k-means++ seeding and restarts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientPointsError


@dataclass(frozen=True, eq=False)
class KMeansResult:
    centroids: np.ndarray
    labels: np.ndarray
    inertia: float
    n_iter: int
    restart_inertias: tuple[float, ...]
    best_restart: int


def _sq_dists(points, centroids):
    # |x|^2 - 2 x.c + |c|^2 loses precision for tight clusters far from the origin
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def kmeans_plusplus(points, k, rng):
    """Pick ``k`` initial centroids by D^2 sampling."""
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    closest = np.sum((points - centers[0]) ** 2, axis=1)
    for i in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = rng.choice(n, p=closest / total)
        else:
            # every point already coincides with a center
            idx = rng.integers(n)
        centers[i] = points[idx]
        closest = np.minimum(closest, np.sum((points - centers[i]) ** 2, axis=1))
    return centers


def lloyd(points, centroids, max_iter=300):
    """Run Lloyd iterations from ``centroids`` until assignments settle."""
    centroids = centroids.copy()
    labels = None
    k = centroids.shape[0]
    it = 0
    for it in range(1, max_iter + 1):
        d2 = _sq_dists(points, centroids)
        new_labels = np.argmin(d2, axis=1)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        counts = np.bincount(labels, minlength=k)
        for j in range(k):
            if counts[j]:
                centroids[j] = points[labels == j].mean(axis=0)
            else:
                # empty cluster: move it onto the worst-served point
                far = int(np.argmax(d2[np.arange(len(points)), labels]))
                centroids[j] = points[far]
                labels[far] = j
                d2[far, :] = 0.0
    d2 = _sq_dists(points, centroids)
    labels = np.argmin(d2, axis=1)
    inertia = float(d2[np.arange(len(points)), labels].sum())
    return centroids, labels, inertia, it


def kmeans(points, k, n_init=10, seed=None, max_iter=300) -> KMeansResult:
    """Best of ``n_init`` k-means++ seeded Lloyd runs, by inertia.

    All restarts draw from one generator seeded with ``seed``, so the result
    is a deterministic function of ``(points, k, n_init, seed)``.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    if k < 1 or n_init < 1:
        raise ValueError("k and n_init must be positive")
    if points.shape[0] < k:
        raise InsufficientPointsError(
            f"k-means needs at least {k} points, got {points.shape[0]}"
        )
    rng = np.random.default_rng(seed)
    best = None
    inertias = []
    for r in range(n_init):
        init = kmeans_plusplus(points, k, rng)
        cents, labels, inertia, n_iter = lloyd(points, init, max_iter)
        inertias.append(inertia)
        if best is None or inertia < best[2]:
            best = (cents, labels, inertia, n_iter, r)
    cents, labels, inertia, n_iter, r = best
    return KMeansResult(cents, labels, inertia, n_iter, tuple(inertias), r)

"""Seeded k-means (k-means++ init, Lloyd iterations).

Hand-rolled rather than delegated so the per-iteration objective history is
observable and empty clusters can be repaired deterministically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class KMeansResult:
    assignments: np.ndarray      # (n,) int cluster ids in [0, k)
    centroids: np.ndarray        # (k, d)
    inertia_history: list        # within-cluster sum of squares after each iteration
    n_iter: int

    @property
    def inertia(self) -> float:
        return self.inertia_history[-1]


def _plus_plus_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]), dtype=float)
    first = int(rng.integers(n))
    centroids[0] = points[first]
    closest_sq = np.sum((points - centroids[0]) ** 2, axis=1)
    for i in range(1, k):
        total = float(closest_sq.sum())
        if total == 0.0:
            # All remaining points coincide with chosen centroids; pick any.
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=closest_sq / total))
        centroids[i] = points[idx]
        dist_sq = np.sum((points - centroids[i]) ** 2, axis=1)
        closest_sq = np.minimum(closest_sq, dist_sq)
    return centroids


def _assign(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    dists = np.sum((points[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
    return np.argmin(dists, axis=1)


def _repair_empty(points, centroids, assignments, k):
    """Give every empty cluster the point farthest from its centroid."""
    for cid in range(k):
        if np.any(assignments == cid):
            continue
        dist_to_own = np.sum((points - centroids[assignments]) ** 2, axis=1)
        # Don't steal from singleton clusters or we'd just move the hole.
        counts = np.bincount(assignments, minlength=k)
        candidates = np.flatnonzero(counts[assignments] > 1)
        if candidates.size == 0:
            continue
        farthest = candidates[np.argmax(dist_to_own[candidates])]
        assignments[farthest] = cid
        centroids[cid] = points[farthest]
    return assignments, centroids


def kmeans(points: np.ndarray, k: int, seed: int, max_iter: int = 300) -> KMeansResult:
    """Cluster rows of ``points`` into ``k`` non-empty clusters.

    Deterministic for a given seed. Stops when assignments are stable or
    after ``max_iter`` iterations. The objective history is non-increasing.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[0] == 0:
        raise ValueError("points must be a non-empty 2-D array")
    n = points.shape[0]
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > n:
        raise ValueError(f"cannot form {k} clusters from {n} points")
    rng = np.random.default_rng(seed)
    centroids = _plus_plus_init(points, k, rng)
    assignments = _assign(points, centroids)
    assignments, centroids = _repair_empty(points, centroids, assignments, k)
    history: list[float] = []
    n_iter = 0
    for _ in range(max_iter):
        n_iter += 1
        for cid in range(k):
            members = points[assignments == cid]
            if members.shape[0]:
                centroids[cid] = members.mean(axis=0)
        new_assignments = _assign(points, centroids)
        new_assignments, centroids = _repair_empty(points, centroids, new_assignments, k)
        inertia = float(np.sum((points - centroids[new_assignments]) ** 2))
        history.append(inertia)
        if np.array_equal(new_assignments, assignments):
            assignments = new_assignments
            break
        assignments = new_assignments
    return KMeansResult(
        assignments=assignments,
        centroids=centroids,
        inertia_history=history,
        n_iter=n_iter,
    )

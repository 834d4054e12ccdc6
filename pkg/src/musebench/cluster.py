"""Seeded k-means over prompt embeddings, exported as a grouping dimension.

Standard Lloyd iterations on squared Euclidean distance with k-means++
initialization from a seeded generator.  Ties in the assignment step go
to the lowest centroid index, an empty cluster steals the point
farthest from its current centroid, and iteration stops at an
assignment fixpoint (or max_iters).  Within-cluster inertia never
increases from one iteration to the next, and a fixed (data, k, seed)
triple reproduces the model bit for bit.

The assignment step runs through the numba/numpy kernel backend.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import ValidationFailure
from .shaping import Dimension

DEFAULT_K = 7


@dataclass(frozen=True)
class ClusterModel:
    k: int
    centroids: np.ndarray  # (k, n_features)
    labels: np.ndarray  # (n_points,)
    inertia: float
    n_iter: int
    seed: int
    inertia_history: tuple[float, ...] = ()

    def to_json_dict(self) -> dict:
        return {
            "k": self.k,
            "seed": self.seed,
            "n_iter": self.n_iter,
            "inertia": self.inertia,
            "centroids": [[float(v) for v in row] for row in self.centroids],
            "labels": [int(v) for v in self.labels],
        }

    def dump_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2) + "\n"

    @classmethod
    def from_json_dict(cls, obj) -> "ClusterModel":
        try:
            return cls(
                k=int(obj["k"]),
                centroids=np.asarray(obj["centroids"], dtype=np.float64),
                labels=np.asarray(obj["labels"], dtype=np.int64),
                inertia=float(obj["inertia"]),
                n_iter=int(obj["n_iter"]),
                seed=int(obj["seed"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationFailure(f"bad cluster model JSON: {exc}") from exc


def _plus_plus_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centroids = np.empty((k, X.shape[1]))
    first = int(rng.integers(n))
    centroids[0] = X[first]
    d2 = ((X - centroids[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            # all remaining mass sits on existing centroids; spread uniformly
            nxt = int(rng.integers(n))
        else:
            nxt = int(rng.choice(n, p=d2 / total))
        centroids[i] = X[nxt]
        d2 = np.minimum(d2, ((X - centroids[i]) ** 2).sum(axis=1))
    return centroids


def kmeans(vectors, k: int = DEFAULT_K, *, seed: int = 0, max_iters: int = 300) -> ClusterModel:
    X = np.asarray(vectors, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValidationFailure("vectors must form a non-empty 2-D array")
    if not np.all(np.isfinite(X)):
        raise ValidationFailure("vectors contain NaN or infinity")
    if k < 1:
        raise ValidationFailure("k must be positive")
    n = X.shape[0]
    distinct = np.unique(X, axis=0).shape[0]
    if k > distinct:
        raise ValidationFailure(f"k={k} exceeds the {distinct} distinct vectors")

    rng = np.random.default_rng(seed)
    centroids = _plus_plus_init(X, k, rng)
    prev = None
    history = []
    n_iter = 0
    for n_iter in range(1, max_iters + 1):
        labels, dists = K.assign_points(X, centroids)
        labels, dists = _repair_empty(X, centroids, labels, dists, k)
        history.append(float(dists.sum()))
        if prev is not None and np.array_equal(labels, prev):
            break
        prev = labels
        sums = np.zeros_like(centroids)
        np.add.at(sums, labels, X)
        counts = np.bincount(labels, minlength=k)
        centroids = sums / counts[:, None]

    # at a fixpoint this reproduces the loop's last assignment; after an
    # max_iters exit it re-syncs labels with the final centroids
    labels, dists = K.assign_points(X, centroids)
    inertia = float(dists.sum())
    return ClusterModel(
        k=k,
        centroids=centroids,
        labels=labels,
        inertia=inertia,
        n_iter=n_iter,
        seed=seed,
        inertia_history=tuple(history),
    )


def _repair_empty(X, centroids, labels, dists, k):
    """Give each empty cluster the point farthest from its own centroid."""
    taken = np.zeros(X.shape[0], dtype=bool)
    counts = np.bincount(labels, minlength=k)
    for empty in np.nonzero(counts == 0)[0]:
        d = np.where(taken, -1.0, dists)
        far = int(np.argmax(d))
        labels = labels.copy()
        labels[far] = empty
        dists = dists.copy()
        dists[far] = 0.0
        taken[far] = True
        counts = np.bincount(labels, minlength=k)
    return labels, dists


def predict(model: ClusterModel, vectors) -> np.ndarray:
    X = np.asarray(vectors, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.centroids.shape[1]:
        raise ValidationFailure("vectors do not match the model's feature count")
    labels, _ = K.assign_points(X, model.centroids)
    return labels


def to_membership(model: ClusterModel, *, name: str = "embedding") -> Dimension:
    """One-hot cluster membership as a shaping dimension (k rows)."""
    n = model.labels.shape[0]
    mat = np.zeros((model.k, n), dtype=np.int64)
    mat[model.labels, np.arange(n)] = 1
    cats = tuple(f"cluster-{i}" for i in range(model.k))
    return Dimension(name, mat, cats)

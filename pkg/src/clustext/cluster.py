"""Clustering heads: Lloyd K-means, a Kohonen self-organising map on the unit
sphere, and label-as-representation (argmax of a K-dimensional projection),
plus centroid extraction for the self-training loss.

All heads are sklearn-style estimators: hyperparameters in ``__init__``,
fitted state in trailing-underscore attributes, ``fit``/``predict`` surface.
Randomness is seeded explicitly; ties always resolve to the lowest index.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.exceptions import NotFittedError

from .validation import check_matrix, check_vector


def unit_normalize(v) -> np.ndarray:
    """v / ||v||_2; raises on the zero vector."""
    v = check_vector(v, "v")
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ValueError("cannot normalize zero vector")
    return v / norm


def unit_normalize_rows(X) -> np.ndarray:
    X = check_matrix(X, "X")
    norms = np.linalg.norm(X, axis=1)
    if np.any(norms == 0.0):
        bad = int(np.argwhere(norms == 0.0)[0, 0])
        raise ValueError(f"cannot normalize zero vector (row {bad})")
    return X / norms[:, None]


def label_as_representation(Z) -> np.ndarray:
    """Cluster labels as the argmax index of each projected row (ties -> lowest)."""
    Z = check_matrix(Z, "Z")
    return Z.argmax(axis=1)


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    D = (X * X).sum(axis=1)[:, None] + (C * C).sum(axis=1)[None, :] - 2.0 * X @ C.T
    np.maximum(D, 0.0, out=D)
    return D


class KMeans(ClusterMixin, BaseEstimator):
    """Lloyd iterations with seeded distinct-sample init.

    Stops when assignments stop changing or ``max_iter`` is hit. An empty
    cluster is re-seeded from the point farthest from its assigned centroid.
    ``n_init`` independent restarts keep the lowest within-cluster sum of
    squares; the default of 1 is a single plain run.
    """

    def __init__(self, n_clusters=8, max_iter=100, n_init=1, seed=0):
        self.n_clusters = n_clusters
        self.max_iter = max_iter
        self.n_init = n_init
        self.seed = seed

    def fit(self, X, y=None):
        X = check_matrix(X, "X")
        n = X.shape[0]
        k = self.n_clusters
        if k < 1:
            raise ValueError("n_clusters must be >= 1")
        if k > n:
            raise ValueError(f"n_clusters={k} exceeds sample count {n}")
        best = None
        for run in range(self.n_init):
            rng = np.random.default_rng([self.seed, run])
            result = _lloyd(X, k, self.max_iter, rng)
            if best is None or result[2][-1] < best[2][-1]:
                best = result
        centers, labels, sse_trace, n_iter = best
        self.cluster_centers_ = centers
        self.labels_ = labels
        self.inertia_ = float(sse_trace[-1])
        self.inertia_trace_ = sse_trace
        self.n_iter_ = n_iter
        return self

    def predict(self, X) -> np.ndarray:
        if not hasattr(self, "cluster_centers_"):
            raise NotFittedError("KMeans is not fitted")
        X = check_matrix(X, "X")
        return _sq_dists(X, self.cluster_centers_).argmin(axis=1)


def _lloyd(X: np.ndarray, k: int, max_iter: int, rng: np.random.Generator):
    n = X.shape[0]
    centers = X[rng.choice(n, size=k, replace=False)].copy()
    prev_labels = None
    sse_trace: list[float] = []
    labels = np.zeros(n, dtype=np.intp)
    for it in range(1, max_iter + 1):
        D = _sq_dists(X, centers)
        labels = D.argmin(axis=1)
        assigned = D[np.arange(n), labels]
        sse = float(assigned.sum())
        if sse_trace and sse > sse_trace[-1] + 1e-9 * (1.0 + sse_trace[-1]):
            raise RuntimeError(f"within-cluster SSE increased at iteration {it}")
        sse_trace.append(sse)
        if prev_labels is not None and np.array_equal(labels, prev_labels):
            return centers, labels, sse_trace, it
        prev_labels = labels
        new_centers = centers.copy()
        empty = []
        for c in range(k):
            members = labels == c
            if members.any():
                new_centers[c] = X[members].mean(axis=0)
            else:
                empty.append(c)
        if empty:
            dist_left = assigned.copy()
            for c in empty:
                far = int(dist_left.argmax())
                new_centers[c] = X[far]
                dist_left[far] = -1.0
        centers = new_centers
    return centers, labels, sse_trace, max_iter


class SelfOrganizingMap(ClusterMixin, BaseEstimator):
    """Rows x cols Kohonen map over unit-normalised inputs.

    Winner is the neuron at minimum squared distance; every weight then moves
    toward the sample by ``a(t) * exp(-sqdist(winner, node) / (2 * delta(t)))``
    with ``a(t) = alpha0 * (1 - t/T)`` and ``delta(t) = delta0 * (1 - t/T) + 0.01``,
    and is renormalised to unit length after each update. Samples are visited
    in ascending index order so runs are reproducible. Labels are the flat
    row-major winner index.
    """

    def __init__(self, rows=2, cols=2, n_iter=20, alpha0=0.5, delta0=1.0, seed=0,
                 norm_check=False):
        self.rows = rows
        self.cols = cols
        self.n_iter = n_iter
        self.alpha0 = alpha0
        self.delta0 = delta0
        self.seed = seed
        self.norm_check = norm_check

    def _grid_sqdist(self) -> np.ndarray:
        k = self.rows * self.cols
        r = np.arange(k) // self.cols
        c = np.arange(k) % self.cols
        return (r[:, None] - r[None, :]) ** 2 + (c[:, None] - c[None, :]) ** 2

    def fit(self, X, y=None):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid dimensions must be positive")
        if self.n_iter < 1:
            raise ValueError("n_iter must be >= 1")
        Xn = unit_normalize_rows(X)
        n, d = Xn.shape
        k = self.rows * self.cols
        rng = np.random.default_rng([self.seed])
        W = rng.normal(size=(k, d))
        W /= np.linalg.norm(W, axis=1)[:, None]
        grid_d2 = self._grid_sqdist()
        T = self.n_iter
        qe_trace = []
        for t in range(1, T + 1):
            a = self.alpha0 * (1.0 - t / T)
            delta = self.delta0 * (1.0 - t / T) + 0.01
            winner_dist = np.empty(n)
            for i in range(n):
                z = Xn[i]
                d2 = ((z[None, :] - W) ** 2).sum(axis=1)
                c = int(d2.argmin())
                winner_dist[i] = np.sqrt(d2[c])
                h = a * np.exp(-grid_d2[c] / (2.0 * delta))
                W += h[:, None] * (z[None, :] - W)
                norms = np.linalg.norm(W, axis=1)
                if np.any(norms == 0.0):
                    raise RuntimeError("SOM weight collapsed to zero")
                W /= norms[:, None]
                if self.norm_check and not np.allclose(
                        np.linalg.norm(W, axis=1), 1.0, atol=1e-6):
                    raise RuntimeError(f"weight left the unit sphere at t={t}, sample {i}")
            qe_trace.append(float(winner_dist.mean()))
        self.weights_ = W
        self.labels_ = _sq_dists(Xn, W).argmin(axis=1)
        self.quantization_trace_ = qe_trace
        return self

    def predict(self, X) -> np.ndarray:
        if not hasattr(self, "weights_"):
            raise NotFittedError("SelfOrganizingMap is not fitted")
        Xn = unit_normalize_rows(X)
        return _sq_dists(Xn, self.weights_).argmin(axis=1)


def grid_for(k: int) -> tuple[int, int]:
    """Most square rows x cols factorisation of k."""
    if k < 1:
        raise ValueError("k must be positive")
    r = int(np.sqrt(k))
    while k % r:
        r -= 1
    return r, k // r


class LabelAsRepresentation(ClusterMixin, BaseEstimator):
    """Argmax clustering over a seeded random projection to K dimensions.

    The projection plays the role of the trainable K-way head; cluster
    centres for the self-training loss are computed over the projected space
    by K-means or a SOM, matching the KmeansR / SOMR variants.
    """

    def __init__(self, n_clusters=8, centers="kmeans", seed=0,
                 kmeans_max_iter=100, kmeans_n_init=1,
                 som_iter=20, som_alpha0=0.5, som_delta0=1.0):
        self.n_clusters = n_clusters
        self.centers = centers
        self.seed = seed
        self.kmeans_max_iter = kmeans_max_iter
        self.kmeans_n_init = kmeans_n_init
        self.som_iter = som_iter
        self.som_alpha0 = som_alpha0
        self.som_delta0 = som_delta0

    def fit(self, X, y=None):
        X = check_matrix(X, "X")
        if self.centers not in ("kmeans", "som"):
            raise ValueError(f"centers must be 'kmeans' or 'som', got {self.centers!r}")
        rng = np.random.default_rng([self.seed])
        self.projection_ = rng.normal(0.0, 1.0 / np.sqrt(X.shape[1]),
                                      size=(X.shape[1], self.n_clusters))
        Z = X @ self.projection_
        self.labels_ = label_as_representation(Z)
        if self.centers == "kmeans":
            head = KMeans(self.n_clusters, max_iter=self.kmeans_max_iter,
                          n_init=self.kmeans_n_init, seed=self.seed).fit(Z)
            self.cluster_centers_ = head.cluster_centers_
        else:
            rows, cols = grid_for(self.n_clusters)
            head = SelfOrganizingMap(rows, cols, n_iter=self.som_iter,
                                     alpha0=self.som_alpha0, delta0=self.som_delta0,
                                     seed=self.seed).fit(Z)
            self.cluster_centers_ = head.weights_
        return self

    def predict(self, X) -> np.ndarray:
        if not hasattr(self, "projection_"):
            raise NotFittedError("LabelAsRepresentation is not fitted")
        X = check_matrix(X, "X")
        return label_as_representation(X @ self.projection_)


def centroids_of(head) -> np.ndarray:
    """Cluster centres of a fitted head, as used by the self-training loss."""
    if isinstance(head, KMeans):
        if not hasattr(head, "cluster_centers_"):
            raise NotFittedError("KMeans is not fitted")
        return head.cluster_centers_
    if isinstance(head, SelfOrganizingMap):
        if not hasattr(head, "weights_"):
            raise NotFittedError("SelfOrganizingMap is not fitted")
        return head.weights_
    if isinstance(head, LabelAsRepresentation):
        if not hasattr(head, "cluster_centers_"):
            raise NotFittedError("LabelAsRepresentation is not fitted")
        return head.cluster_centers_
    raise TypeError(f"unsupported head type {type(head).__name__}")

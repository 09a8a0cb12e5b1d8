"""K-means vector quantization over raw patch intensities.

The comparison point for the learned spiking code: cluster the training
patches with Lloyd's algorithm, then reconstruct each test patch as its
nearest centroid. Initialization picks D distinct sample patches; a cluster
that empties is reseeded to the point farthest from its assigned centroid,
which keeps all D centroids live without extra hyperparameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fileio
from .reconstruction import ReconstructedPatch


@dataclass(frozen=True)
class Codebook:
    centroids: np.ndarray
    iterations_run: int
    converged: bool

    def __post_init__(self):
        if self.centroids.ndim != 2 or self.centroids.shape[0] < 1:
            raise ValueError("centroids must be a (D, N) array with D >= 1")
        if not np.all(np.isfinite(self.centroids)):
            raise ValueError("centroids must be finite")

    @property
    def D(self) -> int:
        return self.centroids.shape[0]


def _as_matrix(patches) -> np.ndarray:
    if hasattr(patches, "matrix"):
        return patches.matrix()
    return np.asarray(patches, dtype=np.float64)


def assign(centroids: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Nearest-centroid labels; equidistant points go to the lowest index."""
    # ||x-c||^2 = ||x||^2 - 2 x.c + ||c||^2, dropping the label-independent
    # ||x||^2 term; avoids materializing the (M, D, N) difference tensor
    d2 = (centroids**2).sum(axis=1)[None, :] - 2.0 * (X @ centroids.T)
    return d2.argmin(axis=1)


def wcss(centroids: np.ndarray, X: np.ndarray, labels: np.ndarray) -> float:
    return float(((X - centroids[labels]) ** 2).sum())


def _lloyd(X: np.ndarray, D: int, max_iters: int, rng) -> tuple:
    centroids = X[rng.choice(X.shape[0], size=D, replace=False)].copy()
    labels = np.full(X.shape[0], -1)
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        new_labels = assign(centroids, X)
        if np.array_equal(new_labels, labels):
            converged = True
            break
        labels = new_labels
        for j in range(D):
            members = labels == j
            if members.any():
                centroids[j] = X[members].mean(axis=0)
        # revive empty clusters at the worst-fit point; zeroing that point's
        # residual keeps later empties from grabbing the same one
        own_d2 = ((X - centroids[labels]) ** 2).sum(axis=1)
        for j in range(D):
            if not (labels == j).any():
                far = int(own_d2.argmax())
                centroids[j] = X[far]
                own_d2[far] = -1.0
    return centroids, it, converged


KMEANS_RESTARTS = 5


def kmeans_train(
    patches, D: int, max_iters: int = 100, rng: np.random.Generator | None = None
) -> Codebook:
    """Lloyd's algorithm from D distinct sample-point seeds.

    Sample-point initialization is cheap but can drop two seeds into one
    dense cluster, stranding codes on near-duplicates.  A handful of
    restarts with the within-cluster sum of squares as the referee is the
    classic remedy; the restart count trades compute for init robustness.
    """
    if rng is None:
        raise ValueError("an explicit rng is required for reproducibility")
    X = _as_matrix(patches)
    if X.shape[0] < D:
        raise ValueError(f"need at least {D} patches, got {X.shape[0]}")
    best = None
    best_score = np.inf
    for _ in range(KMEANS_RESTARTS):
        centroids, it, converged = _lloyd(X, D, max_iters, rng)
        score = wcss(centroids, X, assign(centroids, X))
        if score < best_score:
            best_score = score
            best = (centroids, it, converged)
    return Codebook(*best)


def kmeans_reconstruct(codebook: Codebook, patch) -> ReconstructedPatch:
    """The nearest centroid, verbatim."""
    x = np.asarray(getattr(patch, "intensities", patch), dtype=np.float64)
    d2 = ((codebook.centroids - x) ** 2).sum(axis=1)
    return ReconstructedPatch(codebook.centroids[int(d2.argmin())].copy(), silent=False)


def kmeans_reconstruct_batch(codebook: Codebook, X) -> np.ndarray:
    X = _as_matrix(X)
    return codebook.centroids[assign(codebook.centroids, X)]


def save_codebook(codebook: Codebook, path) -> None:
    fileio.write_matrix_file(path, fileio.KMEANS_TAG, codebook.centroids, 0.0, 0.0)


def load_codebook(path) -> Codebook:
    centroids, _, _ = fileio.read_matrix_file(path, fileio.KMEANS_TAG)
    return Codebook(centroids, 0, True)

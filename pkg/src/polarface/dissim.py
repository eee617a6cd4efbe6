"""Dissimilarity-space representation: objects described by distances to the training set."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError


@dataclass(frozen=True)
class DissimilarityMatrix:
    D: np.ndarray
    image_ids: list = field(default_factory=list)
    subject_ids: list = field(default_factory=list)

    def __post_init__(self):
        n = self.D.shape[0]
        if self.D.shape != (n, n):
            raise DimensionMismatchError("dissimilarity matrix must be square")
        for name in ("image_ids", "subject_ids"):
            ids = getattr(self, name)
            if ids and len(ids) != n:
                raise DimensionMismatchError(f"{name} has {len(ids)} entries for {n} objects")
        self.D.setflags(write=False)

    def __len__(self):
        return self.D.shape[0]


def _as_matrix(vectors) -> np.ndarray:
    X = np.asarray(vectors, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatchError("feature vectors must all have the same length")
    return X


def _distances(X: np.ndarray, probes: np.ndarray) -> np.ndarray:
    # direct differences rather than the |x|^2 - 2xy + |y|^2 expansion:
    # exact zeros for identical vectors, no cancellation
    out = np.empty((probes.shape[0], X.shape[0]))
    for a, p in enumerate(probes):
        diff = X - p
        out[a] = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    return out


def dissimilarity_matrix(features, image_ids=None, subject_ids=None) -> DissimilarityMatrix:
    """Pairwise Euclidean distances among training feature vectors."""
    X = _as_matrix(features)
    if X.shape[0] < 2:
        raise ValueError("need at least two training vectors")
    D = _distances(X, X)
    return DissimilarityMatrix(D, list(image_ids or []), list(subject_ids or []))


def embed(probe, training) -> np.ndarray:
    """Distances from ``probe`` to every training vector."""
    X = _as_matrix(training)
    p = np.asarray(probe, dtype=float)
    if p.shape != (X.shape[1],):
        raise DimensionMismatchError(
            f"probe has length {p.size}, training vectors have length {X.shape[1]}"
        )
    return _distances(X, p[None, :])[0]


def embed_many(probes, training) -> np.ndarray:
    X = _as_matrix(training)
    P = _as_matrix(probes)
    if P.shape[1] != X.shape[1]:
        raise DimensionMismatchError(
            f"probes have length {P.shape[1]}, training vectors have length {X.shape[1]}"
        )
    return _distances(X, P)

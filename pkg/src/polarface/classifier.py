"""Pseudo-Fisher discriminant in dissimilarity space.

Each training object is the augmented row (D(t, t_a), 1). For every subject
a two-class minimum-squared-error discriminant is fitted against targets +1
(the subject's images) and -1 (everyone else). The Moore-Penrose inverse
gives the minimum-norm solution, which exists even though the system is
square-or-wider and rank deficient.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dissim import DissimilarityMatrix, dissimilarity_matrix, embed_many
from .errors import DimensionMismatchError, PolarFaceError, UnknownSubjectError

POSTERIOR_EPS = 1e-12


class PseudoInverseError(PolarFaceError):
    """The SVD behind a pseudo-inverse failed to converge."""


def pseudo_inverse(M) -> np.ndarray:
    """Moore-Penrose inverse via SVD.

    Singular values below ``max(rows, cols) * eps * sigma_max`` are treated
    as zero.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.size == 0:
        raise ValueError("pseudo_inverse needs a nonempty 2-D matrix")
    if not np.all(np.isfinite(M)):
        raise ValueError("pseudo_inverse needs a finite matrix")
    try:
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise PseudoInverseError(f"SVD did not converge: {exc}") from exc
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(M.T.shape)
    tol = max(M.shape) * np.finfo(float).eps * s[0]
    keep = s > tol
    inv_s = np.zeros_like(s)
    inv_s[keep] = 1.0 / s[keep]
    return (Vt.T * inv_s) @ U.T


def augment(D) -> np.ndarray:
    """Append the constant-1 bias column to dissimilarity rows."""
    D = np.atleast_2d(np.asarray(D, dtype=float))
    return np.hstack([D, np.ones((D.shape[0], 1))])


@dataclass
class DiscriminantModel:
    """One weight row (n_train dissimilarities + bias) per enrolled subject."""

    weights: np.ndarray
    subjects: list
    training_features: np.ndarray
    training_ids: list
    training_subjects: list
    variant: Optional[str] = None

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.training_features = np.asarray(self.training_features, dtype=float)
        n_train = self.training_features.shape[0]
        if self.weights.shape != (len(self.subjects), n_train + 1):
            raise DimensionMismatchError(
                f"weights shape {self.weights.shape} inconsistent with "
                f"{len(self.subjects)} subjects and {n_train} training images"
            )
        if len(set(self.subjects)) != len(self.subjects):
            raise ValueError("subjects must be unique")
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("discriminant weights must be finite")
        self._index = {s: k for k, s in enumerate(self.subjects)}

    @property
    def dim(self) -> int:
        return self.training_features.shape[1]

    def is_enrolled(self, subject: str) -> bool:
        return subject in self._index

    def subject_index(self, subject: str) -> int:
        try:
            return self._index[subject]
        except KeyError:
            raise UnknownSubjectError(f"subject {subject!r} is not enrolled") from None


def one_vs_rest_targets(training_subjects, subjects) -> np.ndarray:
    """(n_train, L) matrix of +1 / -1 targets."""
    ts = np.asarray(training_subjects, dtype=object)
    return np.stack([np.where(ts == s, 1.0, -1.0) for s in subjects], axis=1)


def train_from_dissimilarity(dm: DissimilarityMatrix, training_features, variant=None) -> DiscriminantModel:
    """Fit all one-vs-rest discriminants sharing a single pseudo-inverse."""
    subject_ids = list(dm.subject_ids)
    n = len(dm)
    if n < 2 or len(subject_ids) != n:
        raise ValueError("training needs at least two images, each with a subject id")
    subjects = sorted(set(subject_ids))
    if len(subjects) < 2:
        raise ValueError("training needs at least two subjects")
    Y = one_vs_rest_targets(subject_ids, subjects)
    W = pseudo_inverse(augment(dm.D)) @ Y
    image_ids = list(dm.image_ids) or [f"t{a}" for a in range(n)]
    return DiscriminantModel(
        weights=W.T.copy(),
        subjects=subjects,
        training_features=np.asarray(training_features, dtype=float),
        training_ids=image_ids,
        training_subjects=subject_ids,
        variant=variant,
    )


def train(features, subject_ids, image_ids=None, variant=None) -> DiscriminantModel:
    """Build the dissimilarity space from raw features, then fit."""
    dm = dissimilarity_matrix(features, image_ids, subject_ids)
    return train_from_dissimilarity(dm, features, variant)


def discriminants(model: DiscriminantModel, probes) -> np.ndarray:
    """Raw discriminant outputs g_k(x), shape (n_probes, L)."""
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    if probes.shape[1] != model.dim:
        raise DimensionMismatchError(
            f"probe features have length {probes.shape[1]}, model expects {model.dim}"
        )
    return augment(embed_many(probes, model.training_features)) @ model.weights.T


def score_many(model: DiscriminantModel, probes) -> np.ndarray:
    """|g_k - 1| for every probe and subject; lower is a stronger match."""
    return np.abs(discriminants(model, probes) - 1.0)


def score(model: DiscriminantModel, probe_features) -> np.ndarray:
    return score_many(model, probe_features)[0]


def posterior(scores) -> np.ndarray:
    """Inverse-distance posterior for reporting; ranks like -score."""
    return 1.0 / (POSTERIOR_EPS + np.asarray(scores, dtype=float))


def verify(model: DiscriminantModel, probe_features, claimed_subject: str, threshold: float):
    """Return ``(accepted, score)`` for the claim; accept iff score <= threshold."""
    k = model.subject_index(claimed_subject)
    s = float(score(model, probe_features)[k])
    return s <= threshold, s

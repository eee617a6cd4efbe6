"""Verification protocol, ROC curves and equal error rate."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .classifier import DiscriminantModel, score_many

log = logging.getLogger(__name__)


@dataclass
class TrialSet:
    genuine_scores: np.ndarray
    impostor_scores: np.ndarray
    skipped: int = 0

    def __post_init__(self):
        self.genuine_scores = np.asarray(self.genuine_scores, dtype=float)
        self.impostor_scores = np.asarray(self.impostor_scores, dtype=float)


@dataclass
class RocCurve:
    """Points (threshold c, P_V, P_F), sorted by c, with -inf/+inf sentinels."""

    points: np.ndarray
    genuine_count: int
    impostor_count: int

    @property
    def thresholds(self):
        return self.points[:, 0]

    @property
    def pv(self):
        return self.points[:, 1]

    @property
    def pf(self):
        return self.points[:, 2]


def run_protocol(model: DiscriminantModel, probes) -> TrialSet:
    """Score every probe against every enrolled subject.

    ``probes`` is a sequence of ``(features, true_subject)``. The claim for
    the true subject is a genuine trial, the other L - 1 claims are impostor
    trials. Probes whose subject is not enrolled are skipped and counted.
    """
    probes = list(probes)
    if not probes:
        raise ValueError("protocol needs at least one probe")
    kept_feats, kept_idx = [], []
    skipped = 0
    for features, subject in probes:
        if not model.is_enrolled(subject):
            skipped += 1
            log.warning("probe subject %r not enrolled; skipped", subject)
            continue
        kept_feats.append(features)
        kept_idx.append(model.subject_index(subject))
    if not kept_feats:
        return TrialSet(np.empty(0), np.empty(0), skipped)
    S = score_many(model, np.asarray(kept_feats, dtype=float))
    rows = np.arange(S.shape[0])
    idx = np.asarray(kept_idx)
    genuine = S[rows, idx]
    others = np.ones(S.shape, dtype=bool)
    others[rows, idx] = False
    impostor = S[others]  # row-major: probe order, then subject order
    return TrialSet(genuine, impostor, skipped)


def roc(trials: TrialSet) -> RocCurve:
    """P_V(c) and P_F(c) at every distinct score, plus -inf and +inf."""
    g = np.sort(trials.genuine_scores)
    f = np.sort(trials.impostor_scores)
    if g.size == 0 or f.size == 0:
        raise ValueError("ROC needs both genuine and impostor scores")
    c = np.unique(np.concatenate([g, f]))
    c = np.concatenate([[-np.inf], c, [np.inf]])
    pv = np.searchsorted(g, c, side="right") / g.size
    pf = np.searchsorted(f, c, side="right") / f.size
    return RocCurve(np.column_stack([c, pv, pf]), int(g.size), int(f.size))


def eer(curve: RocCurve) -> float:
    """Operating point where 1 - P_V = P_F, linearly interpolated between sweep points."""
    frr = 1.0 - curve.pv
    far = curve.pf
    diff = frr - far  # +1 at -inf, -1 at +inf, nonincreasing
    hit = np.flatnonzero(diff <= 0.0)[0]
    if diff[hit] == 0.0:
        return float(far[hit])
    d0, d1 = diff[hit - 1], diff[hit]
    t = d0 / (d0 - d1)
    return float(far[hit - 1] + t * (far[hit] - far[hit - 1]))


def eer_from_scores(genuine, impostor) -> float:
    return eer(roc(TrialSet(genuine, impostor)))

import numpy as np
import pytest

from polarface.classifier import (
    augment,
    discriminants,
    posterior,
    pseudo_inverse,
    score,
    train,
    verify,
)
from polarface.errors import DimensionMismatchError, UnknownSubjectError


def penrose_residuals(M, P):
    return (
        np.abs(M @ P @ M - M).max(),
        np.abs(P @ M @ P - P).max(),
        np.abs((M @ P).T - M @ P).max(),
        np.abs((P @ M).T - P @ M).max(),
    )


def random_matrix(rng, rank_deficient):
    m, n = rng.integers(2, 12, size=2)
    if rank_deficient:
        k = int(rng.integers(1, min(m, n) + 1))
        return rng.standard_normal((m, k)) @ rng.standard_normal((k, n))
    return rng.standard_normal((m, n))


def min_norm_oracle(M, y):
    """Normal equations on the row space: w = M^T z with (M M^T) z = y."""
    return M.T @ np.linalg.solve(M @ M.T, y)


def test_pinv_identity():
    np.testing.assert_allclose(pseudo_inverse(np.eye(3)), np.eye(3), atol=1e-15)


def test_pinv_rank_deficient_diagonal():
    np.testing.assert_allclose(pseudo_inverse(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]), atol=1e-15)


def test_pinv_penrose_conditions(rng):
    for k in range(50):
        M = random_matrix(rng, rank_deficient=k % 2 == 1)
        P = pseudo_inverse(M)
        assert P.shape == M.T.shape
        assert max(penrose_residuals(M, P)) < 1e-8


def test_pinv_zero_matrix_and_bad_input():
    np.testing.assert_array_equal(pseudo_inverse(np.zeros((2, 3))), np.zeros((3, 2)))
    with pytest.raises(ValueError):
        pseudo_inverse(np.array([[np.nan]]))


def test_minimum_norm_against_oracle(rng):
    for _ in range(20):
        m = int(rng.integers(2, 8))
        n = m + int(rng.integers(1, 6))
        M = rng.standard_normal((m, n))
        y = rng.standard_normal(m)
        np.testing.assert_allclose(pseudo_inverse(M) @ y, min_norm_oracle(M, y), atol=1e-8)


def two_object_model():
    return train(np.array([[0.0, 0.0], [2.0, 0.0]]), ["a", "b"], ["ia", "ib"])


def test_two_object_closed_form():
    model = two_object_model()
    np.testing.assert_allclose(model.weights[0], [-0.5, 0.5, 0.0], atol=1e-12)
    np.testing.assert_allclose(model.weights[1], [0.5, -0.5, 0.0], atol=1e-12)
    np.testing.assert_allclose(augment([[0.0, 2.0], [2.0, 0.0]]) @ model.weights[0], [1, -1], atol=1e-12)


def test_two_object_scores():
    model = two_object_model()
    s = score(model, [0.0, 0.0])
    assert s[0] == pytest.approx(0.0, abs=1e-12)
    assert s[1] == pytest.approx(2.0, abs=1e-12)
    assert posterior(s)[0] > posterior(s)[1]


def test_verify_thresholds():
    model = two_object_model()
    assert verify(model, [0.0, 0.0], "a", 0.5)[0] is True
    assert verify(model, [0.0, 0.0], "b", 0.5)[0] is False
    with pytest.raises(UnknownSubjectError):
        verify(model, [0.0, 0.0], "zz", 0.5)


def test_verify_is_monotone_in_threshold(rng):
    X = rng.standard_normal((6, 5))
    model = train(X, ["a", "a", "b", "b", "c", "c"])
    p = rng.standard_normal(5)
    for subject in ("a", "b", "c"):
        decisions = [verify(model, p, subject, c)[0] for c in np.linspace(-1, 10, 200)]
        assert decisions == sorted(decisions)
        assert verify(model, p, subject, -np.inf)[0] is False
        assert verify(model, p, subject, np.inf)[0] is True


def _dataset(rng, subjects=4, per=2, dim=30):
    X = np.vstack([rng.standard_normal(dim) * 5 + rng.standard_normal((per, dim)) for _ in range(subjects)])
    sids = [f"s{k}" for k in range(subjects) for _ in range(per)]
    return X, sids


def test_duplicated_training_set(rng):
    X, sids = _dataset(rng)
    base = train(X, sids)
    dup = train(np.vstack([X, X]), sids + sids)
    np.testing.assert_allclose(discriminants(dup, X), discriminants(base, X), atol=1e-8)


def test_exact_solvability_on_training_set(rng):
    X, sids = _dataset(rng)
    model = train(X, sids)
    G = discriminants(model, X)
    targets = np.array([[1.0 if s == t else -1.0 for t in model.subjects] for s in sids])
    np.testing.assert_allclose(G, targets, atol=1e-8)


def test_zero_coordinate_does_not_change_scores(rng):
    X, sids = _dataset(rng)
    probes = rng.standard_normal((5, X.shape[1]))
    a = [score(train(X, sids), p) for p in probes]
    pad = lambda A: np.hstack([A, np.zeros((A.shape[0], 3))])
    padded = train(pad(X), sids)
    b = [score(padded, p) for p in pad(probes)]
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_two_subjects_are_negated(rng):
    X, sids = _dataset(rng, subjects=2, per=3)
    model = train(X, sids)
    G = discriminants(model, rng.standard_normal((10, X.shape[1])))
    np.testing.assert_allclose(G[:, 0], -G[:, 1], atol=1e-8)


def test_subject_order_independence(rng):
    X, sids = _dataset(rng, subjects=3)
    perm = rng.permutation(len(sids))
    m1 = train(X, sids)
    m2 = train(X[perm], [sids[k] for k in perm])
    p = rng.standard_normal(X.shape[1])
    np.testing.assert_allclose(score(m1, p), score(m2, p), atol=1e-8)


def test_train_and_score_errors(rng):
    with pytest.raises(ValueError):
        train(rng.standard_normal((3, 4)), ["a", "a", "a"])
    model = two_object_model()
    with pytest.raises(DimensionMismatchError):
        score(model, [1.0, 2.0, 3.0])

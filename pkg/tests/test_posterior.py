import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beliefcal.data import Dataset, Standardization
from beliefcal.posterior import (
    Belief,
    PredictiveScore,
    add_intercept,
    capped_log_prob,
    decide,
    fit_posterior,
    normal_cdf,
    positive_probability,
    predictive_score,
)

from conftest import make_dataset


def ds_from(X, y):
    X = np.asarray(X, dtype=float)
    d = X.shape[1]
    return Dataset(X, np.asarray(y, dtype=float), [f"f{i}" for i in range(d)],
                   np.ones(d, dtype=bool), Standardization(np.zeros(d), np.ones(d)))


def ridge_gradient(ds, b, w):
    """Gradient of sigma^-2 ||y - Xw||^2 + w' Lambda w."""
    s2 = b.sigma ** -2
    return 2 * s2 * ds.X.T @ (ds.X @ w - ds.y) + 2 * b.prior_precision * w


def test_prior_only_posterior():
    ds = ds_from(np.zeros((0, 3)), np.zeros(0))
    p = fit_posterior(ds, Belief(0.3, 1.0, np.ones(3)))
    np.testing.assert_array_equal(p.w_post, 0)
    np.testing.assert_allclose(p.precision, np.eye(3))


def test_single_point_posterior():
    ds = ds_from([[1.0, 0.0]], [1.0])
    p = fit_posterior(ds, Belief(1.0, 1.0, np.ones(2)))
    np.testing.assert_allclose(p.precision, [[2, 0], [0, 1]])
    np.testing.assert_allclose(p.w_post, [0.5, 0])
    # independent 2x2 solve
    np.testing.assert_allclose(np.linalg.solve([[2.0, 0], [0, 1]], [1.0, 0]), p.w_post)


def test_random_instance_is_ridge_minimiser():
    ds = make_dataset(50, 5, seed=11)
    b = Belief(0.7, 0.3, np.linspace(0.5, 2, 5))
    p = fit_posterior(ds, b)
    assert np.max(np.abs(ridge_gradient(ds, b, p.w_post))) <= 1e-8


def test_posterior_invariants():
    ds = make_dataset(40, 6, seed=2)
    p = fit_posterior(ds, Belief(0.5, 0.1, np.ones(6)))
    A = p.precision
    assert np.max(np.abs(A - A.T)) <= 1e-10
    assert np.linalg.norm(p.chol @ p.chol.T - A) <= 1e-8 * np.linalg.norm(A)
    Q = p.eigvecs
    assert np.max(np.abs(Q.T @ Q - np.eye(6))) <= 1e-8
    assert np.all(p.eigvals > 0) and np.all(np.diff(p.eigvals) >= 0)


def test_fit_rejects_nonfinite_and_bad_profile():
    ds = make_dataset(5, 2)
    with pytest.raises(ValueError):
        fit_posterior(ds, Belief(1.0, 1.0, np.ones(3)))
    with pytest.raises(ValueError):
        Belief(1.0, 1.0, np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        Belief(0.0, 1.0, np.ones(2))
    with pytest.raises(ValueError):
        Belief(1.0, 1.0, np.ones(2), beta=-1)


def test_shrinkage_monotone_in_lambda():
    ds = make_dataset(60, 4, seed=5)
    norms = [np.linalg.norm(fit_posterior(ds, Belief(1.0, lam, np.ones(4))).w_post)
             for lam in (0.001, 0.01, 0.1, 1, 10, 100)]
    assert all(a >= b for a, b in zip(norms, norms[1:]))


def test_variance_shrinks_with_data():
    rng = np.random.default_rng(4)
    ds = make_dataset(20, 3, seed=4)
    b = Belief(1.0, 1.0, np.ones(3))
    before = fit_posterior(ds, b)
    extra = ds_from(np.vstack([ds.X, rng.normal(size=3)]), np.append(ds.y, 1.0))
    after = fit_posterior(extra, b)
    for _ in range(20):
        x = rng.normal(size=3)
        assert predictive_score(after, x).sd <= predictive_score(before, x).sd + 1e-15


def test_predictive_score_identity_covariance():
    from conftest import make_posterior

    p = make_posterior(np.eye(2), [1.0, 0.0])
    s = predictive_score(p, [0.0, 1.0])
    assert (s.mu, s.sd, s.z) == (0.0, 1.0, 0.0)
    s0 = predictive_score(p, [0.0, 0.0])
    assert (s0.mu, s0.sd, s0.z) == (0.0, 0.0, 0.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 100))
def test_z_is_scale_free(t):
    ds = make_dataset(30, 3, seed=9)
    p = fit_posterior(ds, Belief(1.0, 1.0, np.ones(3)))
    x = np.array([0.3, -1.2, 0.5])
    assert predictive_score(p, t * x).z == pytest.approx(predictive_score(p, x).z, rel=1e-12)


def test_positive_probability_values():
    assert positive_probability(PredictiveScore(0, 1, 0.0), 0.0) == 0.5
    assert abs(positive_probability(PredictiveScore(1.96, 1, 1.96)) - 0.9750021049) <= 1e-9
    assert abs(positive_probability(PredictiveScore(0, 1, 0.0), 1.0) - 0.8413447461) <= 1e-9


def test_cdf_symmetry_and_monotonicity():
    z = np.linspace(-8, 8, 2001)
    p = normal_cdf(z)
    assert np.max(np.abs(p + normal_cdf(-z) - 1)) <= 1e-12
    assert np.all(np.diff(p) >= 0)
    # strict wherever doubles can still resolve the upper tail
    assert np.all(np.diff(normal_cdf(np.linspace(-8, 5, 2001))) > 0)
    # clamped beyond +-8
    assert normal_cdf(20.0) == normal_cdf(8.0) and normal_cdf(-20.0) == normal_cdf(-8.0)


def test_cdf_against_series_oracle():
    mpmath.mp.dps = 50

    def series(z):
        # Phi(z) = 1/2 + phi(z) * sum z^(2k+1) / (1*3*...*(2k+1))
        z = mpmath.mpf(z)
        term, total, k = z, z, 0
        while abs(term) > mpmath.mpf(10) ** -45:
            k += 1
            term = term * z * z / (2 * k + 1)
            total += term
        return mpmath.mpf(1) / 2 + mpmath.npdf(z) * total

    for z in np.linspace(-8, 8, 97):
        assert abs(float(normal_cdf(z)) - float(series(z))) <= 1e-12


def test_decide_rules():
    assert decide(PredictiveScore(-0.1, 1.0, -0.1), 0.0) == -1
    assert decide(PredictiveScore(-0.1, 1.0, -0.1), 0.2) == 1
    assert decide(PredictiveScore(0.0, 3.0, 0.0), 0.0) == 1


def test_capped_log_prob_cases():
    from conftest import make_posterior

    p = make_posterior(np.eye(1), [0.0])
    assert capped_log_prob(ds_from([[1.0]], [1.0]), p) == pytest.approx(math.log(2), abs=1e-15)
    # z = -8 for a positive label: capped at exactly 5
    p8 = make_posterior(np.eye(1), [-8.0])
    assert capped_log_prob(ds_from([[1.0]], [1.0]), p8) == 5.0


def test_capped_log_prob_permutation_invariant():
    ds = make_dataset(300, 4, seed=6)
    p = fit_posterior(ds, Belief(1.0, 1.0, np.ones(4)))
    perm = np.random.default_rng(0).permutation(ds.n)
    assert capped_log_prob(ds.take(perm), p, 0.5) == capped_log_prob(ds, p, 0.5)


def test_add_intercept_is_idempotent():
    ds = add_intercept(make_dataset(10, 2))
    assert ds.d == 3 and ds.feature_names[-1] == "(intercept)"
    assert not ds.actionable[-1]
    assert add_intercept(ds) is ds

import numpy as np
import pytest

from rulecraft.core import Dataset, Proposition, Query
from rulecraft.losses import LOGISTIC, POISSON, SQUARED, loss_derivative, risk
from rulecraft.weights import (
    corrective_fit,
    fit_offset,
    gradient_norm,
    line_search_weight,
    query_matrix,
    xgb_weight,
)

from conftest import prop2_data

Y = np.array([-10.0, -6.0, 5.0])


def q_le(t):
    return Query([Proposition(0, -1, t)])


def q_ge(t):
    return Query([Proposition(0, 1, t)])


def test_fit_offset_examples(fig2):
    assert fit_offset(fig2, SQUARED) == pytest.approx(-11 / 3)
    assert fit_offset(prop2_data(), SQUARED) == pytest.approx(0.0, abs=1e-12)
    assert fit_offset(Dataset(np.arange(4.0), np.ones(4), "count-regression"), POISSON) == 0.0
    one_class = Dataset(np.arange(3.0), np.ones(3), "binary-classification")
    assert np.isfinite(fit_offset(one_class, LOGISTIC))
    zeros = Dataset(np.arange(3.0), np.zeros(3), "count-regression")
    assert np.isfinite(fit_offset(zeros, POISSON))


def test_line_search_examples():
    assert line_search_weight(SQUARED, np.zeros(3), Y, [1, 1, 0]) == -8.0
    assert line_search_weight(SQUARED, np.zeros(2), [2.0, 2.0], [1, 1]) == 2.0
    assert line_search_weight(SQUARED, Y, Y, [1, 1, 0]) == 0.0
    with pytest.raises(ValueError):
        line_search_weight(SQUARED, np.zeros(3), Y, [0, 0, 0])


@pytest.mark.parametrize("kind", [LOGISTIC, POISSON])
def test_line_search_stationary(kind):
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = 30
        y = rng.choice([-1.0, 1.0], n) if kind == LOGISTIC else rng.poisson(2.0, n).astype(float)
        f = rng.normal(size=n)
        q = (rng.random(n) < 0.4).astype(float)
        q[0] = 1
        lam = float(rng.choice([0.0, 1.0]))
        b = line_search_weight(kind, f, y, q, lam)
        d = float(q @ loss_derivative(kind, f + b * q, y)) / n + 2 * lam * b / n
        assert abs(d) <= 1e-8


def test_xgb_weight_examples():
    g = np.array([2.0, -2.0, -5.0])
    assert xgb_weight([0, 0, 1], g, np.ones(3), 0.0) == 5.0
    assert abs(xgb_weight([0, 0, 1], g, np.ones(3), 1e300)) < 1e-290
    assert xgb_weight([1, 1, 0], g, np.ones(3)) == 0.0
    with pytest.raises(ZeroDivisionError):
        xgb_weight([0, 0, 0], g, np.ones(3))


def test_corrective_fig2(fig2):
    beta = corrective_fit(SQUARED, fig2, 0.0, [q_le(2.0), q_ge(2.0)])
    np.testing.assert_allclose(beta, [-31 / 3, 14 / 3])
    f = query_matrix(fig2, [q_le(2.0), q_ge(2.0)]) @ beta
    assert risk(SQUARED, f, Y) == pytest.approx(1 / 9, rel=1e-12)
    beta = corrective_fit(SQUARED, fig2, 0.0, [q_le(2.0), q_ge(3.0)])
    np.testing.assert_allclose(beta, [-8.0, 5.0])


def test_corrective_all_ones_is_stationary(fig2):
    beta = corrective_fit(SQUARED, fig2, -11 / 3, [Query()])
    assert beta[0] == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        corrective_fit(SQUARED, fig2, 0.0, [])


def test_corrective_matches_pinv():
    rng = np.random.default_rng(1)
    for _ in range(50):
        n = 20
        ds = Dataset(rng.normal(size=(n, 2)), rng.normal(size=n))
        qs = [Query([Proposition(int(rng.integers(2)), int(rng.choice([-1, 1])), float(rng.normal()))])
              for _ in range(3)]
        Q = query_matrix(ds, qs)
        if np.linalg.matrix_rank(Q) < 3:
            continue
        beta = corrective_fit(SQUARED, ds, 0.3, qs)
        np.testing.assert_allclose(beta, np.linalg.pinv(Q) @ (ds.target - 0.3), atol=1e-8)


def _glm_instance(kind, rng, n=200):
    x = rng.normal(size=(n, 3))
    eta = 0.5 * (x[:, 0] > 0) - 0.7 * (x[:, 1] > 0.5)
    if kind == LOGISTIC:
        y = np.where(rng.random(n) < 1 / (1 + np.exp(-eta)), 1.0, -1.0)
        task = "binary-classification"
    else:
        y = rng.poisson(np.exp(eta)).astype(float)
        task = "count-regression"
    ds = Dataset(x, y, task)
    qs = [Query([Proposition(0, 1, 0.0)]), Query([Proposition(1, 1, 0.5)]),
          Query([Proposition(2, -1, 0.0)])]
    return ds, qs


@pytest.mark.parametrize("kind", [LOGISTIC, POISSON])
@pytest.mark.parametrize("lam", [0.0, 1.0])
def test_newton_reaches_tolerance(kind, lam):
    rng = np.random.default_rng(7)
    for _ in range(10):
        ds, qs = _glm_instance(kind, rng)
        off = fit_offset(ds, kind)
        beta = corrective_fit(kind, ds, off, qs, lam)
        assert gradient_norm(kind, ds, off, qs, beta, lam) <= 1e-8


def test_corrective_never_worse_than_stagewise():
    rng = np.random.default_rng(3)
    for _ in range(200):
        n = 15
        ds = Dataset(rng.normal(size=(n, 2)), rng.normal(size=n))
        qs = [Query([Proposition(int(rng.integers(2)), int(rng.choice([-1, 1])), float(rng.normal(scale=0.5)))])
              for _ in range(3)]
        Q = query_matrix(ds, qs)
        if np.any(Q.sum(axis=0) == 0) or np.linalg.matrix_rank(Q) < 3:
            continue
        f = np.zeros(n)
        stage = []
        for j in range(3):
            b = line_search_weight(SQUARED, f, ds.target, Q[:, j])
            stage.append(b)
            f = f + b * Q[:, j]
        beta = corrective_fit(SQUARED, ds, 0.0, qs)
        assert risk(SQUARED, Q @ beta, ds.target) <= risk(SQUARED, f, ds.target) + 1e-12

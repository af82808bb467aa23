import numpy as np
import pytest

from rulecraft.core import (
    BINARY,
    COUNT,
    DataError,
    Dataset,
    OrthoBasis,
    Proposition,
    Query,
    RuleEnsemble,
    evaluate_query,
    extend_basis,
    normalize_propositions,
    project_out,
)


def test_dataset_sort_index_and_names():
    ds = Dataset(np.array([[3.0, 1.0], [1.0, 1.0], [2.0, 0.0]]), [1.0, 2.0, 3.0])
    assert ds.feature_names == ["x1", "x2"]
    np.testing.assert_array_equal(ds.sort_index[0], [1, 2, 0])
    np.testing.assert_array_equal(ds.sort_index[1], [2, 0, 1])  # stable on ties
    assert ds.features.flags.f_contiguous


@pytest.mark.parametrize("x,y,task", [
    (np.zeros((2, 1)), [1.0], "regression"),
    (np.array([[np.nan]]), [1.0], "regression"),
    (np.zeros((2, 1)), [0.0, 1.0], BINARY),
    (np.zeros((2, 1)), [1.5, 2.0], COUNT),
    (np.zeros((1, 1)), [1.0], "bogus"),
])
def test_dataset_rejects_bad_input(x, y, task):
    with pytest.raises(DataError):
        Dataset(x, y, task)


def test_proposition_evaluate_and_sign():
    x = np.array([[1.0], [2.0], [3.0]])
    np.testing.assert_array_equal(Proposition(0, 1, 2.0).evaluate(x), [False, True, True])
    np.testing.assert_array_equal(Proposition(0, -1, 2.0).evaluate(x), [True, True, False])
    with pytest.raises(ValueError):
        Proposition(0, 0, 1.0)


def test_normalize_keeps_tightest():
    props = [Proposition(0, 1, 1.0), Proposition(0, 1, 2.0), Proposition(0, -1, 5.0),
             Proposition(0, -1, 4.0)]
    assert normalize_propositions(props) == (Proposition(0, -1, 4.0), Proposition(0, 1, 2.0))


def test_empty_query_selects_all(fig2):
    sel, out = evaluate_query(Query(), fig2)
    np.testing.assert_array_equal(sel, [0, 1, 2])
    np.testing.assert_array_equal(out, [1, 1, 1])
    assert Query().describe() == "TRUE"


def test_evaluate_query_bad_feature(fig2):
    with pytest.raises(IndexError):
        evaluate_query(Query([Proposition(3, 1, 0.0)]), fig2)


def test_output_norm_needs_binding():
    q = Query([Proposition(0, 1, 2.0)])
    with pytest.raises(ValueError):
        q.output_norm_sq


def test_ensemble_complexity_and_output():
    q1 = Query([Proposition(0, -1, 2.0)])
    q2 = Query([Proposition(0, 1, 2.0), Proposition(0, -1, 3.0)])
    ens = RuleEnsemble(1.0, [q1, q2], [-2.0, 0.5])
    assert ens.k == 2 and ens.complexity == 5
    np.testing.assert_allclose(ens.decision_function(np.array([1.0, 2.0, 3.0])), [-1.0, -0.5, 1.5])
    assert "IF x1 <= 2 THEN -2" in ens.describe()


def test_offset_only_ensemble_is_constant():
    ens = RuleEnsemble(-11 / 3)
    assert ens.complexity == 0
    np.testing.assert_array_equal(ens.decision_function(np.zeros((4, 2))), np.full(4, -11 / 3))


def test_project_out_fig2(fig2_state):
    basis, _ = fig2_state
    q_perp, coef = project_out(basis, np.array([0.0, 1.0, 1.0]))
    np.testing.assert_allclose(q_perp, [-0.5, 0.5, 1.0])
    np.testing.assert_allclose(coef, [1 / np.sqrt(2)])


def test_project_out_dimension_check():
    with pytest.raises(ValueError):
        project_out(OrthoBasis(3), np.ones(4))


def test_extend_basis_rejects_span():
    basis = OrthoBasis(3)
    assert extend_basis(basis, np.array([1.0, 1.0, 0.0]))[1]
    assert extend_basis(basis, np.array([0.0, 0.0, 1.0]))[1]
    _, ok = extend_basis(basis, np.array([1.0, 1.0, 1.0]))
    assert not ok and len(basis) == 2


def test_basis_stays_orthonormal_over_many_insertions():
    rng = np.random.default_rng(3)
    basis = OrthoBasis(80)
    for _ in range(70):
        extend_basis(basis, (rng.random(80) < 0.3).astype(float))
    assert basis.gram_error() < 1e-10
    assert basis.matrix.flags.c_contiguous

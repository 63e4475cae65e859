import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import gauss_ridge
from wordstab.errors import DataError, RegressionError
from wordstab.regression import (
    BootstrapRidgeResult,
    RidgeModel,
    bootstrap_fit,
    correlate_weights,
    explain,
    fit_ridge,
    pearson,
    r_squared,
    significant_weights,
    write_explain_tsv,
)


def test_exact_line():
    m = fit_ridge([[0.0], [1.0]], [0.0, 1.0], lam=0.0)
    assert m.weights[0] == pytest.approx(1.0, abs=1e-12)
    assert m.intercept == pytest.approx(0.0, abs=1e-12)


def test_hand_computed_shrinkage():
    m = fit_ridge([[-0.5], [0.5]], [-0.5, 0.5], lam=0.5)
    assert m.weights[0] == pytest.approx(0.5, abs=1e-12)


def test_huge_lambda_gives_mean():
    rng = np.random.default_rng(0)
    X, y = rng.standard_normal((15, 4)), rng.standard_normal(15) + 3
    m = fit_ridge(X, y, lam=1e12)
    assert np.all(np.abs(m.weights) < 1e-9)
    assert m.intercept == pytest.approx(y.mean(), abs=1e-8)


def test_singular_at_zero_lambda():
    X = [[1.0, 1.0], [0.0, 0.0], [1.0, 1.0]]
    with pytest.raises(RegressionError, match="lambda"):
        fit_ridge(X, [1.0, 0.0, 2.0], lam=0.0)
    fit_ridge(X, [1.0, 0.0, 2.0], lam=0.1)


def test_shape_errors():
    with pytest.raises(DataError):
        fit_ridge([[1.0], [2.0]], [1.0])
    with pytest.raises(DataError):
        fit_ridge([[1.0], [2.0]], [1.0, 2.0], lam=-1)


@pytest.mark.parametrize("seed", range(10))
def test_matches_gaussian_elimination(seed):
    rng = np.random.default_rng(seed)
    X, y = rng.standard_normal((20, 10)), rng.standard_normal(20)
    lam = float(rng.uniform(0.01, 5))
    m = fit_ridge(X, y, lam)
    w, b = gauss_ridge(X, y, lam)
    np.testing.assert_allclose(m.weights, w, rtol=0, atol=1e-8)
    assert m.intercept == pytest.approx(b, abs=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31))
def test_shrinkage_monotone(seed):
    rng = np.random.default_rng(seed)
    X, y = rng.standard_normal((20, 6)), rng.standard_normal(20)
    norms = [np.linalg.norm(fit_ridge(X, y, lam).weights) for lam in (0.01, 0.1, 1, 10, 100)]
    assert all(a >= b for a, b in zip(norms, norms[1:]))


def test_r_squared_anchors():
    rng = np.random.default_rng(1)
    X, y = rng.standard_normal((12, 3)), rng.standard_normal(12)
    mean_model = RidgeModel(np.zeros(3), float(y.mean()), 1.0)
    assert r_squared(mean_model, X, y) == pytest.approx(0.0, abs=1e-12)
    perfect = fit_ridge(X, X @ [1.0, -2.0, 0.5] + 4, lam=1e-9)
    assert r_squared(perfect, X, X @ [1.0, -2.0, 0.5] + 4) >= 0.999
    bad = RidgeModel(np.array([10.0, 0, 0]), 0.0, 1.0)
    assert r_squared(bad, X, y) < 0
    with pytest.raises(RegressionError):
        r_squared(mean_model, X, np.ones(12))


def test_bootstrap_deterministic():
    rng = np.random.default_rng(2)
    X, y = rng.standard_normal((25, 4)), rng.standard_normal(25)
    a = bootstrap_fit(X, y, n=50, seed=9)
    b = bootstrap_fit(X, y, n=50, seed=9)
    np.testing.assert_array_equal(a.weight_mean, b.weight_mean)
    np.testing.assert_array_equal(a.weight_stderr, b.weight_stderr)
    assert a.r2_mean == b.r2_mean
    c = bootstrap_fit(X, y, n=50, seed=10)
    assert not np.array_equal(a.weight_mean, c.weight_mean)
    assert np.all(a.weight_stderr >= 0)


def test_bootstrap_on_exact_linear_data():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((30, 3))
    y = X @ [0.5, -1.0, 2.0] + 1
    r = bootstrap_fit(X, y, lam=1e-9, n=100, seed=0)
    assert r.r2_mean == pytest.approx(1.0, abs=1e-9)
    assert np.all(r.weight_stderr < 1e-6)


def test_bootstrap_duplicated_rows():
    # every row of X is the same, so every resample fits the same (zero) weights
    X = np.tile([[1.0, 0.0, 1.0]], (20, 1))
    y = np.arange(20.0)
    r = bootstrap_fit(X, y, n=200, seed=1)
    np.testing.assert_array_equal(r.weight_stderr, 0.0)
    np.testing.assert_array_equal(r.weight_mean, 0.0)


def test_bootstrap_skips_constant_resamples():
    y = np.array([0.0, 0.0, 0.0, 1.0])
    X = np.array([[0.0], [0.0], [0.0], [1.0]])
    with pytest.raises(RegressionError, match="constant"):
        bootstrap_fit(X, y, n=100, seed=0)


def test_bootstrap_mean_near_full_fit():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((30, 5))
    y = X @ rng.standard_normal(5) + rng.standard_normal(30)
    full = fit_ridge(X, y)
    r = bootstrap_fit(X, y, n=500, seed=4)
    close = np.abs(r.weight_mean - full.weights) <= 3 * r.weight_stderr
    assert close.mean() >= 0.9


def test_bootstrap_column_mode():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((30, 4))
    r = bootstrap_fit(X, X[:, 0] + 0.1 * rng.standard_normal(30), n=100, seed=0, mode="columns")
    assert r.mode == "columns" and np.all(np.isfinite(r.weight_mean))
    with pytest.raises(DataError):
        bootstrap_fit(X, X[:, 0], n=10, mode="both")


def result_of(means, stderrs):
    cols = [f"c{i}" for i in range(len(means))]
    return BootstrapRidgeResult(cols, np.array(means, float), np.array(stderrs, float), 0.5, 0.0, 10)


def test_significance_rule():
    r = result_of([0.5, 0.1, 0.0, -0.4], [0.01, 0.2, 0.0, 0.2])
    assert significant_weights(r) == [("c3", -0.4, 0.2), ("c0", 0.5, 0.01)]
    assert [c for c, _, _ in significant_weights(r, z=3)] == ["c0"]


def test_pearson_examples():
    a = np.array([1.0, 2.0, 3.0])
    assert pearson(a, a) == pytest.approx(1.0)
    assert pearson(a, -a) == pytest.approx(-1.0)
    b = np.array([2.0, 4.0, 6.1])
    da, db = a - a.mean(), b - b.mean()
    want = float(da @ db) / math.sqrt(float(da @ da) * float(db @ db))
    assert pearson(a, b) == pytest.approx(want, abs=1e-15)
    assert pearson(a, b) == pytest.approx(0.99990, abs=1e-5)
    with pytest.raises(RegressionError):
        pearson(a, np.ones(3))


def test_correlate_weights():
    rng = np.random.default_rng(6)
    a = rng.standard_normal(40)
    r, p = correlate_weights(a, a + 0.1 * rng.standard_normal(40), seed=1)
    assert r > 0.9 and p == pytest.approx(1 / 10001)
    r2, p2 = correlate_weights(a, rng.standard_normal(40), permutations=2000, seed=1)
    assert -1 <= r2 <= 1 and 0 < p2 <= 1 and p2 > 0.001
    assert correlate_weights(a, a, shared=[0, 3, 5, 7], permutations=100, seed=2)[0] == pytest.approx(1.0)
    assert correlate_weights(a, a[::-1], permutations=100, seed=3) == correlate_weights(a, a[::-1], permutations=100, seed=3)
    with pytest.raises(DataError):
        correlate_weights(a, a, shared=[0, 1])


ENGLISH = {
    "Tone: No tones": -0.37,
    "Nominal and verbal conjunction: Identity": -0.3,
    "Order of subject and verb: SV": -0.58,
    "Zero copula for predicate nominals: Impossible": -0.35,
    "Numeral bases: Decimal": 0.32,
    "Preverbal negative morphemes: NegV": 0.32,
}


def weights_model():
    cols = list(ENGLISH) + ["Tone: Unknown", "Fusion: Unknown", "Small: x"]
    w = np.array(list(ENGLISH.values()) + [0.1, -0.05, 0.2])
    return RidgeModel(w, 2.44, 1.0, cols)


def test_explain_tsv_layout(tmp_path):
    m = weights_model()
    row = np.array([1, 1, 1, 1, 1, 1, 0, 0, 1], dtype=float)
    e = explain(m, row)
    assert e.prediction == pytest.approx(1.48 + 0.2, abs=1e-9)
    assert e.prediction == float(m.predict(row[None, :])[0])
    assert dict(e.contributions) == ENGLISH
    other = explain(m, np.array([0, 0, 1, 0, 1, 1, 1, 1, 0], dtype=float))
    write_explain_tsv(tmp_path / "e.tsv", m, {"English": e, "Other": other}, {"English": 1.74})
    lines = [l.split("\t") for l in (tmp_path / "e.tsv").read_text().splitlines()]
    assert lines[0] == ["WALS Attribute", "English", "Other"]
    assert lines[1] == ["Tone: No tones", "-0.37", "-"]
    assert lines[-2][0] == "Predicted value"
    assert lines[-1] == ["Ground truth: average stability", "1.74", "-"]


def test_explain_english_prediction():
    cols = list(ENGLISH)
    m = RidgeModel(np.array(list(ENGLISH.values())), 2.44, 1.0, cols)
    assert explain(m, np.ones(len(cols))).prediction == pytest.approx(1.48, abs=1e-9)


def test_explain_all_unknown_and_threshold():
    m = weights_model()
    unknown = np.array([0, 0, 0, 0, 0, 0, 1, 1, 0], dtype=float)
    e = explain(m, unknown)
    assert e.prediction == pytest.approx(2.44 + 0.1 - 0.05)
    assert e.contributions == []
    row = np.ones(9)
    high = explain(m, row, weight_threshold=10.0)
    assert high.contributions == [] and high.prediction == explain(m, row).prediction
    with pytest.raises(DataError):
        explain(m, np.ones(3))


def test_model_json_round_trip(tmp_path):
    m = weights_model()
    m.keys = [("13A", "No tones")] * len(m.columns)
    m.write_json(tmp_path / "m.json")
    back = RidgeModel.read_json(tmp_path / "m.json")
    np.testing.assert_array_equal(back.weights, m.weights)
    assert back.columns == m.columns and back.keys == m.keys and back.intercept == m.intercept


def test_bootstrap_tsv(tmp_path):
    r = result_of([0.5, 0.1], [0.01, 0.2])
    r.write_tsv(tmp_path / "b.tsv")
    lines = (tmp_path / "b.tsv").read_text().splitlines()
    assert lines[0] == "column\tweight_mean\tstderr\tsignificant"
    assert lines[1].endswith("yes") and lines[2].endswith("no")
    assert r.summary()["n_resamples"] == 10

import math

import numpy as np
import pytest

from dascite.regression import (
    CONTINUOUS,
    Formula,
    NonPositiveMean,
    RankDeficient,
    TooFewRows,
    coefficient_csv,
    coefficient_text,
    effect_size,
    encode_design,
    fit_ols,
    fit_robust,
    mad_scale,
)
from dascite.table import RegressionRow


def _row(i, cat, plos, field="Biology", **kw):
    base = dict(
        article_key=f"k{i}", journal_title="J", window=3, n_cit_2=i % 3, n_cit_3=i % 5, n_cit_5=i % 7,
        n_cit_tot=i, n_authors=1 + i % 4, n_references_tot=10 + i, p_year=2010 + i % 5, p_month=1 + i % 12,
        h_index_mean=float(i % 3), h_index_median=float(i % 2), das_category=cat, is_plos=plos,
        das_encouraged=i % 3 == 0, das_required=i % 4 == 0, journal_field=field,
    )
    base.update(kw)
    return RegressionRow(**base)


HAND_ROWS = [
    _row(0, None, True), _row(1, 0, False), _row(2, 1, True, "Medicine"), _row(3, 2, True),
    _row(4, 3, True, "Medicine"), _row(5, 3, False), _row(6, None, False), _row(7, 2, False, "Medicine"),
    _row(8, 1, False), _row(9, 0, True),
]


def test_hand_encoded_matrix():
    formula = Formula(continuous=(), journal_field=True)
    design, y = encode_design(HAND_ROWS, formula, check=False)
    assert design.columns == (
        "Intercept", "C(das_category)0", "C(das_category)1", "C(das_category)2", "C(das_category)3",
        "C(journal_field)Medicine", "das_requiredTrue", "das_encouragedTrue", "is_plosTrue",
        "C(das_category)1:is_plosTrue", "C(das_category)2:is_plosTrue", "C(das_category)3:is_plosTrue",
    )
    expected = np.array([
        # I  d0 d1 d2 d3 Med req enc plos 1p 2p 3p
        [1, 0, 0, 0, 0, 0, 1, 1, 1, 0, 0, 0],
        [1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
        [1, 0, 1, 0, 0, 1, 0, 0, 1, 1, 0, 0],
        [1, 0, 0, 1, 0, 0, 0, 1, 1, 0, 1, 0],
        [1, 0, 0, 0, 1, 1, 1, 0, 1, 0, 0, 1],
        [1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0],
        [1, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0],
        [1, 0, 0, 1, 0, 1, 0, 0, 0, 0, 0, 0],
        [1, 0, 1, 0, 0, 0, 1, 0, 0, 0, 0, 0],
        [1, 1, 0, 0, 0, 0, 0, 1, 1, 0, 0, 0],
    ], dtype=float)
    assert np.array_equal(design.values, expected)
    assert np.array_equal(y, np.log1p([r.n_cit_3 for r in HAND_ROWS]))
    assert design.reference_levels == {"das_category": "none", "journal_field": "Biology"}


def test_zero_as_reference_drops_level_zero():
    design, _ = encode_design(HAND_ROWS, Formula(continuous=(), zero_as_reference=True), check=False)
    assert "C(das_category)0" not in design.columns
    assert len(design.columns) == 11


def test_missing_category_rank_deficient():
    rows = [r for r in HAND_ROWS if r.das_category != 1]
    with pytest.raises(RankDeficient) as err:
        encode_design(rows, Formula(continuous=()))
    assert "C(das_category)1" in err.value.columns


def test_collinear_columns_reported():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(20, 3))
    x = np.column_stack([x, x[:, 0] + x[:, 1]])
    with pytest.raises(RankDeficient) as err:
        fit_ols(x, rng.normal(size=20), ["a", "b", "c", "d"])
    assert len(err.value.columns) == 1
    with pytest.raises(TooFewRows):
        fit_ols(np.ones((2, 2)) + np.eye(2), [1.0, 2.0])


def test_exact_fit():
    x = np.arange(10.0)
    fit = fit_ols(np.column_stack([np.ones(10), x]), 2 * x + 1, ["Intercept", "x"])
    assert fit["Intercept"].estimate == pytest.approx(1.0, abs=1e-12)
    assert fit["x"].estimate == pytest.approx(2.0, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)


def _problem(seed, n=200, k=5, noise=1.0):
    rng = np.random.default_rng(seed)
    x = np.column_stack([np.ones(n), rng.normal(size=(n, k - 1))])
    beta = rng.normal(size=k)
    return x, x @ beta + noise * rng.normal(size=n), beta


def test_ols_normal_equations_and_invariants():
    x, y, _ = _problem(1)
    fit = fit_ols(x, y)
    beta = np.array(fit.params)
    oracle = np.linalg.solve(x.T @ x, x.T @ y)
    assert np.max(np.abs(beta - oracle)) < 1e-8
    resid = y - x @ beta
    assert np.max(np.abs(x.T @ resid)) < 1e-8 * np.linalg.norm(y)
    sigma2 = resid @ resid / (len(y) - x.shape[1])
    assert np.allclose(fit.std_errors, np.sqrt(np.diag(sigma2 * np.linalg.inv(x.T @ x))), rtol=1e-8)
    assert 0 <= fit.r_squared <= 1 and fit.adj_r_squared <= fit.r_squared
    assert all(se > 0 for se in fit.std_errors)
    # classical F and its p-value
    tss = ((y - y.mean()) ** 2).sum()
    f = ((tss - resid @ resid) / 4) / sigma2
    assert fit.f_statistic == pytest.approx(f, rel=1e-10)
    assert fit.f_df == (4, len(y) - 5)


def test_ols_row_permutation_invariant():
    x, y, _ = _problem(2)
    perm = np.random.default_rng(9).permutation(len(y))
    a, b = fit_ols(x, y), fit_ols(x[perm], y[perm])
    assert np.allclose(a.params, b.params, atol=1e-10)
    assert np.allclose(a.std_errors, b.std_errors, atol=1e-10)


def test_ols_column_scaling():
    x, y, _ = _problem(3)
    scaled = x.copy()
    scaled[:, 1] *= 1000.0
    a, b = fit_ols(x, y), fit_ols(scaled, y)
    assert b.params[1] * 1000 == pytest.approx(a.params[1], rel=1e-9)
    assert b.r_squared == pytest.approx(a.r_squared, abs=1e-12)
    assert b["x1"].t_value == pytest.approx(a["x1"].t_value, rel=1e-9)


def test_robust_without_outliers_close_to_ols():
    x, y, _ = _problem(4, n=1000, noise=0.5)
    ols, rob = fit_ols(x, y), fit_robust(x, y)
    assert rob.converged
    assert np.max(np.abs(np.array(rob.params) - ols.params)) < 1e-3 * 20  # coarse; tight check in acceptance
    assert rob.r_squared is None and rob.f_statistic is None


def test_robust_resists_outliers():
    x, y, beta = _problem(5, n=400, noise=0.5)
    y = y.copy()
    y[:20] += 50.0
    ols, rob = fit_ols(x, y), fit_robust(x, y)
    assert np.linalg.norm(np.array(rob.params) - beta) < np.linalg.norm(np.array(ols.params) - beta)


def test_robust_unit_weights_is_ols():
    x, y, _ = _problem(6)
    ols, rob = fit_ols(x, y), fit_robust(x, y, unit_weights=True)
    assert np.max(np.abs(np.array(rob.params) - ols.params)) < 1e-9
    assert np.allclose(rob.std_errors, ols.std_errors, rtol=1e-9)


def test_robust_reports_non_convergence():
    x, y, _ = _problem(7)
    y = y + np.where(np.arange(len(y)) % 7 == 0, 30.0, 0.0)
    fit = fit_robust(x, y, max_iter=1, tol=0.0)
    assert not fit.converged and fit.iterations == 1


def test_mad_scale():
    assert mad_scale(np.array([-1.0, 1.0, 2.0, -2.0, 0.5])) == pytest.approx(1.0 / 0.6744897501960817)


def test_effect_size():
    assert round(effect_size(0.252, 1.13).percent, 2) == 25.36
    assert effect_size(0.0, 1.13).percent == 0.0
    assert effect_size(0.252, 1.26).percent == pytest.approx(22.745, abs=5e-3)
    band = effect_size(0.252, 1.13, 0.012).band
    assert band == pytest.approx(100 * math.exp(0.252) * math.sinh(0.012) / 1.13, rel=1e-12)
    with pytest.raises(NonPositiveMean):
        effect_size(0.2, 0.0)


def test_reports_render():
    rng = np.random.default_rng(12)
    rows = [
        _row(i, [None, 0, 1, 2, 3][int(rng.integers(5))], bool(rng.integers(2)), ["Biology", "Medicine"][int(rng.integers(2))],
             h_index_median=float(rng.integers(4)), das_required=bool(rng.integers(2)), n_cit_3=int(rng.integers(9)))
        for i in range(120)
    ]
    design, y = encode_design(rows, Formula())
    assert design.columns[1 : 1 + len(CONTINUOUS)] == CONTINUOUS
    fits = [fit_ols(design, y), fit_robust(design, y)]
    text = coefficient_text(fits)
    assert "C(das_category)3:is_plosTrue" in text and "Observations" in text
    lines = coefficient_csv(fits).splitlines()
    assert lines[0] == "method,term,estimate,std_error,t_value,p_value,stars"
    assert sum(1 for l in lines if l.startswith("ols,") and "observations" not in l) >= len(design.columns)

"""Weighted outcome regression and its sandwich standard errors."""

import numpy as np
import pytest
from scipy import stats

from balancelab.data import AnalysisSpec, encode_design, from_columns, numeric_column
from balancelab.engines.weights import WeightSet
from balancelab.errors import CollinearityError
from balancelab.outcome import (
    export_data_and_weights,
    fit_doubly_robust,
    weighted_least_squares,
)


def wls_oracle(A, y, w):
    """Normal-equations route with an einsum HC1 sandwich."""
    AtW = A.T * w
    beta = np.linalg.solve(AtW @ A, AtW @ y)
    resid = y - A @ beta
    bread = np.linalg.inv(AtW @ A)
    meat = np.einsum("i,ij,ik->jk", (w * resid) ** 2, A, A)
    n, k = A.shape
    cov = bread @ meat @ bread * (n / (n - k))
    return beta, cov


class TestWeightedLeastSquares:
    def test_matches_normal_equations(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            n = rng.integers(30, 120)
            k = rng.integers(2, 6)
            A = np.column_stack([np.ones(n), rng.normal(size=(n, k - 1))])
            y = rng.normal(size=n)
            w = rng.uniform(0.2, 3.0, size=n)
            beta, cov = weighted_least_squares(A, y, w, [f"c{j}" for j in range(k)])
            beta_ref, cov_ref = wls_oracle(A, y, w)
            np.testing.assert_allclose(beta, beta_ref, atol=1e-9)
            np.testing.assert_allclose(cov, cov_ref, atol=1e-9)

    def test_uniform_weights_reduce_to_ols(self):
        rng = np.random.default_rng(1)
        n = 80
        A = np.column_stack([np.ones(n), rng.normal(size=(n, 2))])
        y = rng.normal(size=n)
        beta, _ = weighted_least_squares(A, y, np.ones(n), ["a", "b", "c"])
        beta_ols, *_ = np.linalg.lstsq(A, y, rcond=None)
        np.testing.assert_allclose(beta, beta_ols, atol=1e-10)

    def test_collinearity_names_offending_columns(self):
        rng = np.random.default_rng(2)
        n = 50
        x = rng.normal(size=n)
        A = np.column_stack([np.ones(n), x, 2 * x])
        with pytest.raises(CollinearityError) as exc:
            weighted_least_squares(A, rng.normal(size=n), np.ones(n),
                                   ["(Intercept)", "x", "x_twice"])
        assert len(exc.value.columns) == 1
        assert exc.value.columns[0] in ("x", "x_twice")

    def test_rejects_non_finite(self):
        A = np.ones((4, 1))
        with pytest.raises(ValueError):
            weighted_least_squares(A, np.array([1.0, np.nan, 0.0, 2.0]),
                                   np.ones(4), ["c"])


def _design(seed=0, n=200, estimand="ATT"):
    rng = np.random.default_rng(seed)
    x1 = rng.normal(size=n)
    x2 = rng.normal(size=n)
    t = (rng.uniform(size=n) < 1 / (1 + np.exp(-x1))).astype(float)
    y = 1.5 + 2.0 * t + x1 - 0.5 * x2 + rng.normal(size=n)
    data = from_columns([
        numeric_column("t", t),
        numeric_column("x1", x1),
        numeric_column("x2", x2),
        numeric_column("y", y),
    ])
    spec = AnalysisSpec(
        treatment_var="t", control_label="0", treatment_label="1",
        outcome_var="y", numeric_confounders=("x1", "x2"),
        categorical_confounders=(), estimand=estimand)
    return encode_design(data, spec)


class TestFitDoublyRobust:
    def test_row_order_and_effect(self):
        dm = _design(seed=3)
        ws = WeightSet(w=np.ones(dm.n), algorithm="LR", estimand="ATT")
        est = fit_doubly_robust(dm, ws)
        assert [r.term for r in est.rows] == ["(Intercept)", "t", "x1", "x2"]
        assert est.effect == est.rows[1].estimate
        assert est.algorithm_used == "LR"
        assert est.n_used == dm.n

    def test_p_values_from_t_distribution(self):
        dm = _design(seed=4)
        rng = np.random.default_rng(9)
        w = rng.uniform(0.5, 2.0, size=dm.n)
        est = fit_doubly_robust(dm, WeightSet(w=w, algorithm="LR", estimand="ATT"))
        k = len(est.rows)
        for r in est.rows:
            assert r.t == pytest.approx(r.estimate / r.se)
            assert r.p == pytest.approx(2 * stats.t.sf(abs(r.t), dm.n - k))

    def test_unweighted_matches_textbook_ols(self):
        dm = _design(seed=5)
        ws = WeightSet(w=np.ones(dm.n), algorithm="LR", estimand="ATT")
        est = fit_doubly_robust(dm, ws)
        A = np.column_stack([np.ones(dm.n), dm.T.astype(float), dm.X])
        beta_ref, cov_ref = wls_oracle(A, dm.Y, np.ones(dm.n))
        got = np.array([r.estimate for r in est.rows])
        np.testing.assert_allclose(got, beta_ref, atol=1e-9)
        got_se = np.array([r.se for r in est.rows])
        np.testing.assert_allclose(got_se, np.sqrt(np.diag(cov_ref)), atol=1e-9)

    def test_atc_flip_reparametrization(self):
        # fitting on the flipped design must reproduce the direct fit
        # with treatment recoded, with the sign mapped back
        dm_atc = _design(seed=6, estimand="ATC")
        assert dm_atc.flipped
        rng = np.random.default_rng(10)
        w = rng.uniform(0.5, 2.0, size=dm_atc.n)
        est = fit_doubly_robust(dm_atc, WeightSet(w=w, algorithm="LR",
                                                  estimand="ATT"))
        # direct fit in the flipped coding: intercept' = a + b, slope' = -b
        A = np.column_stack([np.ones(dm_atc.n), dm_atc.T.astype(float), dm_atc.X])
        beta_f, cov_f = wls_oracle(A, dm_atc.Y, w)
        assert est.rows[1].estimate == pytest.approx(-beta_f[1])
        assert est.rows[0].estimate == pytest.approx(beta_f[0] + beta_f[1])
        # t statistic of the treatment term is sign-flipped, p identical
        t_f = beta_f[1] / np.sqrt(cov_f[1, 1])
        assert est.rows[1].t == pytest.approx(-t_f)
        assert est.estimand == "ATC"
        # confounder terms are untouched by the flip
        np.testing.assert_allclose(
            [r.estimate for r in est.rows[2:]], beta_f[2:], atol=1e-9)

    def test_missing_outcome_rejected(self):
        dm = _design(seed=7)
        object.__setattr__(dm, "Y", None)
        with pytest.raises(ValueError):
            fit_doubly_robust(dm, WeightSet(w=np.ones(dm.n), algorithm="LR",
                                            estimand="ATT"))


class TestExport:
    def test_weight_columns_appended(self):
        dm = _design(seed=8, n=40)
        data = from_columns([
            numeric_column("t", dm.T.astype(float)),
            numeric_column("x1", dm.X[:, 0]),
            numeric_column("x2", dm.X[:, 1]),
            numeric_column("y", dm.Y),
        ])
        w = np.linspace(0.5, 1.5, dm.n)
        sets = {"LR": WeightSet(w=w, algorithm="LR", estimand="ATT")}
        out = export_data_and_weights(data, dm, sets, "csv")
        lines = out.decode().splitlines()
        header = lines[0].split(",")
        assert header[-1] == "LR"
        assert len(lines) == dm.n + 1
        tsv = export_data_and_weights(data, dm, sets, "tsv")
        assert b"\t" in tsv

    def test_unknown_format_rejected(self):
        dm = _design(seed=8, n=40)
        data = from_columns([numeric_column("t", dm.T.astype(float))])
        with pytest.raises(ValueError):
            export_data_and_weights(data, dm, {}, "xlsx")

"""Entropy-tilting weights: dual calculus, exact balance, infeasibility."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from balancelab.data import AnalysisSpec, encode_design, from_columns, numeric_column
from balancelab.engines.entropy import (
    eb_dual_grad,
    eb_dual_value,
    fit_entropy_balance,
    solve_entropy_tilt,
)
from balancelab.engines.moments import expand_moments
from balancelab.errors import InfeasibleTargetError


def fd_gradient(f, lam, h=1e-6):
    g = np.zeros_like(lam)
    for k in range(lam.size):
        e = np.zeros_like(lam)
        e[k] = h
        g[k] = (f(lam + e) - f(lam - e)) / (2 * h)
    return g


class TestDualCalculus:
    def test_gradient_matches_central_differences(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            n = rng.integers(10, 60)
            k = rng.integers(1, 5)
            Z = rng.normal(size=(n, k))
            target = Z.mean(axis=0) + rng.normal(scale=0.1, size=k)
            lam = rng.normal(scale=0.5, size=k)
            g = eb_dual_grad(lam, Z, target)
            g_fd = fd_gradient(lambda v: eb_dual_value(v, Z, target), lam)
            denom = np.maximum(1.0, np.abs(g_fd))
            assert np.max(np.abs(g - g_fd) / denom) < 1e-5

    def test_value_at_zero_is_zero(self):
        rng = np.random.default_rng(1)
        Z = rng.normal(size=(30, 3))
        target = rng.normal(size=3)
        assert eb_dual_value(np.zeros(3), Z, target) == pytest.approx(0.0)

    def test_dual_is_convex_along_random_lines(self):
        rng = np.random.default_rng(2)
        Z = rng.normal(size=(40, 3))
        target = Z.mean(axis=0)
        a = rng.normal(size=3)
        b = rng.normal(size=3)
        ts = np.linspace(-1, 1, 9)
        vals = [eb_dual_value(a * (1 - t) + b * t, Z, target) for t in ts]
        # midpoint convexity on the sampled grid
        for i in range(1, len(ts) - 1):
            assert vals[i] <= (vals[i - 1] + vals[i + 1]) / 2 + 1e-10


class TestSolveTilt:
    def test_achieves_target_exactly(self):
        rng = np.random.default_rng(3)
        Z = rng.normal(size=(80, 4))
        # pick an interior target: weighted mean under a random tilt
        w0 = rng.uniform(0.5, 2.0, size=80)
        w0 /= w0.sum()
        target = w0 @ Z
        w, lam, iters = solve_entropy_tilt(Z, target)
        np.testing.assert_allclose(w @ Z, target, atol=1e-8)
        assert w.sum() == pytest.approx(1.0)
        assert np.all(w > 0)

    def test_uniform_when_target_is_mean(self):
        rng = np.random.default_rng(4)
        Z = rng.normal(size=(50, 2))
        target = Z.mean(axis=0)
        w, lam, _ = solve_entropy_tilt(Z, target)
        np.testing.assert_allclose(w, np.full(50, 1 / 50), atol=1e-8)
        np.testing.assert_allclose(lam, 0.0, atol=1e-6)

    def test_infeasible_target_raises(self):
        rng = np.random.default_rng(5)
        Z = rng.uniform(0, 1, size=(30, 2))
        target = np.array([2.0, 0.5])  # outside the convex hull of column 0
        with pytest.raises(InfeasibleTargetError):
            solve_entropy_tilt(Z, target)


def _confounded_design(seed=0, n=400, estimand="ATT"):
    rng = np.random.default_rng(seed)
    x1 = rng.normal(size=n)
    x2 = rng.gamma(2.0, 1.0, size=n)
    eta = 0.8 * x1 + 0.4 * (x2 - 2.0)
    t = (rng.uniform(size=n) < 1 / (1 + np.exp(-eta))).astype(float)
    y = x1 + x2 + 2 * t + rng.normal(size=n)
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


class TestFitEntropyBalance:
    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_att_moments_match_treated(self, m):
        dm = _confounded_design(seed=10)
        ws = fit_entropy_balance(dm, m)
        exp_ = expand_moments(dm, m, "ATT")
        w = ws.w
        t_mask = dm.T == 1
        treated_means = exp_.Z[t_mask].mean(axis=0)
        control_means = (w[~t_mask] @ exp_.Z[~t_mask]) / w[~t_mask].sum()
        np.testing.assert_allclose(control_means, treated_means, atol=1e-7)
        # treated rows untouched, control weights sum to the group size
        np.testing.assert_allclose(w[t_mask], 1.0)
        assert w[~t_mask].sum() == pytest.approx((~t_mask).sum())

    def test_ate_moments_match_full_sample(self):
        dm = _confounded_design(seed=11, estimand="ATE")
        ws = fit_entropy_balance(dm, 2, "ATE")
        exp_ = expand_moments(dm, 2, "ATE")
        w = ws.w
        full_means = exp_.Z.mean(axis=0)
        for mask in (dm.T == 1, dm.T == 0):
            got = (w[mask] @ exp_.Z[mask]) / w[mask].sum()
            np.testing.assert_allclose(got, full_means, atol=1e-7)
            assert w[mask].sum() == pytest.approx(mask.sum())

    def test_raw_first_moments_match_on_original_scale(self):
        # standardized balance implies balance of the raw covariates
        dm = _confounded_design(seed=12)
        ws = fit_entropy_balance(dm, 1)
        w = ws.w
        t_mask = dm.T == 1
        for j in range(dm.X.shape[1]):
            m_t = dm.X[t_mask, j].mean()
            m_c = np.average(dm.X[~t_mask, j], weights=w[~t_mask])
            assert m_c == pytest.approx(m_t, abs=1e-7)

    def test_infeasible_names_worst_constraint(self):
        # tiny control group cannot match a distant treated mean
        t = np.array([0.0] * 5 + [1.0] * 5)
        x = np.array([0.0, 0.1, 0.2, 0.3, 0.4, 10.0, 10.1, 10.2, 10.3, 10.4])
        data = from_columns([
            numeric_column("t", t),
            numeric_column("x", x),
            numeric_column("x2", np.linspace(0, 1, 10)),
            numeric_column("y", np.zeros(10)),
        ])
        spec = AnalysisSpec(
            treatment_var="t", control_label="0", treatment_label="1",
            outcome_var="y", numeric_confounders=("x", "x2"),
            categorical_confounders=(), estimand="ATT")
        dm = encode_design(data, spec)
        with pytest.raises(InfeasibleTargetError) as exc:
            fit_entropy_balance(dm, 1)
        assert "x" in str(exc.value)

    def test_objective_is_control_kl(self):
        dm = _confounded_design(seed=13)
        ws = fit_entropy_balance(dm, 1)
        w_c = ws.w[dm.T == 0]
        q = w_c / w_c.sum()
        kl = float(np.sum(q * np.log(q * q.size)))
        assert ws.objective == pytest.approx(kl, abs=1e-10)

"""Balancing-score weights: the just-identified moment conditions hold."""

import numpy as np
import pytest

from balancelab.data import AnalysisSpec, encode_design, from_columns, numeric_column
from balancelab.engines.cbps import fit_cbps, solve_cbps
from balancelab.engines.logistic import irls_logit
from balancelab.engines.moments import expand_moments
from balancelab.engines.weights import ps_to_weights


def _confounded_design(seed=0, n=500, estimand="ATT", extra=None):
    rng = np.random.default_rng(seed)
    x1 = rng.normal(size=n)
    x2 = rng.gamma(2.0, 1.0, size=n)
    x3 = (rng.uniform(size=n) < 0.4).astype(float)
    eta = 0.9 * x1 + 0.5 * (x2 - 2.0) - 0.6 * x3
    t = (rng.uniform(size=n) < 1 / (1 + np.exp(-eta))).astype(float)
    y = x1 + x2 + 2 * t + rng.normal(size=n)
    cols = [
        numeric_column("t", t),
        numeric_column("x1", x1),
        numeric_column("x2", x2),
        numeric_column("x3", x3),
        numeric_column("y", y),
    ]
    confs = ["x1", "x2", "x3"]
    if extra is not None:
        cols.append(numeric_column(extra[0], extra[1]))
        confs.append(extra[0])
    data = from_columns(cols)
    spec = AnalysisSpec(
        treatment_var="t", control_label="0", treatment_label="1",
        outcome_var="y", numeric_confounders=tuple(confs),
        categorical_confounders=(), estimand=estimand)
    return encode_design(data, spec)


class TestAttMoments:
    # The solver works in the score domain; these checks verify the
    # induced weights directly, which is the property that matters.
    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_weighted_means_match_treated(self, m):
        dm = _confounded_design(seed=1)
        ws = fit_cbps(dm, m)
        assert ws.converged
        exp_ = expand_moments(dm, m, "ATT")
        kept = [j for j, name in enumerate(exp_.names)
                if name not in exp_.dropped]
        w = ws.w
        t_mask = dm.T == 1
        treated = exp_.Z[t_mask][:, kept].mean(axis=0)
        control = (w[~t_mask] @ exp_.Z[~t_mask][:, kept]) / w[~t_mask].sum()
        np.testing.assert_allclose(control, treated, atol=1e-5)

    def test_intercept_moment_pins_total_weight(self):
        # sum of control weights equals the treated count for ATT
        dm = _confounded_design(seed=2)
        ws = fit_cbps(dm, 1)
        t_mask = dm.T == 1
        assert ws.w[~t_mask].sum() == pytest.approx(t_mask.sum(), rel=1e-6)
        np.testing.assert_allclose(ws.w[t_mask], 1.0)


class TestAteMoments:
    def test_weighted_means_match_across_groups(self):
        dm = _confounded_design(seed=3, estimand="ATE")
        ws = fit_cbps(dm, 1, "ATE")
        assert ws.converged
        w = ws.w
        t_mask = dm.T == 1
        m1 = (w[t_mask] @ dm.X[t_mask]) / w[t_mask].sum()
        m0 = (w[~t_mask] @ dm.X[~t_mask]) / w[~t_mask].sum()
        np.testing.assert_allclose(m1, m0, atol=1e-5)

    def test_intercept_moment_equalizes_group_totals(self):
        # the ATE intercept condition forces sum(T/p) = sum((1-T)/(1-p))
        dm = _confounded_design(seed=4, estimand="ATE")
        ws = fit_cbps(dm, 1, "ATE")
        t_mask = dm.T == 1
        assert ws.w[t_mask].sum() == pytest.approx(ws.w[~t_mask].sum(), rel=1e-8)


class TestSolver:
    def test_score_is_zero_at_solution(self):
        dm = _confounded_design(seed=5)
        exp_ = expand_moments(dm, 1, "ATT")
        D = np.column_stack([np.ones(dm.n), exp_.Z])
        beta0, *_ = irls_logit(D, dm.T.astype(float))
        beta, p, converged, iters = solve_cbps(D, dm.T, "ATT", beta0=beta0)
        assert converged
        # independent residual: mean of D' (T - (1-T) p/(1-p))
        T = dm.T.astype(float)
        resid = T - (1 - T) * p / (1 - p)
        g = D.T @ resid / dm.n
        assert np.max(np.abs(g)) < 1e-6

    def test_improves_on_logistic_start(self):
        dm = _confounded_design(seed=6)
        exp_ = expand_moments(dm, 1, "ATT")
        D = np.column_stack([np.ones(dm.n), exp_.Z])
        T = dm.T.astype(float)
        beta0, p0, *_ = irls_logit(D, T)

        def score_norm(p):
            resid = T - (1 - T) * p / (1 - p)
            return np.max(np.abs(D.T @ resid / dm.n))

        beta, p, _, _ = solve_cbps(D, dm.T, "ATT", beta0=beta0)
        assert score_norm(p) <= score_norm(p0)

    def test_duplicate_moment_column_dropped(self):
        # the expansion prunes the duplicate; the fit matches the clean design
        base = _confounded_design(seed=7)
        dm = _confounded_design(seed=7, extra=("x1_copy", base.X[:, 0].copy()))
        ws = fit_cbps(dm, 1)
        assert ws.converged
        assert any("x1_copy" in n for n in ws.notes)
        ws_base = fit_cbps(base, 1)
        np.testing.assert_allclose(ws.w, ws_base.w, atol=1e-6)


class TestAgainstIpwBaseline:
    def test_cbps_balances_better_than_plain_logistic(self):
        from balancelab.balance import BalanceProbe
        from balancelab.engines.logistic import fit_logistic_ps

        dm = _confounded_design(seed=8, n=300)
        probe = BalanceProbe(dm.X, dm.T, "ATT")
        w_lr = ps_to_weights(fit_logistic_ps(dm), dm.T, "ATT").w
        w_cb = fit_cbps(dm, 1).w
        # exact moment balance beats the likelihood fit on mean |SMD|
        assert probe.mean_abs_smd(w_cb) <= probe.mean_abs_smd(w_lr) + 1e-12

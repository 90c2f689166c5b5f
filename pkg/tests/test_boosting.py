import numpy as np
import pytest
import scipy.optimize

from fcgboost.boosting import (
    BoostModel,
    FitConfig,
    baseline_fit,
    classify,
    early_stop_grid,
    fcg_fit,
    fit_with_validation,
    predict_margin,
    select_atom,
    truncate,
)
from fcgboost.data import bayes_labels, gen_synthetic
from fcgboost.dictionary import build_dictionary
from fcgboost.losses import empirical_risk
from fcgboost.solver import REFERENCE_ADMM, AdmmConfig
from helpers import random_subproblem

TIGHT = FitConfig(k_max=1, solver=AdmmConfig(tol=1e-10, max_iter=50_000))


def tight_cfg(k_max, **kw):
    return FitConfig(k_max=k_max, solver=AdmmConfig(tol=1e-10, max_iter=50_000), **kw)


# ---------------------------------------------------------------- selection


def test_select_atom_absolute_takes_largest_magnitude():
    assert select_atom([0.1, -0.9, 0.5], already=set(), rule="absolute") == 1


def test_select_atom_signed_takes_largest_value():
    assert select_atom([0.1, -0.9, 0.5], already=set(), rule="signed") == 2


def test_select_atom_breaks_ties_by_smallest_index():
    assert select_atom([0.5, 0.5], already=set(), rule="absolute") == 0


def test_select_atom_skips_already_selected():
    assert select_atom([0.9, 0.5, 0.1], already={0}, rule="absolute") == 1


def test_select_atom_exhaustion():
    with pytest.raises(ValueError, match="already selected"):
        select_atom([0.5, 0.2], already={0, 1}, rule="absolute")


def test_select_atom_unknown_rule():
    with pytest.raises(ValueError):
        select_atom([0.5], already=set(), rule="greedy")


# ------------------------------------------------ truncation and labelling


def test_truncate_values():
    assert truncate(0.5) == 0.5
    assert truncate(-3.0) == -1.0
    assert truncate(0.0) == 0.0
    np.testing.assert_array_equal(truncate(np.array([2.0, -0.2])), [1.0, -0.2])


def test_truncate_is_idempotent_and_preserves_labels():
    rng = np.random.default_rng(0)
    t = rng.uniform(-5, 5, 200)
    np.testing.assert_array_equal(truncate(truncate(t)), truncate(t))
    np.testing.assert_array_equal(classify(truncate(t)), classify(t))


def test_classify_sign_convention():
    np.testing.assert_array_equal(classify([0.3, -0.2, 0.0]), [1.0, -1.0, 1.0])
    np.testing.assert_array_equal(classify(np.zeros(4)), np.ones(4))


# ------------------------------------------------------------ stopping grid


def test_early_stop_grid_values():
    assert early_stop_grid(1000) == [13, 26, 39, 52, 65]
    assert early_stop_grid(3) == [2, 4, 6, 8, 10]
    assert early_stop_grid(8) == [2, 4, 6, 8, 10]


def test_early_stop_grid_rejects_tiny_m():
    with pytest.raises(ValueError):
        early_stop_grid(1)


# ----------------------------------------------------------------- margins


def test_predict_margin_empty_model_is_zero():
    model = BoostModel(selected=[], coefficients=np.zeros(0), n_atoms=4, k=0)
    np.testing.assert_array_equal(predict_margin(model, np.ones((3, 4))), np.zeros(3))


def test_predict_margin_single_atom():
    A = np.random.default_rng(1).normal(size=(5, 3))
    model = BoostModel(selected=[2], coefficients=np.array([1.0]), n_atoms=3, k=1)
    np.testing.assert_array_equal(predict_margin(model, A), A[:, 2])


def test_predict_margin_dictionary_mismatch():
    model = BoostModel(selected=[0], coefficients=np.array([1.0]), n_atoms=3, k=1)
    with pytest.raises(ValueError, match="expects"):
        predict_margin(model, np.ones((2, 5)))


def test_margins_match_final_solve():
    rng = np.random.default_rng(2)
    A, y = random_subproblem(rng, 50, 8)
    model, _ = fcg_fit(A, y, FitConfig(k_max=4))
    direct = A[:, model.selected] @ model.coefficients
    np.testing.assert_allclose(predict_margin(model, A), direct, atol=1e-12)


# ---------------------------------------------------------------- fcg_fit


def test_fit_config_validation():
    with pytest.raises(ValueError):
        FitConfig(k_max=0)
    with pytest.raises(ValueError):
        FitConfig(k_max=1, selection_rule="best")
    with pytest.raises(ValueError):
        FitConfig(k_max=1, loss="logistic")


def test_first_iteration_not_worse_than_best_single_atom():
    rng = np.random.default_rng(3)
    A, y = random_subproblem(rng, 60, 6)
    model, trace = fcg_fit(A, y, tight_cfg(1))
    # exact single-atom minima via scalar minimization on every column
    best = min(
        scipy.optimize.minimize_scalar(
            lambda b, j=j: empirical_risk("squared_hinge", y * (b * A[:, j]))
        ).fun
        for j in range(6)
    )
    assert trace.risks()[0] <= best + 1e-6


def test_monotone_risk_with_tight_solver():
    rng = np.random.default_rng(4)
    A, y = random_subproblem(rng, 80, 15)
    _, trace = fcg_fit(A, y, tight_cfg(12))
    risks = trace.risks()
    assert all(risks[i + 1] <= risks[i] + 1e-9 for i in range(len(risks) - 1))


def test_support_grows_one_distinct_atom_per_iteration():
    rng = np.random.default_rng(5)
    A, y = random_subproblem(rng, 60, 20)
    model, trace = fcg_fit(A, y, FitConfig(k_max=10))
    assert len(model.selected) == len(set(model.selected)) == model.k
    assert [row.k for row in trace.rows] == list(range(1, model.k + 1))


def test_stationarity_on_support_after_tight_refit():
    rng = np.random.default_rng(6)
    A, y = random_subproblem(rng, 70, 10)
    from fcgboost.dictionary import atom_correlations
    from fcgboost.losses import risk_gradient

    model, _ = fcg_fit(A, y, tight_cfg(5))
    grad = risk_gradient("squared_hinge", A[:, model.selected] @ model.coefficients, y)
    corr = atom_correlations(A, grad)
    assert np.abs(corr[model.selected]).max() <= 1e-4


def test_greedy_risk_bound_against_full_span_minimizer():
    # risk(f_k) - risk(h) <= 4 ||h||_1^2 / k for a high-accuracy full-span h
    rng = np.random.default_rng(7)
    A, y = random_subproblem(rng, 60, 12)
    from fcgboost.solver import admm_solve

    h, _ = admm_solve(A, y, REFERENCE_ADMM)
    risk_h = empirical_risk("squared_hinge", y * (A @ h))
    bound_scale = 4.0 * float(np.abs(h).sum()) ** 2
    _, trace = fcg_fit(A, y, tight_cfg(12))
    for k, risk in enumerate(trace.risks(), start=1):
        assert risk - risk_h <= bound_scale / k + 1e-8


def test_sign_flip_invariance_of_absolute_rule():
    rng = np.random.default_rng(8)
    A, y = random_subproblem(rng, 50, 10)
    model_a, _ = fcg_fit(A, y, FitConfig(k_max=6))
    flipped = A.copy()
    flipped[:, 3] *= -1.0
    model_b, _ = fcg_fit(flipped, y, FitConfig(k_max=6))
    labels_a = classify(predict_margin(model_a, A))
    labels_b = classify(predict_margin(model_b, flipped))
    np.testing.assert_array_equal(labels_a, labels_b)
    assert model_a.selected == model_b.selected


def test_fit_stops_when_dictionary_is_exhausted():
    rng = np.random.default_rng(9)
    A, y = random_subproblem(rng, 30, 3)
    model, _ = fcg_fit(A, y, FitConfig(k_max=10))
    assert model.k <= 3


def test_callback_sees_snapshots():
    rng = np.random.default_rng(10)
    A, y = random_subproblem(rng, 40, 8)
    seen = []
    fcg_fit(A, y, FitConfig(k_max=3), callback=lambda k, sel, coef: seen.append((k, len(sel), coef.copy())))
    assert [s[0] for s in seen] == [1, 2, 3]
    assert [s[1] for s in seen] == [1, 2, 3]


@pytest.mark.parametrize("loss", ["square", "hinge", "cubed_hinge"])
def test_other_losses_fit_and_reduce_risk(loss):
    rng = np.random.default_rng(11)
    X = rng.uniform(size=(120, 2))
    y = bayes_labels(X)
    d = build_dictionary(X, "gauss", 40, seed=1, width=0.5)
    A = d.evaluate(X)
    model, trace = fcg_fit(A, y, FitConfig(k_max=6, loss=loss))
    risks = trace.risks()
    assert risks[-1] < empirical_risk(loss, np.zeros(120)) and model.k == 6


# ------------------------------------------------------------- validation


def test_fit_with_validation_single_grid_value():
    rng = np.random.default_rng(12)
    A, y = random_subproblem(rng, 60, 10)
    result = fit_with_validation(A[:40], y[:40], A[40:], y[40:], FitConfig(k_max=1), [3])
    assert result.k == 3
    assert result.model.k == 3


def test_fit_with_validation_prefers_smallest_k_on_ties():
    # a one-atom dictionary stalls after the first iteration, so every grid
    # value scores identically and the smallest must win
    rng = np.random.default_rng(13)
    y = np.where(rng.random(40) < 0.5, 1.0, -1.0)
    A = y.reshape(-1, 1) * 0.5
    result = fit_with_validation(A[:30], y[:30], A[30:], y[30:], FitConfig(k_max=1), [1, 2, 3])
    assert result.k == 1
    assert len(set(result.errors)) == 1


# -------------------------------------------------------------- baselines


def test_baseline_validation():
    rng = np.random.default_rng(14)
    A, y = random_subproblem(rng, 20, 4)
    with pytest.raises(ValueError):
        baseline_fit(A, y, "adaptive", 5)
    with pytest.raises(ValueError):
        baseline_fit(A, y, "orig", 0)


def test_orig_step_is_exact_line_search_minimum():
    rng = np.random.default_rng(15)
    y = np.where(rng.random(50) < 0.5, 1.0, -1.0)
    g = rng.uniform(-1, 1, 50)
    A = g.reshape(-1, 1)
    model, trace = baseline_fit(A, y, "orig", 1)
    exact = scipy.optimize.minimize_scalar(
        lambda b: empirical_risk("squared_hinge", y * (b * g))
    )
    assert trace.risks()[0] == pytest.approx(exact.fun, abs=1e-9)
    assert model.coefficients[0] == pytest.approx(exact.x, abs=1e-5)


def test_shrinkage_with_unit_factor_matches_orig_first_step():
    rng = np.random.default_rng(16)
    A, y = random_subproblem(rng, 40, 6)
    m1, t1 = baseline_fit(A, y, "orig", 1)
    m2, t2 = baseline_fit(A, y, "shrinkage", 1, nu=1.0)
    assert t1.risks()[0] == pytest.approx(t2.risks()[0], abs=1e-12)
    np.testing.assert_allclose(m1.coefficients, m2.coefficients)


def test_epsilon_steps_have_fixed_magnitude():
    rng = np.random.default_rng(17)
    A, y = random_subproblem(rng, 40, 6)
    steps = []
    baseline_fit(A, y, "epsilon", 10, eps=0.01,
                 callback=lambda k, j, beta: steps.append(beta.copy()))
    assert abs(steps[0]).max() == pytest.approx(0.01)
    total = np.abs(steps[-1]).sum()
    assert total == pytest.approx(10 * 0.01, abs=1e-12)


def test_baselines_may_reselect_and_record_distinct_atoms():
    rng = np.random.default_rng(18)
    A, y = random_subproblem(rng, 60, 3)
    model, trace = baseline_fit(A, y, "shrinkage", 30, nu=0.5)
    assert len(trace.rows) == 30
    assert len(model.selected) <= 3
    assert len(model.selected) == len(set(model.selected))


def test_monotone_risk_for_exact_line_search_baseline():
    rng = np.random.default_rng(19)
    A, y = random_subproblem(rng, 50, 8)
    _, trace = baseline_fit(A, y, "orig", 15)
    risks = trace.risks()
    assert all(risks[i + 1] <= risks[i] + 1e-12 for i in range(len(risks) - 1))


def test_train_trace_csv(tmp_path):
    rng = np.random.default_rng(20)
    A, y = random_subproblem(rng, 30, 5)
    _, trace = fcg_fit(A, y, FitConfig(k_max=3))
    path = tmp_path / "trace.csv"
    trace.write_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "k,atom,risk,max_corr,solver_iters,seconds"
    assert len(lines) == 4

"""Experiment drivers shared by the command-line interface and the test gates.

Every driver is a pure function of its configuration and seed: repetitions
derive their seeds as ``seed + rep`` and regenerate (or re-split) the data, so
any emitted row can be reproduced by re-running with the recorded values.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from ._validation import require
from .boosting import (
    BASELINE_SCHEMES,
    FitConfig,
    baseline_fit,
    classify,
    early_stop_grid,
    fcg_fit,
    fit_with_validation,
)
from .data import Dataset, gen_synthetic, load_csv, split, test_error
from .dictionary import build_dictionary
from .losses import LOSSES
from .solver import AdmmConfig, GdConfig, admm_solve, gd_solve

__all__ = [
    "ExperimentData",
    "DictionarySpec",
    "FitOutcome",
    "config_digest",
    "synthetic_splits",
    "csv_splits",
    "run_validated_fit",
    "compare_losses",
    "compare_solvers",
    "compare_schemes",
    "compare_k",
    "compare_n",
]


def config_digest(config: dict) -> str:
    """Short stable digest of a JSON-serializable configuration."""
    blob = json.dumps(config, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


@dataclass
class ExperimentData:
    train: Dataset
    valid: Dataset
    test: Dataset


def synthetic_splits(m_train: int, noise, seed: int, m_valid: int | None = None,
                     m_test: int | None = None, clean_valid: bool = False) -> ExperimentData:
    """Fresh synthetic train/valid/test draws with derived seeds.

    Train (and by default validation) carry the label noise; the test set is
    noise-free so the measured error reflects distance to the true decision
    rule.  ``clean_valid=True`` draws a noise-free validation set as well,
    which keeps per-iteration selection curves meaningful when the candidate
    set is thousands of iterations rather than a handful of grid values.
    """
    m_valid = m_valid if m_valid is not None else m_train
    m_test = m_test if m_test is not None else m_train
    return ExperimentData(
        train=gen_synthetic(m_train, noise=noise, seed=seed),
        valid=gen_synthetic(m_valid, noise=None if clean_valid else noise, seed=seed + 1_000_003),
        test=gen_synthetic(m_test, noise=None, seed=seed + 2_000_003),
    )


def csv_splits(path, label_col, positive_labels, feature_cols, fractions, seed) -> ExperimentData:
    data = load_csv(path, label_col=label_col, positive_labels=positive_labels,
                    feature_cols=feature_cols)
    train, valid, test = split(data, fractions=fractions, seed=seed)
    return ExperimentData(train=train, valid=valid, test=test)


@dataclass
class DictionarySpec:
    """Dictionary family plus the grids searched on the validation set."""

    kernel: str = "gauss"
    n_atoms: int | None = None  # None: match the training-sample count
    width: float = 0.5
    degree: int = 2
    width_grid: tuple | None = None

    def widths(self) -> list[float]:
        if self.kernel == "gauss" and self.width_grid:
            return [float(w) for w in self.width_grid]
        return [float(self.width)]

    def build(self, X, seed: int, width: float):
        n = self.n_atoms if self.n_atoms is not None else X.shape[0]
        return build_dictionary(
            X, self.kernel, n, seed,
            width=width if self.kernel == "gauss" else None,
            degree=self.degree if self.kernel == "poly" else None,
        )


@dataclass
class FitOutcome:
    test_error: float
    chosen_k: int
    chosen_width: float
    validation_error: float
    model: object
    dictionary: object
    trace: object = None
    grid: list[int] = field(default_factory=list)
    grid_errors: list[float] = field(default_factory=list)


def run_validated_fit(data: ExperimentData, dict_spec: DictionarySpec, cfg_base: FitConfig,
                      k_grid=None, seed: int = 0) -> FitOutcome:
    """Fit on train, choose k (and gauss width) on validation, score on test.

    ``k_grid`` defaults to the stopping grid derived from the training size.
    Ties prefer the earlier width in the grid and the smaller k.
    """
    grid = list(k_grid) if k_grid is not None else early_stop_grid(data.train.m)
    best = None
    for wi, width in enumerate(dict_spec.widths()):
        dictionary = dict_spec.build(data.train.X, seed + 7 * wi, width)
        A_tr = dictionary.evaluate(data.train.X)
        A_va = dictionary.evaluate(data.valid.X)
        result = fit_with_validation(A_tr, data.train.y, A_va, data.valid.y, cfg_base, grid)
        key = (min(result.errors), wi)
        if best is None or key < best[0]:
            best = (key, width, dictionary, result)

    _, width, dictionary, result = best
    result.model.dictionary_id = dictionary.dictionary_id
    A_te = dictionary.evaluate(data.test.X)
    margins = (
        A_te[:, result.model.selected] @ result.model.coefficients
        if result.model.selected
        else np.zeros(data.test.m)
    )
    err = test_error(classify(margins), data.test.y)
    return FitOutcome(
        test_error=err,
        chosen_k=result.k,
        chosen_width=width,
        validation_error=min(result.errors),
        model=result.model,
        dictionary=dictionary,
        trace=result.trace,
        grid=result.grid,
        grid_errors=result.errors,
    )


def compare_losses(make_data, dict_spec: DictionarySpec, base_cfg: FitConfig,
                   losses=None, reps: int = 20, seed: int = 0, on_row=None) -> list[dict]:
    """Mean test error per loss over ``reps`` repetitions.

    ``make_data(rep_seed)`` supplies an :class:`ExperimentData`; rows carry
    (cell, rep, seed, test_error, chosen_k, chosen_width).
    """
    losses = list(losses) if losses is not None else sorted(LOSSES)
    rows = []
    for rep in range(reps):
        rep_seed = seed + rep
        data = make_data(rep_seed)
        for name in losses:
            cfg = FitConfig(
                k_max=base_cfg.k_max,
                selection_rule=base_cfg.selection_rule,
                loss=name,
                solver=base_cfg.solver,
                stall_tol=base_cfg.stall_tol,
            )
            outcome = run_validated_fit(data, dict_spec, cfg, seed=rep_seed)
            row = {
                "cell": name,
                "rep": rep,
                "seed": rep_seed,
                "test_error": outcome.test_error,
                "chosen_k": outcome.chosen_k,
                "chosen_width": outcome.chosen_width,
            }
            rows.append(row)
            if on_row:
                on_row(row)
    return rows


def compare_solvers(make_data, dict_spec: DictionarySpec, admm_cfg: AdmmConfig,
                    gd_cfg: GdConfig, reps: int = 20, seed: int = 0, on_row=None):
    """Race ADMM against gradient descent on the full-dictionary subproblem.

    Returns ``(rows, traces)`` where ``traces[rep]`` maps solver name to its
    per-iteration :class:`SolveTrace`.
    """
    rows = []
    traces = []
    for rep in range(reps):
        rep_seed = seed + rep
        data = make_data(rep_seed)
        dictionary = dict_spec.build(data.train.X, rep_seed, dict_spec.widths()[0])
        A = dictionary.evaluate(data.train.X)
        y = data.train.y
        u_admm, tr_admm = admm_solve(A, y, admm_cfg)
        u_gd, tr_gd = gd_solve(A, y, gd_cfg)
        traces.append({"admm": tr_admm, "gd": tr_gd})
        for name, trace in (("admm", tr_admm), ("gd", tr_gd)):
            row = {
                "cell": name,
                "rep": rep,
                "seed": rep_seed,
                "objective": trace.objective[-1],
                "iterations": trace.iterations,
                "seconds": trace.seconds[-1],
            }
            rows.append(row)
            if on_row:
                on_row(row)
    return rows, traces


@dataclass
class _PathTracker:
    """Per-iteration validation/test errors and atom counts along one fit."""

    A_valid: np.ndarray
    y_valid: np.ndarray
    A_test: np.ndarray
    y_test: np.ndarray
    valid_errors: list[float] = field(default_factory=list)
    test_errors: list[float] = field(default_factory=list)
    distinct: list[int] = field(default_factory=list)
    steps: list[int] = field(default_factory=list)

    def best(self):
        """(iteration index, validation error) minimizing validation error."""
        i = int(np.argmin(self.valid_errors))
        return i, self.valid_errors[i]


def _track_fcg(tracker: _PathTracker):
    def cb(k, selected, coef):
        margins_v = tracker.A_valid[:, selected] @ coef
        margins_t = tracker.A_test[:, selected] @ coef
        tracker.valid_errors.append(float(np.mean(classify(margins_v) != tracker.y_valid)))
        tracker.test_errors.append(float(np.mean(classify(margins_t) != tracker.y_test)))
        tracker.distinct.append(len(selected))
        tracker.steps.append(k)

    return cb


def _track_baseline(tracker: _PathTracker):
    state = {"fv": None, "ft": None, "seen": set(), "beta_prev": None}

    def cb(k, atom, beta):
        if state["fv"] is None:
            state["fv"] = np.zeros(tracker.A_valid.shape[0])
            state["ft"] = np.zeros(tracker.A_test.shape[0])
            state["beta_prev"] = np.zeros_like(beta)
        delta = beta[atom] - state["beta_prev"][atom]
        state["beta_prev"][atom] = beta[atom]
        state["fv"] += delta * tracker.A_valid[:, atom]
        state["ft"] += delta * tracker.A_test[:, atom]
        state["seen"].add(atom)
        tracker.valid_errors.append(float(np.mean(classify(state["fv"]) != tracker.y_valid)))
        tracker.test_errors.append(float(np.mean(classify(state["ft"]) != tracker.y_test)))
        tracker.distinct.append(len(state["seen"]))
        tracker.steps.append(k)

    return cb


def compare_schemes(make_data, dict_spec: DictionarySpec, base_cfg: FitConfig,
                    fcg_k_max: int = 500, baseline_k_max: int = 5000, nu: float = 0.1,
                    eps: float = 0.01, reps: int = 10, seed: int = 0, on_row=None) -> list[dict]:
    """Fully-corrective fit versus stagewise baselines at best-validation stopping.

    Every method runs to its iteration budget while validation and test errors
    are tracked along the path; each is then read off at the iteration with
    the lowest validation error (ties to the earliest).  Rows report the test
    error there plus both sparsity counts: distinct atoms used and total steps
    taken.  The fully-corrective fit runs with reselection allowed (the
    verbatim greedy rule), so its support saturates once the inexact refit's
    residual correlations dominate, mirroring how the stagewise schemes may
    also revisit atoms.
    """
    rows = []
    for rep in range(reps):
        rep_seed = seed + rep
        data = make_data(rep_seed)
        width = dict_spec.widths()[0]
        dictionary = dict_spec.build(data.train.X, rep_seed, width)
        A_tr = dictionary.evaluate(data.train.X)
        A_va = dictionary.evaluate(data.valid.X)
        A_te = dictionary.evaluate(data.test.X)

        runs = []
        tracker = _PathTracker(A_va, data.valid.y, A_te, data.test.y)
        cfg = FitConfig(
            k_max=fcg_k_max,
            selection_rule=base_cfg.selection_rule,
            loss=base_cfg.loss,
            solver=base_cfg.solver,
            stall_tol=base_cfg.stall_tol,
            exclude_selected=False,
        )
        fcg_fit(A_tr, data.train.y, cfg, callback=_track_fcg(tracker))
        runs.append(("fcg", tracker))
        for scheme in BASELINE_SCHEMES:
            tracker = _PathTracker(A_va, data.valid.y, A_te, data.test.y)
            baseline_fit(
                A_tr, data.train.y, scheme, baseline_k_max, loss=base_cfg.loss, nu=nu,
                eps=eps, selection_rule=base_cfg.selection_rule,
                callback=_track_baseline(tracker),
            )
            runs.append((scheme, tracker))

        for name, tracker in runs:
            i, val_err = tracker.best()
            row = {
                "cell": name,
                "rep": rep,
                "seed": rep_seed,
                "test_error": tracker.test_errors[i],
                "validation_error": val_err,
                "best_iteration": tracker.steps[i],
                "distinct_atoms": tracker.distinct[i],
                "total_steps": tracker.steps[i],
            }
            rows.append(row)
            if on_row:
                on_row(row)
    return rows


def compare_k(make_data, dict_spec: DictionarySpec, base_cfg: FitConfig, k_grid=None,
              reps: int = 20, seed: int = 0, on_row=None) -> list[dict]:
    """Test error at each candidate iteration count (one fit per repetition)."""
    rows = []
    for rep in range(reps):
        rep_seed = seed + rep
        data = make_data(rep_seed)
        grid = list(k_grid) if k_grid is not None else early_stop_grid(data.train.m)
        width = dict_spec.widths()[0]
        dictionary = dict_spec.build(data.train.X, rep_seed, width)
        A_tr = dictionary.evaluate(data.train.X)
        A_te = dictionary.evaluate(data.test.X)

        snapshots = {}
        grid_set = set(grid)

        def snap(k, sel, coef):
            if k in grid_set:
                snapshots[k] = (list(sel), coef)

        cfg = FitConfig(
            k_max=max(grid),
            selection_rule=base_cfg.selection_rule,
            loss=base_cfg.loss,
            solver=base_cfg.solver,
            stall_tol=base_cfg.stall_tol,
        )
        model, _ = fcg_fit(A_tr, data.train.y, cfg, callback=snap)
        for k in sorted(grid_set):
            sel, coef = snapshots.get(k, (model.selected, model.coefficients))
            margins = A_te[:, sel] @ coef if sel else np.zeros(data.test.m)
            row = {
                "cell": k,
                "rep": rep,
                "seed": rep_seed,
                "test_error": float(np.mean(classify(margins) != data.test.y)),
            }
            rows.append(row)
            if on_row:
                on_row(row)
    return rows


def compare_n(make_data, dict_spec: DictionarySpec, base_cfg: FitConfig, n_grid,
              reps: int = 20, seed: int = 0, on_row=None) -> list[dict]:
    """Validated test error as the dictionary size varies."""
    rows = []
    for rep in range(reps):
        rep_seed = seed + rep
        data = make_data(rep_seed)
        for n in n_grid:
            spec = DictionarySpec(
                kernel=dict_spec.kernel,
                n_atoms=int(n),
                width=dict_spec.width,
                degree=dict_spec.degree,
                width_grid=dict_spec.width_grid,
            )
            outcome = run_validated_fit(data, spec, base_cfg, seed=rep_seed)
            row = {
                "cell": int(n),
                "rep": rep,
                "seed": rep_seed,
                "test_error": outcome.test_error,
                "chosen_k": outcome.chosen_k,
                "chosen_width": outcome.chosen_width,
            }
            rows.append(row)
            if on_row:
                on_row(row)
    return rows


def summarize(rows: list[dict], value: str = "test_error") -> dict:
    """Mean of ``value`` per cell, preserving first-seen cell order."""
    cells: dict = {}
    for row in rows:
        cells.setdefault(row["cell"], []).append(row[value])
    return {cell: float(np.mean(vals)) for cell, vals in cells.items()}

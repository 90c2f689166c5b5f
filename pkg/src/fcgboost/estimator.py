"""Scikit-learn style estimator wrapping the fully-corrective boosting fit."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from ._validation import as_matrix, require
from .boosting import FitConfig, classify, early_stop_grid, fcg_fit, fit_with_validation, predict_margin
from .dictionary import build_dictionary
from .solver import AdmmConfig

__all__ = ["FCGBoostingClassifier"]


class FCGBoostingClassifier(BaseEstimator, ClassifierMixin):
    """Binary classifier: fully-corrective greedy boosting over a kernel dictionary.

    A dictionary of ``n_atoms`` randomized weak learners is sampled from the
    training inputs, then atoms are selected greedily and their coefficients
    re-optimized jointly at every step (ADMM for the default squared hinge
    loss).  Prediction is the sign of the boosted margin, with ties mapped to
    the positive class.

    Parameters
    ----------
    kernel : {"gauss", "poly", "sigmoid", "relu"}, default="gauss"
        Weak-learner family.
    width : float, default=0.5
        Gauss kernel width; ignored by the other kernels.
    degree : int, default=2
        Poly kernel degree; ignored by the other kernels.
    n_atoms : int or None, default=None
        Dictionary size; ``None`` uses the number of training samples.
    k : int or "auto", default="auto"
        Number of boosting iterations.  ``"auto"`` holds out
        ``validation_fraction`` of the data and picks k from the grid
        ``[c, 2c, ..., 5c]`` with c = ceil(sqrt(m/ln m)) on that holdout
        (the fitted model stays trained on the remaining rows).
    loss : {"squared_hinge", "square", "hinge", "cubed_hinge"}, default="squared_hinge"
    selection_rule : {"absolute", "signed"}, default="absolute"
    solver_gamma, solver_alpha : float, default=1.0
        ADMM augmented and proximal parameters.
    solver_iters : int, default=100
        ADMM iterations per refit.
    solver_tol : float, default=0.0
        Optional ADMM stopping tolerance (0 runs all iterations).
    width_grid : sequence of float or None, default=None
        When set (gauss kernel, k="auto"), the width is chosen on the holdout
        jointly with k from this grid.
    validation_fraction : float, default=1/3
        Holdout fraction used only when ``k="auto"``.
    random_state : int, default=0
        Seed for the dictionary sample and the internal holdout split.

    Attributes
    ----------
    classes_ : ndarray of shape (2,)
        Class labels; ``classes_[1]`` is the positive class.
    dictionary_ : Dictionary
        The sampled weak-learner set.
    model_ : BoostModel
        Selected atoms and coefficients.
    k_ : int
        Boosting iterations of the final model.
    width_ : float
        Gauss width actually used.
    train_trace_ : TrainTrace
        Per-iteration fit records.
    """

    def __init__(self, kernel="gauss", width=0.5, degree=2, n_atoms=None, k="auto",
                 loss="squared_hinge", selection_rule="absolute", solver_gamma=1.0,
                 solver_alpha=1.0, solver_iters=100, solver_tol=0.0, width_grid=None,
                 validation_fraction=1.0 / 3.0, stall_tol=1e-12, random_state=0):
        self.kernel = kernel
        self.width = width
        self.degree = degree
        self.n_atoms = n_atoms
        self.k = k
        self.loss = loss
        self.selection_rule = selection_rule
        self.solver_gamma = solver_gamma
        self.solver_alpha = solver_alpha
        self.solver_iters = solver_iters
        self.solver_tol = solver_tol
        self.width_grid = width_grid
        self.validation_fraction = validation_fraction
        self.stall_tol = stall_tol
        self.random_state = random_state

    def _encode_labels(self, y):
        y = np.asarray(y).ravel()
        classes = np.unique(y)
        require(len(classes) == 2, f"expected exactly 2 classes, got {len(classes)}")
        return classes, np.where(y == classes[1], 1.0, -1.0)

    def _fit_config(self, k_max):
        solver = AdmmConfig(
            gamma=self.solver_gamma,
            alpha=self.solver_alpha,
            max_iter=self.solver_iters,
            tol=self.solver_tol,
        )
        return FitConfig(
            k_max=k_max,
            selection_rule=self.selection_rule,
            loss=self.loss,
            solver=solver,
            stall_tol=self.stall_tol,
        )

    def fit(self, X, y):
        X = as_matrix(X)
        self.classes_, signs = self._encode_labels(y)
        require(X.shape[0] == signs.size, "X and y have different lengths")
        self.n_features_in_ = X.shape[1]
        n = self.n_atoms if self.n_atoms is not None else X.shape[0]

        if self.k == "auto":
            self._fit_auto(X, signs, n)
        else:
            k_max = int(self.k)
            require(k_max >= 1, f"k must be at least 1, got {self.k}")
            self.width_ = float(self.width)
            self.dictionary_ = self._build(X, n, self.width_, seed=self.random_state)
            A = self.dictionary_.evaluate(X)
            self.model_, self.train_trace_ = fcg_fit(A, signs, self._fit_config(k_max))
            self.model_.dictionary_id = self.dictionary_.dictionary_id
            self.k_ = self.model_.k
            self.validation_error_ = None
        return self

    def _build(self, X, n, width, seed):
        return build_dictionary(
            X, self.kernel, n, seed, width=width if self.kernel == "gauss" else None,
            degree=self.degree if self.kernel == "poly" else None,
        )

    def _fit_auto(self, X, signs, n):
        m = X.shape[0]
        require(
            0.0 < self.validation_fraction < 1.0,
            f"validation_fraction must be in (0, 1), got {self.validation_fraction}",
        )
        n_valid = max(1, int(round(self.validation_fraction * m)))
        require(n_valid < m, "validation holdout leaves no training rows")
        perm = np.random.default_rng(self.random_state).permutation(m)
        valid_idx, train_idx = perm[:n_valid], perm[n_valid:]
        X_tr, y_tr = X[train_idx], signs[train_idx]
        X_va, y_va = X[valid_idx], signs[valid_idx]

        grid = early_stop_grid(len(train_idx))
        if self.kernel == "gauss" and self.width_grid is not None:
            widths = [float(w) for w in self.width_grid]
        else:
            widths = [float(self.width)]

        best = None
        for wi, width in enumerate(widths):
            dictionary = self._build(X_tr, n, width, seed=self.random_state + wi)
            A_tr = dictionary.evaluate(X_tr)
            A_va = dictionary.evaluate(X_va)
            result = fit_with_validation(A_tr, y_tr, A_va, y_va, self._fit_config(max(grid)), grid)
            key = (min(result.errors), wi)
            if best is None or key < best[0]:
                best = (key, width, dictionary, result)

        _, width, dictionary, result = best
        self.width_ = width
        self.dictionary_ = dictionary
        self.model_ = result.model
        self.model_.dictionary_id = dictionary.dictionary_id
        self.train_trace_ = result.trace
        self.k_ = result.k
        self.validation_error_ = min(result.errors)

    def decision_function(self, X):
        """Boosted margin f(x) for each row of X."""
        if not hasattr(self, "model_"):
            raise NotFittedError("this FCGBoostingClassifier instance is not fitted yet")
        X = as_matrix(X)
        A = self.dictionary_.evaluate(X)
        return predict_margin(self.model_, A)

    def predict(self, X):
        signs = classify(self.decision_function(X))
        return self.classes_[(signs > 0).astype(int)]

"""Greedy boosting over a fixed dictionary.

The primary fit is fully corrective: at step k the atom with the largest
(absolute) correlation against the risk gradient joins the support, and the
coefficients of every selected atom are re-optimized jointly.  For the squared
hinge that refit runs the ADMM solver; the other losses dispatch to an exact
or quasi-Newton solver appropriate to their shape.  Stagewise baselines that
only adjust the newest atom (exact line search, shrinkage, and fixed epsilon
steps) share the same selection machinery for comparison runs.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.optimize
import scipy.sparse

from ._validation import as_labels, as_matrix, require
from .dictionary import atom_correlations
from .losses import empirical_risk, get_loss, risk_gradient
from .solver import AdmmConfig, AdmmState, admm_solve, factorization_from_gram

__all__ = [
    "FitConfig",
    "BoostModel",
    "TraceRow",
    "TrainTrace",
    "ValidationResult",
    "select_atom",
    "truncate",
    "classify",
    "early_stop_grid",
    "predict_margin",
    "fcg_fit",
    "fit_with_validation",
    "baseline_fit",
    "BASELINE_SCHEMES",
]

BASELINE_SCHEMES = ("orig", "shrinkage", "epsilon")

SELECTION_RULES = ("absolute", "signed")


@dataclass(frozen=True)
class FitConfig:
    """Configuration of one fully-corrective fit.

    The ``absolute`` selection rule maximizes |correlation|; ``signed``
    maximizes the raw correlation.  The two coincide on dictionaries closed
    under negation, but one-sided dictionaries (all-nonnegative gauss atoms,
    say) can only harvest negative-coefficient atoms under ``absolute``, so it
    is the default.  The fit stops early once the best correlation magnitude
    drops to ``stall_tol``.

    With ``exclude_selected=True`` every iteration must pick a fresh atom.
    Setting it to False allows the argmax to land on a support atom again
    (its correlation is only zero when the refit is exact); the iteration
    then re-polishes the same support, so with an inexact solver the distinct
    support size saturates on its own while iterations keep running.
    """

    k_max: int
    selection_rule: str = "absolute"
    loss: str = "squared_hinge"
    solver: AdmmConfig = field(default_factory=AdmmConfig)
    stall_tol: float = 1e-12
    exclude_selected: bool = True

    def __post_init__(self):
        require(self.k_max >= 1, f"k_max must be at least 1, got {self.k_max}")
        require(
            self.selection_rule in SELECTION_RULES,
            f"selection_rule must be one of {SELECTION_RULES}, got {self.selection_rule!r}",
        )
        require(self.stall_tol >= 0, f"stall_tol must be nonnegative, got {self.stall_tol}")
        get_loss(self.loss)


@dataclass
class BoostModel:
    """Ordered selected-atom indices with their joint coefficients.

    ``k`` counts boosting iterations run; for the fully-corrective fit the
    support size equals ``k``, for stagewise baselines ``selected`` records
    distinct atoms in first-use order and may be shorter.
    """

    selected: list[int]
    coefficients: np.ndarray
    n_atoms: int
    k: int
    dictionary_id: str = ""

    def __post_init__(self):
        require(len(self.selected) == len(set(self.selected)), "selected indices must be distinct")
        require(
            len(self.coefficients) == len(self.selected),
            "coefficients must align with selected atoms",
        )


@dataclass
class TraceRow:
    k: int
    atom: int
    risk: float
    max_corr: float
    solver_iters: int
    seconds: float


@dataclass
class TrainTrace:
    """Per-iteration fit records, exportable as CSV for plotting."""

    rows: list[TraceRow] = field(default_factory=list)

    def risks(self) -> list[float]:
        return [row.risk for row in self.rows]

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("k,atom,risk,max_corr,solver_iters,seconds\n")
            for r in self.rows:
                fh.write(
                    f"{r.k},{r.atom},{r.risk!r},{r.max_corr!r},{r.solver_iters},{r.seconds!r}\n"
                )


def select_atom(correlations, already, rule: str = "absolute") -> int:
    """Index of the best not-yet-selected atom; ties go to the smallest index.

    Raises ``ValueError`` when every atom is already selected.
    """
    corr = np.asarray(correlations, dtype=float).ravel()
    require(rule in SELECTION_RULES, f"rule must be one of {SELECTION_RULES}, got {rule!r}")
    score = np.abs(corr) if rule == "absolute" else corr.copy()
    taken = list(already)
    if taken:
        score[taken] = -np.inf
    if not np.isfinite(score).any():
        raise ValueError("all atoms are already selected")
    return int(np.argmax(score))


def truncate(t):
    """Clamp to [-1, 1] preserving sign; accepts scalars or arrays."""
    arr = np.asarray(t, dtype=float)
    require(bool(np.all(np.isfinite(arr))), "t must be finite")
    out = np.clip(arr, -1.0, 1.0)
    return float(out) if arr.ndim == 0 else out


def classify(margins) -> np.ndarray:
    """Signs of the margins with the convention sgn(0) = +1."""
    arr = np.asarray(margins, dtype=float)
    return np.where(arr >= 0.0, 1.0, -1.0)


def early_stop_grid(m: int) -> list[int]:
    """Candidate iteration counts [c, 2c, 3c, 4c, 5c], c = ceil(sqrt(m/ln m))."""
    require(m >= 2, f"m must be at least 2, got {m}")
    c = math.ceil(math.sqrt(m / math.log(m)))
    return [c * i for i in range(1, 6)]


def predict_margin(model: BoostModel, A) -> np.ndarray:
    """Margins f(x_i) = sum_j coef_j * A[i, selected_j] over a full design matrix."""
    A = as_matrix(A, "A")
    require(
        A.shape[1] == model.n_atoms,
        f"design matrix has {A.shape[1]} columns, model expects {model.n_atoms}",
    )
    if not model.selected:
        return np.zeros(A.shape[0])
    return A[:, model.selected] @ model.coefficients


def _refit(A_sub, y, loss, cfg: FitConfig, warm_u, gram):
    """Jointly re-optimize the coefficients over the current support.

    Returns ``(u, solver_iterations)``.  Dispatch: squared hinge runs ADMM
    warm-started from the previous coefficients extended by zero (v = A u0,
    w = 0, which keeps w in null(A^T)); the square loss reduces to least
    squares on y because (1 - y t)^2 = (y - t)^2 for y = +-1; the hinge
    subproblem is a linear program; the cubed hinge is smooth and goes to
    L-BFGS.
    """
    m, s = A_sub.shape
    if loss.name == "squared_hinge":
        u0 = np.zeros(s)
        u0[: warm_u.size] = warm_u
        init = AdmmState(u=u0, v=A_sub @ u0, w=np.zeros(m))
        factor = factorization_from_gram(gram, cfg.solver.gamma, cfg.solver.alpha)
        u, trace = admm_solve(A_sub, y, cfg.solver, init=init, factor=factor)
        return u, trace.iterations
    if loss.name == "square":
        u, *_ = np.linalg.lstsq(A_sub, y, rcond=None)
        return u, 1
    if loss.name == "hinge":
        # minimize (1/m) 1^T xi  s.t.  xi >= 1 - y_i (A u)_i, xi >= 0
        cost = np.concatenate([np.zeros(s), np.full(m, 1.0 / m)])
        lhs = scipy.sparse.hstack(
            [scipy.sparse.csr_matrix(-(y[:, None] * A_sub)), -scipy.sparse.eye(m, format="csr")]
        )
        res = scipy.optimize.linprog(
            cost,
            A_ub=lhs,
            b_ub=-np.ones(m),
            bounds=[(None, None)] * s + [(0, None)] * m,
            method="highs",
        )
        if not res.success:
            raise RuntimeError(f"hinge refit LP failed: {res.message}")
        return res.x[:s], int(res.nit)
    # cubed hinge: C^2 objective, quasi-Newton with the analytic gradient
    def fun_and_grad(u):
        margins = y * (A_sub @ u)
        slack = np.maximum(0.0, 1.0 - margins)
        value = float(np.mean(slack**3))
        grad = A_sub.T @ ((-3.0 / m) * slack**2 * y)
        return value, grad

    x0 = np.zeros(s)
    x0[: warm_u.size] = warm_u
    res = scipy.optimize.minimize(
        fun_and_grad, x0, jac=True, method="L-BFGS-B",
        options={"maxiter": 500, "ftol": 1e-14, "gtol": 1e-10},
    )
    return res.x, int(res.nit)


def fcg_fit(A, y, cfg: FitConfig, callback=None):
    """Fully-corrective greedy fit over the columns of the design matrix A.

    Starts from the zero predictor and an empty support.  Each iteration
    computes the risk gradient, selects an atom (a fresh one unless the config
    allows reselection), refits all coefficients jointly, and records a trace
    row.  ``callback(k, selected, coefficients)`` is invoked after every
    completed iteration (the coefficient array is a snapshot).  Returns
    ``(model, trace)``.
    """
    A = as_matrix(A, "A")
    y = as_labels(y)
    require(A.shape[0] == y.size, f"A has {A.shape[0]} rows but y has length {y.size}")
    loss = get_loss(cfg.loss)

    m, n = A.shape
    selected: list[int] = []
    u = np.zeros(0)
    predictions = np.zeros(m)
    gram = np.zeros((0, 0))
    trace = TrainTrace()
    start = time.perf_counter()

    for k in range(1, cfg.k_max + 1):
        if cfg.exclude_selected and len(selected) == n:
            break
        grad = risk_gradient(loss, predictions, y)
        corr = atom_correlations(A, grad)
        already = selected if cfg.exclude_selected else ()
        j = select_atom(corr, already, cfg.selection_rule)
        best = abs(float(corr[j])) if cfg.selection_rule == "absolute" else float(corr[j])
        if best <= cfg.stall_tol:
            break

        if j not in selected:
            new_col = A[:, j]
            if loss.name == "squared_hinge":
                # grow the Gram matrix incrementally; one new row and column
                cross = A[:, selected].T @ new_col if selected else np.zeros(0)
                grown = np.empty((len(selected) + 1, len(selected) + 1))
                grown[: len(selected), : len(selected)] = gram
                grown[-1, : len(selected)] = cross
                grown[: len(selected), -1] = cross
                grown[-1, -1] = float(new_col @ new_col)
                gram = grown
            selected.append(j)
        A_sub = A[:, selected]

        u, solver_iters = _refit(A_sub, y, loss, cfg, u, gram)
        predictions = A_sub @ u
        risk = empirical_risk(loss, y * predictions)
        trace.rows.append(
            TraceRow(
                k=k,
                atom=j,
                risk=risk,
                max_corr=best,
                solver_iters=solver_iters,
                seconds=time.perf_counter() - start,
            )
        )
        if callback is not None:
            callback(k, selected, u.copy())

    model = BoostModel(
        selected=list(selected),
        coefficients=np.asarray(u, dtype=float),
        n_atoms=n,
        k=len(trace.rows),
    )
    return model, trace


@dataclass
class ValidationResult:
    """Outcome of a grid-validated fit: chosen model, chosen k, and the grid errors."""

    model: BoostModel
    k: int
    grid: list[int]
    errors: list[float]
    trace: TrainTrace


def fit_with_validation(A_train, y_train, A_valid, y_valid, cfg: FitConfig, grid):
    """Fit once up to max(grid), snapshot at each grid k, pick the best on validation.

    Supports are nested, so one fit serves the whole grid.  The chosen k is
    the one with the lowest validation misclassification rate; ties go to the
    smallest k.  When the fit stalls before a grid value, the final model
    stands in for that snapshot.
    """
    grid = sorted(set(int(g) for g in grid))
    require(len(grid) >= 1 and grid[0] >= 1, "grid must contain positive iteration counts")
    A_valid = as_matrix(A_valid, "A_valid")
    y_valid = as_labels(y_valid)

    snapshots: dict[int, tuple[list[int], np.ndarray]] = {}
    grid_set = set(grid)

    def snap(k, sel, coef):
        if k in grid_set:
            snapshots[k] = (list(sel), coef)

    run_cfg = replace(cfg, k_max=grid[-1])
    model_full, trace = fcg_fit(A_train, y_train, run_cfg, callback=snap)

    errors: list[float] = []
    best_k = grid[0]
    best_err = np.inf
    best_state: tuple[list[int], np.ndarray] | None = None
    for k in grid:
        sel, coef = snapshots.get(k, (model_full.selected, model_full.coefficients))
        margins = A_valid[:, sel] @ coef if sel else np.zeros(A_valid.shape[0])
        err = float(np.mean(classify(margins) != y_valid))
        errors.append(err)
        if err < best_err:
            best_err = err
            best_k = k
            best_state = (sel, coef)

    sel, coef = best_state
    model = BoostModel(
        selected=list(sel),
        coefficients=np.asarray(coef, dtype=float),
        n_atoms=model_full.n_atoms,
        k=min(best_k, model_full.k),
        dictionary_id=model_full.dictionary_id,
    )
    return ValidationResult(model=model, k=best_k, grid=grid, errors=errors, trace=trace)


def _exact_line_search(loss, y, predictions, g_col, tol=1e-10, max_expand=200):
    """Minimize beta -> risk(predictions + beta * g) by bisection on the derivative.

    The derivative of the 1-d objective is nondecreasing by convexity; expand
    a bracket with opposite derivative signs, then bisect to width ``tol``.
    """
    m = y.size

    def deriv(beta):
        margins = y * (predictions + beta * g_col)
        return float(np.sum(loss.derivative(margins) * y * g_col)) / m

    lo, hi = -1.0, 1.0
    expansions = 0
    while deriv(lo) > 0:
        lo *= 2.0
        expansions += 1
        if expansions > max_expand:
            raise RuntimeError("line search failed to bracket a minimizer (left)")
    expansions = 0
    while deriv(hi) < 0:
        hi *= 2.0
        expansions += 1
        if expansions > max_expand:
            raise RuntimeError("line search failed to bracket a minimizer (right)")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if deriv(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def baseline_fit(A, y, scheme: str, k_max: int, loss: str = "squared_hinge",
                 nu: float = 0.1, eps: float = 0.01, selection_rule: str = "absolute",
                 stall_tol: float = 1e-12, callback=None):
    """Stagewise boosting baselines that only adjust the newest atom.

    ``orig`` takes the exact 1-d line-search step, ``shrinkage`` scales that
    step by ``nu``, and ``epsilon`` moves a fixed ``eps`` in the descent
    direction.  Atoms may be selected repeatedly; the returned model records
    distinct atoms in first-use order with their accumulated coefficients.
    ``callback(k, atom, beta_full)`` sees the dense coefficient vector after
    each step.  Returns ``(model, trace)``.
    """
    A = as_matrix(A, "A")
    y = as_labels(y)
    require(A.shape[0] == y.size, f"A has {A.shape[0]} rows but y has length {y.size}")
    require(scheme in BASELINE_SCHEMES, f"scheme must be one of {BASELINE_SCHEMES}, got {scheme!r}")
    require(
        selection_rule in SELECTION_RULES,
        f"selection_rule must be one of {SELECTION_RULES}, got {selection_rule!r}",
    )
    require(k_max >= 1, f"k_max must be at least 1, got {k_max}")
    loss = get_loss(loss)

    m, n = A.shape
    beta = np.zeros(n)
    predictions = np.zeros(m)
    order: list[int] = []
    seen: set[int] = set()
    trace = TrainTrace()
    start = time.perf_counter()

    for k in range(1, k_max + 1):
        grad = risk_gradient(loss, predictions, y)
        corr = atom_correlations(A, grad)
        score = np.abs(corr) if selection_rule == "absolute" else corr
        j = int(np.argmax(score))
        best = float(score[j])
        if best <= stall_tol:
            break

        col = A[:, j]
        if scheme == "epsilon":
            step = eps * float(np.sign(corr[j]))
        else:
            step = _exact_line_search(loss, y, predictions, col)
            if scheme == "shrinkage":
                step *= nu
        beta[j] += step
        predictions = predictions + step * col
        if j not in seen:
            seen.add(j)
            order.append(j)

        trace.rows.append(
            TraceRow(
                k=k,
                atom=j,
                risk=empirical_risk(loss, y * predictions),
                max_corr=best,
                solver_iters=0,
                seconds=time.perf_counter() - start,
            )
        )
        if callback is not None:
            callback(k, j, beta)

    model = BoostModel(
        selected=list(order),
        coefficients=beta[order].copy() if order else np.zeros(0),
        n_atoms=n,
        k=len(trace.rows),
    )
    return model, trace

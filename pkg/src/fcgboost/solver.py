"""Solvers for the refit subproblem min_u (1/m) sum_i (1 - y_i (A u)_i)_+^2.

The primary solver is ADMM on the split formulation

    minimize (1/m) sum_i (1 - y_i v_i)_+^2   subject to  v = A u,

with augmented Lagrangian L(u, v, w) = f(v) + <w, v - Au> + (gamma/2)||v - Au||^2.
One iteration performs

    u <- (gamma A^T A + alpha I)^{-1} (A^T (gamma v + w) + alpha u)
    v_i <- argmin (1 - y_i v_i)_+^2 + (m gamma / 2)(v_i - c_i)^2,
           c = A u - w / gamma   (closed form, see losses.prox_squared_hinge)
    w <- w + gamma (v - A u)

The u-update is a proximal linear solve whose SPD matrix is fixed for the whole
solve, so its Cholesky factorization is computed once and reused.  Plain
full-gradient descent on the same objective is provided as a baseline; its
automatic step is 1/L with L = (2/m) lambda_max(A^T A) estimated by power
iteration.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from ._validation import as_labels, as_matrix, require
from .losses import prox_squared_hinge

__all__ = [
    "AdmmConfig",
    "GdConfig",
    "AdmmState",
    "SolveTrace",
    "SolverNumericalError",
    "NormalEquationsFactor",
    "cache_factorization",
    "factorization_from_gram",
    "squared_hinge_objective",
    "admm_solve",
    "gd_solve",
    "REFERENCE_ADMM",
]


class SolverNumericalError(RuntimeError):
    """Raised when a solve produces non-finite values; carries the iteration."""

    def __init__(self, message: str, iteration: int):
        super().__init__(message)
        self.iteration = iteration


@dataclass(frozen=True)
class AdmmConfig:
    """ADMM parameters.

    ``tol = 0`` (the default) runs exactly ``max_iter`` iterations; a positive
    tolerance additionally stops once both the primal residual ||v - Au|| and
    the coefficient change ||u - u_prev|| fall below it.
    """

    gamma: float = 1.0
    alpha: float = 1.0
    max_iter: int = 100
    tol: float = 0.0

    def __post_init__(self):
        require(self.gamma > 0, f"gamma must be positive, got {self.gamma}")
        require(self.alpha > 0, f"alpha must be positive, got {self.alpha}")
        require(self.max_iter >= 1, f"max_iter must be at least 1, got {self.max_iter}")
        require(self.tol >= 0, f"tol must be nonnegative, got {self.tol}")


# High-accuracy mode for reference solves and optimality-sensitive checks.
REFERENCE_ADMM = AdmmConfig(tol=1e-10, max_iter=100_000)


@dataclass(frozen=True)
class GdConfig:
    """Gradient-descent parameters.

    ``step="auto"`` uses 1/L.  A positive ``tol`` stops early once the gradient
    sup-norm falls below it; the default runs all ``max_iter`` iterations.
    """

    max_iter: int = 100
    step: float | str = "auto"
    tol: float = 0.0

    def __post_init__(self):
        require(self.max_iter >= 1, f"max_iter must be at least 1, got {self.max_iter}")
        if self.step != "auto":
            require(float(self.step) > 0, f"step must be positive, got {self.step}")
        require(self.tol >= 0, f"tol must be nonnegative, got {self.tol}")


@dataclass
class AdmmState:
    """Primal coefficients u, auxiliary fit v, and multipliers w."""

    u: np.ndarray
    v: np.ndarray
    w: np.ndarray


@dataclass
class SolveTrace:
    """Per-iteration objective, residual, and cumulative elapsed seconds.

    ``residual`` is the primal residual ||v - Au||_2 for ADMM and the gradient
    sup-norm for gradient descent.
    """

    objective: list[float] = field(default_factory=list)
    residual: list[float] = field(default_factory=list)
    seconds: list[float] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.objective)

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("iter,objective,residual,seconds\n")
            for i, (obj, res, sec) in enumerate(
                zip(self.objective, self.residual, self.seconds), start=1
            ):
                fh.write(f"{i},{obj!r},{res!r},{sec!r}\n")


class NormalEquationsFactor:
    """Cached Cholesky factorization of (gamma A^T A + alpha I).

    The matrix is SPD for any alpha > 0, so the factorization always exists.
    Reused across every u-update of one ADMM solve; rebuilt whenever the
    column set changes.
    """

    def __init__(self, gram: np.ndarray, gamma: float, alpha: float):
        gram = np.asarray(gram, dtype=float)
        require(gram.ndim == 2 and gram.shape[0] == gram.shape[1], "gram must be square")
        system = gamma * gram + alpha * np.eye(gram.shape[0])
        self._cho = cho_factor(system, lower=True)
        self.gamma = float(gamma)
        self.alpha = float(alpha)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return cho_solve(self._cho, rhs)


def factorization_from_gram(gram, gamma: float, alpha: float) -> NormalEquationsFactor:
    """Factor (gamma * gram + alpha I) from a precomputed Gram matrix A^T A."""
    return NormalEquationsFactor(gram, gamma, alpha)


def cache_factorization(A, gamma: float, alpha: float) -> NormalEquationsFactor:
    """Factor (gamma A^T A + alpha I) for reuse across ADMM iterations."""
    A = as_matrix(A, "A")
    return NormalEquationsFactor(A.T @ A, gamma, alpha)


def squared_hinge_objective(A, y, u) -> float:
    """(1/m) sum_i (1 - y_i (A u)_i)_+^2."""
    margins = y * (A @ u)
    return float(np.mean(np.maximum(0.0, 1.0 - margins) ** 2))


def _check_problem(A, y):
    A = as_matrix(A, "A")
    y = as_labels(y)
    require(A.shape[0] == y.size, f"A has {A.shape[0]} rows but y has length {y.size}")
    require(A.shape[1] >= 1, "A must have at least one column")
    return A, y


def admm_solve(A, y, cfg: AdmmConfig = AdmmConfig(), init: AdmmState | None = None,
               factor: NormalEquationsFactor | None = None):
    """Run ADMM and return ``(u, trace)``.

    The default start is (u, v, w) = (0, y, 0); w = 0 lies in the null space
    of A^T as the multiplier initialization requires.  A warm ``init`` may be
    supplied instead, and a prebuilt ``factor`` skips the Gram computation.
    """
    A, y = _check_problem(A, y)
    m, s = A.shape
    if factor is None:
        factor = cache_factorization(A, cfg.gamma, cfg.alpha)
    else:
        require(
            factor.gamma == cfg.gamma and factor.alpha == cfg.alpha,
            "factorization was built with different gamma/alpha",
        )
    if init is None:
        u = np.zeros(s)
        v = y.copy()
        w = np.zeros(m)
    else:
        u = np.asarray(init.u, dtype=float).copy()
        v = np.asarray(init.v, dtype=float).copy()
        w = np.asarray(init.w, dtype=float).copy()
        require(u.size == s and v.size == m and w.size == m, "init has wrong shapes")

    gamma = cfg.gamma
    prox_gamma = m * gamma
    At = A.T
    trace = SolveTrace()
    start = time.perf_counter()
    for it in range(1, cfg.max_iter + 1):
        u_prev = u
        u = factor.solve(At @ (gamma * v + w) + cfg.alpha * u_prev)
        Au = A @ u
        v = prox_squared_hinge(y, Au - w / gamma, prox_gamma)
        w = w + gamma * (v - Au)

        obj = float(np.mean(np.maximum(0.0, 1.0 - y * Au) ** 2))
        resid = float(np.linalg.norm(v - Au))
        if not (np.isfinite(obj) and np.isfinite(resid)):
            raise SolverNumericalError(f"non-finite ADMM iterate at iteration {it}", it)
        trace.objective.append(obj)
        trace.residual.append(resid)
        trace.seconds.append(time.perf_counter() - start)
        if cfg.tol > 0 and resid <= cfg.tol:
            if float(np.linalg.norm(u - u_prev)) <= cfg.tol:
                break
    return u, trace


def _sup_eigenvalue(gram: np.ndarray, iters: int = 20) -> float:
    """Largest eigenvalue of an SPD matrix by deterministic power iteration."""
    s = gram.shape[0]
    v = np.ones(s) / np.sqrt(s)
    lam = 0.0
    for _ in range(iters):
        z = gram @ v
        norm = float(np.linalg.norm(z))
        if norm == 0.0:
            return 0.0
        v = z / norm
        lam = float(v @ (gram @ v))
    return lam


def gd_solve(A, y, cfg: GdConfig):
    """Full-gradient descent from u = 0; returns ``(u, trace)``.

    With the automatic 1/L step the objective is nonincreasing.  The recorded
    residual is the gradient sup-norm.
    """
    A, y = _check_problem(A, y)
    m, s = A.shape
    if cfg.step == "auto":
        lam = _sup_eigenvalue(A.T @ A)
        lipschitz = 2.0 * lam / m
        step = 1.0 / lipschitz if lipschitz > 0 else 1.0
    else:
        step = float(cfg.step)

    u = np.zeros(s)
    Au = np.zeros(m)
    trace = SolveTrace()
    start = time.perf_counter()
    for it in range(1, cfg.max_iter + 1):
        slack = np.maximum(0.0, 1.0 - y * Au)
        grad = A.T @ ((-2.0 / m) * slack * y)
        u = u - step * grad
        Au = A @ u

        obj = float(np.mean(np.maximum(0.0, 1.0 - y * Au) ** 2))
        gnorm = float(np.abs(grad).max())
        if not np.isfinite(obj):
            raise SolverNumericalError(f"non-finite GD iterate at iteration {it}", it)
        trace.objective.append(obj)
        trace.residual.append(gnorm)
        trace.seconds.append(time.perf_counter() - start)
        if cfg.tol > 0 and gnorm <= cfg.tol:
            break
    return u, trace

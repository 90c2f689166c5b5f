"""Margin losses for binary classification and the squared-hinge proximal map.

Every loss is a convex function phi of the margin t = y * f(x).  The squared
hinge phi(t) = max(0, 1 - t)^2 is the primary loss: it is differentiable
everywhere (the derivative is continuous at t = 1) and its scalar proximal
subproblem has a closed-form solution, which is what makes the ADMM refit in
:mod:`fcgboost.solver` cheap.
"""

from __future__ import annotations

import numpy as np

from ._validation import check_lengths, require

__all__ = [
    "MarginLoss",
    "SquaredHinge",
    "Square",
    "Hinge",
    "CubedHinge",
    "LOSSES",
    "get_loss",
    "empirical_risk",
    "risk_gradient",
    "prox_squared_hinge",
]


def _finite(t, name: str = "t") -> np.ndarray:
    arr = np.asarray(t, dtype=float)
    require(bool(np.all(np.isfinite(arr))), f"{name} must be finite")
    return arr


def _like(result: np.ndarray, template: np.ndarray):
    return float(result) if template.ndim == 0 else result


class MarginLoss:
    """Base class: a nonnegative convex loss of the margin."""

    name: str = ""

    def value(self, t):
        """phi(t); accepts a scalar or an ndarray of margins."""
        raise NotImplementedError

    def derivative(self, t):
        """phi'(t) (a subgradient selection where phi is not differentiable)."""
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"


class SquaredHinge(MarginLoss):
    """phi(t) = max(0, 1 - t)^2 with phi'(t) = -2 (1 - t)_+."""

    name = "squared_hinge"

    def value(self, t):
        arr = _finite(t)
        return _like(np.maximum(0.0, 1.0 - arr) ** 2, arr)

    def derivative(self, t):
        arr = _finite(t)
        return _like(-2.0 * np.maximum(0.0, 1.0 - arr), arr)


class Square(MarginLoss):
    """phi(t) = (1 - t)^2 with phi'(t) = -2 (1 - t)."""

    name = "square"

    def value(self, t):
        arr = _finite(t)
        return _like((1.0 - arr) ** 2, arr)

    def derivative(self, t):
        arr = _finite(t)
        return _like(-2.0 * (1.0 - arr), arr)


class Hinge(MarginLoss):
    """phi(t) = (1 - t)_+.

    The subgradient at the kink t = 1 is taken as 0, matching the limit from
    the inactive region so that satisfied margins never contribute.
    """

    name = "hinge"

    def value(self, t):
        arr = _finite(t)
        return _like(np.maximum(0.0, 1.0 - arr), arr)

    def derivative(self, t):
        arr = _finite(t)
        return _like(np.where(arr < 1.0, -1.0, 0.0), arr)


class CubedHinge(MarginLoss):
    """phi(t) = (1 - t)_+^3 with phi'(t) = -3 (1 - t)_+^2."""

    name = "cubed_hinge"

    def value(self, t):
        arr = _finite(t)
        return _like(np.maximum(0.0, 1.0 - arr) ** 3, arr)

    def derivative(self, t):
        arr = _finite(t)
        return _like(-3.0 * np.maximum(0.0, 1.0 - arr) ** 2, arr)


LOSSES: dict[str, MarginLoss] = {
    loss.name: loss for loss in (SquaredHinge(), Square(), Hinge(), CubedHinge())
}


def get_loss(kind) -> MarginLoss:
    """Resolve a loss name (or pass through a ``MarginLoss`` instance)."""
    if isinstance(kind, MarginLoss):
        return kind
    try:
        return LOSSES[kind]
    except KeyError:
        raise ValueError(f"unknown loss {kind!r}; expected one of {sorted(LOSSES)}") from None


def empirical_risk(loss, margins) -> float:
    """Average loss (1/m) sum_i phi(margin_i) over a nonempty margin vector."""
    loss = get_loss(loss)
    arr = _finite(margins, "margins")
    require(arr.size > 0, "margins must be nonempty")
    return float(np.mean(loss.value(arr.ravel())))


def risk_gradient(loss, predictions, labels) -> np.ndarray:
    """Gradient of the empirical risk with respect to the predictions f(x_i).

    Component i is (1/m) * phi'(y_i f(x_i)) * y_i, so that for any function g
    the pairing grad . g(x) realizes the directional derivative of the risk.
    """
    loss = get_loss(loss)
    f = _finite(predictions, "predictions").ravel()
    y = _finite(labels, "labels").ravel()
    check_lengths(f, y, "predictions", "labels")
    return loss.derivative(y * f) * y / y.size


def prox_squared_hinge(a, b, gamma):
    """Minimizer of (max(0, 1 - a*u))^2 + (gamma/2) (u - b)^2 over u.

    Closed form: b when a = 0; (2a + gamma*b) / (2a^2 + gamma) when a != 0 and
    a*b < 1; and b when a != 0 and a*b >= 1.  The first two cases coincide at
    a = 0 and the expression is continuous across a*b = 1, so a single branch
    on a*b < 1 covers all cases.  Broadcasts over ndarray ``a`` and ``b``.
    """
    ga = float(gamma)
    require(ga > 0.0, f"gamma must be positive, got {gamma}")
    aa = _finite(a, "a")
    bb = _finite(b, "b")
    interior = (2.0 * aa + ga * bb) / (2.0 * aa * aa + ga)
    out = np.where(aa * bb < 1.0, interior, bb)
    if aa.ndim == 0 and bb.ndim == 0:
        return float(out)
    return out

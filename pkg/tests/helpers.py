"""Independent oracles shared by the test modules.

The golden-section search here is the arbiter for every closed-form proximal
claim: it only evaluates objectives, so it cannot share a bug with the
formulas under test.
"""

from __future__ import annotations

import numpy as np

INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


def golden_section_argmin(objective, lo, hi, iters: int = 120) -> np.ndarray:
    """Vectorized golden-section minimizer of a unimodal objective.

    ``lo`` and ``hi`` are arrays (or scalars) bracketing the minimizer;
    ``objective`` must accept arrays of the same shape.
    """
    lo = np.asarray(lo, dtype=float).copy()
    hi = np.asarray(hi, dtype=float).copy()
    x1 = hi - INVPHI * (hi - lo)
    x2 = lo + INVPHI * (hi - lo)
    f1 = objective(x1)
    f2 = objective(x2)
    for _ in range(iters):
        shrink_right = f1 < f2
        hi = np.where(shrink_right, x2, hi)
        lo = np.where(shrink_right, lo, x1)
        left_probe = hi - INVPHI * (hi - lo)
        right_probe = lo + INVPHI * (hi - lo)
        new_x1 = np.where(shrink_right, left_probe, x2)
        new_f1 = np.where(shrink_right, objective(left_probe), f2)
        new_x2 = np.where(shrink_right, x1, right_probe)
        new_f2 = np.where(shrink_right, f1, objective(right_probe))
        x1, x2, f1, f2 = new_x1, new_x2, new_f1, new_f2
    return (lo + hi) / 2.0


def prox_objective(u, a, b, gamma):
    """(max(0, 1 - a u))^2 + (gamma/2)(u - b)^2, broadcast over u."""
    return np.maximum(0.0, 1.0 - a * u) ** 2 + 0.5 * gamma * (u - b) ** 2


def prox_oracle(a, b, gamma, lo=-100.0, hi=100.0, iters: int = 120) -> np.ndarray:
    """Golden-section minimizer of the scalar proximal objective."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    return golden_section_argmin(
        lambda u: prox_objective(u, a, b, gamma),
        np.broadcast_to(lo, a.shape).astype(float),
        np.broadcast_to(hi, a.shape).astype(float),
        iters=iters,
    )


def random_subproblem(rng, m: int, s: int, column_scale: float = 1.0):
    """A random, generically non-separable squared-hinge subproblem.

    Columns are scaled into [-1, 1] like normalized dictionary atoms; labels
    are independent of the features so a perfect fit is out of reach for
    m sufficiently larger than s.
    """
    A = rng.uniform(-1.0, 1.0, size=(m, s)) * column_scale
    y = np.where(rng.random(m) < 0.5, 1.0, -1.0)
    return A, y

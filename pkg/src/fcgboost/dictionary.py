"""Randomized kernel dictionaries of bounded weak learners.

A dictionary is a finite set of n atoms g_j built from training inputs.  Four
families are supported:

* ``gauss``    g_j(x) = exp(-||x - c_j||^2 / (2 sigma^2)), centers c_j drawn
  uniformly with replacement from the training rows;
* ``poly``     g_j(x) = (<x, c_j> + 1)^p, centers drawn the same way;
* ``sigmoid``  g_j(x) = tanh(<w_j, x> + b_j);
* ``relu``     g_j(x) = max(0, <w_j, x> + b_j);

with w_j uniform on the unit sphere and b_j uniform on [-1, 1].  Each atom is
divided by max(1, max_i |g_j(x_i)|) taken over the generating training set, so
evaluated atoms are bounded by 1 in absolute value on that set.  Atoms whose
empirical sup-norm is below 1e-12 are resampled (an all-zero column would break
selection tie-breaking); after 100 failed attempts the build aborts.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from ._validation import as_matrix, as_vector, require

__all__ = [
    "KERNEL_KINDS",
    "GAUSS_WIDTH_GRID",
    "MAX_ATOM_RESAMPLE",
    "Dictionary",
    "build_dictionary",
    "atom_correlations",
    "save_dictionary",
    "load_dictionary",
]

KERNEL_KINDS = ("gauss", "poly", "sigmoid", "relu")

# Default width grid for cross-validating the gauss kernel.
GAUSS_WIDTH_GRID = (0.1, 0.5, 1.0, 5.0)

MAX_ATOM_RESAMPLE = 100

_DEGENERATE_SUP = 1e-12

_FORMAT_VERSION = 1


@dataclass
class Dictionary:
    """An evaluated-parameter record of n weak learners.

    ``weights`` holds one row per atom: kernel centers for gauss/poly, unit
    direction vectors for sigmoid/relu.  ``biases`` is zero for the center
    families.  Treated as immutable after construction.
    """

    kind: str
    weights: np.ndarray
    biases: np.ndarray
    normalizers: np.ndarray
    seed: int
    width: float = 0.0
    degree: int = 0

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def input_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def dictionary_id(self) -> str:
        """Stable content digest used to tie fitted models to a dictionary."""
        h = hashlib.sha256()
        h.update(f"{self.kind}|{self.seed}|{self.width!r}|{self.degree}".encode())
        for arr in (self.weights, self.biases, self.normalizers):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()[:16]

    def evaluate(self, X) -> np.ndarray:
        """Dense m x n design matrix A with A[i, j] = g_j(x_i)."""
        X = as_matrix(X)
        require(
            X.shape[1] == self.input_dim,
            f"X has {X.shape[1]} columns, dictionary expects {self.input_dim}",
        )
        raw = _raw_values(self.kind, self.weights, self.biases, self.width, self.degree, X)
        return raw / self.normalizers


def _raw_values(kind, weights, biases, width, degree, X) -> np.ndarray:
    if kind == "gauss":
        sq = (
            (X * X).sum(axis=1)[:, None]
            + (weights * weights).sum(axis=1)[None, :]
            - 2.0 * X @ weights.T
        )
        np.maximum(sq, 0.0, out=sq)
        return np.exp(-sq / (2.0 * width * width))
    if kind == "poly":
        return (X @ weights.T + 1.0) ** degree
    z = X @ weights.T + biases[None, :]
    if kind == "sigmoid":
        return np.tanh(z)
    if kind == "relu":
        return np.maximum(0.0, z)
    raise ValueError(f"unknown kernel kind {kind!r}; expected one of {KERNEL_KINDS}")


def _draw(kind, rng, X, count):
    m, d = X.shape
    if kind in ("gauss", "poly"):
        centers = X[rng.integers(0, m, size=count)]
        return centers, np.zeros(count)
    w = rng.standard_normal((count, d))
    norms = np.linalg.norm(w, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    w /= norms
    b = rng.uniform(-1.0, 1.0, size=count)
    return w, b


def build_dictionary(X, kind: str, n: int, seed: int, *, width: float | None = None,
                     degree: int | None = None) -> Dictionary:
    """Sample n atoms from training inputs X and normalize them empirically.

    Deterministic for fixed arguments.  Raises ``ValueError`` on an unknown
    kind, missing kernel parameter, or when an atom stays degenerate after
    ``MAX_ATOM_RESAMPLE`` redraws.
    """
    X = as_matrix(X)
    require(n >= 1, f"n must be at least 1, got {n}")
    require(kind in KERNEL_KINDS, f"unknown kernel kind {kind!r}; expected one of {KERNEL_KINDS}")
    if kind == "gauss":
        require(width is not None and width > 0, "gauss kernel needs width > 0")
        w_par, p_par = float(width), 0
    elif kind == "poly":
        require(degree is not None and int(degree) >= 1, "poly kernel needs integer degree >= 1")
        w_par, p_par = 0.0, int(degree)
    else:
        w_par, p_par = 0.0, 0

    rng = np.random.default_rng(seed)
    weights, biases = _draw(kind, rng, X, n)
    values = _raw_values(kind, weights, biases, w_par, p_par, X)
    sup = np.abs(values).max(axis=0)

    for j in np.flatnonzero(sup < _DEGENERATE_SUP):
        for _ in range(MAX_ATOM_RESAMPLE):
            w_j, b_j = _draw(kind, rng, X, 1)
            col = _raw_values(kind, w_j, b_j, w_par, p_par, X)
            s = float(np.abs(col).max())
            if s >= _DEGENERATE_SUP:
                weights[j] = w_j[0]
                biases[j] = b_j[0]
                sup[j] = s
                break
        else:
            raise ValueError(
                f"atom {j} remained degenerate after {MAX_ATOM_RESAMPLE} redraws"
            )

    normalizers = np.maximum(1.0, sup)
    return Dictionary(
        kind=kind,
        weights=weights,
        biases=biases,
        normalizers=normalizers,
        seed=int(seed),
        width=w_par,
        degree=p_par,
    )


def atom_correlations(A, grad) -> np.ndarray:
    """Negated pairing -sum_i grad_i * A[i, j] for every atom j.

    With ``grad`` the risk gradient at the current predictions, component j is
    the decrease rate of the risk along atom j; the greedy step picks its
    maximizer.
    """
    A = as_matrix(A, "A")
    g = as_vector(grad, "grad")
    require(A.shape[0] == g.size, f"grad has length {g.size}, A has {A.shape[0]} rows")
    return -(g @ A)


def save_dictionary(dictionary: Dictionary, path) -> None:
    """Write a versioned binary record of the dictionary to ``path``."""
    with open(path, "wb") as fh:
        np.savez(
            fh,
            format_version=_FORMAT_VERSION,
            kind=dictionary.kind,
            seed=dictionary.seed,
            width=dictionary.width,
            degree=dictionary.degree,
            weights=dictionary.weights,
            biases=dictionary.biases,
            normalizers=dictionary.normalizers,
        )


def load_dictionary(path) -> Dictionary:
    """Inverse of :func:`save_dictionary`."""
    with np.load(path, allow_pickle=False) as rec:
        version = int(rec["format_version"])
        require(version == _FORMAT_VERSION, f"unsupported dictionary format version {version}")
        return Dictionary(
            kind=str(rec["kind"]),
            weights=rec["weights"],
            biases=rec["biases"],
            normalizers=rec["normalizers"],
            seed=int(rec["seed"]),
            width=float(rec["width"]),
            degree=int(rec["degree"]),
        )

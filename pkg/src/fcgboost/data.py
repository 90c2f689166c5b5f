"""Synthetic benchmark data, CSV ingestion, splits, and error metrics.

The synthetic task draws inputs uniformly on the unit square and labels a
point +1 exactly when it lies on or above the decision curve ``zeta``.  Two
label-noise mechanisms are available: ``uniform`` flips every label
independently with a fixed probability, and ``outlier`` flips only points far
from the decision curve (vertical distance above ``tol``) with probability
``ratio``, planting confidently wrong labels deep inside each class region.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ._validation import as_labels, as_matrix, check_lengths, require

__all__ = [
    "Dataset",
    "zeta",
    "bayes_labels",
    "parse_noise",
    "format_noise",
    "gen_synthetic",
    "split",
    "test_error",
    "accuracy",
    "load_csv",
    "save_csv",
]


@dataclass
class Dataset:
    """Feature matrix, labels in {-1, +1}, and a provenance record."""

    X: np.ndarray
    y: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = as_matrix(self.X)
        self.y = as_labels(self.y)
        check_lengths(self.X, self.y, "X", "y")

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]


def zeta(t):
    """Decision curve ((1 - 2t)_+^5 (32 t^2 + 10 t + 1) + 1) / 2 on [0, 1]."""
    arr = np.asarray(t, dtype=float)
    require(bool(np.all((arr >= 0.0) & (arr <= 1.0))), "t must lie in [0, 1]")
    out = (np.maximum(0.0, 1.0 - 2.0 * arr) ** 5 * (32.0 * arr**2 + 10.0 * arr + 1.0) + 1.0) / 2.0
    return float(out) if arr.ndim == 0 else out


def bayes_labels(X) -> np.ndarray:
    """Noise-free labels: +1 on or above the curve, -1 below."""
    X = as_matrix(X)
    require(X.shape[1] == 2, "synthetic inputs are 2-dimensional")
    return np.where(X[:, 1] >= zeta(X[:, 0]), 1.0, -1.0)


def parse_noise(text: str):
    """Parse ``"none"``, ``"uniform:LEVEL"``, or ``"outlier:TOL,RATIO"``."""
    text = text.strip()
    if text in ("", "none"):
        return None
    kind, _, rest = text.partition(":")
    if kind == "uniform":
        return ("uniform", float(rest))
    if kind == "outlier":
        tol_s, _, ratio_s = rest.partition(",")
        return ("outlier", float(tol_s), float(ratio_s))
    raise ValueError(f"unknown noise spec {text!r}")


def format_noise(noise) -> str:
    if noise is None:
        return "none"
    if noise[0] == "uniform":
        return f"uniform:{noise[1]:g}"
    return f"outlier:{noise[1]:g},{noise[2]:g}"


def _validate_noise(noise):
    if noise is None:
        return
    require(isinstance(noise, tuple) and len(noise) >= 2, f"malformed noise spec {noise!r}")
    if noise[0] == "uniform":
        level = noise[1]
        require(0.0 <= level < 1.0, f"uniform noise level must be in [0, 1), got {level}")
    elif noise[0] == "outlier":
        require(len(noise) == 3, f"outlier noise needs (tol, ratio), got {noise!r}")
        tol, ratio = noise[1], noise[2]
        require(tol > 0.0, f"outlier tol must be positive, got {tol}")
        require(0.0 <= ratio < 1.0, f"outlier ratio must be in [0, 1), got {ratio}")
    else:
        raise ValueError(f"unknown noise kind {noise[0]!r}")


def gen_synthetic(m: int, noise=None, seed: int = 0) -> Dataset:
    """Draw m points uniformly on [0, 1]^2, label by ``zeta``, apply noise.

    ``noise`` is ``None``, ``("uniform", level)``, or ``("outlier", tol,
    ratio)``; the realized flip fraction lands in ``meta["flip_fraction"]``.
    """
    require(m >= 1, f"m must be at least 1, got {m}")
    _validate_noise(noise)
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(m, 2))
    y = bayes_labels(X)

    flipped = 0
    if noise is not None:
        if noise[0] == "uniform":
            level = noise[1]
            flips = rng.random(m) < level if level > 0 else np.zeros(m, dtype=bool)
        else:
            _, tol, ratio = noise
            far = np.abs(X[:, 1] - zeta(X[:, 0])) > tol
            flips = far & (rng.random(m) < ratio)
        y = np.where(flips, -y, y)
        flipped = int(flips.sum())

    meta = {
        "source": "synthetic",
        "m": m,
        "seed": int(seed),
        "noise": format_noise(noise),
        "flip_fraction": flipped / m,
    }
    return Dataset(X=X, y=y, meta=meta)


def split(data: Dataset, fractions=(0.5, 0.25, 0.25), seed: int = 0):
    """Deterministic shuffled partition into (train, valid, test).

    Sizes are floor(m * fraction) for the two trailing parts with the
    remainder going to train.  Every part must be nonempty.
    """
    require(len(fractions) == 3, "fractions must have three entries")
    require(abs(sum(fractions) - 1.0) <= 1e-9, f"fractions must sum to 1, got {sum(fractions)}")
    m = data.m
    n_valid = int(np.floor(m * fractions[1]))
    n_test = int(np.floor(m * fractions[2]))
    n_train = m - n_valid - n_test
    require(
        n_train > 0 and n_valid > 0 and n_test > 0,
        f"split of m={m} by {fractions} leaves an empty part",
    )
    perm = np.random.default_rng(seed).permutation(m)
    parts = (
        perm[:n_train],
        perm[n_train : n_train + n_valid],
        perm[n_train + n_valid :],
    )
    names = ("train", "valid", "test")
    out = []
    for name, idx in zip(names, parts):
        meta = dict(data.meta)
        meta.update({"part": name, "split_seed": int(seed), "parent_m": m})
        out.append(Dataset(X=data.X[idx].copy(), y=data.y[idx].copy(), meta=meta))
    return tuple(out)


def test_error(predicted, truth) -> float:
    """Fraction of disagreeing labels."""
    p = as_labels(predicted, "predicted")
    t = as_labels(truth, "truth")
    check_lengths(p, t, "predicted", "truth")
    return float(np.mean(p != t))


def accuracy(predicted, truth) -> float:
    """Fraction of matching labels, 1 - test_error."""
    return 1.0 - test_error(predicted, truth)


def _detect_header(first_fields: list[str]) -> bool:
    for tok in first_fields:
        try:
            float(tok)
        except ValueError:
            return True
    return False


def _resolve_column(col, header: list[str] | None, width: int, what: str) -> int:
    if isinstance(col, str):
        require(header is not None, f"{what} given by name {col!r} but the file has no header")
        require(col in header, f"{what} {col!r} not found in header {header}")
        return header.index(col)
    idx = int(col)
    if idx < 0:
        idx += width
    require(0 <= idx < width, f"{what} index {col} out of range for {width} columns")
    return idx


def load_csv(path, label_col=-1, positive_labels=(1,), feature_cols=None,
             scale: bool = True) -> Dataset:
    """Read a numeric CSV into a Dataset.

    A header row is detected automatically.  Rows with missing or unparseable
    fields are dropped and counted in ``meta["rows_dropped"]``.  The label
    maps to +1 when its value is in ``positive_labels`` and to -1 otherwise.
    With ``scale=True`` every feature column is min-max scaled to [0, 1]
    (constant columns become 0 with a warning); the offsets and ranges are
    recorded in ``meta`` so a fitted model can rescale future files the same
    way.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    require(len(lines) > 0, f"{path} is empty")

    first = [tok.strip() for tok in lines[0].split(",")]
    header = first if _detect_header(first) else None
    body = lines[1:] if header is not None else lines
    width = len(header) if header is not None else len(first)

    rows = []
    dropped = 0
    for ln in body:
        fields = [tok.strip() for tok in ln.split(",")]
        if len(fields) != width or any(tok == "" for tok in fields):
            dropped += 1
            continue
        try:
            rows.append([float(tok) for tok in fields])
        except ValueError:
            dropped += 1
    require(len(rows) > 0, f"{path} has no usable rows ({dropped} dropped)")
    if dropped:
        warnings.warn(f"dropped {dropped} incomplete row(s) from {path}", stacklevel=2)
    table = np.asarray(rows, dtype=float)

    li = _resolve_column(label_col, header, width, "label column")
    if feature_cols is None:
        fi = [j for j in range(width) if j != li]
    else:
        fi = [_resolve_column(c, header, width, "feature column") for c in feature_cols]
        require(li not in fi, "label column cannot also be a feature")
    require(len(fi) > 0, "no feature columns")

    X = table[:, fi]
    positive = {float(v) for v in positive_labels}
    y = np.where(np.isin(table[:, li], sorted(positive)), 1.0, -1.0)

    meta = {
        "source": str(path),
        "rows_dropped": dropped,
        "label_col": li,
        "feature_cols": fi,
        "positive_labels": sorted(positive),
    }
    if scale:
        mins = X.min(axis=0)
        ranges = X.max(axis=0) - mins
        constant = ranges == 0.0
        if constant.any():
            warnings.warn(
                f"{int(constant.sum())} constant feature column(s) scaled to 0",
                stacklevel=2,
            )
        safe = np.where(constant, 1.0, ranges)
        X = (X - mins) / safe
        meta["scale_min"] = mins
        meta["scale_range"] = safe
    return Dataset(X=X, y=y, meta=meta)


def save_csv(data: Dataset, path) -> None:
    """Write features plus a trailing label column, with a ``.meta`` sidecar."""
    with open(path, "w", encoding="utf-8") as fh:
        names = [f"x{j}" for j in range(data.dim)]
        fh.write(",".join(names + ["label"]) + "\n")
        for xi, yi in zip(data.X, data.y):
            fields = [repr(float(v)) for v in xi] + [f"{int(yi)}"]
            fh.write(",".join(fields) + "\n")
    with open(f"{path}.meta", "w", encoding="utf-8") as fh:
        for key in sorted(data.meta):
            fh.write(f"{key}={data.meta[key]}\n")

"""Versioned persistence for fitted models.

A model file is a single ``.npz`` record holding the boosting state, the full
dictionary that produced it, the feature-scaling applied at training time, and
a JSON blob of free-form provenance (config digest, chosen hyperparameters).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ._validation import require
from .boosting import BoostModel
from .dictionary import Dictionary

__all__ = ["ModelBundle", "save_model", "load_model"]

_FORMAT_VERSION = 1


@dataclass
class ModelBundle:
    """A fitted model together with everything needed to score new data."""

    model: BoostModel
    dictionary: Dictionary
    scale_min: np.ndarray | None
    scale_range: np.ndarray | None
    extra: dict

    def margins(self, X_raw) -> np.ndarray:
        """Margins on raw (unscaled) inputs, applying the stored scaling."""
        X = np.asarray(X_raw, dtype=float)
        if self.scale_min is not None:
            X = (X - self.scale_min) / self.scale_range
        A = self.dictionary.evaluate(X)
        if not self.model.selected:
            return np.zeros(A.shape[0])
        return A[:, self.model.selected] @ self.model.coefficients


def save_model(path, model: BoostModel, dictionary: Dictionary,
               scale_min=None, scale_range=None, extra: dict | None = None) -> None:
    has_scale = scale_min is not None
    with open(path, "wb") as fh:
        np.savez(
            fh,
            format_version=_FORMAT_VERSION,
            selected=np.asarray(model.selected, dtype=np.int64),
            coefficients=np.asarray(model.coefficients, dtype=float),
            n_atoms=model.n_atoms,
            k=model.k,
            dictionary_id=model.dictionary_id,
            dict_kind=dictionary.kind,
            dict_seed=dictionary.seed,
            dict_width=dictionary.width,
            dict_degree=dictionary.degree,
            dict_weights=dictionary.weights,
            dict_biases=dictionary.biases,
            dict_normalizers=dictionary.normalizers,
            has_scale=has_scale,
            scale_min=np.asarray(scale_min, dtype=float) if has_scale else np.zeros(0),
            scale_range=np.asarray(scale_range, dtype=float) if has_scale else np.zeros(0),
            extra=json.dumps(extra or {}, sort_keys=True),
        )


def load_model(path) -> ModelBundle:
    with np.load(path, allow_pickle=False) as rec:
        version = int(rec["format_version"])
        require(version == _FORMAT_VERSION, f"unsupported model format version {version}")
        dictionary = Dictionary(
            kind=str(rec["dict_kind"]),
            weights=rec["dict_weights"],
            biases=rec["dict_biases"],
            normalizers=rec["dict_normalizers"],
            seed=int(rec["dict_seed"]),
            width=float(rec["dict_width"]),
            degree=int(rec["dict_degree"]),
        )
        model = BoostModel(
            selected=[int(j) for j in rec["selected"]],
            coefficients=rec["coefficients"],
            n_atoms=int(rec["n_atoms"]),
            k=int(rec["k"]),
            dictionary_id=str(rec["dictionary_id"]),
        )
        has_scale = bool(rec["has_scale"])
        return ModelBundle(
            model=model,
            dictionary=dictionary,
            scale_min=rec["scale_min"] if has_scale else None,
            scale_range=rec["scale_range"] if has_scale else None,
            extra=json.loads(str(rec["extra"])),
        )

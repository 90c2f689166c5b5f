import numpy as np
import pytest

from fcgboost.boosting import BoostModel, FitConfig, fcg_fit, predict_margin
from fcgboost.data import gen_synthetic
from fcgboost.dictionary import build_dictionary
from fcgboost.serialize import load_model, save_model


@pytest.fixture
def fitted(tmp_path):
    data = gen_synthetic(120, noise=("uniform", 0.2), seed=0)
    d = build_dictionary(data.X, "gauss", 40, seed=1, width=0.5)
    A = d.evaluate(data.X)
    model, _ = fcg_fit(A, data.y, FitConfig(k_max=5))
    model.dictionary_id = d.dictionary_id
    return data, d, A, model


def test_model_roundtrip_preserves_margins(fitted, tmp_path):
    data, d, A, model = fitted
    path = tmp_path / "model.npz"
    save_model(path, model, d, extra={"config_digest": "abc123", "loss": "squared_hinge"})
    bundle = load_model(path)
    assert bundle.model.selected == model.selected
    assert bundle.model.k == model.k
    assert bundle.model.dictionary_id == d.dictionary_id
    assert bundle.extra["config_digest"] == "abc123"
    np.testing.assert_array_equal(bundle.margins(data.X), predict_margin(model, A))


def test_model_roundtrip_applies_stored_scaling(fitted, tmp_path):
    data, d, A, model = fitted
    path = tmp_path / "scaled.npz"
    mins = np.array([10.0, -5.0])
    ranges = np.array([2.0, 4.0])
    save_model(path, model, d, scale_min=mins, scale_range=ranges)
    bundle = load_model(path)
    raw = data.X * ranges + mins  # undo the scaling the bundle will reapply
    np.testing.assert_allclose(bundle.margins(raw), predict_margin(model, A), atol=1e-12)


def test_empty_model_scores_zero_margins(fitted, tmp_path):
    data, d, _, _ = fitted
    empty = BoostModel(selected=[], coefficients=np.zeros(0), n_atoms=d.n, k=0)
    path = tmp_path / "empty.npz"
    save_model(path, empty, d)
    bundle = load_model(path)
    np.testing.assert_array_equal(bundle.margins(data.X), np.zeros(data.m))

import numpy as np
import pytest

import fcgboost.dictionary as dict_mod
from fcgboost.dictionary import (
    GAUSS_WIDTH_GRID,
    Dictionary,
    atom_correlations,
    build_dictionary,
    load_dictionary,
    save_dictionary,
)


@pytest.fixture
def X_train():
    return np.random.default_rng(42).uniform(size=(60, 2))


def _build(X, kind, n=25, seed=7):
    return build_dictionary(
        X, kind, n, seed,
        width=0.5 if kind == "gauss" else None,
        degree=3 if kind == "poly" else None,
    )


@pytest.mark.parametrize("kind", ["gauss", "poly", "sigmoid", "relu"])
def test_build_is_deterministic(X_train, kind):
    d1 = _build(X_train, kind)
    d2 = _build(X_train, kind)
    np.testing.assert_array_equal(d1.weights, d2.weights)
    np.testing.assert_array_equal(d1.biases, d2.biases)
    np.testing.assert_array_equal(d1.normalizers, d2.normalizers)
    assert d1.dictionary_id == d2.dictionary_id


@pytest.mark.parametrize("kind", ["gauss", "poly", "sigmoid", "relu"])
def test_training_values_bounded_by_one(X_train, kind):
    d = _build(X_train, kind, n=40)
    A = d.evaluate(X_train)
    assert A.shape == (60, 40)
    assert np.abs(A).max() <= 1.0 + 1e-12
    # no degenerate atoms survive the build
    assert np.abs(A).max(axis=0).min() > 0


def test_gauss_atom_is_one_at_its_center():
    X = np.array([[0.3, 0.6]])
    d = build_dictionary(X, "gauss", 1, seed=0, width=0.1)
    np.testing.assert_allclose(d.evaluate(X), [[1.0]])
    assert d.normalizers[0] == 1.0  # sup-norm 1 means normalization is a no-op


def test_evaluate_is_deterministic(X_train):
    d = _build(X_train, "gauss")
    A1 = d.evaluate(X_train)
    A2 = d.evaluate(X_train)
    np.testing.assert_array_equal(A1, A2)


def test_evaluate_dimension_mismatch(X_train):
    d = _build(X_train, "gauss")
    with pytest.raises(ValueError, match="columns"):
        d.evaluate(np.zeros((5, 3)))


def test_build_rejects_bad_arguments(X_train):
    with pytest.raises(ValueError):
        build_dictionary(X_train, "gauss", 0, seed=0, width=0.5)
    with pytest.raises(ValueError):
        build_dictionary(np.zeros((0, 2)), "gauss", 5, seed=0, width=0.5)
    with pytest.raises(ValueError, match="unknown kernel"):
        build_dictionary(X_train, "tree", 5, seed=0)
    with pytest.raises(ValueError, match="width"):
        build_dictionary(X_train, "gauss", 5, seed=0)
    with pytest.raises(ValueError, match="degree"):
        build_dictionary(X_train, "poly", 5, seed=0, degree=0)


def test_relu_resampling_replaces_dead_atoms():
    # a single training point at the origin kills every atom with bias <= 0,
    # so roughly half of the raw draws must be resampled
    X = np.zeros((1, 2))
    d = build_dictionary(X, "relu", 50, seed=3)
    A = d.evaluate(X)
    assert np.abs(A).max(axis=0).min() >= 1e-12
    d2 = build_dictionary(X, "relu", 50, seed=3)
    np.testing.assert_array_equal(d.weights, d2.weights)


def test_build_fails_when_atoms_stay_degenerate(X_train, monkeypatch):
    monkeypatch.setattr(
        dict_mod, "_raw_values", lambda *args: np.zeros((X_train.shape[0], 1))
    )
    with pytest.raises(ValueError, match="degenerate"):
        build_dictionary(X_train, "relu", 1, seed=0)


def test_atom_correlations_matches_double_loop():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(20, 10))
    grad = rng.normal(size=20)
    expected = np.array([-sum(grad[i] * A[i, j] for i in range(20)) for j in range(10)])
    np.testing.assert_allclose(atom_correlations(A, grad), expected, atol=1e-12)


def test_atom_correlations_zero_gradient():
    A = np.random.default_rng(2).normal(size=(8, 4))
    np.testing.assert_array_equal(atom_correlations(A, np.zeros(8)), np.zeros(4))


def test_atom_correlations_column_equal_to_gradient():
    rng = np.random.default_rng(4)
    grad = rng.normal(size=12)
    A = np.column_stack([grad, rng.normal(size=12)])
    corr = atom_correlations(A, grad)
    assert corr[0] == pytest.approx(-float(grad @ grad), abs=1e-12)


def test_atom_correlations_length_mismatch():
    with pytest.raises(ValueError):
        atom_correlations(np.zeros((5, 2)), np.zeros(4))


def test_serialization_roundtrip(tmp_path, X_train):
    d = _build(X_train, "gauss", n=15)
    path = tmp_path / "dict.npz"
    save_dictionary(d, path)
    loaded = load_dictionary(path)
    assert loaded.kind == d.kind
    assert loaded.seed == d.seed
    assert loaded.width == d.width
    np.testing.assert_array_equal(loaded.weights, d.weights)
    np.testing.assert_array_equal(loaded.normalizers, d.normalizers)
    assert loaded.dictionary_id == d.dictionary_id
    np.testing.assert_array_equal(loaded.evaluate(X_train), d.evaluate(X_train))


def test_width_grid_constant():
    assert GAUSS_WIDTH_GRID == (0.1, 0.5, 1.0, 5.0)

import numpy as np
import pytest

from _brute import max_rel_grad_error
from brcaml.linear import DivergenceError
from brcaml.mlp import (
    BackpropConfig,
    MlpArch,
    MlpModel,
    fit_backprop,
    flatten_weights,
    forward,
    hidden_layout,
    init_mlp,
    unflatten_weights,
)

XOR_X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
XOR_Y = np.array([0.0, 1.0, 1.0, 0.0])


def test_arch_validation_and_count(oracles):
    assert MlpArch((10, 70, 1)).n_params == oracles["mlp_10_70_1_params"]
    for bad in ((3, 1), (3, 4, 2), (3, 0, 1)):
        with pytest.raises(ValueError):
            MlpArch(bad)
    with pytest.raises(ValueError):
        BackpropConfig(learning_rate=0)


def test_init_rules():
    arch = MlpArch((5, 7, 3, 1))
    a, b = init_mlp(arch, 4), init_mlp(arch, 4)
    assert np.array_equal(flatten_weights(a), flatten_weights(b))
    for (fi, fo), W, c in zip(arch.shapes, a.weights, a.biases):
        assert np.all(np.abs(W) <= np.sqrt(6 / (fi + fo)))
        assert np.all(c == 0)


def test_forward_examples():
    arch = MlpArch((2, 2, 1))
    zero = unflatten_weights(arch, np.zeros(arch.n_params))
    assert forward(zero, [3.0, -7.0]) == 0.5
    m = MlpModel(arch, [np.array([[1.0, -1.0], [2.0, 0.5]]), np.array([[1.5], [-2.0]])],
                 [np.array([0.1, -0.2]), np.array([0.3])])
    x = np.array([0.5, 1.0])
    h = np.maximum([0.5 * 1 + 1 * 2 + 0.1, 0.5 * -1 + 1 * 0.5 - 0.2], 0)  # [2.6, 0]
    expected = 1 / (1 + np.exp(-(h[0] * 1.5 + h[1] * -2.0 + 0.3)))
    assert forward(m, x) == pytest.approx(expected, abs=1e-15)


def test_relu_positive_homogeneity():
    m = init_mlp(MlpArch((3, 4, 1)), 2)
    x = np.random.default_rng(0).normal(size=(5, 3))
    c = 3.7
    scaled = MlpModel(m.arch, [m.weights[0] * c, m.weights[1] / c], [m.biases[0] * c, m.biases[1]])
    assert np.allclose(scaled.predict_proba(x), m.predict_proba(x), atol=1e-14)


def test_flatten_round_trip_and_length_check():
    m = init_mlp(MlpArch((4, 3, 2, 1)), 1)
    v = flatten_weights(m) + 0.1
    assert np.array_equal(flatten_weights(unflatten_weights(m.arch, v)), v)
    with pytest.raises(ValueError):
        unflatten_weights(m.arch, v[:-1])


@pytest.mark.parametrize("l2", [0.0, 0.3])
def test_gradient_check(l2):
    rng = np.random.default_rng(7)
    X = rng.normal(size=(8, 3))
    y = (rng.random(8) < 0.5).astype(float)
    m = init_mlp(MlpArch((3, 3, 1)), 7)
    assert max_rel_grad_error(m, X, y, l2) < 1e-4


def test_large_l2_shrinks_to_half():
    m = fit_backprop(XOR_X, XOR_Y, MlpArch((2, 4, 1)), BackpropConfig(learning_rate=0.01, epochs=2000, l2_lambda=50.0))
    assert np.all(np.abs(m.predict_proba(XOR_X) - 0.5) < 1e-2)


def test_loss_non_increasing_small_rate():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(30, 3))
    y = (X[:, 0] > 0).astype(float)
    _, hist = fit_backprop(X, y, MlpArch((3, 5, 1)), BackpropConfig(learning_rate=0.01, epochs=300), return_history=True)
    assert np.all(np.diff(hist) <= 1e-9)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_reported():
    X = np.array([[1e300, -1e300]])
    with pytest.raises(DivergenceError):
        fit_backprop(np.vstack([X, -X]), np.array([1.0, 0.0]), MlpArch((2, 3, 1)),
                     BackpropConfig(learning_rate=1e300, epochs=5))


@pytest.mark.slow
def test_xor():
    solved = 0
    for seed in range(10):
        m = fit_backprop(XOR_X, XOR_Y, MlpArch((2, 8, 1)), BackpropConfig(learning_rate=0.5, epochs=5000, seed=seed))
        solved += np.array_equal(m.predict_proba(XOR_X) >= 0.5, XOR_Y == 1)
    assert solved >= 8


def test_hidden_layouts():
    assert hidden_layout(70) == (70,)
    assert hidden_layout(3, "layers", 8) == (8, 8, 8)
    with pytest.raises(ValueError):
        hidden_layout(3, "depth")


def test_model_json(tmp_path):
    m = init_mlp(MlpArch((3, 4, 1)), 0)
    m.save(tmp_path / "m.json")
    import json

    back = MlpModel.from_dict(json.loads((tmp_path / "m.json").read_text()))
    x = np.ones((2, 3))
    assert np.array_equal(back.predict_proba(x), m.predict_proba(x))

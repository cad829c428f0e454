"""ReLU multilayer perceptron with a sigmoid output unit."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .linear import DivergenceError, sigmoid


@dataclass(frozen=True)
class MlpArch:
    layer_sizes: tuple[int, ...]

    def __post_init__(self):
        if len(self.layer_sizes) < 3:
            raise ValueError("need an input layer, at least one hidden layer, and the output")
        if self.layer_sizes[-1] != 1:
            raise ValueError("binary output layer must have size 1")
        if any(s < 1 for s in self.layer_sizes):
            raise ValueError("all layer sizes must be >= 1")

    @classmethod
    def build(cls, n_inputs: int, hidden: Sequence[int]) -> "MlpArch":
        return cls((int(n_inputs), *(int(h) for h in hidden), 1))

    @property
    def shapes(self) -> list[tuple[int, int]]:
        return list(zip(self.layer_sizes[:-1], self.layer_sizes[1:]))

    @property
    def n_params(self) -> int:
        return sum(a * b + b for a, b in self.shapes)


@dataclass(eq=False)
class MlpModel:
    arch: MlpArch
    weights: list[np.ndarray]  # each (fan_in, fan_out)
    biases: list[np.ndarray]

    def __post_init__(self):
        for (a, b), W, c in zip(self.arch.shapes, self.weights, self.biases):
            if W.shape != (a, b) or c.shape != (b,):
                raise ValueError("weight shapes do not match the architecture")

    def logits(self, X) -> np.ndarray:
        a = np.atleast_2d(np.asarray(X, dtype=float))
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            a = np.maximum(a @ W + b, 0.0)
        return (a @ self.weights[-1] + self.biases[-1])[:, 0]

    def predict_proba(self, X) -> np.ndarray:
        return sigmoid(self.logits(X))

    def to_dict(self) -> dict:
        return {"layer_sizes": list(self.arch.layer_sizes), "params": flatten_weights(self).tolist()}

    @classmethod
    def from_dict(cls, d) -> "MlpModel":
        return unflatten_weights(MlpArch(tuple(d["layer_sizes"])), np.array(d["params"], dtype=float))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")


def init_mlp(arch: MlpArch, seed: int = 0) -> MlpModel:
    """Uniform(-r, r) weights with r = sqrt(6 / (fan_in + fan_out)); zero biases."""
    rng = np.random.default_rng(seed)
    Ws, bs = [], []
    for a, b in arch.shapes:
        r = np.sqrt(6.0 / (a + b))
        Ws.append(rng.uniform(-r, r, size=(a, b)))
        bs.append(np.zeros(b))
    return MlpModel(arch, Ws, bs)


def forward(model: MlpModel, x) -> float:
    return float(model.predict_proba(np.asarray(x, dtype=float)[None, :])[0])


def flatten_weights(model: MlpModel) -> np.ndarray:
    parts = []
    for W, b in zip(model.weights, model.biases):
        parts.append(W.ravel())
        parts.append(b)
    return np.concatenate(parts)


def unflatten_weights(arch: MlpArch, vector) -> MlpModel:
    v = np.asarray(vector, dtype=float)
    if v.ndim != 1 or v.size != arch.n_params:
        raise ValueError(f"expected {arch.n_params} parameters, got {v.size}")
    Ws, bs, k = [], [], 0
    for a, b in arch.shapes:
        Ws.append(v[k:k + a * b].reshape(a, b).copy())
        k += a * b
        bs.append(v[k:k + b].copy())
        k += b
    return MlpModel(arch, Ws, bs)


def cross_entropy(model: MlpModel, X, y) -> float:
    z = model.logits(X)
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def loss_and_grad(model: MlpModel, X, y, l2_lambda: float = 0.0):
    """Mean cross-entropy + (l2/2)|W|^2 (weights only) and its gradient by backprop."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(X)
    acts = [X]
    pre = []
    a = X
    for W, b in zip(model.weights[:-1], model.biases[:-1]):
        z = a @ W + b
        pre.append(z)
        a = np.maximum(z, 0.0)
        acts.append(a)
    logit = (a @ model.weights[-1] + model.biases[-1])[:, 0]
    loss = float(np.mean(np.logaddexp(0.0, logit) - y * logit))
    loss += 0.5 * l2_lambda * sum(float(np.sum(W * W)) for W in model.weights)

    delta = ((sigmoid(logit) - y) / n)[:, None]
    gW = [None] * len(model.weights)
    gb = [None] * len(model.biases)
    for layer in range(len(model.weights) - 1, -1, -1):
        gW[layer] = acts[layer].T @ delta + l2_lambda * model.weights[layer]
        gb[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ model.weights[layer].T) * (pre[layer - 1] > 0)
    return loss, gW, gb


@dataclass(frozen=True)
class BackpropConfig:
    learning_rate: float = 0.001
    epochs: int = 200
    l2_lambda: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")


def fit_backprop(X, y, arch: MlpArch, cfg: BackpropConfig = BackpropConfig(), return_history: bool = False):
    """Full-batch gradient descent at a constant rate."""
    model = init_mlp(arch, cfg.seed)
    history = []
    for _ in range(cfg.epochs):
        loss, gW, gb = loss_and_grad(model, X, y, cfg.l2_lambda)
        if not np.isfinite(loss):
            raise DivergenceError("MLP loss became non-finite; lower the learning rate")
        history.append(loss)
        for W, b, dW, db in zip(model.weights, model.biases, gW, gb):
            W -= cfg.learning_rate * dW
            b -= cfg.learning_rate * db
    final, _, _ = loss_and_grad(model, X, y, cfg.l2_lambda)
    history.append(final)
    return (model, history) if return_history else model


def hidden_layout(n_hidden: int, layout: str = "units", width: int = 8) -> tuple[int, ...]:
    """``units``: one hidden layer of ``n_hidden`` units; ``layers``: ``n_hidden`` layers of ``width``."""
    if layout == "units":
        return (int(n_hidden),)
    if layout == "layers":
        return (int(width),) * int(n_hidden)
    raise ValueError("layout must be 'units' or 'layers'")


class MLPClassifier:
    def __init__(self, hidden=(70,), l2_lambda=0.0, learning_rate=0.001, epochs=200, seed=0):
        self.hidden = tuple(hidden)
        self.cfg = BackpropConfig(learning_rate, int(epochs), float(l2_lambda), seed)

    def fit(self, X, y):
        arch = MlpArch.build(np.asarray(X).shape[1], self.hidden)
        self.model_ = fit_backprop(X, y, arch, self.cfg)
        return self

    def predict_proba(self, X):
        return self.model_.predict_proba(X)

    predict_score = predict_proba

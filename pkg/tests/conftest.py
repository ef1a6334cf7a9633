"""Shared fixtures and oracle helpers."""

from __future__ import annotations

import numpy as np
import pytest

import nfdlm as nf

# The desk-scale surrogate used across selector, SMOTE, and acceptance tests:
# heavy 40:1 imbalance, 30 features, 5 planted near-duplicate pairs.
SURROGATE_SPEC = nf.SynthesisSpec(
    attack_count=20000,
    benign_count=500,
    feature_count=30,
    planted_duplicate_pairs=5,
    class_separation=6.0,
    seed=7,
)


@pytest.fixture(scope="session")
def surrogate() -> nf.FlowDataset:
    return nf.generate_synthetic_flows(SURROGATE_SPEC)


def assert_datasets_equal(a: nf.FlowDataset, b: nf.FlowDataset) -> None:
    assert [(c.name, c.kind, c.index) for c in a.columns] == [
        (c.name, c.kind, c.index) for c in b.columns
    ]
    assert a.matrix.shape == b.matrix.shape
    assert (a.matrix == b.matrix).all()
    if a.labels is None:
        assert b.labels is None
    else:
        assert (a.labels == b.labels).all()
    assert a.strings == b.strings


def max_relative_gradient_error(model, x, y, h: float = 1e-5) -> float:
    """Central finite differences against backward(), one parameter at a time.

    Errors are measured relative to the gradient's overall scale so that
    exactly-zero gradients (e.g. LSTM forget gates) compare cleanly.
    """
    from nfdlm.neuralnet import forward, model_params

    analytic = nf.backward(model, x, y)
    scale = max(float(np.max(np.abs(g))) for g in analytic)
    worst = 0.0
    for p, g in zip(model_params(model), analytic):
        flat_p = p.reshape(-1)
        flat_g = g.reshape(-1)
        for idx in range(flat_p.size):
            orig = flat_p[idx]
            flat_p[idx] = orig + h
            loss_plus = nf.bce_loss(forward(model, x), y)
            flat_p[idx] = orig - h
            loss_minus = nf.bce_loss(forward(model, x), y)
            flat_p[idx] = orig
            numeric = (loss_plus - loss_minus) / (2.0 * h)
            denom = max(scale, abs(numeric), 1e-12)
            worst = max(worst, abs(numeric - flat_g[idx]) / denom)
    return worst


def relu_kink_margin(model, x) -> float:
    """Smallest |pre-activation| over every ReLU unit; FD checks need it > h."""
    from nfdlm.neuralnet import DenseLayer, _forward_cached

    _, caches = _forward_cached(model, x)
    margin = np.inf
    for layer, cache in zip(model.layers, caches):
        if isinstance(layer, DenseLayer) and layer.activation == "relu":
            z = cache[1]
            if z.size:
                margin = min(margin, float(np.min(np.abs(z))))
    return margin


def random_checkable_model(kind: str, seed: int, n_rows: int = 6):
    """Small random model + batch suitable for finite-difference checking.

    Biases are jittered away from zero and draws are advanced until no ReLU
    pre-activation sits within 1e-3 of its kink, where central differences
    and the subgradient convention legitimately disagree.
    """
    from nfdlm.neuralnet import DenseLayer

    attempt = 0
    while True:
        rng = np.random.default_rng([seed, attempt])
        if kind == "mlp":
            features = [f"x{i}" for i in range(4)]
            model = nf.build_mlp(features, hidden=(5, 4), seed=seed * 11 + attempt)
        else:
            # 172 parameters, under the 200-parameter checking budget.
            features = [f"x{i}" for i in range(3)]
            model = nf.build_lstm(features, hidden=(3, 3), seed=seed * 11 + attempt)
        for layer in model.layers:
            if isinstance(layer, DenseLayer):
                layer.bias += rng.uniform(-0.5, 0.5, layer.bias.shape)
        x = rng.standard_normal((n_rows, len(features)))
        y = rng.integers(0, 2, n_rows)
        if relu_kink_margin(model, x) > 1e-3:
            return model, x, y
        attempt += 1

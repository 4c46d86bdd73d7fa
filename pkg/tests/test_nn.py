"""Finite-difference oracles for every gradient path in the numpy net."""

import numpy as np
import pytest

from foodlink import nn
from foodlink.model_store import EncoderConfig
from foodlink.scorer import CrossEncoderNet, HashedTokenVectors


def finite_difference_check(params, loss_fn, n_coords=6, eps=1e-6, seed=1):
    """Central finite differences on sampled coordinates of every parameter."""
    loss, backward = loss_fn()
    for p in params:
        p.zero_grad()
    backward()
    rng = np.random.Generator(np.random.PCG64(seed))
    worst = 0.0
    for p in params:
        flat = p.value.reshape(-1)
        gflat = p.grad.reshape(-1)
        for idx in rng.choice(flat.size, size=min(n_coords, flat.size), replace=False):
            old = flat[idx]
            flat[idx] = old + eps
            lp, _ = loss_fn()
            flat[idx] = old - eps
            lm, _ = loss_fn()
            flat[idx] = old
            numeric = (lp - lm) / (2 * eps)
            analytic = gflat[idx]
            rel = abs(numeric - analytic) / max(1e-10, abs(numeric) + abs(analytic))
            worst = max(worst, rel)
    return worst


def test_cross_encoder_gradients_match_finite_differences():
    rng = np.random.Generator(np.random.PCG64(0))
    cfg = EncoderConfig(dim=8, n_layers=2, n_heads=2, ffn_hidden=16, max_len=12)
    net = CrossEncoderNet(cfg, HashedTokenVectors(8), rng)
    pairs = [("alpha beta gamma", "beta delta"), ("red fish", "blue fish epsilon")]
    y = np.array([1.0, 0.0])

    def loss_fn():
        logits = net.forward_logits(pairs)
        loss, dlogits = nn.bce_with_logits(logits, y, pos_weight=3.0)
        return loss, lambda: net.backward(dlogits)

    worst = finite_difference_check(net.params(), loss_fn)
    assert worst < 1e-5


def test_encoder_with_random_qk_init_gradients():
    rng = np.random.Generator(np.random.PCG64(3))
    cfg = EncoderConfig(dim=8, n_layers=1, n_heads=4, ffn_hidden=12, max_len=10, qk_init="random")
    net = CrossEncoderNet(cfg, HashedTokenVectors(8), rng)
    pairs = [("one two", "two three four")]
    y = np.array([1.0])

    def loss_fn():
        logits = net.forward_logits(pairs)
        loss, dlogits = nn.bce_with_logits(logits, y)
        return loss, lambda: net.backward(dlogits)

    assert finite_difference_check(net.params(), loss_fn) < 1e-5


def test_softmax_cross_entropy_gradient():
    rng = np.random.Generator(np.random.PCG64(5))
    lin = nn.Linear(6, 9, rng)
    x = rng.normal(size=(4, 6))
    targets = np.array([0, 3, 8, 1])

    def loss_fn():
        logits = lin.forward(x)
        loss, dlogits = nn.softmax_cross_entropy(logits, targets)
        return loss, lambda: lin.backward(dlogits)

    assert finite_difference_check(lin.params(), loss_fn, n_coords=10) < 1e-6


def test_bce_with_logits_values():
    z = np.array([0.0])
    loss, dz = nn.bce_with_logits(z, np.array([1.0]))
    assert loss == pytest.approx(np.log(2))
    assert dz[0] == pytest.approx(-0.5)


def test_sigmoid_stable_extremes():
    z = np.array([-1e4, -10.0, 0.0, 10.0, 1e4])
    s = nn.sigmoid(z)
    assert np.all((s >= 0) & (s <= 1))
    assert np.all(np.isfinite(s))


def test_adam_reduces_quadratic_loss():
    rng = np.random.Generator(np.random.PCG64(9))
    p = nn.Param(rng.normal(size=5))
    target = np.arange(5.0)
    opt = nn.Adam([p], lr=0.05)
    first = float(((p.value - target) ** 2).sum())
    for _ in range(300):
        opt.zero_grad()
        p.grad += 2 * (p.value - target)
        opt.step()
    assert ((p.value - target) ** 2).sum() < 1e-3 * first


def test_attention_rejects_bad_head_split():
    rng = np.random.Generator(np.random.PCG64(0))
    with pytest.raises(ValueError, match="divisible"):
        nn.MultiHeadSelfAttention(10, 3, rng)

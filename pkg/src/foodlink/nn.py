"""Minimal numpy transformer encoder with explicit backprop.

Everything runs in float64 on CPU at desk scale: a couple of layers, tiny
hidden sizes, batches of a few dozen sequences. Determinism comes from
seeded numpy Generators; there is no global RNG state anywhere.
"""

from __future__ import annotations

import numpy as np


class Param:
    """A trainable array plus its accumulated gradient."""

    __slots__ = ("value", "grad")

    def __init__(self, value: np.ndarray):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)

    def zero_grad(self) -> None:
        self.grad[...] = 0.0


class Linear:
    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator, scale: float | None = None):
        scale = (1.0 / np.sqrt(d_in)) if scale is None else scale
        self.W = Param(rng.normal(0.0, scale, size=(d_in, d_out)))
        self.b = Param(np.zeros(d_out))
        self._x: np.ndarray | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        return x @ self.W.value + self.b.value

    def backward(self, dout: np.ndarray) -> np.ndarray:
        x = self._x
        x2 = x.reshape(-1, x.shape[-1])
        g2 = dout.reshape(-1, dout.shape[-1])
        self.W.grad += x2.T @ g2
        self.b.grad += g2.sum(axis=0)
        return dout @ self.W.value.T

    def params(self) -> list[Param]:
        return [self.W, self.b]


class LayerNorm:
    def __init__(self, dim: int, eps: float = 1e-5):
        self.gamma = Param(np.ones(dim))
        self.beta = Param(np.zeros(dim))
        self.eps = eps
        self._xhat: np.ndarray | None = None
        self._inv_std: np.ndarray | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        mu = x.mean(axis=-1, keepdims=True)
        var = x.var(axis=-1, keepdims=True)
        self._inv_std = 1.0 / np.sqrt(var + self.eps)
        self._xhat = (x - mu) * self._inv_std
        return self.gamma.value * self._xhat + self.beta.value

    def backward(self, dout: np.ndarray) -> np.ndarray:
        xhat, inv_std = self._xhat, self._inv_std
        self.gamma.grad += (dout * xhat).reshape(-1, xhat.shape[-1]).sum(axis=0)
        self.beta.grad += dout.reshape(-1, dout.shape[-1]).sum(axis=0)
        dxhat = dout * self.gamma.value
        m1 = dxhat.mean(axis=-1, keepdims=True)
        m2 = (dxhat * xhat).mean(axis=-1, keepdims=True)
        return inv_std * (dxhat - m1 - xhat * m2)

    def params(self) -> list[Param]:
        return [self.gamma, self.beta]


class MultiHeadSelfAttention:
    """Scaled dot-product self-attention with a key padding mask.

    ``qk_init="identity"`` starts the query/key projections at the identity,
    so attention begins as pure content matching: identical tokens on the two
    sides of a concatenated pair light each other up from step zero. A
    learnable scalar gain sharpens the softmax.
    """

    def __init__(self, dim: int, n_heads: int, rng: np.random.Generator,
                 qk_init: str = "identity", gain_init: float = 4.0):
        if dim % n_heads != 0:
            raise ValueError(f"dim {dim} not divisible by n_heads {n_heads}")
        self.dim = dim
        self.n_heads = n_heads
        self.d_head = dim // n_heads
        if qk_init == "identity":
            eye = np.eye(dim)
            self.Wq = Param(eye.copy())
            self.Wk = Param(eye.copy())
        elif qk_init == "random":
            s = 1.0 / np.sqrt(dim)
            self.Wq = Param(rng.normal(0.0, s, size=(dim, dim)))
            self.Wk = Param(rng.normal(0.0, s, size=(dim, dim)))
        else:
            raise ValueError(f"unknown qk_init {qk_init!r}")
        s = 1.0 / np.sqrt(dim)
        self.Wv = Param(rng.normal(0.0, s, size=(dim, dim)))
        self.Wo = Param(rng.normal(0.0, s, size=(dim, dim)))
        self.gain = Param(np.array(float(gain_init)))
        self._cache: tuple | None = None

    def _split(self, x: np.ndarray) -> np.ndarray:
        b, t, _ = x.shape
        return x.reshape(b, t, self.n_heads, self.d_head).transpose(0, 2, 1, 3)

    def _merge(self, x: np.ndarray) -> np.ndarray:
        b, h, t, dh = x.shape
        return x.transpose(0, 2, 1, 3).reshape(b, t, h * dh)

    def forward(self, x: np.ndarray, key_mask: np.ndarray) -> np.ndarray:
        # x: (B,T,D); key_mask: (B,T) with 1.0 on real tokens, 0.0 on padding
        q = self._split(x @ self.Wq.value)
        k = self._split(x @ self.Wk.value)
        v = self._split(x @ self.Wv.value)
        raw = (q @ k.transpose(0, 1, 3, 2)) / np.sqrt(self.d_head)
        logits = raw * self.gain.value
        bias = (1.0 - key_mask)[:, None, None, :] * -1e9
        logits = logits + bias
        logits -= logits.max(axis=-1, keepdims=True)
        e = np.exp(logits)
        attn = e / e.sum(axis=-1, keepdims=True)
        ctx = attn @ v
        merged = self._merge(ctx)
        out = merged @ self.Wo.value
        self._cache = (x, q, k, v, raw, attn, merged)
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        x, q, k, v, raw, attn, merged = self._cache
        b, t, d = x.shape

        self.Wo.grad += merged.reshape(-1, d).T @ dout.reshape(-1, d)
        dmerged = dout @ self.Wo.value.T
        dctx = self._split(dmerged)

        dattn = dctx @ v.transpose(0, 1, 3, 2)
        dv = attn.transpose(0, 1, 3, 2) @ dctx

        # softmax backward (rows over keys)
        tmp = (dattn * attn).sum(axis=-1, keepdims=True)
        dlogits = attn * (dattn - tmp)

        self.gain.grad += float((dlogits * raw).sum())
        draw = dlogits * self.gain.value
        draw /= np.sqrt(self.d_head)

        dq = draw @ k
        dk = draw.transpose(0, 1, 3, 2) @ q

        dq = self._merge(dq)
        dk = self._merge(dk)
        dv = self._merge(dv)

        x2 = x.reshape(-1, d)
        self.Wq.grad += x2.T @ dq.reshape(-1, d)
        self.Wk.grad += x2.T @ dk.reshape(-1, d)
        self.Wv.grad += x2.T @ dv.reshape(-1, d)

        return dq @ self.Wq.value.T + dk @ self.Wk.value.T + dv @ self.Wv.value.T

    def params(self) -> list[Param]:
        return [self.Wq, self.Wk, self.Wv, self.Wo, self.gain]


class FeedForward:
    def __init__(self, dim: int, hidden: int, rng: np.random.Generator):
        self.fc1 = Linear(dim, hidden, rng)
        self.fc2 = Linear(hidden, dim, rng)
        self._mask: np.ndarray | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        h = self.fc1.forward(x)
        self._mask = h > 0
        return self.fc2.forward(h * self._mask)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        dh = self.fc2.backward(dout)
        dh = dh * self._mask
        return self.fc1.backward(dh)

    def params(self) -> list[Param]:
        return self.fc1.params() + self.fc2.params()


class TransformerBlock:
    """Pre-LN block: x + Attn(LN(x)), then x + FFN(LN(x))."""

    def __init__(self, dim: int, n_heads: int, ffn_hidden: int, rng: np.random.Generator,
                 qk_init: str = "identity", gain_init: float = 4.0):
        self.ln1 = LayerNorm(dim)
        self.attn = MultiHeadSelfAttention(dim, n_heads, rng, qk_init=qk_init, gain_init=gain_init)
        self.ln2 = LayerNorm(dim)
        self.ffn = FeedForward(dim, ffn_hidden, rng)

    def forward(self, x: np.ndarray, key_mask: np.ndarray) -> np.ndarray:
        a = x + self.attn.forward(self.ln1.forward(x), key_mask)
        return a + self.ffn.forward(self.ln2.forward(a))

    def backward(self, dout: np.ndarray) -> np.ndarray:
        da = dout + self.ln2.backward(self.ffn.backward(dout))
        return da + self.ln1.backward(self.attn.backward(da))

    def params(self) -> list[Param]:
        return self.ln1.params() + self.attn.params() + self.ln2.params() + self.ffn.params()


class TransformerEncoder:
    def __init__(self, dim: int, n_layers: int, n_heads: int, ffn_hidden: int,
                 rng: np.random.Generator, qk_init: str = "identity", gain_init: float = 4.0):
        self.blocks = [
            TransformerBlock(dim, n_heads, ffn_hidden, rng, qk_init=qk_init, gain_init=gain_init)
            for _ in range(n_layers)
        ]
        self.ln_out = LayerNorm(dim)

    def forward(self, x: np.ndarray, key_mask: np.ndarray) -> np.ndarray:
        for block in self.blocks:
            x = block.forward(x, key_mask)
        return self.ln_out.forward(x)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        dx = self.ln_out.backward(dout)
        for block in reversed(self.blocks):
            dx = block.backward(dx)
        return dx

    def params(self) -> list[Param]:
        out = []
        for block in self.blocks:
            out.extend(block.params())
        return out + self.ln_out.params()


def masked_mean_pool(x: np.ndarray, mask: np.ndarray) -> tuple[np.ndarray, tuple]:
    """Mean over unmasked positions. Returns (pooled (B,D), backward cache)."""
    counts = mask.sum(axis=1, keepdims=True)
    pooled = (x * mask[:, :, None]).sum(axis=1) / counts
    return pooled, (mask, counts, x.shape)


def masked_mean_pool_backward(dpooled: np.ndarray, cache: tuple) -> np.ndarray:
    mask, counts, shape = cache
    dx = np.zeros(shape)
    dx += (dpooled / counts)[:, None, :] * mask[:, :, None]
    return dx


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def bce_with_logits(z: np.ndarray, y: np.ndarray, pos_weight: float = 1.0) -> tuple[float, np.ndarray]:
    """Weighted binary cross-entropy. Returns (mean loss, dloss/dz)."""
    w = np.where(y > 0.5, pos_weight, 1.0)
    # log(1+exp(z)) computed stably
    softplus = np.logaddexp(0.0, z)
    losses = w * (softplus - y * z)
    denom = w.sum()
    loss = float(losses.sum() / denom)
    dz = w * (sigmoid(z) - y) / denom
    return loss, dz


def softmax_cross_entropy(logits: np.ndarray, targets: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over rows of ``logits`` against integer ``targets``."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    probs = e / e.sum(axis=-1, keepdims=True)
    n = logits.shape[0]
    idx = np.arange(n)
    loss = float(-np.log(probs[idx, targets] + 1e-300).mean())
    dlogits = probs
    dlogits[idx, targets] -= 1.0
    dlogits /= n
    return loss, dlogits


class Adam:
    def __init__(self, params: list[Param], lr: float = 3e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = [np.zeros_like(p.value) for p in params]
        self._v = [np.zeros_like(p.value) for p in params]

    def step(self) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for p, m, v in zip(self.params, self._m, self._v):
            m += (1.0 - b1) * (p.grad - m)
            v += (1.0 - b2) * (p.grad * p.grad - v)
            mhat = m / (1.0 - b1 ** self.t)
            vhat = v / (1.0 - b2 ** self.t)
            p.value -= self.lr * mhat / (np.sqrt(vhat) + self.eps)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

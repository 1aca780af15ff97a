"""Layers for the unit encoder and mel decoder.

All layers expose `params()` returning their trainable tensors in a stable
order (checkpointing relies on that order being deterministic), and they are
seeded explicitly: same seed, same initial weights, same forward values.
"""

from __future__ import annotations

import numpy as np

from .autograd import Tensor, parameter
from .errors import ValidationError

MASK_NEG = -1e9  # additive attention bias treated as minus infinity


def xavier_uniform(rng: np.random.Generator, fan_in: int, fan_out: int,
                   shape: tuple) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Linear:
    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator,
                 name: str = "linear"):
        self.w = parameter(xavier_uniform(rng, d_in, d_out, (d_in, d_out)),
                           name=f"{name}.w")
        self.b = parameter(np.zeros(d_out), name=f"{name}.b")

    def __call__(self, x: Tensor) -> Tensor:
        return x @ self.w + self.b

    def params(self) -> list[Tensor]:
        return [self.w, self.b]


class LayerNorm:
    """Normalize the last axis to zero mean / unit variance, then affine."""

    def __init__(self, d: int, name: str = "ln", eps: float = 1e-5):
        self.gamma = parameter(np.ones(d), name=f"{name}.gamma")
        self.beta = parameter(np.zeros(d), name=f"{name}.beta")
        self.eps = eps

    def __call__(self, x: Tensor) -> Tensor:
        mu = x.mean(axis=-1, keepdims=True)
        centered = x - mu
        var = (centered * centered).mean(axis=-1, keepdims=True)
        normed = centered / (var + self.eps).sqrt()
        return normed * self.gamma + self.beta

    def params(self) -> list[Tensor]:
        return [self.gamma, self.beta]


class Conv1d:
    """Valid (no padding) strided 1-D convolution on (L, C_in) -> (T, C_out).

    T = floor((L - kernel)/stride) + 1. Implemented as patch extraction plus
    one matmul, so the gradient comes from the generic ops.
    """

    def __init__(self, c_in: int, c_out: int, kernel: int, stride: int,
                 rng: np.random.Generator, name: str = "conv"):
        if kernel < 1 or stride < 1:
            raise ValidationError(f"{name}: kernel and stride must be >= 1")
        self.kernel = kernel
        self.stride = stride
        self.c_in = c_in
        fan_in = c_in * kernel
        self.w = parameter(xavier_uniform(rng, fan_in, c_out,
                                          (fan_in, c_out)),
                           name=f"{name}.w")
        self.b = parameter(np.zeros(c_out), name=f"{name}.b")

    def __call__(self, x: Tensor) -> Tensor:
        if x.ndim != 2 or x.shape[1] != self.c_in:
            raise ValidationError(
                f"conv expects (L, {self.c_in}), got {x.shape}"
            )
        return x.unfold(self.kernel, self.stride) @ self.w + self.b

    def out_length(self, length: int) -> int:
        if length < self.kernel:
            return 0
        return (length - self.kernel) // self.stride + 1

    def params(self) -> list[Tensor]:
        return [self.w, self.b]


def softmax_last(x: Tensor) -> Tensor:
    """Numerically-stable softmax over the last axis."""
    shifted = x - np.max(x.data, axis=-1, keepdims=True)
    e = shifted.exp()
    return e / e.sum(axis=-1, keepdims=True)


class MultiHeadSelfAttention:
    """Scaled dot-product self-attention over a (T, d) sequence.

    `key_mask` marks positions that must not be attended TO (masked frames
    during pretraining); their key columns get a large negative bias before
    the softmax. Masked positions still emit queries, which is exactly what
    masked prediction needs: they look at visible context to reconstruct
    themselves.
    """

    def __init__(self, d_model: int, n_heads: int, rng: np.random.Generator,
                 name: str = "attn"):
        if d_model % n_heads != 0:
            raise ValidationError(
                f"{name}: d_model {d_model} not divisible by n_heads {n_heads}"
            )
        self.d_model = d_model
        self.n_heads = n_heads
        self.d_head = d_model // n_heads
        self.wq = Linear(d_model, d_model, rng, f"{name}.q")
        self.wk = Linear(d_model, d_model, rng, f"{name}.k")
        self.wv = Linear(d_model, d_model, rng, f"{name}.v")
        self.wo = Linear(d_model, d_model, rng, f"{name}.o")
        self.last_attention: np.ndarray | None = None

    def __call__(self, x: Tensor, key_mask: np.ndarray | None = None) -> Tensor:
        T = x.shape[0]
        if x.ndim != 2 or x.shape[1] != self.d_model:
            raise ValidationError(
                f"attention expects (T, {self.d_model}), got {x.shape}"
            )

        def split(t: Tensor) -> Tensor:
            # (T, d) -> (heads, T, d_head)
            return t.reshape(T, self.n_heads, self.d_head).transpose(1, 0, 2)

        q = split(self.wq(x))
        k = split(self.wk(x))
        v = split(self.wv(x))
        scores = (q @ k.transpose(0, 2, 1)) * (1.0 / np.sqrt(self.d_head))
        if key_mask is not None:
            key_mask = np.asarray(key_mask, dtype=bool)
            if key_mask.shape != (T,):
                raise ValidationError(
                    f"key_mask must be shape ({T},), got {key_mask.shape}"
                )
            bias = np.where(key_mask, MASK_NEG, 0.0)[None, None, :]
            scores = scores + bias
        weights = softmax_last(scores)
        self.last_attention = weights.data
        out = weights @ v  # (heads, T, d_head)
        merged = out.transpose(1, 0, 2).reshape(T, self.d_model)
        return self.wo(merged)

    def params(self) -> list[Tensor]:
        return self.wq.params() + self.wk.params() + self.wv.params() + \
            self.wo.params()


class TransformerBlock:
    """Pre-norm block: LN -> self-attention -> residual, LN -> MLP -> residual."""

    def __init__(self, d_model: int, n_heads: int, d_ff: int,
                 rng: np.random.Generator, name: str = "block"):
        self.ln1 = LayerNorm(d_model, f"{name}.ln1")
        self.attn = MultiHeadSelfAttention(d_model, n_heads, rng,
                                           f"{name}.attn")
        self.ln2 = LayerNorm(d_model, f"{name}.ln2")
        self.fc1 = Linear(d_model, d_ff, rng, f"{name}.fc1")
        self.fc2 = Linear(d_ff, d_model, rng, f"{name}.fc2")

    def __call__(self, x: Tensor, key_mask: np.ndarray | None = None) -> Tensor:
        x = x + self.attn(self.ln1(x), key_mask)
        return x + self.fc2(self.fc1(self.ln2(x)).gelu())

    def params(self) -> list[Tensor]:
        return (self.ln1.params() + self.attn.params() + self.ln2.params() +
                self.fc1.params() + self.fc2.params())


def sinusoidal_positions(T: int, d: int) -> np.ndarray:
    """Fixed absolute position encoding table, shape (T, d)."""
    pos = np.arange(T)[:, None].astype(np.float64)
    i = np.arange((d + 1) // 2)[None, :]
    angles = pos / (10000.0 ** (2 * i / d))
    table = np.zeros((T, d))
    table[:, 0::2] = np.sin(angles)
    table[:, 1::2] = np.cos(angles[:, : d // 2])
    return table

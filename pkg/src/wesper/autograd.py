"""Array autograd engine: numpy forward, reverse-mode backward via closures.

Every operation builds a node holding its inputs and a `_backward` closure
that scatters the output gradient to them; `backward()` runs the closures in
reverse topological order. Values are float64 throughout and every forward
op checks for NaN/Inf so numerical accidents surface where they happen, not
three layers later.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erf

from .errors import ValidationError

_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_INV_SQRT2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


class Tensor:
    """A numpy array plus the graph bookkeeping needed for backprop."""

    __slots__ = ("data", "grad", "requires_grad", "_prev", "_backward", "name")
    __array_priority__ = 100  # make ndarray + Tensor dispatch to us

    def __init__(self, data, requires_grad: bool = False, name: str = ""):
        self.data = np.asarray(data, dtype=np.float64)
        if not np.all(np.isfinite(self.data)):
            raise ValidationError(f"tensor '{name}' contains NaN or Inf")
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._prev: tuple = ()
        self._backward = None
        self.name = name

    # -- graph plumbing ----------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    @staticmethod
    def _wrap(other) -> "Tensor":
        return other if isinstance(other, Tensor) else Tensor(other)

    def _make(self, data, parents, backward) -> "Tensor":
        out = Tensor(data)
        out.requires_grad = any(p.requires_grad for p in parents)
        if out.requires_grad:
            out._prev = tuple(parents)
            out._backward = backward
        return out

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        other = self._wrap(other)
        out = self._make(self.data + other.data, (self, other), None)

        def _backward(g):
            if self.requires_grad:
                self._accumulate(_unbroadcast(g, self.data.shape))
            if other.requires_grad:
                other._accumulate(_unbroadcast(g, other.data.shape))
        out._backward = _backward
        return out

    __radd__ = __add__

    def __mul__(self, other):
        other = self._wrap(other)
        out = self._make(self.data * other.data, (self, other), None)

        def _backward(g):
            if self.requires_grad:
                self._accumulate(_unbroadcast(g * other.data, self.data.shape))
            if other.requires_grad:
                other._accumulate(_unbroadcast(g * self.data, other.data.shape))
        out._backward = _backward
        return out

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-self._wrap(other))

    def __rsub__(self, other):
        return self._wrap(other) + (-self)

    def __truediv__(self, other):
        other = self._wrap(other)
        out = self._make(self.data / other.data, (self, other), None)

        def _backward(g):
            if self.requires_grad:
                self._accumulate(_unbroadcast(g / other.data, self.data.shape))
            if other.requires_grad:
                other._accumulate(_unbroadcast(
                    -g * self.data / (other.data * other.data),
                    other.data.shape))
        out._backward = _backward
        return out

    def __rtruediv__(self, other):
        return self._wrap(other) / self

    def __pow__(self, p):
        if not isinstance(p, (int, float)):
            raise ValidationError("pow exponent must be a python scalar")
        out = self._make(self.data ** p, (self,), None)

        def _backward(g):
            if self.requires_grad:
                self._accumulate(g * p * self.data ** (p - 1))
        out._backward = _backward
        return out

    def __matmul__(self, other):
        other = self._wrap(other)
        a, b = self.data, other.data
        if not ((a.ndim == 2 and b.ndim == 2) or (a.ndim == 3 and b.ndim == 3)):
            raise ValidationError(
                f"matmul supports 2-D pairs or batched 3-D pairs, got "
                f"{a.shape} @ {b.shape}"
            )
        out = self._make(a @ b, (self, other), None)

        def _backward(g):
            if a.ndim == 2:
                if self.requires_grad:
                    self._accumulate(g @ b.T)
                if other.requires_grad:
                    other._accumulate(a.T @ g)
            else:
                if self.requires_grad:
                    self._accumulate(g @ b.transpose(0, 2, 1))
                if other.requires_grad:
                    other._accumulate(a.transpose(0, 2, 1) @ g)
        out._backward = _backward
        return out

    # -- elementwise functions ----------------------------------------------

    def exp(self):
        out = self._make(np.exp(self.data), (self,), None)

        def _backward(g):
            if self.requires_grad:
                self._accumulate(g * out.data)
        out._backward = _backward
        return out

    def log(self):
        out = self._make(np.log(self.data), (self,), None)

        def _backward(g):
            if self.requires_grad:
                self._accumulate(g / self.data)
        out._backward = _backward
        return out

    def sqrt(self):
        out = self._make(np.sqrt(self.data), (self,), None)

        def _backward(g):
            if self.requires_grad:
                self._accumulate(g * 0.5 / out.data)
        out._backward = _backward
        return out

    def abs(self):
        out = self._make(np.abs(self.data), (self,), None)

        def _backward(g):
            if self.requires_grad:
                self._accumulate(g * np.sign(self.data))
        out._backward = _backward
        return out

    def tanh(self):
        out = self._make(np.tanh(self.data), (self,), None)

        def _backward(g):
            if self.requires_grad:
                self._accumulate(g * (1.0 - out.data * out.data))
        out._backward = _backward
        return out

    def gelu(self):
        """Exact GELU, x * Phi(x), with the erf-based derivative."""
        x = self.data
        cdf = 0.5 * (1.0 + erf(x * _INV_SQRT2))
        out = self._make(x * cdf, (self,), None)

        def _backward(g):
            if self.requires_grad:
                pdf = _INV_SQRT2PI * np.exp(-0.5 * x * x)
                self._accumulate(g * (cdf + x * pdf))
        out._backward = _backward
        return out

    # -- reductions and shape ops --------------------------------------------

    def sum(self, axis=None, keepdims: bool = False):
        out = self._make(self.data.sum(axis=axis, keepdims=keepdims),
                         (self,), None)

        def _backward(g):
            if not self.requires_grad:
                return
            if axis is None:
                self._accumulate(np.broadcast_to(g, self.data.shape).copy())
                return
            if not keepdims:
                g = np.expand_dims(g, axis)
            self._accumulate(np.broadcast_to(g, self.data.shape).copy())
        out._backward = _backward
        return out

    def mean(self, axis=None, keepdims: bool = False):
        if axis is None:
            count = self.data.size
        else:
            count = np.prod([self.data.shape[a]
                             for a in np.atleast_1d(axis)])
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        out = self._make(self.data.reshape(shape), (self,), None)

        def _backward(g):
            if self.requires_grad:
                self._accumulate(g.reshape(self.data.shape))
        out._backward = _backward
        return out

    def transpose(self, *axes):
        axes = axes or tuple(range(self.data.ndim))[::-1]
        inv = np.argsort(axes)
        out = self._make(self.data.transpose(axes), (self,), None)

        def _backward(g):
            if self.requires_grad:
                self._accumulate(g.transpose(inv))
        out._backward = _backward
        return out

    def __getitem__(self, key):
        out = self._make(self.data[key], (self,), None)

        def _backward(g):
            if self.requires_grad:
                full = np.zeros_like(self.data)
                np.add.at(full, key, g)
                self._accumulate(full)
        out._backward = _backward
        return out

    def gather_rows(self, cols: np.ndarray):
        """out[i] = self[i, cols[i]]; used to pick target-class logits."""
        cols = np.asarray(cols, dtype=np.intp)
        rows = np.arange(self.data.shape[0])
        out = self._make(self.data[rows, cols], (self,), None)

        def _backward(g):
            if self.requires_grad:
                full = np.zeros_like(self.data)
                np.add.at(full, (rows, cols), g)
                self._accumulate(full)
        out._backward = _backward
        return out

    def unfold(self, kernel: int, stride: int):
        """Sliding patches along axis 0: (L, C) -> (T, kernel*C).

        T follows the valid-convolution law floor((L - kernel)/stride) + 1.
        The backward pass scatter-adds each patch back to its source window.
        """
        if self.data.ndim != 2:
            raise ValidationError(f"unfold expects (L, C), got {self.shape}")
        L = self.data.shape[0]
        if L < kernel:
            raise ValidationError(f"unfold: length {L} < kernel {kernel}")
        win = np.lib.stride_tricks.sliding_window_view(self.data, kernel, axis=0)
        patches = win[::stride].transpose(0, 2, 1)  # (T, kernel, C)
        T = patches.shape[0]
        out = self._make(patches.reshape(T, -1), (self,), None)

        def _backward(g):
            if not self.requires_grad:
                return
            gk = g.reshape(T, kernel, self.data.shape[1])
            full = np.zeros_like(self.data)
            starts = np.arange(T) * stride
            for kk in range(kernel):
                np.add.at(full, starts + kk, gk[:, kk, :])
            self._accumulate(full)
        out._backward = _backward
        return out

    # -- backward driver ------------------------------------------------------

    def backward(self, params=()) -> None:
        """Reverse-mode gradients from this scalar into the graph.

        Any tensors passed as `params` that the loss does not reach get
        explicit zero grads, so an optimizer can treat them uniformly.
        """
        if self.data.size != 1:
            raise ValidationError(
                f"backward needs a scalar loss, got shape {self.shape}"
            )
        if not self.requires_grad:
            raise ValidationError(
                "backward on a detached graph: loss does not depend on any "
                "parameter with requires_grad"
            )
        topo: list[Tensor] = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._prev:
                if id(p) not in seen:
                    stack.append((p, False))

        self._accumulate(np.ones_like(self.data))
        for node in reversed(topo):
            if node._backward is not None:
                node._backward(node.grad)
        for p in params:
            if p.grad is None:
                p.grad = np.zeros_like(p.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, grad={self.grad is not None})"


def parameter(data, name: str = "") -> Tensor:
    """A leaf tensor that requires grad."""
    return Tensor(data, requires_grad=True, name=name)

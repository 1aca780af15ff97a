"""Adam optimizer with bias correction.

Gradients are consumed by `step` and cleared afterwards, so a stale gradient
can never leak into the next update; calling `step` without a fresh backward
pass is an error.
"""

from __future__ import annotations

import numpy as np

from .autograd import Tensor
from .errors import ValidationError


class Adam:
    def __init__(self, params: list[Tensor], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if lr < 0:
            raise ValidationError(f"lr must be >= 0, got {lr}")
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self) -> None:
        for i, p in enumerate(self.params):
            if p.grad is None:
                raise ValidationError(
                    f"parameter '{p.name or i}' has no gradient; call "
                    "backward() before step()"
                )
        self.step_count += 1
        t = self.step_count
        b1c = 1.0 - self.beta1 ** t
        b2c = 1.0 - self.beta2 ** t
        for i, p in enumerate(self.params):
            g = p.grad
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g
            m_hat = self.m[i] / b1c
            v_hat = self.v[i] / b2c
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
            p.grad = None

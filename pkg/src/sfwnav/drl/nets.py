"""Dense ReLU networks with hand-written backpropagation, and Adam."""

from __future__ import annotations

import numpy as np


class MLP:
    """Fully connected network: ReLU on hidden layers, linear output.

    Parameters live in ``self.params`` as ``[W0, b0, W1, b1, ...]`` with
    ``W`` of shape ``(fan_in, fan_out)``; that list order is also the
    serialization order.
    """

    def __init__(self, sizes, rng: np.random.Generator | None = None, zero: bool = False):
        self.sizes = tuple(int(s) for s in sizes)
        if len(self.sizes) < 2:
            raise ValueError("need at least input and output sizes")
        self.params = []
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            if zero:
                self.params += [np.zeros((fan_in, fan_out)), np.zeros(fan_out)]
            else:
                bound = 1.0 / np.sqrt(fan_in)
                self.params += [rng.uniform(-bound, bound, (fan_in, fan_out)),
                                rng.uniform(-bound, bound, fan_out)]

    @property
    def shapes(self) -> list:
        return [p.shape for p in self.params]

    def copy(self) -> MLP:
        out = MLP.__new__(MLP)
        out.sizes = self.sizes
        out.params = [p.copy() for p in self.params]
        return out

    def forward(self, x):
        """Returns the output and the activations needed by :meth:`backward`."""
        h = np.asarray(x, dtype=float)
        acts = [h]
        n_layers = len(self.params) // 2
        for i in range(n_layers):
            W, b = self.params[2 * i], self.params[2 * i + 1]
            h = h @ W + b
            if i < n_layers - 1:
                h = np.maximum(h, 0.0)
            acts.append(h)
        if not np.all(np.isfinite(h)):
            raise FloatingPointError("non-finite network output")
        return h, acts

    def __call__(self, x):
        return self.forward(x)[0]

    def backward(self, acts, dout):
        """Gradients of ``sum(dout * output)`` w.r.t. params and the input."""
        grads = [None] * len(self.params)
        g = np.asarray(dout, dtype=float)
        n_layers = len(self.params) // 2
        for i in reversed(range(n_layers)):
            if i < n_layers - 1:
                g = g * (acts[i + 1] > 0.0)
            grads[2 * i] = acts[i].T @ g
            grads[2 * i + 1] = g.sum(axis=0)
            g = g @ self.params[2 * i].T
        return grads, g


class Adam:
    def __init__(self, params, lr: float = 3e-4, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params, grads):
        """In-place update of ``params``."""
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def polyak(target: MLP, source: MLP, tau: float):
    """``target <- tau * source + (1 - tau) * target``; tau 1 copies, tau 0 keeps."""
    for t, s in zip(target.params, source.params):
        if tau == 1.0:
            t[...] = s
        elif tau != 0.0:
            t *= 1.0 - tau
            t += tau * s

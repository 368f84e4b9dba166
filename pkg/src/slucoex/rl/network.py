"""Fully connected Q-network with hand-written backprop and Adam."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

ACTIVATIONS = ("relu", "tanh", "linear")
DEFAULT_HIDDEN = (256, 256, 512)
DEFAULT_ACTS = ("relu", "relu", "tanh")


def _act(name, z):
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    return z


def _act_grad(name, z, a):
    """Derivative of the activation, given pre-activation ``z`` and output ``a``."""
    if name == "relu":
        return (z > 0.0).astype(z.dtype)
    if name == "tanh":
        return 1.0 - a * a
    return np.ones_like(z)


class QNetwork:
    """Maps a state vector to one value per discrete action.

    Hidden layers use the activations in ``acts``; the output head is linear.
    The loss minimised by ``train_batch`` is the mean squared error between
    the value of the taken action and its target.
    """

    def __init__(self, n_in: int, n_out: int, hidden: Sequence[int] = DEFAULT_HIDDEN,
                 acts: Optional[Sequence[str]] = None, seed: int = 0,
                 rng: Optional[np.random.Generator] = None, init: bool = True, dtype="float64"):
        hidden = tuple(int(h) for h in hidden)
        if acts is None:
            acts = DEFAULT_ACTS if len(hidden) == 3 else ("relu",) * len(hidden)
        acts = tuple(acts)
        if len(acts) != len(hidden):
            raise ValueError("one activation per hidden layer")
        for a in acts:
            if a not in ACTIVATIONS:
                raise ValueError(f"unknown activation {a!r}")
        self.dtype = np.dtype(dtype)
        if self.dtype not in (np.float32, np.float64):
            raise ValueError("dtype must be float32 or float64")
        self.sizes = (int(n_in),) + hidden + (int(n_out),)
        self.acts = acts + ("linear",)
        self.W: list[np.ndarray] = []
        self.b: list[np.ndarray] = []
        rng = rng if rng is not None else np.random.default_rng(seed)
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            if init:
                lim = np.sqrt(6.0 / (fan_in + fan_out))
                self.W.append(rng.uniform(-lim, lim, size=(fan_in, fan_out)).astype(self.dtype))
            else:
                self.W.append(np.zeros((fan_in, fan_out), dtype=self.dtype))
            self.b.append(np.zeros(fan_out, dtype=self.dtype))
        self.reset_optimizer()

    def reset_optimizer(self):
        self.mW = [np.zeros_like(w) for w in self.W]
        self.vW = [np.zeros_like(w) for w in self.W]
        self.mb = [np.zeros_like(b) for b in self.b]
        self.vb = [np.zeros_like(b) for b in self.b]
        self.step = 0

    @property
    def n_in(self) -> int:
        return self.sizes[0]

    @property
    def n_out(self) -> int:
        return self.sizes[-1]

    # -- inference ---------------------------------------------------------------

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=self.dtype)
        if x.shape[-1] != self.n_in:
            raise ValueError(f"input length {x.shape[-1]} does not match network input {self.n_in}")
        h = x
        for W, b, act in zip(self.W, self.b, self.acts):
            h = _act(act, h @ W + b)
        return h

    __call__ = forward

    # -- training ----------------------------------------------------------------

    def _cache(self, X):
        zs, hs = [], [X]
        h = X
        for W, b, act in zip(self.W, self.b, self.acts):
            z = h @ W + b
            h = _act(act, z)
            zs.append(z)
            hs.append(h)
        return zs, hs

    def loss_and_grads(self, X: np.ndarray, y: np.ndarray, actions: np.ndarray):
        """Mean squared TD error over the batch and its parameter gradients."""
        X = np.atleast_2d(np.asarray(X, dtype=self.dtype))
        y = np.asarray(y, dtype=self.dtype).reshape(-1)
        actions = np.asarray(actions, dtype=np.intp).reshape(-1)
        n = len(X)
        zs, hs = self._cache(X)
        q = hs[-1]
        rows = np.arange(n)
        err = q[rows, actions] - y
        loss = float(np.mean(err.astype(float) ** 2))
        delta = np.zeros_like(q)
        delta[rows, actions] = 2.0 * err / n
        gW = [None] * len(self.W)
        gb = [None] * len(self.W)
        for k in range(len(self.W) - 1, -1, -1):
            delta = delta * _act_grad(self.acts[k], zs[k], hs[k + 1])
            gW[k] = hs[k].T @ delta
            gb[k] = delta.sum(axis=0)
            if k > 0:
                delta = delta @ self.W[k].T
        return loss, gW, gb

    def adam_step(self, gW, gb, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
                  eps: float = 1e-8) -> None:
        self.step += 1
        c1 = self.dtype.type(1.0 - beta1 ** self.step)
        c2 = self.dtype.type(1.0 - beta2 ** self.step)
        lr, beta1, beta2, eps = (self.dtype.type(v) for v in (lr, beta1, beta2, eps))
        for params, grads, ms, vs in ((self.W, gW, self.mW, self.vW), (self.b, gb, self.mb, self.vb)):
            for p, g, m, v in zip(params, grads, ms, vs):
                m *= beta1
                m += (1.0 - beta1) * g
                v *= beta2
                v += (1.0 - beta2) * g * g
                p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)

    def train_batch(self, X, y, actions, lr: float = 1e-3) -> float:
        loss, gW, gb = self.loss_and_grads(X, y, actions)
        self.adam_step(gW, gb, lr)
        return loss

    # -- copying -----------------------------------------------------------------

    def copy(self) -> "QNetwork":
        net = QNetwork.__new__(QNetwork)
        net.dtype = self.dtype
        net.sizes = self.sizes
        net.acts = self.acts
        net.W = [w.copy() for w in self.W]
        net.b = [b.copy() for b in self.b]
        net.mW = [m.copy() for m in self.mW]
        net.vW = [v.copy() for v in self.vW]
        net.mb = [m.copy() for m in self.mb]
        net.vb = [v.copy() for v in self.vb]
        net.step = self.step
        return net

    def load_params_from(self, other: "QNetwork") -> None:
        if other.sizes != self.sizes:
            raise ValueError("network shapes differ")
        for dst, src in zip(self.W + self.b, other.W + other.b):
            dst[...] = src

    def same_params(self, other: "QNetwork") -> bool:
        return self.sizes == other.sizes and all(
            np.array_equal(a, b) for a, b in zip(self.W + self.b, other.W + other.b))

    def flat_params(self) -> np.ndarray:
        return np.concatenate([np.concatenate([w.ravel(), b]) for w, b in zip(self.W, self.b)])

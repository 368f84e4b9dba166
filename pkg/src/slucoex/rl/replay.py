"""Fixed-capacity experience replay with first-in first-out eviction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Batch:
    s: np.ndarray
    a: np.ndarray
    r: np.ndarray
    s2: np.ndarray
    done: np.ndarray

    def __len__(self) -> int:
        return len(self.r)


class ReplayBuffer:
    """Ring buffer of ``(s, a, r, s', done)`` transitions.

    Storage is allocated on the first push, once the state width is known.
    """

    def __init__(self, capacity: int = 1000):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.size = 0
        self.head = 0  # next write position
        self.pushed = 0
        self._s = self._s2 = None

    def __len__(self) -> int:
        return self.size

    def push(self, s, a: int, r: float, s2, done: bool) -> None:
        s = np.asarray(s, dtype=float)
        s2 = np.asarray(s2, dtype=float)
        if not np.isfinite(r):
            raise ValueError("reward must be finite")
        if self._s is None:
            dim = s.shape[-1]
            self._s = np.zeros((self.capacity, dim))
            self._s2 = np.zeros((self.capacity, dim))
            self._a = np.zeros(self.capacity, dtype=np.intp)
            self._r = np.zeros(self.capacity)
            self._d = np.zeros(self.capacity, dtype=bool)
            self._id = np.zeros(self.capacity, dtype=np.int64)
        i = self.head
        self._s[i] = s
        self._s2[i] = s2
        self._a[i] = a
        self._r[i] = r
        self._d[i] = done
        self._id[i] = self.pushed
        self.pushed += 1
        self.head = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def _order(self) -> np.ndarray:
        """Slot indices from oldest to newest."""
        start = (self.head - self.size) % self.capacity
        return (start + np.arange(self.size)) % self.capacity

    def ids(self) -> list[int]:
        """Insertion serial numbers of the stored transitions, oldest first."""
        if self.size == 0:
            return []
        return self._id[self._order()].tolist()

    def sample(self, rng: np.random.Generator, n: int) -> Batch:
        """Uniform sample without replacement of ``min(n, size)`` transitions."""
        n = min(n, self.size)
        idx = np.sort(rng.choice(self.size, size=n, replace=False))
        return Batch(self._s[idx].copy(), self._a[idx].copy(), self._r[idx].copy(),
                     self._s2[idx].copy(), self._d[idx].copy())

    def all(self) -> Batch:
        idx = self._order()
        return Batch(self._s[idx].copy(), self._a[idx].copy(), self._r[idx].copy(),
                     self._s2[idx].copy(), self._d[idx].copy())

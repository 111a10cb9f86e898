"""Balanced binary partial-sum tree for O(log n) categorical sampling.

Internal nodes always equal the float sum of their two children, so a
bottom-up rebuild reproduces the incrementally maintained node values
bit-for-bit (parent = left + right is re-evaluated on every update path).
"""
from __future__ import annotations

import numpy as np


class SumTree:
    def __init__(self, values):
        values = np.asarray(values, dtype=float)
        self.n = len(values)
        cap = 1
        while cap < self.n:
            cap *= 2
        self.cap = cap
        self.tree = np.zeros(2 * cap)
        self.tree[cap:cap + self.n] = values
        for i in range(cap - 1, 0, -1):
            self.tree[i] = self.tree[2 * i] + self.tree[2 * i + 1]

    @property
    def total(self) -> float:
        return self.tree[1]

    def get(self, i: int) -> float:
        return self.tree[self.cap + i]

    def set(self, i: int, value: float) -> None:
        j = self.cap + i
        self.tree[j] = value
        j //= 2
        while j >= 1:
            self.tree[j] = self.tree[2 * j] + self.tree[2 * j + 1]
            j //= 2

    def sample(self, x: float) -> tuple[int, float]:
        """Locate the leaf i with prefix_sum(i) <= x < prefix_sum(i+1).

        Returns (i, remainder) where remainder = x - prefix_sum(i), i.e. the
        position of x within leaf i's mass; used to pick the event category
        without consuming a second uniform.
        """
        j = 1
        while j < self.cap:
            left = self.tree[2 * j]
            if x < left:
                j = 2 * j
            else:
                x -= left
                j = 2 * j + 1
        i = min(j - self.cap, self.n - 1)
        return i, x

    def rebuild(self) -> np.ndarray:
        """Fresh bottom-up node array from the current leaves (for coherence checks)."""
        fresh = self.tree.copy()
        for i in range(self.cap - 1, 0, -1):
            fresh[i] = fresh[2 * i] + fresh[2 * i + 1]
        return fresh

"""Fixed-capacity FIFO experience replay."""

from __future__ import annotations

import numpy as np

from .sac import Batch


class ReplayBuffer:
    def __init__(self, capacity: int, obs_dim: int, act_dim: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = int(capacity)
        self.obs = np.zeros((capacity, obs_dim))
        self.act = np.zeros((capacity, act_dim))
        self.rew = np.zeros(capacity)
        self.next_obs = np.zeros((capacity, obs_dim))
        self.done = np.zeros(capacity)
        self.head = 0  # next slot to write
        self.size = 0
        self.inserted = 0

    def __len__(self):
        return self.size

    def add(self, obs, act, rew, next_obs, done):
        i = self.head
        self.obs[i] = obs
        self.act[i] = act
        self.rew[i] = rew
        self.next_obs[i] = next_obs
        self.done[i] = float(done)
        self.head = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)
        self.inserted += 1

    def ordered_indices(self) -> np.ndarray:
        """Slots from oldest to newest."""
        start = self.head if self.size == self.capacity else 0
        return (start + np.arange(self.size)) % self.capacity

    def sample(self, rng: np.random.Generator, batch_size: int) -> Batch:
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, self.size, batch_size)
        return Batch(self.obs[idx], self.act[idx], self.rew[idx], self.next_obs[idx], self.done[idx])

    def state(self) -> dict:
        """Filled slots only (slot order kept), plus the ring bookkeeping."""
        n = self.size
        return {"obs": self.obs[:n], "act": self.act[:n], "rew": self.rew[:n], "next_obs": self.next_obs[:n],
                "done": self.done[:n], "meta": np.array([self.head, self.size, self.inserted, self.capacity])}

    def save(self, path):
        with open(path, "wb") as f:
            np.savez(f, **self.state())

    @classmethod
    def load(cls, path) -> ReplayBuffer:
        with np.load(path) as z:
            head, size, inserted, capacity = (int(x) for x in z["meta"])
            buf = cls(capacity, z["obs"].shape[1], z["act"].shape[1])
            for key in ("obs", "act", "rew", "next_obs", "done"):
                getattr(buf, key)[:size] = z[key]
        buf.head, buf.size, buf.inserted = head, size, inserted
        return buf

"""Feedforward Q-learning baseline over grounded propositional features.

A one-hidden-layer ReLU network maps the feature vector to one value per
action.  Training uses a FIFO replay buffer, a periodically synced target
network, epsilon-greedy exploration with a linear schedule, and an optional
first-visit bonus for entering rooms not yet seen in the episode.
"""

from __future__ import annotations

import hashlib
import json
from collections import deque
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from .grounding import N_FEATURES
from .world import ACTIONS, Action

N_ACTIONS = len(ACTIONS)
CHECKPOINT_FORMAT = "lnnrl-qfunction"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class AgentConfig:
    epsilon_start: float = 1.0
    epsilon_end: float = 0.1
    epsilon_decay_episodes: int = 20
    lr: float = 0.01
    gamma: float = 0.9
    replay_capacity: int = 10_000
    batch_size: int = 32
    target_sync: int = 100
    novelty_bonus: float = 0.02
    hidden: int = 64

    def __post_init__(self):
        for name in ("epsilon_start", "epsilon_end"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if self.epsilon_decay_episodes < 0 or self.replay_capacity < 1 or self.batch_size < 1:
            raise ValueError("schedule length, replay capacity and batch size must be positive")
        if self.target_sync < 1 or self.lr <= 0 or self.novelty_bonus < 0:
            raise ValueError("target_sync >= 1, lr > 0 and novelty_bonus >= 0 required")

    def epsilon(self, episode: int) -> float:
        """Linear decay from ``epsilon_start`` to ``epsilon_end``."""
        if self.epsilon_decay_episodes == 0:
            return self.epsilon_end
        frac = min(1.0, episode / self.epsilon_decay_episodes)
        return self.epsilon_start + frac * (self.epsilon_end - self.epsilon_start)

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


class Transition(NamedTuple):
    features: tuple
    action: int
    reward: float
    next_features: tuple
    done: bool


class QFunction:
    """features (n_in) -> ReLU hidden layer -> one Q-value per action.

    The output layer starts at zero so every Q-value is exactly 0 before
    training, while the random hidden layer keeps gradients flowing.
    """

    def __init__(self, n_in: int = N_FEATURES, hidden: int = 64, n_out: int = N_ACTIONS,
                 rng: np.random.Generator | None = None):
        rng = np.random.default_rng(0) if rng is None else rng
        self.w1 = rng.normal(0.0, np.sqrt(2.0 / n_in), size=(n_in, hidden))
        self.b1 = np.zeros(hidden)
        self.w2 = np.zeros((hidden, n_out))
        self.b2 = np.zeros(n_out)

    PARAMS = ("w1", "b1", "w2", "b2")

    def __call__(self, features) -> np.ndarray:
        x = np.asarray(features, dtype=float)
        h = np.maximum(x @ self.w1 + self.b1, 0.0)
        return h @ self.w2 + self.b2

    def copy(self) -> "QFunction":
        other = QFunction.__new__(QFunction)
        for name in self.PARAMS:
            setattr(other, name, getattr(self, name).copy())
        return other

    def load_from(self, other: "QFunction") -> None:
        for name in self.PARAMS:
            getattr(self, name)[...] = getattr(other, name)

    def flat(self) -> np.ndarray:
        return np.concatenate([getattr(self, n).ravel() for n in self.PARAMS])

    def set_flat(self, flat) -> None:
        flat = np.asarray(flat, dtype=float)
        pos = 0
        for name in self.PARAMS:
            arr = getattr(self, name)
            arr[...] = flat[pos:pos + arr.size].reshape(arr.shape)
            pos += arr.size
        if pos != flat.size:
            raise ValueError("parameter vector has the wrong length")

    def save(self, path, config: AgentConfig) -> None:
        payload = {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "config_digest": config.digest(),
            "shapes": {n: list(getattr(self, n).shape) for n in self.PARAMS},
            "params": self.flat().tolist(),
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)

    @classmethod
    def load(cls, path, config: AgentConfig | None = None) -> "QFunction":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        if payload.get("format") != CHECKPOINT_FORMAT or payload.get("version") != CHECKPOINT_VERSION:
            raise ValueError("not a version-1 Q-function checkpoint")
        if config is not None and payload["config_digest"] != config.digest():
            raise ValueError("checkpoint was trained with a different agent config")
        shapes = payload["shapes"]
        qf = cls.__new__(cls)
        for name in cls.PARAMS:
            setattr(qf, name, np.zeros(shapes[name]))
        qf.set_flat(payload["params"])
        return qf


def q_values(qf: QFunction, features) -> np.ndarray:
    return qf(features)


def ranked_actions(qf: QFunction, features) -> list[Action]:
    """All actions by descending Q; ties keep the canonical action order."""
    q = q_values(qf, features)
    return [ACTIONS[i] for i in sorted(range(N_ACTIONS), key=lambda i: (-q[i], i))]


def select_baseline(qf: QFunction, features, epsilon: float, rng: np.random.Generator) -> Action:
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    if rng.random() < epsilon:
        return ACTIONS[rng.integers(N_ACTIONS)]
    return ranked_actions(qf, features)[0]


def novelty_bonus(room: int, visit_counts: dict, coefficient: float) -> float:
    """``coefficient`` on the first entry into ``room`` this episode, else 0.

    ``visit_counts`` must already include the current entry.
    """
    return coefficient if visit_counts.get(room, 0) == 1 else 0.0


def _batch_arrays(batch):
    x = np.array([t.features for t in batch], dtype=float)
    a = np.array([int(t.action) for t in batch])
    r = np.array([t.reward for t in batch], dtype=float)
    x2 = np.array([t.next_features for t in batch], dtype=float)
    done = np.array([t.done for t in batch], dtype=float)
    return x, a, r, x2, done


def td_targets(target_qf: QFunction, batch, gamma: float) -> np.ndarray:
    _, _, r, x2, done = _batch_arrays(batch)
    return r + gamma * (1.0 - done) * target_qf(x2).max(axis=1)


def td_loss(qf: QFunction, target_qf: QFunction, batch, gamma: float) -> float:
    x, a, _, _, _ = _batch_arrays(batch)
    q = qf(x)[np.arange(len(batch)), a]
    return float(np.mean((q - td_targets(target_qf, batch, gamma)) ** 2))


def td_loss_and_grad(qf: QFunction, target_qf: QFunction, batch, gamma: float):
    """Mean squared TD error and its gradient w.r.t. the online parameters."""
    x, a, _, _, _ = _batch_arrays(batch)
    y = td_targets(target_qf, batch, gamma)
    n = len(batch)
    pre = x @ qf.w1 + qf.b1
    h = np.maximum(pre, 0.0)
    q = h @ qf.w2 + qf.b2
    err = q[np.arange(n), a] - y
    dq = np.zeros_like(q)
    dq[np.arange(n), a] = 2.0 * err / n
    dh = (dq @ qf.w2.T) * (pre > 0)
    grads = {"w2": h.T @ dq, "b2": dq.sum(axis=0), "w1": x.T @ dh, "b1": dh.sum(axis=0)}
    return float(np.mean(err ** 2)), grads


def learn_step(qf: QFunction, target_qf: QFunction, batch, gamma: float, lr: float) -> float:
    """One SGD step on the batch; returns the pre-step mean TD loss."""
    if not batch:
        raise ValueError("empty batch")
    loss, grads = td_loss_and_grad(qf, target_qf, batch, gamma)
    for name, g in grads.items():
        getattr(qf, name)[...] -= lr * g
    return loss


class ReplayBuffer:
    def __init__(self, capacity: int):
        self.capacity = capacity
        self._items: deque = deque(maxlen=capacity)

    def __len__(self):
        return len(self._items)

    def add(self, transition: Transition) -> None:
        self._items.append(transition)

    def sample(self, n: int, rng: np.random.Generator) -> list[Transition]:
        idx = rng.integers(len(self._items), size=n)
        return [self._items[i] for i in idx]


class QAgent:
    """Online/target networks, replay buffer and the update schedule."""

    def __init__(self, config: AgentConfig, n_features: int = N_FEATURES,
                 rng: np.random.Generator | None = None):
        self.config = config
        self.rng = np.random.default_rng(0) if rng is None else rng
        self.qf = QFunction(n_features, config.hidden, N_ACTIONS, self.rng)
        self.target = self.qf.copy()
        self.buffer = ReplayBuffer(config.replay_capacity)
        self.updates = 0
        self.env_steps = 0

    def sync_target(self) -> None:
        self.target.load_from(self.qf)

    def observe(self, transition: Transition) -> float | None:
        """Store a transition and learn from a replay batch once enough are stored."""
        self.buffer.add(transition)
        self.env_steps += 1
        loss = None
        cfg = self.config
        if len(self.buffer) >= cfg.batch_size:
            batch = self.buffer.sample(cfg.batch_size, self.rng)
            loss = learn_step(self.qf, self.target, batch, cfg.gamma, cfg.lr)
            self.updates += 1
        if self.env_steps % cfg.target_sync == 0:
            self.sync_target()
        return loss

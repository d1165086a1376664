"""Discrete Q-network agent over the trading MDP.

The network maps the observation window to one Q-value per discrete action.
Targets come from a hard-synced copy of the network; exploration is
epsilon-greedy with an exponentially decaying epsilon.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from ..neuralnet import (
    AdamState,
    adam_step,
    backward,
    checkpoint_payload,
    clone,
    create_mlp,
    forward,
    get_params,
    make_dropout_masks,
    net_from_payload,
    set_params,
)
from .replay import ReplayBuffer, Transition
from .schedules import DecaySchedule, schedule_value


@dataclass(frozen=True)
class DqnConfig:
    gamma: float = 0.99
    epsilon: DecaySchedule = field(default_factory=lambda: DecaySchedule(1.0, 0.05, 50.0))
    target_sync: int = 100  # hard-copy period, in updates
    batch_size: int = 64
    learning_rate: float = 1e-3
    actions: tuple[float, ...] = (-1.0, 1.0)
    buffer_capacity: int = 100_000
    warmup_episodes: int = 10
    hidden: tuple[int, ...] = (64, 32)
    dropout: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        if self.target_sync < 1:
            raise ValueError(f"target_sync must be >= 1, got {self.target_sync}")
        if len(self.actions) < 2:
            raise ValueError("need at least two discrete actions")
        if any(not -1.0 <= a <= 1.0 for a in self.actions):
            raise ValueError("discrete actions must lie in [-1, 1]")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must lie in [0, 1), got {self.dropout}")

    def hash(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def dqn_target(r: float, terminal: bool, gamma: float, target_q_next) -> float:
    """y = r for terminal transitions, else r + gamma * max_a' Q_target(s', a')."""
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"gamma must lie in [0, 1), got {gamma}")
    if terminal:
        return r
    q = np.asarray(target_q_next, dtype=np.float64)
    if q.size == 0:
        raise ValueError("empty target Q vector")
    return r + gamma * float(q.max())


class DqnAgent:
    def __init__(self, window: int, config: DqnConfig | None = None, seed: int = 0):
        self.window = window
        self.config = config or DqnConfig()
        cfg = self.config
        rng = np.random.default_rng([seed, 0xD99])
        self.net = create_mlp((window, *cfg.hidden, len(cfg.actions)), rng)
        self.target_net = clone(self.net)
        self.opt = AdamState.create(get_params(self.net), lr=cfg.learning_rate)
        self.buffer = ReplayBuffer(cfg.buffer_capacity)
        self.updates = 0
        self.episodes_trained = 0

    # -- acting ---------------------------------------------------------

    def q_values(self, state) -> np.ndarray:
        return forward(self.net, state)

    def greedy_index(self, state) -> int:
        # np.argmax breaks ties toward the lowest index
        return int(np.argmax(self.q_values(state)))

    def policy(self, state) -> float:
        return self.config.actions[self.greedy_index(state)]

    def explore_action(self, state, episode: int, rng: np.random.Generator) -> float:
        eps = schedule_value(self.config.epsilon, episode)
        if rng.random() < eps:
            return self.random_action(rng)
        return self.policy(state)

    def random_action(self, rng: np.random.Generator) -> float:
        return float(self.config.actions[rng.integers(len(self.config.actions))])

    def store(self, transition: Transition) -> None:
        self.buffer.push(transition)

    # -- learning -------------------------------------------------------

    def _action_index(self, action: float) -> int:
        for i, a in enumerate(self.config.actions):
            if a == action:
                return i
        raise ValueError(f"action {action} not in the discrete action set {self.config.actions}")

    def update(self, episode: int, rng: np.random.Generator) -> dict:
        """One MSE step on the taken-action Q-values; periodic hard target sync."""
        cfg = self.config
        if len(self.buffer) < cfg.batch_size:
            raise ValueError(f"buffer holds {len(self.buffer)} < batch size {cfg.batch_size}")
        batch = self.buffer.sample(cfg.batch_size, rng)
        n = len(batch)
        s = np.stack([tr.state for tr in batch])
        idx = np.array([self._action_index(tr.action) for tr in batch])
        r = np.array([tr.reward for tr in batch])
        s2 = np.stack([tr.next_state for tr in batch])
        term = np.array([tr.terminal for tr in batch], dtype=np.float64)

        q_next = forward(self.target_net, s2)
        y = r + cfg.gamma * (1.0 - term) * q_next.max(axis=1)

        masks = make_dropout_masks(self.net, cfg.dropout, rng)
        q = forward(self.net, s, dropout_masks=masks)
        taken = q[np.arange(n), idx]
        resid = taken - y
        loss = float(np.mean(resid**2))

        upstream = np.zeros_like(q)
        upstream[np.arange(n), idx] = 2.0 * resid / n
        grads, _ = backward(self.net, s, upstream, dropout_masks=masks)
        new_params, _ = adam_step(get_params(self.net), grads, self.opt)
        set_params(self.net, new_params)

        self.updates += 1
        if self.updates % cfg.target_sync == 0:
            self.target_net = clone(self.net)
        return {"loss": loss, "epsilon": schedule_value(cfg.epsilon, episode)}

    # -- snapshots ------------------------------------------------------

    def snapshot(self) -> dict:
        return {
            "net": [p.copy() for p in get_params(self.net)],
            "target": [p.copy() for p in get_params(self.target_net)],
        }

    def restore(self, snap: dict) -> None:
        set_params(self.net, snap["net"])
        set_params(self.target_net, snap["target"])

    def save(self, path) -> None:
        payload = {
            "version": np.array(1),
            "config_hash": np.array(self.config.hash()),
            "episodes": np.array(self.episodes_trained),
        }
        payload.update(checkpoint_payload(self.net, prefix="net."))
        payload.update(checkpoint_payload(self.target_net, prefix="target."))
        with open(path, "wb") as fh:
            np.savez(fh, **payload)

    def load(self, path) -> None:
        with np.load(path, allow_pickle=False) as data:
            if str(data["config_hash"]) != self.config.hash():
                raise ValueError("checkpoint was written with a different configuration")
            self.net = net_from_payload(data, prefix="net.")
            self.target_net = net_from_payload(data, prefix="target.")
            self.episodes_trained = int(data["episodes"])

"""Twin-delayed deterministic policy gradient over the trading MDP.

Actor maps the observation window to one action in (-1, 1) via a tanh head;
two critics score (window, action) pairs. Both critics regress every update
onto the shared min-critic target; the actor and the three target nets move
only every ``policy_delay`` updates.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from ..neuralnet import (
    AdamState,
    Mlp,
    adam_step,
    backward,
    checkpoint_payload,
    clip_gradients,
    clone,
    copy_params,
    create_mlp,
    forward,
    get_params,
    net_from_payload,
    set_params,
    soft_update,
)
from .replay import ReplayBuffer, Transition
from .schedules import DecaySchedule, schedule_value


@dataclass(frozen=True)
class Td3Config:
    gamma: float = 0.99
    tau: float = 0.005
    policy_delay: int = 2
    batch_size: int = 64
    warmup_episodes: int = 10
    exploration_noise: DecaySchedule = field(default_factory=lambda: DecaySchedule(0.5, 0.05, 50.0))
    policy_noise: DecaySchedule = field(default_factory=lambda: DecaySchedule(0.4, 0.1, 50.0))
    noise_clip: DecaySchedule = field(default_factory=lambda: DecaySchedule(0.5, 0.2, 50.0))
    action_low: float = -1.0
    action_high: float = 1.0
    actor_lr: float = 1e-3
    critic_lr: float = 1e-3
    grad_clip_norm: float = 1.0
    buffer_capacity: int = 100_000
    actor_hidden: tuple[int, ...] = (64, 32)
    critic_hidden: tuple[int, ...] = (64, 32)

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        if self.action_low >= self.action_high:
            raise ValueError("action_low must be below action_high")
        if self.action_low < -1.0 or self.action_high > 1.0:
            raise ValueError("action bounds must stay within [-1, 1]")
        if self.batch_size < 1 or self.policy_delay < 1:
            raise ValueError("batch_size and policy_delay must be >= 1")

    def hash(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def td3_select_action(actor: Mlp, state, sigma: float, rng: np.random.Generator) -> float:
    """Actor output plus N(0, sigma) exploration noise, clamped to [-1, 1]."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    a = float(forward(actor, state)[0])
    if sigma > 0:
        a += float(rng.normal(0.0, sigma))
    return float(np.clip(a, -1.0, 1.0))


def td3_target_action(
    actor_target: Mlp,
    next_state,
    sigma_tilde: float,
    noise_clip: float,
    a_low: float,
    a_high: float,
    rng,
) -> float:
    """Smoothed target action: clip(pi'(s') + clip(N(0, sigma~), -K, K), a1, a2)."""
    if sigma_tilde < 0 or noise_clip < 0:
        raise ValueError("noise scale and clip bound must be >= 0")
    if a_low >= a_high:
        raise ValueError("a_low must be below a_high")
    a = float(forward(actor_target, next_state)[0])
    eps = float(rng.normal(0.0, sigma_tilde)) if sigma_tilde > 0 else 0.0
    eps = float(np.clip(eps, -noise_clip, noise_clip))
    return float(np.clip(a + eps, a_low, a_high))


def td3_critic_target(r: float, terminal: bool, gamma: float, q1_next: float, q2_next: float) -> float:
    """y = r for terminal transitions, else r + gamma * min(q1', q2')."""
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"gamma must lie in [0, 1), got {gamma}")
    if terminal:
        return r
    return r + gamma * min(q1_next, q2_next)


def actor_gradient(actor: Mlp, critic: Mlp, states: np.ndarray):
    """Gradient of J = mean_i Q(s_i, pi(s_i)) w.r.t. the actor parameters.

    dQ/da is taken from the critic's input gradient at the action slot and
    chained through the actor. Returns (grads, J).
    """
    n = states.shape[0]
    a_pi = forward(actor, states)
    x = np.hstack([states, a_pi])
    q = forward(critic, x)
    _, dx = backward(critic, x, np.full((n, 1), 1.0 / n))
    da = dx[:, states.shape[1]:]
    grads, _ = backward(actor, states, da)
    return grads, float(np.mean(q))


class Td3Agent:
    def __init__(self, window: int, config: Td3Config | None = None, seed: int = 0):
        self.window = window
        self.config = config or Td3Config()
        cfg = self.config
        rng = np.random.default_rng([seed, 0x7D3])
        self.actor = create_mlp(
            (window, *cfg.actor_hidden, 1), rng, hidden_activation="relu", output_activation="tanh"
        )
        self.critic1 = create_mlp((window + 1, *cfg.critic_hidden, 1), rng)
        self.critic2 = create_mlp((window + 1, *cfg.critic_hidden, 1), rng)
        self.actor_target = clone(self.actor)
        self.critic1_target = clone(self.critic1)
        self.critic2_target = clone(self.critic2)
        self.actor_opt = AdamState.create(get_params(self.actor), lr=cfg.actor_lr)
        self.critic1_opt = AdamState.create(get_params(self.critic1), lr=cfg.critic_lr)
        self.critic2_opt = AdamState.create(get_params(self.critic2), lr=cfg.critic_lr)
        self.buffer = ReplayBuffer(cfg.buffer_capacity)
        self.updates = 0
        self.episodes_trained = 0

    # -- acting ---------------------------------------------------------

    def policy(self, state) -> float:
        """Deterministic (evaluation) action."""
        return float(np.clip(float(forward(self.actor, state)[0]), -1.0, 1.0))

    def explore_action(self, state, episode: int, rng: np.random.Generator) -> float:
        sigma = schedule_value(self.config.exploration_noise, episode)
        return td3_select_action(self.actor, state, sigma, rng)

    def random_action(self, rng: np.random.Generator) -> float:
        return float(rng.uniform(self.config.action_low, self.config.action_high))

    def store(self, transition: Transition) -> None:
        self.buffer.push(transition)

    # -- learning -------------------------------------------------------

    def _batch_arrays(self, batch: list[Transition]):
        s = np.stack([tr.state for tr in batch])
        a = np.array([[tr.action] for tr in batch])
        r = np.array([tr.reward for tr in batch])
        s2 = np.stack([tr.next_state for tr in batch])
        term = np.array([tr.terminal for tr in batch], dtype=np.float64)
        return s, a, r, s2, term

    def update(self, episode: int, rng: np.random.Generator) -> dict:
        """One gradient step on both critics, delayed actor/target step."""
        cfg = self.config
        if len(self.buffer) < cfg.batch_size:
            raise ValueError(f"buffer holds {len(self.buffer)} < batch size {cfg.batch_size}")
        batch = self.buffer.sample(cfg.batch_size, rng)
        s, a, r, s2, term = self._batch_arrays(batch)
        n = len(batch)

        sigma_t = schedule_value(cfg.policy_noise, episode)
        clip_k = schedule_value(cfg.noise_clip, episode)
        a2 = forward(self.actor_target, s2)
        eps = np.clip(rng.normal(0.0, sigma_t, size=(n, 1)) if sigma_t > 0 else np.zeros((n, 1)),
                      -clip_k, clip_k)
        a2 = np.clip(a2 + eps, cfg.action_low, cfg.action_high)

        x2 = np.hstack([s2, a2])
        q1_next = forward(self.critic1_target, x2)[:, 0]
        q2_next = forward(self.critic2_target, x2)[:, 0]
        y = r + cfg.gamma * (1.0 - term) * np.minimum(q1_next, q2_next)

        x = np.hstack([s, a])
        losses = []
        for critic, opt in ((self.critic1, self.critic1_opt), (self.critic2, self.critic2_opt)):
            q = forward(critic, x)[:, 0]
            resid = q - y
            losses.append(float(np.mean(resid**2)))
            grads, _ = backward(critic, x, (2.0 * resid / n)[:, None])
            new_params, _ = adam_step(get_params(critic), grads, opt)
            set_params(critic, new_params)

        diag = {
            "loss": 0.5 * (losses[0] + losses[1]),
            "critic1_loss": losses[0],
            "critic2_loss": losses[1],
            "actor_updated": False,
        }
        self.updates += 1
        if self.updates % cfg.policy_delay == 0:
            diag["actor_updated"] = True
            # Ascend J = mean(Q1(s, pi(s))): chain dQ/da through the actor.
            actor_grads, _ = actor_gradient(self.actor, self.critic1, s)
            actor_grads = clip_gradients(actor_grads, cfg.grad_clip_norm)
            descent = [-g for g in actor_grads]
            new_params, _ = adam_step(get_params(self.actor), descent, self.actor_opt)
            set_params(self.actor, new_params)

            for target, source in (
                (self.actor_target, self.actor),
                (self.critic1_target, self.critic1),
                (self.critic2_target, self.critic2),
            ):
                set_params(target, soft_update(get_params(target), get_params(source), cfg.tau))
        return diag

    # -- snapshots ------------------------------------------------------

    def snapshot(self) -> dict:
        """Copies of all learned parameters, for checkpoint selection."""
        return {
            "actor": copy_params(get_params(self.actor)),
            "critic1": copy_params(get_params(self.critic1)),
            "critic2": copy_params(get_params(self.critic2)),
            "actor_target": copy_params(get_params(self.actor_target)),
            "critic1_target": copy_params(get_params(self.critic1_target)),
            "critic2_target": copy_params(get_params(self.critic2_target)),
        }

    def restore(self, snap: dict) -> None:
        set_params(self.actor, snap["actor"])
        set_params(self.critic1, snap["critic1"])
        set_params(self.critic2, snap["critic2"])
        set_params(self.actor_target, snap["actor_target"])
        set_params(self.critic1_target, snap["critic1_target"])
        set_params(self.critic2_target, snap["critic2_target"])

    _NET_NAMES = ("actor", "critic1", "critic2", "actor_target", "critic1_target", "critic2_target")

    def save(self, path) -> None:
        payload = {
            "version": np.array(1),
            "config_hash": np.array(self.config.hash()),
            "episodes": np.array(self.episodes_trained),
        }
        for name in self._NET_NAMES:
            payload.update(checkpoint_payload(getattr(self, name), prefix=f"{name}."))
        with open(path, "wb") as fh:
            np.savez(fh, **payload)

    def load(self, path) -> None:
        with np.load(path, allow_pickle=False) as data:
            if str(data["config_hash"]) != self.config.hash():
                raise ValueError("checkpoint was written with a different configuration")
            for name in self._NET_NAMES:
                setattr(self, name, net_from_payload(data, prefix=f"{name}."))
            self.episodes_trained = int(data["episodes"])

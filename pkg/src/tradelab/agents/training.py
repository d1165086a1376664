"""Shared episodic training loop for the network agents.

Warmup episodes act uniformly at random and only fill the replay buffer.
Every later episode is one full chronological pass over the training segment
with one gradient update per environment step (once the buffer can serve a
batch). The decay schedules run on the post-warmup episode index.
"""

from __future__ import annotations

import numpy as np

from ..data import PriceSeries
from ..env import EnvConfig, TradingEnv
from .replay import Transition


def train(agent, segment: PriceSeries, env_config: EnvConfig, episodes: int, seed: int,
          on_episode_end=None) -> list[dict]:
    """Train ``agent`` in place; returns one log record per episode.

    ``on_episode_end(agent, episode)`` runs after every episode, e.g. for
    validation-based checkpoint selection. Fully reproducible from ``seed``.
    """
    if episodes < 1:
        raise ValueError(f"episodes must be >= 1, got {episodes}")
    env = TradingEnv(segment, env_config)
    rng = np.random.default_rng([seed, 0x7E4])
    warmup = agent.config.warmup_episodes
    log: list[dict] = []
    for episode in range(episodes):
        warming = episode < warmup
        learn_episode = max(0, episode - warmup)
        state, obs = env.reset()
        total_reward = 0.0
        losses: list[float] = []
        while not state.terminal:
            if warming:
                action = agent.random_action(rng)
            else:
                action = agent.explore_action(obs, learn_episode, rng)
            outcome = env.step(action)
            agent.store(Transition(
                state=obs,
                action=action,
                reward=outcome.reward,
                next_state=outcome.observation,
                terminal=outcome.next_state.terminal,
            ))
            if not warming and len(agent.buffer) >= agent.config.batch_size:
                diag = agent.update(learn_episode, rng)
                losses.append(diag["loss"])
            total_reward += outcome.reward
            state, obs = outcome.next_state, outcome.observation
        agent.episodes_trained += 1
        log.append({
            "episode": episode,
            "warmup": warming,
            "total_reward": total_reward,
            "final_cash": state.cash,
            "mean_loss": float(np.mean(losses)) if losses else float("nan"),
        })
        if on_episode_end is not None:
            on_episode_end(agent, episode)
    return log

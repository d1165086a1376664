"""Exponential decay schedules shared by exploration noise, target-policy
noise, the noise clip bound, and epsilon-greedy exploration."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class DecaySchedule:
    initial: float
    final: float
    decay: float

    def __post_init__(self):
        if self.initial < 0 or self.final < 0:
            raise ValueError("schedule endpoints must be non-negative")
        if self.final > self.initial:
            raise ValueError(f"final {self.final} exceeds initial {self.initial}")
        if not self.decay > 0:
            raise ValueError(f"decay must be positive, got {self.decay}")


def schedule_value(sched: DecaySchedule, episode: int) -> float:
    """final + (initial - final) * exp(-episode / decay); non-increasing in episode."""
    if episode < 0:
        raise ValueError(f"episode must be >= 0, got {episode}")
    return sched.final + (sched.initial - sched.final) * math.exp(-episode / sched.decay)

"""State adjustment mechanism: discrete PID on the raw state, state error, rewards.

The PID acts directly on the 6-channel state signal (there is no setpoint).
Integral is the rectangle rule, derivative the backward difference, and both
are zero on the first call of an episode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import UsageError

LOSS_EPS = 1e-12
LOSS_MAX = 1e6
LOG_GAP = 1e-6
TRIG_MAX = math.pi / 2 - 1e-6


@dataclass(frozen=True)
class PidGains:
    kp: float = 1.0
    ki: float = 0.5
    kd: float = 0.2

    def __post_init__(self):
        if not all(math.isfinite(g) for g in (self.kp, self.ki, self.kd)):
            raise UsageError("PID gains must be finite")


@dataclass(frozen=True)
class PidState:
    integral: np.ndarray = field(default_factory=lambda: np.zeros(6))
    prev: np.ndarray = field(default_factory=lambda: np.zeros(6))
    initialized: bool = False


def modulate(pid: PidState, gains: PidGains, s, dt: float) -> tuple[np.ndarray, PidState]:
    """Apply one PID adjustment to state ``s``.

    Returns the adjusted state and the next PID state; ``pid`` is not modified.
    """
    s = np.asarray(s, dtype=np.float64)
    if not pid.initialized:
        adjusted = gains.kp * s
        return adjusted, PidState(np.zeros_like(s), s.copy(), True)
    if not dt > 0.0:
        raise UsageError(f"dt must be positive once the PID is running, got {dt!r}")
    integral = pid.integral + s * dt
    derivative = (s - pid.prev) / dt
    adjusted = gains.kp * s + gains.ki * integral + gains.kd * derivative
    return adjusted, PidState(integral, s.copy(), True)


def state_error(a, b) -> float:
    """Mean squared difference over the state channels."""
    d = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    return float(np.mean(d * d))


class RewardKind(str, Enum):
    INVERSE_PROPORTION = "inverse_proportion"
    SIGMOID = "sigmoid"
    INVERSE_LOG = "inverse_log"
    INVERSE_QUADRATIC = "inverse_quadratic"
    INVERSE_SIN = "inverse_sin"
    INVERSE_COS = "inverse_cos"
    INVERSE_TAN = "inverse_tan"

    @classmethod
    def parse(cls, name: str | RewardKind) -> RewardKind:
        try:
            return cls(name)
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise UsageError(f"unknown reward {name!r}; valid names: {valid}") from None


REWARD_NAMES = tuple(k.value for k in RewardKind)


def _sigmoid_reward(loss: float) -> float:
    # 1 / (1 + e^loss), written to avoid overflow for large loss
    e = math.exp(-loss)
    return e / (1.0 + e)


def reward(kind: RewardKind | str, loss: float) -> float:
    """Reward for an adjustment whose state error is ``loss``.

    ``loss`` is clamped to ``[LOSS_EPS, LOSS_MAX]`` first so every kind is
    finite; ``inverse_log`` also keeps ``loss`` at least ``LOG_GAP`` away from
    1, and the trigonometric kinds cap ``loss`` at ``TRIG_MAX``.
    """
    kind = RewardKind.parse(kind)
    if loss < 0 or math.isnan(loss):
        raise UsageError(f"loss must be non-negative, got {loss!r}")
    x = min(max(loss, LOSS_EPS), LOSS_MAX)
    if kind is RewardKind.SIGMOID:
        return _sigmoid_reward(x)
    if kind is RewardKind.INVERSE_PROPORTION:
        return 1.0 / x
    if kind is RewardKind.INVERSE_QUADRATIC:
        return 1.0 / (x * x)
    if kind is RewardKind.INVERSE_LOG:
        if abs(x - 1.0) < LOG_GAP:
            x = 1.0 - LOG_GAP if x < 1.0 else 1.0 + LOG_GAP
        return 1.0 / math.log(x)
    x = min(x, TRIG_MAX)
    if kind is RewardKind.INVERSE_SIN:
        return 1.0 / math.sin(x)
    if kind is RewardKind.INVERSE_COS:
        return 1.0 / math.cos(x)
    return 1.0 / math.tan(x)


def zscore(states: np.ndarray) -> np.ndarray:
    """Per-channel standardisation; constant channels are only centred."""
    states = np.asarray(states, dtype=np.float64)
    mean = states.mean(axis=0)
    std = states.std(axis=0)
    std[std == 0.0] = 1.0
    return (states - mean) / std

"""DQN agent whose two actions are "PID-adjust the state" and "leave it alone"."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from enum import IntEnum
from typing import NamedTuple

import numpy as np

from . import qnet
from .errors import UsageError
from .modulation import PidGains, PidState, RewardKind, modulate, reward, state_error


class Action(IntEnum):
    ADJUST = 0
    NO_ADJUST = 1


# upper-case aliases accepted in config files
HYPER_ALIASES = {
    "BATCH_SIZE": "batch_size",
    "LR": "lr",
    "EPSILON": "epsilon",
    "GAMMA": "gamma",
    "TARGET_REPLACE_ITER": "target_replace_iter",
    "MEMORY_CAPACITY": "memory_capacity",
    "N_ACTIONS": "n_actions",
    "N_STATES": "n_states",
}


@dataclass(frozen=True)
class Hyperparams:
    batch_size: int = 32
    lr: float = 0.001
    epsilon: float = 0.9
    gamma: float = 0.9
    target_replace_iter: int = 100
    memory_capacity: int = 2000
    n_actions: int = 2
    n_states: int = 6
    kp: float = 1.0
    ki: float = 0.5
    kd: float = 0.2
    reward_kind: str = "sigmoid"
    episodes: int = 20
    seed: int = 0
    optimizer: str = "adam"
    learn_after_full: bool = False
    normalize_states: bool = False

    def __post_init__(self):
        RewardKind.parse(self.reward_kind)
        if self.n_states != qnet.N_STATES or self.n_actions != qnet.N_ACTIONS:
            raise UsageError(
                f"network is fixed at {qnet.N_STATES} states / {qnet.N_ACTIONS} actions"
            )
        for name in ("batch_size", "target_replace_iter", "memory_capacity", "episodes"):
            if getattr(self, name) < 1:
                raise UsageError(f"{name} must be positive")
        if not 0.0 <= self.epsilon <= 1.0:
            raise UsageError("epsilon must lie in [0, 1]")
        if not 0.0 <= self.gamma <= 1.0:
            raise UsageError("gamma must lie in [0, 1]")
        if not (self.lr > 0 and math.isfinite(self.lr)):
            raise UsageError("lr must be positive")
        if self.optimizer not in ("adam", "sgd"):
            raise UsageError(f"unknown optimizer {self.optimizer!r}")
        PidGains(self.kp, self.ki, self.kd)

    @property
    def gains(self) -> PidGains:
        return PidGains(self.kp, self.ki, self.kd)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict, base: Hyperparams | None = None) -> Hyperparams:
        """Build from a mapping of field names (or upper-case aliases) onto ``base``."""
        fields = {f.name: f for f in dataclasses.fields(cls)}
        updates = {}
        for key, value in d.items():
            name = HYPER_ALIASES.get(key, key)
            if name not in fields:
                raise UsageError(f"unknown hyperparameter {key!r}")
            updates[name] = value
        return dataclasses.replace(base or cls(), **updates)

    @classmethod
    def from_json(cls, path) -> Hyperparams:
        with open(path, encoding="utf-8") as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise UsageError(f"config {path}: {exc}") from None
        if not isinstance(d, dict):
            raise UsageError("config must be a JSON object")
        return cls.from_dict(d)


class Transition(NamedTuple):
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray


class ReplayBuffer:
    """Fixed-capacity FIFO ring of transitions stored as column arrays."""

    def __init__(self, capacity: int = 2000, n_states: int = qnet.N_STATES):
        self.capacity = capacity
        self.states = np.zeros((capacity, n_states))
        self.actions = np.zeros(capacity, dtype=np.intp)
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, n_states))
        self.cursor = 0
        self.total_writes = 0

    def __len__(self) -> int:
        return min(self.total_writes, self.capacity)

    def __getitem__(self, slot: int) -> Transition:
        if not 0 <= slot < len(self):
            raise IndexError(slot)
        return Transition(
            self.states[slot].copy(), int(self.actions[slot]), float(self.rewards[slot]),
            self.next_states[slot].copy(),
        )

    def store(self, tr: Transition) -> None:
        i = self.cursor
        self.states[i] = tr.state
        self.actions[i] = tr.action
        self.rewards[i] = tr.reward
        self.next_states[i] = tr.next_state
        self.cursor = (i + 1) % self.capacity
        self.total_writes += 1

    def sample_batch(self, n: int, rng: np.random.Generator):
        """Uniform draws with replacement as ``(s, a, r, s')`` arrays, or None if too few."""
        size = len(self)
        if size < n:
            return None
        idx = rng.integers(0, size, size=n)
        return self.states[idx], self.actions[idx], self.rewards[idx], self.next_states[idx]


class StepResult(NamedTuple):
    next_state: np.ndarray
    reward: float
    error: float
    pid: PidState


def env_step(t, action, states, pid, gains, dt_t, reward_kind) -> StepResult:
    """Transition from step ``t`` under ``action``.

    Adjust: the PID output of ``states[t]`` is the next state and its error
    against ``states[t+1]`` sets the reward. No-adjust: the dataset's next
    state, error 1 and reward 1, PID untouched.
    """
    if not 0 <= t < len(states) - 1:
        raise UsageError(f"step {t} has no successor in a sequence of {len(states)} states")
    if action == Action.NO_ADJUST:
        return StepResult(np.asarray(states[t + 1], dtype=np.float64), 1.0, 1.0, pid)
    adjusted, pid = modulate(pid, gains, states[t], dt_t)
    err = state_error(adjusted, states[t + 1])
    return StepResult(adjusted, reward(reward_kind, err), err, pid)


class Agent:
    def __init__(self, hyper: Hyperparams, eval_net: qnet.QNetwork | None = None, rng=None):
        self.hyper = hyper
        self.eval_net = eval_net if eval_net is not None else qnet.init_network(hyper.seed)
        self.target_net = self.eval_net.copy()
        self.optimizer = qnet.OptimizerState(lr=hyper.lr, kind=hyper.optimizer)
        self.buffer = ReplayBuffer(hyper.memory_capacity, hyper.n_states)
        self.learn_counter = 0
        # network init uses default_rng(seed); keep the agent's stream separate
        self.rng = rng if rng is not None else np.random.default_rng([hyper.seed, 1])

    def choose_action(self, s) -> Action:
        """Greedy with probability epsilon (ties go to ADJUST), else uniform."""
        if self.rng.random() < self.hyper.epsilon:
            q = qnet.forward(self.eval_net, s)
            return Action(int(np.argmax(q)))
        return Action(int(self.rng.integers(0, self.hyper.n_actions)))

    def store(self, tr: Transition) -> None:
        self.buffer.store(tr)

    def learn(self) -> float | None:
        """One Q-learning update; None when the buffer cannot supply a batch yet."""
        h = self.hyper
        if h.learn_after_full and len(self.buffer) < self.buffer.capacity:
            return None
        batch = self.buffer.sample_batch(h.batch_size, self.rng)
        if batch is None:
            return None
        if self.learn_counter % h.target_replace_iter == 0:
            qnet.copy_into(self.target_net, self.eval_net)
        s, a, r, s_next = batch
        y = r + h.gamma * qnet.forward(self.target_net, s_next).max(axis=1)
        loss, grads = qnet.loss_and_gradients(self.eval_net, s, a, y)
        self.optimizer, self.eval_net = qnet.optimizer_step(self.optimizer, self.eval_net, grads)
        self.learn_counter += 1
        return loss

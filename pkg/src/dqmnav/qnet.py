"""Two-layer value network (6 -> 10 relu -> 2) with hand-written backprop.

Everything is float64. Gradients have the same container type as the
network, so optimizer code can treat parameters and gradients uniformly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError

N_STATES = 6
N_HIDDEN = 10
N_ACTIONS = 2
PARAM_NAMES = ("W1", "b1", "W2", "b2")


@dataclass
class QNetwork:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    @classmethod
    def zeros(cls) -> QNetwork:
        return cls(
            np.zeros((N_HIDDEN, N_STATES)),
            np.zeros(N_HIDDEN),
            np.zeros((N_ACTIONS, N_HIDDEN)),
            np.zeros(N_ACTIONS),
        )

    def params(self) -> tuple[np.ndarray, ...]:
        return (self.W1, self.b1, self.W2, self.b2)

    @staticmethod
    def shapes() -> dict[str, tuple[int, ...]]:
        return {
            "W1": (N_HIDDEN, N_STATES),
            "b1": (N_HIDDEN,),
            "W2": (N_ACTIONS, N_HIDDEN),
            "b2": (N_ACTIONS,),
        }

    def copy(self) -> QNetwork:
        return QNetwork(*(p.copy() for p in self.params()))

    def map(self, fn) -> QNetwork:
        return QNetwork(*(fn(p) for p in self.params()))

    def bit_equal(self, other: QNetwork) -> bool:
        return all(
            a.shape == b.shape and a.tobytes() == b.tobytes()
            for a, b in zip(self.params(), other.params())
        )


def init_network(seed: int) -> QNetwork:
    """Gaussian(0, 0.1) weights from ``default_rng(seed)``, zero biases."""
    rng = np.random.default_rng(seed)
    net = QNetwork.zeros()
    net.W1 = rng.normal(0.0, 0.1, size=(N_HIDDEN, N_STATES))
    net.W2 = rng.normal(0.0, 0.1, size=(N_ACTIONS, N_HIDDEN))
    return net


def forward(net: QNetwork, s) -> np.ndarray:
    """Q-values for one state (shape (2,)) or a batch (shape (B, 2))."""
    s = np.asarray(s, dtype=np.float64)
    h = np.maximum(s @ net.W1.T + net.b1, 0.0)
    return h @ net.W2.T + net.b2


def loss_and_gradients(net: QNetwork, states, actions, targets) -> tuple[float, QNetwork]:
    """Mean squared TD error on the taken actions and its exact gradients."""
    states = np.asarray(states, dtype=np.float64).reshape(-1, N_STATES)
    actions = np.asarray(actions, dtype=np.intp).reshape(-1)
    targets = np.asarray(targets, dtype=np.float64).reshape(-1)
    n = len(states)
    if n == 0:
        raise UsageError("empty batch")
    if not (len(actions) == n == len(targets)):
        raise UsageError("states, actions and targets must have equal lengths")

    z = states @ net.W1.T + net.b1
    h = np.maximum(z, 0.0)
    q = h @ net.W2.T + net.b2
    rows = np.arange(n)
    diff = q[rows, actions] - targets
    loss = float(np.mean(diff * diff))

    dq = np.zeros_like(q)
    dq[rows, actions] = 2.0 * diff / n
    dW2 = dq.T @ h
    db2 = dq.sum(axis=0)
    dz = (dq @ net.W2) * (z > 0.0)
    dW1 = dz.T @ states
    db1 = dz.sum(axis=0)
    return loss, QNetwork(dW1, db1, dW2, db2)


@dataclass
class OptimizerState:
    """Adam moments and step count. ``kind="sgd"`` gives plain gradient descent."""

    m: QNetwork = field(default_factory=QNetwork.zeros)
    v: QNetwork = field(default_factory=QNetwork.zeros)
    t: int = 0
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    kind: str = "adam"

    def __post_init__(self):
        if self.kind not in ("adam", "sgd"):
            raise UsageError(f"unknown optimizer {self.kind!r}")


def optimizer_step(opt: OptimizerState, net: QNetwork, grads: QNetwork) -> tuple[OptimizerState, QNetwork]:
    """One update; returns new optimizer state and network, inputs untouched."""
    t = opt.t + 1
    if opt.kind == "sgd":
        new = QNetwork(*(p - opt.lr * g for p, g in zip(net.params(), grads.params())))
        return OptimizerState(opt.m, opt.v, t, opt.lr, opt.beta1, opt.beta2, opt.eps, opt.kind), new

    b1, b2 = opt.beta1, opt.beta2
    bc1 = 1.0 - b1**t
    bc2 = 1.0 - b2**t
    ms, vs, ps = [], [], []
    for p, g, m, v in zip(net.params(), grads.params(), opt.m.params(), opt.v.params()):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        p = p - opt.lr * (m / bc1) / (np.sqrt(v / bc2) + opt.eps)
        ms.append(m)
        vs.append(v)
        ps.append(p)
    new_opt = OptimizerState(QNetwork(*ms), QNetwork(*vs), t, opt.lr, b1, b2, opt.eps, opt.kind)
    return new_opt, QNetwork(*ps)


def copy_into(target: QNetwork, source: QNetwork) -> None:
    """Overwrite ``target``'s parameters in place with copies of ``source``'s."""
    for name in PARAM_NAMES:
        src = getattr(source, name)
        if getattr(target, name).shape != src.shape:
            raise UsageError(f"shape mismatch for {name}")
        setattr(target, name, src.copy())

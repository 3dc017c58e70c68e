"""Episode loop, training/validation protocol, checkpoints and curve files.

Checkpoint file layout (all integers little-endian)::

    8 bytes   magic b"DQMCKPT\\0"
    uint32    header length H
    H bytes   UTF-8 JSON header: format_version, hyperparams, optimizer
              scalars, metadata, and the ordered list of arrays with shapes
    uint64    number of float64 values V
    8*V bytes parameter block, float64 little-endian, arrays concatenated
              row-major in header order
"""

from __future__ import annotations

import csv
import json
import math
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import qnet
from .agent import Action, Agent, Hyperparams, Transition, env_step
from .errors import DataError, DqmError, UsageError
from .imu_io import Trajectory, to_agent_states
from .modulation import PidState, RewardKind, zscore

FORMAT_VERSION = 1
MAGIC = b"DQMCKPT\0"


@dataclass
class EpisodeLog:
    episode: int
    total_reward: float = 0.0
    step_losses: list[tuple[int, float]] = field(default_factory=list)
    action_counts: dict[str, int] = field(default_factory=lambda: {"adjust": 0, "no_adjust": 0})
    mean_error_adjust: float = math.nan
    mean_reward_adjust: float = math.nan
    actions: np.ndarray | None = None

    @property
    def steps(self) -> int:
        return sum(self.action_counts.values())

    @property
    def mean_loss(self) -> float:
        if not self.step_losses:
            return math.nan
        return float(np.mean([loss for _, loss in self.step_losses]))


@dataclass
class Checkpoint:
    hyper: Hyperparams
    net: qnet.QNetwork
    optimizer: qnet.OptimizerState
    metadata: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION


def run_episode(agent: Agent, states, dts, episode: int = 1) -> EpisodeLog:
    """Run one pass over ``states`` with learning after every step.

    ``dts[t]`` is the interval between samples ``t`` and ``t + 1``. The PID
    sees the time elapsed since its previous call, which spans several
    samples when the agent skipped adjusting in between.
    """
    states = np.asarray(states, dtype=np.float64)
    n = len(states)
    if n < 2:
        raise UsageError("an episode needs at least 2 states")
    dts = np.asarray(dts, dtype=np.float64)
    if len(dts) != n - 1:
        raise UsageError(f"expected {n - 1} intervals, got {len(dts)}")

    h = agent.hyper
    kind = RewardKind.parse(h.reward_kind)
    gains = h.gains
    pid = PidState()
    log = EpisodeLog(episode)
    actions = np.empty(n - 1, dtype=np.int8)
    total = 0.0
    err_sum = rew_sum = 0.0
    n_adjust = 0
    since_pid = 0.0
    for t in range(n - 1):
        if t:
            since_pid += dts[t - 1]
        s = states[t]
        a = agent.choose_action(s)
        try:
            res = env_step(t, a, states, pid, gains, since_pid, kind)
        except DqmError as exc:
            raise type(exc)(f"step {t}: {exc}") from exc
        pid = res.pid
        if a == Action.ADJUST:
            since_pid = 0.0
            n_adjust += 1
            err_sum += res.error
            rew_sum += res.reward
        agent.store(Transition(s, int(a), res.reward, res.next_state))
        loss = agent.learn()
        if loss is not None:
            log.step_losses.append((t, loss))
        total += res.reward
        actions[t] = a

    log.total_reward = total
    log.actions = actions
    log.action_counts = {"adjust": n_adjust, "no_adjust": n - 1 - n_adjust}
    if n_adjust:
        log.mean_error_adjust = err_sum / n_adjust
        log.mean_reward_adjust = rew_sum / n_adjust
    return log


def _prepare_states(hyper: Hyperparams, traj: Trajectory) -> np.ndarray:
    states = to_agent_states(traj)
    return zscore(states) if hyper.normalize_states else states


def _run_episodes(agent, traj, episodes, on_episode, start=1) -> list[EpisodeLog]:
    states = _prepare_states(agent.hyper, traj)
    dts = traj.dts()
    logs = []
    for k in range(start, start + episodes):
        try:
            log = run_episode(agent, states, dts, episode=k)
        except DqmError as exc:
            raise type(exc)(f"episode {k}: {exc}") from exc
        logs.append(log)
        if on_episode is not None:
            on_episode(log)
    return logs


def train(
    hyper: Hyperparams,
    traj: Trajectory,
    on_episode: Callable[[EpisodeLog], None] | None = None,
) -> tuple[Checkpoint, list[EpisodeLog]]:
    """Train a fresh seeded agent for ``hyper.episodes`` passes over ``traj``."""
    if len(traj) < 2:
        raise UsageError("trajectory needs at least 2 samples")
    agent = Agent(hyper)
    logs = _run_episodes(agent, traj, hyper.episodes, on_episode)
    ckpt = Checkpoint(
        hyper=hyper,
        net=agent.eval_net.copy(),
        optimizer=agent.optimizer,
        metadata={
            "episodes_completed": hyper.episodes,
            "learn_counter": agent.learn_counter,
            "seed": hyper.seed,
            "data_fingerprint": traj.fingerprint(),
        },
    )
    return ckpt, logs


def restore_agent(ckpt: Checkpoint) -> Agent:
    """Agent with the checkpoint's network and optimizer; empty replay buffer."""
    _check_shapes({"W1": ckpt.net.W1, "b1": ckpt.net.b1, "W2": ckpt.net.W2, "b2": ckpt.net.b2})
    done = int(ckpt.metadata.get("episodes_completed", 0))
    rng = np.random.default_rng([ckpt.hyper.seed, 2, done])
    agent = Agent(ckpt.hyper, eval_net=ckpt.net.copy(), rng=rng)
    opt = ckpt.optimizer
    agent.optimizer = qnet.OptimizerState(
        opt.m.copy(), opt.v.copy(), opt.t, opt.lr, opt.beta1, opt.beta2, opt.eps, opt.kind
    )
    agent.learn_counter = int(ckpt.metadata.get("learn_counter", 0))
    return agent


def evaluate(
    ckpt: Checkpoint,
    traj: Trajectory,
    episodes: int | None = None,
    on_episode: Callable[[EpisodeLog], None] | None = None,
) -> list[EpisodeLog]:
    """Run validation episodes from a checkpoint. Learning stays enabled."""
    if len(traj) < 2:
        raise UsageError("trajectory needs at least 2 samples")
    episodes = ckpt.hyper.episodes if episodes is None else episodes
    if episodes < 1:
        raise UsageError("episodes must be positive")
    agent = restore_agent(ckpt)
    return _run_episodes(agent, traj, episodes, on_episode)


# -- checkpoint I/O -------------------------------------------------------


def _check_shapes(arrays: dict[str, np.ndarray]) -> None:
    for name, shape in qnet.QNetwork.shapes().items():
        got = tuple(np.shape(arrays[name]))
        if got != shape:
            raise DataError(f"checkpoint array {name} has shape {got}, expected {shape}")


def _array_table(ckpt: Checkpoint) -> list[tuple[str, np.ndarray]]:
    out = []
    for prefix, net in (("eval", ckpt.net), ("adam_m", ckpt.optimizer.m), ("adam_v", ckpt.optimizer.v)):
        for name in qnet.PARAM_NAMES:
            out.append((f"{prefix}.{name}", getattr(net, name)))
    return out


def checkpoint_bytes(ckpt: Checkpoint) -> bytes:
    table = _array_table(ckpt)
    opt = ckpt.optimizer
    header = {
        "format_version": ckpt.format_version,
        "hyperparams": ckpt.hyper.to_dict(),
        "optimizer": {
            "t": opt.t, "lr": opt.lr, "beta1": opt.beta1, "beta2": opt.beta2,
            "eps": opt.eps, "kind": opt.kind,
        },
        "metadata": ckpt.metadata,
        "arrays": [{"name": n, "shape": list(a.shape)} for n, a in table],
    }
    hdr = json.dumps(header, sort_keys=True).encode("utf-8")
    block = np.concatenate([np.ravel(a) for _, a in table]).astype("<f8")
    return b"".join(
        [MAGIC, struct.pack("<I", len(hdr)), hdr, struct.pack("<Q", block.size), block.tobytes()]
    )


def save_checkpoint(ckpt: Checkpoint, sink) -> None:
    """Write to a path (atomically, via a temp file and rename) or a binary stream."""
    data = checkpoint_bytes(ckpt)
    if not isinstance(sink, (str, os.PathLike)):
        sink.write(data)
        return
    path = Path(sink)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_exact(buf: memoryview, pos: int, n: int) -> tuple[bytes, int]:
    if pos + n > len(buf):
        raise DataError("truncated checkpoint")
    return bytes(buf[pos:pos + n]), pos + n


def checkpoint_from_bytes(data: bytes) -> Checkpoint:
    buf = memoryview(data)
    magic, pos = _read_exact(buf, 0, len(MAGIC))
    if magic != MAGIC:
        raise DataError("not a checkpoint file (bad magic)")
    raw, pos = _read_exact(buf, pos, 4)
    (hlen,) = struct.unpack("<I", raw)
    raw, pos = _read_exact(buf, pos, hlen)
    try:
        header = json.loads(raw.decode("utf-8"))
        version = header["format_version"]
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError):
        raise DataError("corrupt checkpoint header") from None
    if version != FORMAT_VERSION:
        raise DataError(f"unsupported checkpoint format_version {version!r}")
    raw, pos = _read_exact(buf, pos, 8)
    (count,) = struct.unpack("<Q", raw)
    raw, pos = _read_exact(buf, pos, 8 * count)
    if pos != len(buf):
        raise DataError("trailing bytes after checkpoint parameter block")
    values = np.frombuffer(raw, dtype="<f8").astype(np.float64)

    try:
        specs = [(a["name"], tuple(int(d) for d in a["shape"])) for a in header["arrays"]]
        hyper = Hyperparams.from_dict(header["hyperparams"])
        o = header["optimizer"]
        metadata = dict(header.get("metadata", {}))
    except (KeyError, TypeError, ValueError, UsageError) as exc:
        raise DataError(f"corrupt checkpoint header: {exc}") from None
    arrays: dict[str, np.ndarray] = {}
    off = 0
    for name, shape in specs:
        size = int(np.prod(shape, dtype=np.int64))
        if off + size > values.size:
            raise DataError("parameter block shorter than declared arrays")
        arrays[name] = values[off:off + size].reshape(shape).copy()
        off += size
    if off != values.size:
        raise DataError("parameter block longer than declared arrays")

    nets = {}
    for prefix in ("eval", "adam_m", "adam_v"):
        try:
            part = {n: arrays[f"{prefix}.{n}"] for n in qnet.PARAM_NAMES}
        except KeyError as exc:
            raise DataError(f"checkpoint missing array {exc.args[0]}") from None
        _check_shapes(part)
        nets[prefix] = qnet.QNetwork(**part)
    try:
        opt = qnet.OptimizerState(
            nets["adam_m"], nets["adam_v"], int(o["t"]), float(o["lr"]),
            float(o["beta1"]), float(o["beta2"]), float(o["eps"]), str(o["kind"]),
        )
    except (KeyError, TypeError, ValueError, UsageError) as exc:
        raise DataError(f"corrupt optimizer state: {exc}") from None
    return Checkpoint(hyper, nets["eval"], opt, metadata, version)


def load_checkpoint(source) -> Checkpoint:
    if isinstance(source, (str, os.PathLike)):
        try:
            data = Path(source).read_bytes()
        except OSError as exc:
            raise DataError(f"cannot read checkpoint {source}: {exc.strerror}") from None
    else:
        data = source.read()
    return checkpoint_from_bytes(data)


# -- curves ---------------------------------------------------------------


def export_curves(logs: Sequence[EpisodeLog], directory, svg: bool = False) -> None:
    """Write ``reward_curve.csv`` and ``loss_curve.csv`` (optionally SVG plots)."""
    if not logs:
        raise UsageError("no episode logs to export")
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    cumulative = 0.0
    with open(out / "reward_curve.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["episode", "total_reward", "cumulative_reward"])
        for log in logs:
            cumulative += log.total_reward
            w.writerow([log.episode, repr(float(log.total_reward)), repr(cumulative)])
    with open(out / "loss_curve.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["episode", "step", "td_loss"])
        for log in logs:
            for step, loss in log.step_losses:
                w.writerow([log.episode, step, repr(float(loss))])
    if svg:
        x = [log.episode for log in logs]
        _write_svg(out / "reward_curve.svg", x, [log.total_reward for log in logs], "total reward")
        _write_svg(out / "loss_curve.svg", x, [log.mean_loss for log in logs], "mean TD loss")


def _write_svg(path: Path, xs, ys, label: str, width=480, height=300, pad=40) -> None:
    pts = [(x, y) for x, y in zip(xs, ys) if math.isfinite(y)]
    body = ""
    if pts:
        x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
        y0, y1 = min(p[1] for p in pts), max(p[1] for p in pts)
        sx = (width - 2 * pad) / ((x1 - x0) or 1)
        sy = (height - 2 * pad) / ((y1 - y0) or 1)
        coords = " ".join(
            f"{pad + (x - x0) * sx:.2f},{height - pad - (y - y0) * sy:.2f}" for x, y in pts
        )
        body = (
            f'<polyline fill="none" stroke="#1f77b4" stroke-width="2" points="{coords}"/>\n'
            f'<text x="{pad}" y="{pad - 10}" font-size="12">{label}: '
            f"{y0:.6g} .. {y1:.6g}</text>\n"
        )
    path.write_text(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">\n'
        f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
        f'fill="none" stroke="#888"/>\n{body}</svg>\n',
        encoding="utf-8",
    )

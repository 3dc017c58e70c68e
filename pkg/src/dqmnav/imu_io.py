"""EuRoC-MAV IMU logs: parsing, writing, agent states and synthetic data.

An IMU file is text: optional ``#`` comment lines, then rows of
``timestamp_ns, w_x, w_y, w_z, a_x, a_y, a_z`` with gyro in rad/s and
specific force in m/s^2 (body axes).
"""

from __future__ import annotations

import hashlib
import io
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterator, Sequence, Union

import numpy as np

from .errors import DataError, UsageError

PathOrFile = Union[str, os.PathLike, IO]

IMU_HEADER = (
    "#timestamp [ns],w_RS_S_x [rad s^-1],w_RS_S_y [rad s^-1],w_RS_S_z [rad s^-1],"
    "a_RS_S_x [m s^-2],a_RS_S_y [m s^-2],a_RS_S_z [m s^-2]"
)
NAV_COLUMNS = (
    "t_ns", "lat_deg", "lon_deg", "alt_m", "vN", "vE", "vD", "roll_deg", "pitch_deg", "yaw_deg",
)
PROFILES = ("stationary", "constant_turn", "random_walk")

# constant_turn profile: level turn heading north at t=0
CONSTANT_TURN_SPEED = 5.0  # m/s forward
CONSTANT_TURN_RATE = 0.1  # rad/s yaw

# random_walk profile: ADIS16448 figures from the EuRoC sensor.yaml
RW_GYRO_DENSITY = 1.6968e-4  # rad/s/sqrt(Hz)
RW_ACCEL_DENSITY = 2.0e-3  # m/s^2/sqrt(Hz)
RW_GYRO_WALK = 1.9393e-5  # rad/s^2/sqrt(Hz)
RW_ACCEL_WALK = 3.0e-3  # m/s^3/sqrt(Hz)


@dataclass(frozen=True)
class ImuSample:
    t_ns: int
    gyro: np.ndarray
    accel: np.ndarray


class Trajectory:
    """Time-ordered IMU samples stored column-wise.

    ``t_ns`` is an int64 array of shape (N,); ``gyro`` and ``accel`` are
    float64 arrays of shape (N, 3).
    """

    def __init__(self, t_ns, gyro, accel):
        t_ns = np.asarray(t_ns, dtype=np.int64).reshape(-1)
        gyro = np.asarray(gyro, dtype=np.float64).reshape(-1, 3)
        accel = np.asarray(accel, dtype=np.float64).reshape(-1, 3)
        if not (len(t_ns) == len(gyro) == len(accel)):
            raise DataError("timestamp, gyro and accel lengths differ")
        if len(t_ns) and t_ns.min() < 0:
            raise DataError("timestamps must be non-negative")
        if len(t_ns) > 1:
            bad = np.flatnonzero(np.diff(t_ns) <= 0)
            if bad.size:
                raise DataError(f"timestamps not strictly increasing at sample {int(bad[0]) + 1}")
        if not (np.all(np.isfinite(gyro)) and np.all(np.isfinite(accel))):
            raise DataError("IMU channels must be finite")
        for a in (t_ns, gyro, accel):
            a.setflags(write=False)
        self.t_ns = t_ns
        self.gyro = gyro
        self.accel = accel

    @classmethod
    def from_samples(cls, samples: Sequence[ImuSample]) -> Trajectory:
        return cls(
            [s.t_ns for s in samples],
            np.array([s.gyro for s in samples], dtype=np.float64).reshape(-1, 3),
            np.array([s.accel for s in samples], dtype=np.float64).reshape(-1, 3),
        )

    def __len__(self) -> int:
        return len(self.t_ns)

    def __getitem__(self, i: int) -> ImuSample:
        return ImuSample(int(self.t_ns[i]), self.gyro[i], self.accel[i])

    def __iter__(self) -> Iterator[ImuSample]:
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Trajectory):
            return NotImplemented
        return (
            np.array_equal(self.t_ns, other.t_ns)
            and np.array_equal(self.gyro, other.gyro)
            and np.array_equal(self.accel, other.accel)
        )

    @property
    def samples(self) -> list[ImuSample]:
        return list(self)

    def dts(self) -> np.ndarray:
        """Consecutive sample intervals in seconds, shape (N-1,)."""
        return np.diff(self.t_ns).astype(np.float64) * 1e-9

    def fingerprint(self) -> str:
        """SHA-256 over the parsed content; equal for files that parse identically."""
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.t_ns, dtype="<i8").tobytes())
        h.update(np.ascontiguousarray(self.gyro, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(self.accel, dtype="<f8").tobytes())
        return h.hexdigest()


def _open_text(source: PathOrFile, mode: str):
    if isinstance(source, (str, os.PathLike)):
        return open(source, mode, encoding="utf-8", newline=""), True
    if isinstance(source, (io.RawIOBase, io.BufferedIOBase)) or "b" in getattr(source, "mode", ""):
        return io.TextIOWrapper(source, encoding="utf-8", newline=""), False
    return source, False


def parse_imu_csv(source: PathOrFile) -> Trajectory:
    """Read an EuRoC-format IMU CSV from a path or an open (text or binary) file."""
    fh, owned = _open_text(source, "r")
    t_ns: list[int] = []
    values: list[list[float]] = []
    try:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split(",")
            if len(fields) != 7:
                raise DataError(f"line {lineno}: expected 7 columns, got {len(fields)}")
            try:
                t = int(fields[0])
                row = [float(f) for f in fields[1:]]
            except ValueError:
                raise DataError(f"line {lineno}: non-numeric field in {line!r}") from None
            if not all(math.isfinite(v) for v in row):
                raise DataError(f"line {lineno}: non-finite value")
            if t_ns and t <= t_ns[-1]:
                raise DataError(f"line {lineno}: timestamp {t} not greater than {t_ns[-1]}")
            t_ns.append(t)
            values.append(row)
    finally:
        if owned:
            fh.close()
        elif isinstance(fh, io.TextIOWrapper) and fh is not source:
            fh.detach()
    if len(t_ns) < 2:
        raise DataError(f"fewer than 2 samples ({len(t_ns)} found)")
    data = np.array(values, dtype=np.float64)
    return Trajectory(t_ns, data[:, :3], data[:, 3:])


def write_imu_csv(traj: Trajectory, sink: PathOrFile) -> None:
    """Write a trajectory in EuRoC format with round-trip float precision."""
    lines = [IMU_HEADER]
    for t, g, a in zip(traj.t_ns.tolist(), traj.gyro.tolist(), traj.accel.tolist()):
        lines.append(",".join([str(t), *map(repr, g), *map(repr, a)]))
    _write_lines(lines, sink)


def _write_lines(lines: list[str], sink: PathOrFile) -> None:
    text = "\n".join(lines) + "\n"
    if isinstance(sink, (str, os.PathLike)):
        Path(sink).write_text(text, encoding="utf-8")
    elif isinstance(sink, (io.RawIOBase, io.BufferedIOBase)) or "b" in getattr(sink, "mode", ""):
        sink.write(text.encode("utf-8"))
    else:
        sink.write(text)


def to_agent_states(traj: Trajectory) -> np.ndarray:
    """Agent states ``[gyro_x, gyro_y, gyro_z, accel_x, accel_y, accel_z]``, shape (N, 6)."""
    return np.hstack([traj.gyro, traj.accel])


def synth_trajectory(
    profile: str,
    duration_s: float,
    rate_hz: float,
    lat: float = 0.0,
    alt: float = 0.0,
    seed: int = 0,
) -> Trajectory:
    """Generate a synthetic IMU trajectory.

    Parameters
    ----------
    profile : {"stationary", "constant_turn", "random_walk"}
        ``stationary``: level and at rest, gyro zero, accel ``[0, 0, -g]``.
        ``constant_turn``: level turn at ``CONSTANT_TURN_RATE`` and
        ``CONSTANT_TURN_SPEED``; reproduces the motion only when propagated
        from a level, north-facing state with ``vel_ned = [speed, 0, 0]``.
        ``random_walk``: stationary plus seeded white noise and a
        random-walk bias on every channel, at EuRoC IMU noise levels.
    duration_s, rate_hz : float
        ``round(duration_s * rate_hz)`` samples spaced ``1 / rate_hz`` apart,
        starting at ``t_ns = 0``.
    lat : float
        Latitude in degrees, used for the gravity magnitude.
    alt : float
        Altitude in metres.
    seed : int
        Only consumed by ``random_walk``.
    """
    from .ins import normal_gravity

    if profile not in PROFILES:
        raise UsageError(f"unknown profile {profile!r}; choose from {', '.join(PROFILES)}")
    if not (duration_s > 0 and rate_hz > 0):
        raise UsageError("duration_s and rate_hz must be positive")
    n = int(round(duration_s * rate_hz))
    if n < 1:
        raise UsageError("duration_s * rate_hz yields no samples")
    t_ns = np.array([round(k * 1e9 / rate_hz) for k in range(n)], dtype=np.int64)
    g = normal_gravity(math.radians(lat), alt)

    gyro = np.zeros((n, 3))
    accel = np.zeros((n, 3))
    accel[:, 2] = -g
    if profile == "constant_turn":
        gyro[:, 2] = CONSTANT_TURN_RATE
        accel[:, 1] = CONSTANT_TURN_SPEED * CONSTANT_TURN_RATE
    elif profile == "random_walk":
        rng = np.random.default_rng(seed)
        dt = 1.0 / rate_hz
        walk = np.cumsum(rng.standard_normal((n, 6)) * np.sqrt(dt), axis=0)
        white = rng.standard_normal((n, 6))
        root_rate = np.sqrt(rate_hz)
        gyro += RW_GYRO_DENSITY * root_rate * white[:, :3] + RW_GYRO_WALK * walk[:, :3]
        accel += RW_ACCEL_DENSITY * root_rate * white[:, 3:] + RW_ACCEL_WALK * walk[:, 3:]
    return Trajectory(t_ns, gyro, accel)


def write_nav_csv(states, sink: PathOrFile) -> None:
    """Write navigation states; angles in degrees, full float precision."""
    if len(states) == 0:
        raise UsageError("no navigation states to write")
    lines = [",".join(NAV_COLUMNS)]
    for s in states:
        row = [
            math.degrees(s.lat), math.degrees(s.lon), s.alt, *map(float, s.vel_ned),
            math.degrees(s.att.roll), math.degrees(s.att.pitch), math.degrees(s.att.yaw),
        ]
        lines.append(",".join([str(int(s.t_ns)), *(repr(float(v)) for v in row)]))
    _write_lines(lines, sink)


def read_nav_csv(source: PathOrFile) -> tuple[list[str], np.ndarray]:
    """Read a file produced by ``write_nav_csv``; returns ``(columns, rows)``."""
    fh, owned = _open_text(source, "r")
    try:
        text = fh.read()
    finally:
        if owned:
            fh.close()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise DataError("empty navigation file")
    columns = lines[0].split(",")
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]]).reshape(-1, len(columns))
    return columns, rows

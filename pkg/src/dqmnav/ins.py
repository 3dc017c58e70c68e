"""Strapdown inertial navigation in a local-level NED frame.

Conventions
-----------
* Navigation frame: north-east-down, pointing to geographic north.
* Body frame: forward-right-down.
* Accelerometers report specific force, so a level vehicle at rest reads
  ``[0, 0, -g]``.
* Attitude is a Z-Y-X Euler triple (yaw, then pitch, then roll).

Earth-rate and transport-rate terms are not modelled; the mechanization is
meant for short, slow flights. Integration is forward Euler at the sample
interval: attitude first, then velocity with the new attitude, then position
with the new velocity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import NumericError, UsageError
from .imu_io import ImuSample, Trajectory

# WGS84 defining / derived constants
SEMI_MAJOR_AXIS = 6378137.0  # m
ECC2 = 0.00669437999013
GAMMA_EQUATOR = 9.7803253359  # m/s^2
SOMIGLIANA_K = 0.00193185265241
FREE_AIR = 3.086e-6  # 1/s^2

GIMBAL_MARGIN = 1e-6  # rad
POLAR_MARGIN = 1e-9  # rad

DEFAULT_LAT_DEG = 39.975172
DEFAULT_LON_DEG = 116.344695283
DEFAULT_ALT_M = 30.0


@dataclass(frozen=True)
class GeodeticConstants:
    semi_major_axis: float = SEMI_MAJOR_AXIS
    ecc2: float = ECC2
    gamma_equator: float = GAMMA_EQUATOR
    somigliana_k: float = SOMIGLIANA_K
    free_air: float = FREE_AIR


WGS84 = GeodeticConstants()


@dataclass(frozen=True)
class Attitude:
    """Euler attitude in radians."""

    roll: float = 0.0
    pitch: float = 0.0
    yaw: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.roll, self.pitch, self.yaw)):
            raise UsageError("attitude angles must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.roll, self.pitch, self.yaw])


@dataclass(frozen=True)
class NavState:
    """Geodetic position (rad, rad, m), NED velocity (m/s) and attitude."""

    t_ns: int
    lat: float
    lon: float
    alt: float
    vel_ned: np.ndarray = field(default_factory=lambda: np.zeros(3))
    att: Attitude = field(default_factory=Attitude)

    def __post_init__(self):
        vel = np.asarray(self.vel_ned, dtype=np.float64).reshape(3)
        object.__setattr__(self, "vel_ned", vel)
        if not (math.isfinite(self.lat) and math.isfinite(self.lon) and math.isfinite(self.alt)):
            raise UsageError("position must be finite")
        if not np.all(np.isfinite(vel)):
            raise UsageError("velocity must be finite")
        if abs(self.lat) > math.pi / 2:
            raise UsageError(f"latitude {self.lat} rad outside [-pi/2, pi/2]")


def default_initial_state(t_ns: int = 0) -> NavState:
    """Level, at rest, at the reference site (39.975172 N, 116.344695283 E, 30 m)."""
    return NavState(
        t_ns=t_ns,
        lat=math.radians(DEFAULT_LAT_DEG),
        lon=math.radians(DEFAULT_LON_DEG),
        alt=DEFAULT_ALT_M,
    )


def normal_gravity(lat: float, alt: float = 0.0) -> float:
    """Somigliana normal gravity with a linear free-air height correction.

    Parameters
    ----------
    lat : float
        Geodetic latitude in radians.
    alt : float
        Height above the ellipsoid in metres.

    Returns
    -------
    float
        Gravity magnitude in m/s^2.
    """
    s2 = math.sin(lat) ** 2
    g0 = GAMMA_EQUATOR * (1.0 + SOMIGLIANA_K * s2) / math.sqrt(1.0 - ECC2 * s2)
    return g0 - FREE_AIR * alt


def radii_of_curvature(lat: float) -> tuple[float, float]:
    """Return ``(R_M, R_N)``: meridian and prime-vertical radii in metres."""
    t = 1.0 - ECC2 * math.sin(lat) ** 2
    r_n = SEMI_MAJOR_AXIS / math.sqrt(t)
    r_m = SEMI_MAJOR_AXIS * (1.0 - ECC2) / (t * math.sqrt(t))
    return r_m, r_n


def dcm_body_to_nav(att: Attitude) -> np.ndarray:
    """Rotation matrix taking body (FRD) vectors into NED."""
    sr, cr = math.sin(att.roll), math.cos(att.roll)
    sp, cp = math.sin(att.pitch), math.cos(att.pitch)
    sy, cy = math.sin(att.yaw), math.cos(att.yaw)
    return np.array(
        [
            [cp * cy, sr * sp * cy - cr * sy, cr * sp * cy + sr * sy],
            [cp * sy, sr * sp * sy + cr * cy, cr * sp * sy - sr * cy],
            [-sp, sr * cp, cr * cp],
        ]
    )


def euler_rates(att: Attitude, gyro, margin: float = GIMBAL_MARGIN) -> np.ndarray:
    """Euler angle rates from body angular rates ``[p, q, r]``.

    Raises NumericError when pitch is within ``margin`` of +-pi/2.
    """
    if abs(att.pitch) >= math.pi / 2 - margin:
        raise NumericError(f"gimbal singularity: pitch {att.pitch!r} rad")
    p, q, r = (float(v) for v in gyro)
    sr, cr = math.sin(att.roll), math.cos(att.roll)
    cp = math.cos(att.pitch)
    qr = q * sr + r * cr
    return np.array([p + qr * math.tan(att.pitch), q * cr - r * sr, qr / cp])


def _wrap_pi(angle: float) -> float:
    # result in (-pi, pi]
    if -math.pi < angle <= math.pi:
        return angle
    wrapped = math.fmod(angle + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


def ins_step(state: NavState, sample: ImuSample, dt: float) -> NavState:
    """Advance the navigation state by one IMU sample over ``dt`` seconds."""
    if not dt > 0.0:
        raise UsageError(f"dt must be positive, got {dt!r}")
    if abs(state.lat) > math.pi / 2 - POLAR_MARGIN:
        raise NumericError(f"polar singularity: latitude {state.lat!r} rad")

    rates = euler_rates(state.att, sample.gyro)
    d_roll, d_pitch, d_yaw = (rates * dt).tolist()
    att = Attitude(
        state.att.roll + d_roll,
        state.att.pitch + d_pitch,
        _wrap_pi(state.att.yaw + d_yaw),
    )

    f_nav = dcm_body_to_nav(att) @ np.asarray(sample.accel, dtype=np.float64)
    f_nav[2] += normal_gravity(state.lat, state.alt)
    vel = state.vel_ned + f_nav * dt

    r_m, r_n = radii_of_curvature(state.lat)
    vn, ve, vd = vel.tolist()
    lat = state.lat + vn / (r_m + state.alt) * dt
    lon = state.lon + ve / ((r_n + state.alt) * math.cos(state.lat)) * dt
    alt = state.alt - vd * dt
    if abs(lat) > math.pi / 2 - POLAR_MARGIN:
        raise NumericError(f"polar singularity: latitude {lat!r} rad")

    return NavState(t_ns=sample.t_ns, lat=lat, lon=_wrap_pi(lon), alt=alt, vel_ned=vel, att=att)


def propagate(init: NavState | None, traj: Trajectory) -> list[NavState]:
    """Fold ``ins_step`` over a trajectory.

    Sample ``i`` (``i >= 1``) is applied over the interval since sample
    ``i - 1``; the result therefore has ``len(traj) - 1`` states. With
    ``init=None`` the vehicle starts level and at rest at the reference site.
    """
    if len(traj) < 2:
        raise UsageError("trajectory needs at least 2 samples")
    state = default_initial_state(int(traj.t_ns[0])) if init is None else init
    out: list[NavState] = []
    t_ns = traj.t_ns
    for i in range(1, len(traj)):
        dt = (int(t_ns[i]) - int(t_ns[i - 1])) * 1e-9
        try:
            state = ins_step(state, traj[i], dt)
        except NumericError as exc:
            raise NumericError(f"sample {i}: {exc}", index=i) from exc
        out.append(state)
    return out


def position_error_m(a: NavState, b: NavState) -> float:
    """Approximate distance in metres between two nearby states (local NED)."""
    r_m, r_n = radii_of_curvature(a.lat)
    dn = (b.lat - a.lat) * (r_m + a.alt)
    de = _wrap_pi(b.lon - a.lon) * (r_n + a.alt) * math.cos(a.lat)
    dd = a.alt - b.alt
    return math.sqrt(dn * dn + de * de + dd * dd)


def nav_states_to_array(states: Sequence[NavState]) -> np.ndarray:
    """Stack states as rows of ``lat, lon, alt, vN, vE, vD, roll, pitch, yaw``."""
    return np.array(
        [[s.lat, s.lon, s.alt, *s.vel_ned, s.att.roll, s.att.pitch, s.att.yaw] for s in states]
    )

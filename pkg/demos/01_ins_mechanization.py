# coding: utf-8

# # Strapdown INS on synthetic IMU data
#
# The INS integrates body angular rates into Euler angles, rotates specific
# force into north-east-down, adds normal gravity and integrates twice. We
# start with the simplest possible input: a vehicle sitting still.

import math

import numpy as np

from dqmnav.imu_io import synth_trajectory
from dqmnav.imu_io import CONSTANT_TURN_RATE, CONSTANT_TURN_SPEED
from dqmnav.ins import NavState, default_initial_state, normal_gravity, position_error_m, propagate

# ## Gravity
#
# Somigliana's formula gives the normal gravity on the ellipsoid; a linear
# term removes 3.086e-6 m/s^2 per metre of height.

for lat_deg in (0.0, 30.0, 39.975172, 60.0, 90.0):
    print(f"lat {lat_deg:9.5f} deg  g = {normal_gravity(math.radians(lat_deg)):.10f} m/s^2")

# ## Standing still
#
# The synthetic stationary log reads exactly ``[0, 0, -g]`` on the
# accelerometers, with g evaluated at the starting site, so the integrated
# position should not move at all.

init = default_initial_state()
still = synth_trajectory("stationary", 10.0, 200.0, lat=39.975172, alt=30.0)
states = propagate(init, still)
print(f"\n{len(states)} INS steps over 10 s")
print(f"final drift: {position_error_m(init, states[-1]):.3e} m")

# ## A level turn
#
# The constant-turn log yaws at 0.1 rad/s while moving forward at 5 m/s. The
# body sees a steady sideways specific force (centripetal). Started facing
# north, the vehicle should trace a circle of radius v / omega = 50 m.

turn = synth_trajectory("constant_turn", 2 * math.pi / CONSTANT_TURN_RATE, 200.0)
start = NavState(0, 0.0, 0.0, 0.0, vel_ned=[CONSTANT_TURN_SPEED, 0.0, 0.0])
path = propagate(start, turn)
dists = np.array([position_error_m(start, s) for s in path])
print(f"\nfull circle: max distance from start {dists.max():.2f} m (ideal 100 m)")
print(f"closing error after one lap: {dists[-1]:.3f} m")

# ## Step size
#
# Forward Euler is first order, so halving the step roughly halves the error.

ref = propagate(start, synth_trajectory("constant_turn", 4.0 + 1 / 20000, 20000.0))[-1]
for rate in (50.0, 100.0, 200.0):
    end = propagate(start, synth_trajectory("constant_turn", 4.0 + 1 / rate, rate))[-1]
    print(f"dt = {1 / rate:.3f} s  error after 4 s = {position_error_m(ref, end):.4f} m")

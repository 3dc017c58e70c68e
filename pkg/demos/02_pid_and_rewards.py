# coding: utf-8

# # The adjustment mechanism
#
# When the agent chooses "adjust", the current 6-channel IMU state is run
# through a discrete PID transformation and the result becomes the next
# state. The mean squared difference from the recorded next state is the
# error, and a reward function maps that error to a scalar.

import numpy as np

from dqmnav.modulation import REWARD_NAMES, PidGains, PidState, modulate, reward, state_error

# ## One channel through the PID
#
# On the first call the PID has no history, so only the proportional term
# acts. Afterwards the integral accumulates ``s * dt`` and the derivative
# uses the previous input.

gains = PidGains(kp=1.0, ki=0.5, kd=0.2)
pid = PidState()
signal = np.array([1.0, 1.0, 1.0, 0.0, 0.0])
for k, x in enumerate(signal):
    y, pid = modulate(pid, gains, np.full(6, x), dt=0.1)
    print(f"k={k}  in={x:.1f}  out={y[0]:+.4f}  integral={pid.integral[0]:.3f}")

# With kp = 1 and the other gains zero, the PID is the identity map.

pid = PidState()
x = np.random.default_rng(0).normal(size=6)
y, _ = modulate(pid, PidGains(1.0, 0.0, 0.0), x, dt=0.005)
print("\nidentity gains reproduce the input:", np.array_equal(x, y))

# ## The reward family
#
# Every function decreases as the error grows. Sigmoid is the default; note
# that it never exceeds 0.5, while "no adjust" always earns 1.

losses = [0.0, 1e-3, 0.1, 0.5, 1.0, 2.0, 10.0]
print("\n" + "loss".rjust(18) + "".join(f"{v:>10g}" for v in losses))
for name in REWARD_NAMES:
    print(name.rjust(18) + "".join(f"{reward(name, v):10.4g}" for v in losses))

# ## Error of an adjusted state

s_now = np.array([0.01, -0.02, 0.0, 0.1, 0.0, -9.8])
s_next = s_now + 0.01
adjusted, _ = modulate(PidState(), gains, s_now, dt=0.005)
err = state_error(adjusted, s_next)
print(f"\nerror {err:.3e}  sigmoid reward {reward('sigmoid', err):.6f}")

"""DQN with PID state modulation, coupled to a strapdown INS for IMU logs."""

__version__ = "0.1.0"

from .agent import Action, Agent, Hyperparams, ReplayBuffer, Transition, env_step
from .errors import DataError, NumericError, UsageError
from .imu_io import (
    ImuSample,
    Trajectory,
    parse_imu_csv,
    synth_trajectory,
    to_agent_states,
    write_imu_csv,
    write_nav_csv,
)
from .ins import Attitude, NavState, dcm_body_to_nav, euler_rates, ins_step, normal_gravity, propagate
from .modulation import PidGains, PidState, RewardKind, modulate, reward, state_error
from .qnet import QNetwork, forward, init_network, loss_and_gradients
from .trainer import (
    Checkpoint,
    EpisodeLog,
    evaluate,
    export_curves,
    load_checkpoint,
    run_episode,
    save_checkpoint,
    train,
)

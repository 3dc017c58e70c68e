"""Command-line entry point: ``dqmnav {train,eval,propagate,synth}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
Config-file values are applied first; explicit flags override them.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import __version__
from .agent import Hyperparams
from .errors import DataError, DqmError, UsageError
from .imu_io import PROFILES, parse_imu_csv, synth_trajectory, write_imu_csv, write_nav_csv
from .ins import Attitude, NavState, default_initial_state, propagate
from .modulation import REWARD_NAMES
from .trainer import evaluate, export_curves, load_checkpoint, save_checkpoint, train


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{message}\n{self.format_usage().rstrip()}")


def _defaults_text() -> str:
    d = Hyperparams()
    return (
        "defaults: BATCH_SIZE={0.batch_size} LR={0.lr} EPSILON={0.epsilon} GAMMA={0.gamma} "
        "TARGET_REPLACE_ITER={0.target_replace_iter} MEMORY_CAPACITY={0.memory_capacity} "
        "N_ACTIONS={0.n_actions} N_STATES={0.n_states} kp={0.kp} ki={0.ki} kd={0.kd} "
        "reward={0.reward_kind} episodes={0.episodes} hidden=10"
    ).format(d)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dqmnav", description=__doc__.splitlines()[0], epilog=_defaults_text())
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("train", help="train an agent on an IMU log", epilog=_defaults_text())
    t.add_argument("--imu", required=True, help="EuRoC-format IMU CSV")
    t.add_argument("--out-model", required=True, help="checkpoint path to write")
    t.add_argument("--config", help="JSON hyperparameter file (field names or upper-case aliases such as BATCH_SIZE)")
    t.add_argument("--curves", help="directory for reward_curve.csv / loss_curve.csv")
    t.add_argument("--seed", type=int)
    t.add_argument("--episodes", type=int, help="default 20")
    t.add_argument("--reward", help=f"one of: {', '.join(REWARD_NAMES)} (default sigmoid)")
    t.add_argument("--dump-config", help="write the effective hyperparameters as JSON")
    t.add_argument("--svg", action="store_true", help="also render curves as SVG")

    e = sub.add_parser("eval", help="continue a checkpoint on a validation log")
    e.add_argument("--imu", required=True)
    e.add_argument("--model", required=True)
    e.add_argument("--curves")
    e.add_argument("--episodes", type=int, help="default: the checkpoint's episode count")
    e.add_argument("--svg", action="store_true")

    pr = sub.add_parser("propagate", help="run the strapdown INS over an IMU log")
    pr.add_argument("--imu", required=True)
    pr.add_argument("--out", required=True, help="navigation CSV to write")
    pr.add_argument(
        "--init",
        help="JSON with lat_deg, lon_deg, alt_m, roll_deg, pitch_deg, yaw_deg, vel_ned "
        "(missing keys default to 39.975172 N, 116.344695283 E, 30 m, level, at rest)",
    )

    s = sub.add_parser("synth", help="write a synthetic EuRoC-format IMU log")
    s.add_argument("--profile", required=True, help=f"one of: {', '.join(PROFILES)}")
    s.add_argument("--duration-s", type=float, required=True)
    s.add_argument("--rate-hz", type=float, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--lat", type=float, default=0.0, help="degrees")
    s.add_argument("--alt", type=float, default=0.0, help="metres")
    return p


def _print_log(log) -> None:
    print(
        f"episode {log.episode:3d}  total_reward {log.total_reward:.6f}  "
        f"mean_loss {log.mean_loss:.6g}  adjust {log.action_counts['adjust']}  "
        f"no_adjust {log.action_counts['no_adjust']}",
        flush=True,
    )


def _load_traj(path):
    try:
        return parse_imu_csv(path)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None


def cmd_train(args) -> int:
    hyper = Hyperparams.from_json(args.config) if args.config else Hyperparams()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.episodes is not None:
        overrides["episodes"] = args.episodes
    if args.reward is not None:
        overrides["reward_kind"] = args.reward
    hyper = Hyperparams.from_dict(overrides, base=hyper)
    if args.dump_config:
        Path(args.dump_config).write_text(json.dumps(hyper.to_dict(), indent=2, sort_keys=True) + "\n")
    traj = _load_traj(args.imu)
    ckpt, logs = train(hyper, traj, on_episode=_print_log)
    save_checkpoint(ckpt, args.out_model)
    if args.curves:
        export_curves(logs, args.curves, svg=args.svg)
    return 0


def cmd_eval(args) -> int:
    ckpt = load_checkpoint(args.model)
    traj = _load_traj(args.imu)
    expected = ckpt.metadata.get("data_fingerprint")
    if expected and expected != traj.fingerprint():
        print(
            f"warning: {args.imu} differs from the training data recorded in {args.model}",
            file=sys.stderr,
        )
    logs = evaluate(ckpt, traj, episodes=args.episodes, on_episode=_print_log)
    if args.curves:
        export_curves(logs, args.curves, svg=args.svg)
    return 0


def _read_init(path, t_ns: int) -> NavState:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"init file {path}: {exc}") from None
    base = default_initial_state(t_ns)
    try:
        att = Attitude(
            math.radians(float(d.get("roll_deg", 0.0))),
            math.radians(float(d.get("pitch_deg", 0.0))),
            math.radians(float(d.get("yaw_deg", 0.0))),
        )
        return NavState(
            t_ns=t_ns,
            lat=math.radians(float(d["lat_deg"])) if "lat_deg" in d else base.lat,
            lon=math.radians(float(d["lon_deg"])) if "lon_deg" in d else base.lon,
            alt=float(d.get("alt_m", base.alt)),
            vel_ned=[float(v) for v in d.get("vel_ned", [0.0, 0.0, 0.0])],
            att=att,
        )
    except (TypeError, ValueError, AttributeError) as exc:
        raise DataError(f"init file {path}: {exc}") from None


def cmd_propagate(args) -> int:
    traj = _load_traj(args.imu)
    t0 = int(traj.t_ns[0])
    init = _read_init(args.init, t0) if args.init else default_initial_state(t0)
    write_nav_csv(propagate(init, traj), args.out)
    return 0


def cmd_synth(args) -> int:
    traj = synth_trajectory(args.profile, args.duration_s, args.rate_hz, args.lat, args.alt, args.seed)
    write_imu_csv(traj, args.out)
    return 0


COMMANDS = {"train": cmd_train, "eval": cmd_eval, "propagate": cmd_propagate, "synth": cmd_synth}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except DqmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())

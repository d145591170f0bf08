"""Command-line entry point.

Subcommands: rollout, eval-xp, augment-collect, button-game, render,
validate-layout, serve, play. Exit codes: 0 success, 1 user error,
2 internal error. File outputs are written atomically; a failing run never
leaves a partial file behind.

Configuration precedence per flag: built-in defaults, then --config-file
values, then repeated --config key=value overrides.
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional

from .button_game import ButtonGameConfig, run_button_experiment
from .env import Env
from .eval import (
    atomic_writer,
    collect_buffer,
    crossplay,
    expected_buffer_size,
    load_replay,
    rollout,
    save_replay,
    verify_replay,
)
from .layout import LayoutError, builtin, builtin_names, parse_layout, validate
from .policy import make_policy, policy_names
from .render import export_animation, render_ascii
from .state import ACTION_NAMES, EnvConfig, StateError


class UserError(Exception):
    """Bad input from the operator: exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UserError(message)


_KEY_ACTIONS = {
    "u": "up", "d": "down", "l": "left", "r": "right", "s": "stay", "i": "interact",
    "up": "up", "down": "down", "left": "left", "right": "right",
    "stay": "stay", "interact": "interact", " ": "interact",
}


def _load_layout(name_or_path: str):
    if name_or_path in builtin_names():
        return builtin(name_or_path)
    try:
        with open(name_or_path, encoding="utf-8") as fh:
            return parse_layout(fh.read(), name=name_or_path)
    except FileNotFoundError:
        raise UserError(
            f"{name_or_path!r} is neither a built-in layout "
            f"({', '.join(builtin_names())}) nor a readable file"
        ) from None


def _parse_override(text: str):
    if "=" not in text:
        raise UserError(f"--config expects key=value, got {text!r}")
    key, _, raw = text.partition("=")
    raw = raw.strip()
    lowered = raw.lower()
    if lowered in ("true", "false"):
        value = lowered == "true"
    elif lowered in ("none", "null"):
        value = None
    else:
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
    return key.strip(), value


def _build_config(args) -> EnvConfig:
    layout = _load_layout(args.layout)
    values = {}
    if getattr(args, "config_file", None):
        with open(args.config_file, encoding="utf-8") as fh:
            values.update(json.load(fh))
    for item in getattr(args, "config", None) or []:
        key, value = _parse_override(item)
        values[key] = value
    if getattr(args, "view_radius", None) is not None:
        values["view_radius"] = args.view_radius
    if "shaped_rewards" in values:
        values["shaped_rewards"] = tuple(values["shaped_rewards"])
    if values.get("other_play_symmetries") is not None:
        values["other_play_symmetries"] = tuple(
            tuple(p) for p in values["other_play_symmetries"]
        )
    try:
        return EnvConfig(layout=layout, **values)
    except (TypeError, ValueError) as err:
        raise UserError(f"bad configuration: {err}") from None


def _policies(spec: str, expected: int):
    names = [s.strip() for s in spec.split(",") if s.strip()]
    if len(names) != expected:
        raise UserError(f"need {expected} policies (comma separated), got {len(names)}")
    try:
        return [make_policy(name) for name in names]
    except ValueError as err:
        raise UserError(str(err)) from None


def _write_json(path: str, payload: dict) -> None:
    with atomic_writer(path) as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_text(path: str, text: str) -> None:
    with atomic_writer(path) as fh:
        fh.write(text)


# -- subcommands ---------------------------------------------------------------


def cmd_rollout(args) -> int:
    config = _build_config(args)
    policies = _policies(args.policies, config.layout.num_agents)
    traj = rollout(config, policies, seed=args.seed)
    if args.out:
        save_replay(traj, args.out)
    if args.gif:
        export_animation(traj, args.gif)
    if args.verify:
        result = verify_replay(traj)
        if not result.ok:
            print(f"verification failed: {result.message}", file=sys.stderr)
            return 2
    print(
        json.dumps(
            {
                "layout": config.layout.name,
                "seed": args.seed,
                "steps": len(traj),
                "return": traj.total_return(),
                "final_hash": traj.final_hash,
            }
        )
    )
    return 0


def cmd_eval_xp(args) -> int:
    config = _build_config(args)
    names = [s.strip() for s in args.policies.split(",") if s.strip()]
    if not names:
        raise UserError("--policies must list at least one policy")
    population = [make_policy(n) for n in names]
    matrix = crossplay(
        config,
        population,
        episodes_per_cell=args.episodes,
        seed=args.seed,
        ordered_xp=not args.unordered_xp,
        jobs=args.jobs,
    )
    payload = {"population": names, "layout": config.layout.name, **matrix.to_dict()}
    if args.out:
        _write_json(args.out, payload)
    if args.csv:
        _write_text(args.csv, matrix.to_csv())
    print(
        json.dumps(
            {
                "sp_mean": matrix.sp_mean,
                "xp_mean": matrix.xp_mean,
                "gap": matrix.gap,
            }
        )
    )
    return 0


def cmd_augment_collect(args) -> int:
    config = _build_config(args)
    names = [s.strip() for s in args.policies.split(",") if s.strip()]
    population = [make_policy(n) for n in names]
    buffer = collect_buffer(population, args.rollouts, config, seed=args.seed)
    expected = expected_buffer_size(len(population), args.rollouts, config.max_steps)
    if len(buffer) != expected:
        print(
            f"internal error: buffer holds {len(buffer)} states, expected {expected}",
            file=sys.stderr,
        )
        return 2
    buffer.save(args.out)
    print(json.dumps({"states": len(buffer), "out": args.out}))
    return 0


def cmd_button_game(args) -> int:
    exp = run_button_experiment(
        n_seeds=args.seeds,
        config=ButtonGameConfig(n_buttons=args.buttons),
        episodes=args.episodes,
        seed=args.seed,
        jobs=args.jobs,
    )
    if args.out:
        _write_text(args.out, exp.matrix.to_csv())
    if args.json:
        _write_json(args.json, exp.to_dict())
    print(
        json.dumps(
            {
                "sp_mean": exp.sp_mean,
                "xp_mean": exp.xp_mean,
                "br_min": min(exp.br_scores),
            }
        )
    )
    return 0


def cmd_render(args) -> int:
    traj = load_replay(args.replay)
    if args.format == "gif":
        if not args.out:
            raise UserError("--out is required for gif output")
        export_animation(traj, args.out)
        print(json.dumps({"frames": len(traj) + 1, "out": args.out}))
        return 0
    env = Env(traj.config)
    state = env.reset_to(traj.initial_state)
    score = 0
    frames = [render_ascii(state, traj.config, score=score)]
    for step in traj.steps:
        state, outcome = env.step(state, list(step.actions))
        score += outcome.rewards[0]
        frames.append(render_ascii(state, traj.config, score=score))
    text = "\n".join(frames)
    if args.out:
        _write_text(args.out, text)
    else:
        print(text, end="")
    return 0


def cmd_validate_layout(args) -> int:
    try:
        layout = _load_layout(args.layout)
    except UserError:
        raise
    issues = validate(layout)
    if issues:
        for issue in issues:
            print(issue, file=sys.stderr)
        return 1
    print(f"{layout.name}: ok ({layout.width}x{layout.height}, "
          f"{layout.num_agents} agents, {len(layout.possible_recipes)} recipes)")
    return 0


def cmd_serve(args) -> int:
    from .server import run_server

    run_server(host=args.host, port=args.port, static_dir=args.static)
    return 0


def cmd_play(args) -> int:
    config = _build_config(args)
    n = config.layout.num_agents
    if not 0 <= args.seat < n:
        raise UserError(f"--seat must be in 0..{n - 1}")
    partner_names = (
        [s.strip() for s in args.partners.split(",")] if args.partners else []
    )
    expected_partners = n - 1
    if len(partner_names) != expected_partners:
        raise UserError(f"need {expected_partners} partner policies, got {len(partner_names)}")

    from .rng import Rng, derive_seed

    env = Env(config)
    state = env.reset(args.seed)
    partners = {}
    seat_cursor = 0
    for i in range(n):
        if i == args.seat:
            continue
        policy = make_policy(partner_names[seat_cursor])
        partners[i] = (
            policy,
            policy.initial_memory(),
            Rng.from_seed(derive_seed(args.seed, i)),
        )
        seat_cursor += 1

    score = 0
    print(render_ascii(state, config, score=score))
    print("keys: u/d/l/r move, i or space interact, s stay, q quit")
    for line in sys.stdin:
        key = line.strip().lower()
        if key == "q":
            break
        if key not in _KEY_ACTIONS:
            print(f"unknown key {key!r}; use u/d/l/r/s/i or q")
            continue
        actions = []
        for i in range(n):
            if i == args.seat:
                actions.append(ACTION_NAMES.index(_KEY_ACTIONS[key]))
            else:
                policy, memory, rng = partners[i]
                from .eval import _policy_input

                inp = _policy_input(policy, state, i, config)
                action, memory = policy.act(inp, i, memory, rng)
                partners[i] = (policy, memory, rng)
                actions.append(action)
        state, outcome = env.step(state, actions)
        score += outcome.rewards[0]
        print(render_ascii(state, config, score=score))
        if outcome.done:
            print(f"episode over, score {score}")
            break
    return 0


# -- parser --------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="gridkitchen", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, layout=True):
        if layout:
            p.add_argument("--layout", required=True,
                           help="built-in layout name or .layout file path")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--config", action="append", metavar="KEY=VALUE",
                       help="environment config override, repeatable")
        p.add_argument("--config-file", help="JSON file of config overrides")
        p.add_argument("--view-radius", type=int, dest="view_radius", default=None)

    p = sub.add_parser("rollout", help="play one episode with named policies")
    common(p)
    p.add_argument("--policies", default="random,random",
                   help=f"comma-separated, one per seat; kinds: {', '.join(policy_names())}")
    p.add_argument("--out", help="replay file to write (JSON lines)")
    p.add_argument("--gif", help="animation file to write")
    p.add_argument("--verify", action="store_true",
                   help="re-simulate and check hashes before exiting")
    p.set_defaults(fn=cmd_rollout)

    p = sub.add_parser("eval-xp", help="cross-play matrix with SP/XP/gap stats")
    common(p)
    p.add_argument("--policies", required=True, help="comma-separated population")
    p.add_argument("--episodes", type=int, default=500)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--unordered-xp", action="store_true",
                   help="average each unordered pair instead of ordered pairs")
    p.add_argument("--out", help="JSON output path")
    p.add_argument("--csv", help="CSV output path")
    p.set_defaults(fn=cmd_eval_xp)

    p = sub.add_parser("augment-collect",
                       help="collect the every-tenth-state start-state buffer")
    common(p)
    p.add_argument("--policies", default="random,random")
    p.add_argument("--rollouts", type=int, default=1, help="rollouts per ordered pair")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_augment_collect)

    p = sub.add_parser("button-game",
                       help="train SP pairs plus a best response and cross-play them")
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--buttons", type=int, default=5)
    p.add_argument("--episodes", type=int, default=20_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="matrix CSV path")
    p.add_argument("--json", help="heatmap-data JSON path")
    p.set_defaults(fn=cmd_button_game)

    p = sub.add_parser("render", help="render a replay to a GIF or ASCII frames")
    p.add_argument("--replay", required=True)
    p.add_argument("--format", choices=("gif", "ascii"), default="gif")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_render)

    p = sub.add_parser("validate-layout", help="report layout issues")
    p.add_argument("layout")
    p.set_defaults(fn=cmd_validate_layout)

    p = sub.add_parser("serve", help="run the live-play session server")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--static", default=None,
                   help="directory with the web client (auto-detected when omitted)")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("play", help="terminal human play via ASCII frames")
    common(p)
    p.add_argument("--seat", type=int, default=0)
    p.add_argument("--partners", default="greedy",
                   help="comma-separated policies for the other seats")
    p.set_defaults(fn=cmd_play)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except UserError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (LayoutError, StateError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 1
    except Exception as err:  # pragma: no cover - internal failures
        print(f"internal error: {type(err).__name__}: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Rollouts, cross-play matrices, start-state buffers, and replay files.

Replay files are JSON lines: a header (config, seed, initial state), one
line per step (joint action, rewards, shaped rewards, events, state hash),
and a footer with the final hash. Verification re-simulates the episode
from the initial state and compares every hash.
"""
from __future__ import annotations

import json
import math
import os
import statistics
import tempfile
from dataclasses import dataclass, field
from multiprocessing import get_context
from typing import List, Optional, Sequence, Tuple

from .env import Env
from .observation import observe
from .policy import Policy
from .rng import Rng, derive_seed
from .state import (
    EnvConfig,
    GameState,
    config_digest,
    state_from_dict,
    state_hash,
    state_to_dict,
)

REPLAY_KIND = "gridkitchen-replay"
REPLAY_VERSION = 1
BUFFER_STRIDE = 10  # keep every tenth state, step 0 included


@dataclass(frozen=True)
class TrajStep:
    actions: Tuple[int, ...]
    rewards: Tuple[int, ...]
    shaped: Tuple[int, ...]
    events: Tuple[dict, ...]
    hash: str


@dataclass
class Trajectory:
    config: EnvConfig
    seed: int
    initial_state: GameState
    steps: List[TrajStep] = field(default_factory=list)

    @property
    def final_hash(self) -> str:
        return self.steps[-1].hash if self.steps else state_hash(self.initial_state)

    def total_return(self) -> int:
        return sum(step.rewards[0] for step in self.steps)

    def __len__(self) -> int:
        return len(self.steps)


def _policy_input(policy: Policy, state: GameState, agent: int, config: EnvConfig):
    if policy.wants == "tensor":
        return observe(state, agent, config)
    if policy.wants == "state":
        return (state, config)
    return None


def rollout(
    config: EnvConfig,
    policies: Sequence[Policy],
    seed: int,
    start_state: Optional[GameState] = None,
    state_stride: Optional[int] = None,
) -> Trajectory | Tuple[Trajectory, List[Tuple[int, GameState]]]:
    """Play one episode to completion.

    Every policy sees only its own input (observations are masked and
    permuted per that agent). With ``state_stride`` set, also returns the
    (step index, state) snapshots at stride boundaries, step 0 included.
    """
    env = Env(config)
    if len(policies) != env.num_agents:
        raise ValueError(
            f"{env.num_agents}-agent layout needs {env.num_agents} policies, "
            f"got {len(policies)}"
        )
    state = env.reset_to(start_state) if start_state is not None else env.reset(seed)

    seat_rngs = [Rng.from_seed(derive_seed(seed, i)) for i in range(len(policies))]
    memories = [p.initial_memory() for p in policies]

    traj = Trajectory(config=config, seed=seed, initial_state=state)
    snapshots: List[Tuple[int, GameState]] = []
    if state_stride:
        snapshots.append((0, state))

    while state.t < config.max_steps:
        actions = []
        for i, policy in enumerate(policies):
            inp = _policy_input(policy, state, i, config)
            action, memories[i] = policy.act(inp, i, memories[i], seat_rngs[i])
            actions.append(action)
        state, outcome = env.step(state, actions)
        traj.steps.append(
            TrajStep(
                actions=tuple(actions),
                rewards=outcome.rewards,
                shaped=outcome.shaped,
                events=outcome.events,
                hash=state_hash(state),
            )
        )
        if state_stride and state.t % state_stride == 0:
            snapshots.append((state.t, state))

    if state_stride:
        return traj, snapshots
    return traj


# -- start-state buffer (uniform start-state sampling support) -----------------


@dataclass(frozen=True)
class BufferEntry:
    state: GameState
    pair: Tuple[int, int]
    rollout_index: int
    step: int


@dataclass
class StateBuffer:
    config: EnvConfig
    entries: List[BufferEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def sample(self, rng: Rng) -> BufferEntry:
        if not self.entries:
            raise ValueError("cannot sample from an empty buffer")
        return self.entries[rng.randrange(len(self.entries))]

    def save(self, path: str) -> None:
        with atomic_writer(path) as fh:
            header = {
                "kind": "gridkitchen-buffer",
                "version": 1,
                "config": self.config.to_dict(),
            }
            fh.write(json.dumps(header, sort_keys=True) + "\n")
            for e in self.entries:
                fh.write(
                    json.dumps(
                        {
                            "state": state_to_dict(e.state),
                            "pair": list(e.pair),
                            "rollout": e.rollout_index,
                            "step": e.step,
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )

    @classmethod
    def load(cls, path: str) -> "StateBuffer":
        with open(path, encoding="utf-8") as fh:
            header = json.loads(fh.readline())
            if header.get("kind") != "gridkitchen-buffer":
                raise ValueError(f"{path} is not a state buffer file")
            config = EnvConfig.from_dict(header["config"])
            entries = []
            for line in fh:
                if not line.strip():
                    continue
                d = json.loads(line)
                entries.append(
                    BufferEntry(
                        state=state_from_dict(d["state"], config.layout),
                        pair=tuple(d["pair"]),
                        rollout_index=d["rollout"],
                        step=d["step"],
                    )
                )
        return cls(config=config, entries=entries)


def expected_buffer_size(population: int, rollouts: int, horizon: int) -> int:
    return population * population * rollouts * math.ceil((horizon + 1) / BUFFER_STRIDE)


def collect_buffer(
    population: Sequence[Policy],
    rollouts_per_pair: int,
    config: EnvConfig,
    seed: int,
) -> StateBuffer:
    """Roll out every ordered policy pair and keep every tenth state."""
    if config.layout.num_agents != 2:
        raise ValueError("pairwise buffer collection requires a two-agent layout")
    if not population or rollouts_per_pair < 1:
        raise ValueError("population and rollouts_per_pair must be non-empty/positive")
    buffer = StateBuffer(config=config)
    p = len(population)
    for i in range(p):
        for j in range(p):
            for r in range(rollouts_per_pair):
                episode_seed = derive_seed(seed, (i * p + j) * rollouts_per_pair + r)
                _, snapshots = rollout(
                    config,
                    [population[i], population[j]],
                    episode_seed,
                    state_stride=BUFFER_STRIDE,
                )
                for step, state in snapshots:
                    buffer.entries.append(
                        BufferEntry(state=state, pair=(i, j), rollout_index=r, step=step)
                    )
    return buffer


TrainerCallback = "Callable[[int, Policy, StateBuffer, int], Policy]"


def state_augmented_iterations(
    population: Sequence[Policy],
    iterations: int,
    rollouts_per_pair: int,
    config: EnvConfig,
    seed: int,
    trainer,
) -> List[Policy]:
    """The outer start-state-augmentation loop.

    Each iteration collects a fresh buffer from every ordered policy pair
    (every tenth state) and then hands each policy to ``trainer(index,
    policy, buffer, iteration)``, which returns the updated policy — the
    slot where any learner plugs in. Policies only ever train in self-play;
    the buffer is the sole cross-pollination channel.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    population = list(population)
    for k in range(iterations):
        buffer = collect_buffer(
            population, rollouts_per_pair, config, derive_seed(seed, k)
        )
        population = [
            trainer(i, policy, buffer, k) for i, policy in enumerate(population)
        ]
    return population


# -- cross-play matrices ---------------------------------------------------------


@dataclass
class CrossPlayMatrix:
    means: List[List[float]]
    stds: List[List[float]]
    episodes_per_cell: int
    ordered_xp: bool
    sp_mean: float
    sp_std: float
    xp_mean: float
    xp_std: float
    gap: float

    def to_dict(self) -> dict:
        return {
            "means": self.means,
            "stds": self.stds,
            "episodes_per_cell": self.episodes_per_cell,
            "ordered_xp": self.ordered_xp,
            "stats": {
                "sp_mean": self.sp_mean,
                "sp_std": self.sp_std,
                "xp_mean": self.xp_mean,
                "xp_std": self.xp_std,
                "gap": self.gap,
            },
        }

    def to_csv(self) -> str:
        p = len(self.means)
        lines = [",".join([""] + [f"p{j}" for j in range(p)])]
        for i in range(p):
            lines.append(",".join([f"p{i}"] + [f"{v:.6g}" for v in self.means[i]]))
        return "\n".join(lines) + "\n"


def summarize_matrix(
    means: List[List[float]], stds: List[List[float]], episodes: int, ordered: bool
) -> CrossPlayMatrix:
    p = len(means)
    sp = [means[i][i] for i in range(p)]
    if ordered:
        xp = [means[i][j] for i in range(p) for j in range(p) if i != j]
    else:
        xp = [
            (means[i][j] + means[j][i]) / 2.0
            for i in range(p)
            for j in range(i + 1, p)
        ]
    sp_mean = statistics.fmean(sp) if sp else float("nan")
    sp_std = statistics.pstdev(sp) if len(sp) > 1 else 0.0
    xp_mean = statistics.fmean(xp) if xp else float("nan")
    xp_std = statistics.pstdev(xp) if len(xp) > 1 else 0.0
    return CrossPlayMatrix(
        means=means,
        stds=stds,
        episodes_per_cell=episodes,
        ordered_xp=ordered,
        sp_mean=sp_mean,
        sp_std=sp_std,
        xp_mean=xp_mean,
        xp_std=xp_std,
        gap=sp_mean - xp_mean if xp else 0.0,
    )


def _run_cell(args) -> Tuple[int, int, float, float]:
    config_dict, specs, i, j, episodes, seed = args
    from .policy import make_policy

    config = EnvConfig.from_dict(config_dict)
    pol_i = make_policy(specs[i])
    pol_j = make_policy(specs[j])
    returns = []
    for e in range(episodes):
        episode_seed = derive_seed(seed, (i * len(specs) + j) * episodes + e)
        traj = rollout(config, [pol_i, pol_j], episode_seed)
        returns.append(traj.total_return())
    mean = statistics.fmean(returns)
    std = statistics.pstdev(returns) if len(returns) > 1 else 0.0
    return i, j, mean, std


def crossplay(
    config: EnvConfig,
    population: Sequence[Policy],
    episodes_per_cell: int = 500,
    seed: int = 0,
    ordered_xp: bool = True,
    jobs: int = 1,
) -> CrossPlayMatrix:
    """P x P mean-return matrix: policy i in seat 0 against policy j in seat 1."""
    if config.layout.num_agents != 2:
        raise ValueError("cross-play matrices require a two-agent layout")
    if episodes_per_cell < 1:
        raise ValueError("episodes_per_cell must be >= 1")
    p = len(population)
    if p == 0:
        raise ValueError("population must be non-empty")
    specs = [pol.to_spec() for pol in population]
    tasks = [
        (config.to_dict(), specs, i, j, episodes_per_cell, seed)
        for i in range(p)
        for j in range(p)
    ]
    means = [[0.0] * p for _ in range(p)]
    stds = [[0.0] * p for _ in range(p)]
    if jobs > 1:
        with get_context("spawn").Pool(jobs) as pool:
            results = pool.map(_run_cell, tasks)
    else:
        results = [_run_cell(t) for t in tasks]
    for i, j, mean, std in results:
        means[i][j] = mean
        stds[i][j] = std
    return summarize_matrix(means, stds, episodes_per_cell, ordered_xp)


# -- replay files -----------------------------------------------------------------


class atomic_writer:
    """Write to a temp file and rename on success: no partial outputs."""

    def __init__(self, path):
        self.path = str(path)
        self._fh = None
        self._tmp = None

    def __enter__(self):
        directory = os.path.dirname(self.path) or "."
        fd, self._tmp = tempfile.mkstemp(dir=directory, suffix=".part")
        self._fh = os.fdopen(fd, "w", encoding="utf-8")
        return self._fh

    def __exit__(self, exc_type, exc, tb):
        self._fh.close()
        if exc_type is None:
            os.replace(self._tmp, self.path)
        else:
            os.unlink(self._tmp)
        return False


def replay_lines(traj: Trajectory):
    """Replay file content as JSON lines: header, steps, footer."""
    yield json.dumps(
        {
            "kind": REPLAY_KIND,
            "version": REPLAY_VERSION,
            "config": traj.config.to_dict(),
            "config_digest": config_digest(traj.config),
            "seed": traj.seed,
            "initial_state": state_to_dict(traj.initial_state),
        },
        sort_keys=True,
    )
    for k, step in enumerate(traj.steps):
        yield json.dumps(
            {
                "t": k + 1,
                "a": list(step.actions),
                "r": list(step.rewards),
                "s": list(step.shaped),
                "e": list(step.events),
                "h": step.hash,
            },
            sort_keys=True,
        )
    yield json.dumps({"final_hash": traj.final_hash}, sort_keys=True)


def save_replay(traj: Trajectory, path: str) -> None:
    with atomic_writer(path) as fh:
        for line in replay_lines(traj):
            fh.write(line + "\n")


def load_replay(path: str) -> Trajectory:
    with open(path, encoding="utf-8") as fh:
        return parse_replay(fh, source=str(path))


def load_replay_text(text: str) -> Trajectory:
    return parse_replay(text.splitlines(), source="<string>")


def parse_replay(line_source, source: str = "<replay>") -> Trajectory:
    path = source
    lines = [json.loads(line) for line in line_source if line.strip()]
    if not lines or lines[0].get("kind") != REPLAY_KIND:
        raise ValueError(f"{path} is not a replay file")
    header = lines[0]
    if header.get("version") != REPLAY_VERSION:
        raise ValueError(f"unsupported replay version {header.get('version')!r}")
    config = EnvConfig.from_dict(header["config"])
    traj = Trajectory(
        config=config,
        seed=header["seed"],
        initial_state=state_from_dict(header["initial_state"], config.layout),
    )
    body = lines[1:]
    if body and "final_hash" in body[-1]:
        footer = body.pop()
        expected = footer["final_hash"]
    else:
        raise ValueError(f"{path} is missing its footer line")
    for d in body:
        traj.steps.append(
            TrajStep(
                actions=tuple(d["a"]),
                rewards=tuple(d["r"]),
                shaped=tuple(d["s"]),
                events=tuple(d["e"]),
                hash=d["h"],
            )
        )
    if traj.final_hash != expected:
        raise ValueError(f"{path}: footer hash does not match the last step")
    return traj


@dataclass
class VerifyResult:
    ok: bool
    divergence_step: Optional[int] = None
    message: str = ""

    def __bool__(self):
        return self.ok


def verify_replay(traj: Trajectory) -> VerifyResult:
    """Re-simulate the recorded actions and compare every state hash."""
    env = Env(traj.config)
    state = env.reset_to(traj.initial_state)
    recorded_initial = state_hash(traj.initial_state)
    if state_hash(state) != recorded_initial:
        return VerifyResult(False, 0, "initial state failed to round-trip")
    for k, step in enumerate(traj.steps):
        state, outcome = env.step(state, list(step.actions))
        if state_hash(state) != step.hash:
            return VerifyResult(
                False, k + 1, f"state hash diverged at step {k + 1}"
            )
        if outcome.rewards != tuple(step.rewards):
            return VerifyResult(
                False, k + 1, f"rewards diverged at step {k + 1}"
            )
    return VerifyResult(True)


def verify_replay_file(path: str) -> VerifyResult:
    return verify_replay(load_replay(path))

"""The button-and-bulb guessing game and its tabular learning experiment.

One round: Alice sees a pet bit (0 or 1) and presses one of N buttons; the
bulb at index 2*button + pet lights up; Bob sees the bulb and guesses the
pet. Both receive +R for a correct guess and -R otherwise. The bulb's
parity always equals the pet, so a parity-reading Bob scores perfectly with
any Alice — the game needs state coverage, not coordination.

Training is one-shot independent Q-learning on the shared reward. The
default exploration schedule is pure greedy with uniform tie-breaking over
an all-zero (optimistic relative to -R) initialization: each seat settles
on the first button/guess that pays off, which is what produces self-play
pairs that overfit to their own buttons and fail with novel partners.
Schedules are configurable; sustained epsilon exploration instead teaches
Bob the full bulb table and washes the cross-play failure out.

The default button count (N = 5) and the training hyperparameters are this
project's choices; all are parameters.
"""
from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

from .rng import Rng, derive_seed

EpsilonSchedule = Callable[[int, int], float]


@dataclass(frozen=True)
class ButtonGameConfig:
    n_buttons: int = 5
    reward_magnitude: int = 10

    def __post_init__(self):
        if self.n_buttons < 1:
            raise ValueError(f"need at least one button, got {self.n_buttons}")

    @property
    def n_bulbs(self) -> int:
        return 2 * self.n_buttons


@dataclass
class QTables:
    """q_alice[pet][button] and q_bob[bulb][guess]; q_alice None = uniform."""

    q_alice: Optional[List[List[float]]]
    q_bob: List[List[float]]

    @classmethod
    def zeros(cls, config: ButtonGameConfig) -> "QTables":
        return cls(
            q_alice=[[0.0] * config.n_buttons for _ in range(2)],
            q_bob=[[0.0] * 2 for _ in range(config.n_bulbs)],
        )


class UnvisitedBulbError(RuntimeError):
    def __init__(self, bulbs: Sequence[int]):
        self.bulbs = list(bulbs)
        super().__init__(f"bulbs never lit during training: {self.bulbs}")


def greedy_probs(values: Sequence[float]) -> List[float]:
    """Uniform distribution over the argmax set."""
    best = max(values)
    winners = [i for i, v in enumerate(values) if v == best]
    p = 1.0 / len(winners)
    return [p if i in winners else 0.0 for i in range(len(values))]


def _greedy_draw(values: Sequence[float], rng: Rng) -> int:
    best = max(values)
    winners = [i for i, v in enumerate(values) if v == best]
    return winners[rng.randrange(len(winners))]


def alice_probs(tables: QTables, config: ButtonGameConfig, pet: int) -> List[float]:
    if tables.q_alice is None:
        return [1.0 / config.n_buttons] * config.n_buttons
    return greedy_probs(tables.q_alice[pet])


def bob_probs(tables: QTables, bulb: int) -> List[float]:
    return greedy_probs(tables.q_bob[bulb])


def bg_play(
    alice: Callable[[int, Rng], int],
    bob: Callable[[int, Rng], int],
    pet: int,
    rng: Rng,
    config: ButtonGameConfig = ButtonGameConfig(),
) -> int:
    """One sampled round; alice maps pet -> button, bob maps bulb -> guess."""
    if pet not in (0, 1):
        raise ValueError(f"pet must be 0 or 1, got {pet}")
    button = alice(pet, rng)
    if not 0 <= button < config.n_buttons:
        raise ValueError(f"button {button} outside 0..{config.n_buttons - 1}")
    bulb = 2 * button + pet
    guess = bob(bulb, rng)
    if guess not in (0, 1):
        raise ValueError(f"guess must be 0 or 1, got {guess}")
    r = config.reward_magnitude
    return r if guess == pet else -r


def tables_alice(tables: QTables, config: ButtonGameConfig) -> Callable[[int, Rng], int]:
    if tables.q_alice is None:
        return lambda pet, rng: rng.randrange(config.n_buttons)
    return lambda pet, rng: _greedy_draw(tables.q_alice[pet], rng)


def tables_bob(tables: QTables) -> Callable[[int, Rng], int]:
    return lambda bulb, rng: _greedy_draw(tables.q_bob[bulb], rng)


def parity_bob(bulb: int, rng: Rng) -> int:
    return bulb & 1


def expected_reward(
    alice_dist: Callable[[int], Sequence[float]],
    bob_dist: Callable[[int], Sequence[float]],
    config: ButtonGameConfig = ButtonGameConfig(),
) -> float:
    """Exact expectation over both pets with tie-broken mixed strategies."""
    r = config.reward_magnitude
    total = 0.0
    for pet in (0, 1):
        pa = alice_dist(pet)
        for button, p_button in enumerate(pa):
            if p_button == 0.0:
                continue
            bulb = 2 * button + pet
            pb = bob_dist(bulb)
            total += 0.5 * p_button * (pb[pet] * r - pb[1 - pet] * r)
    return total


def pair_expected_reward(
    alice_tables: QTables, bob_tables: QTables, config: ButtonGameConfig
) -> float:
    return expected_reward(
        lambda pet: alice_probs(alice_tables, config, pet),
        lambda bulb: bob_probs(bob_tables, bulb),
        config,
    )


def monte_carlo_reward(
    alice_tables: QTables,
    bob_tables: QTables,
    config: ButtonGameConfig,
    rng: Rng,
    episodes: int = 2000,
) -> float:
    alice = tables_alice(alice_tables, config)
    bob = tables_bob(bob_tables)
    total = 0
    for _ in range(episodes):
        total += bg_play(alice, bob, rng.randrange(2), rng, config)
    return total / episodes


# -- training -------------------------------------------------------------------


def constant_epsilon(value: float) -> EpsilonSchedule:
    return lambda episode, episodes: value

def linear_epsilon(start: float, end: float) -> EpsilonSchedule:
    def schedule(episode: int, episodes: int) -> float:
        frac = episode / max(episodes - 1, 1)
        return start + (end - start) * frac
    return schedule


GREEDY = constant_epsilon(0.0)


def _epsilon_greedy(values, epsilon, n, rng: Rng) -> int:
    if epsilon > 0 and rng.randrange(1_000_000) < epsilon * 1_000_000:
        return rng.randrange(n)
    return _greedy_draw(values, rng)


def train_iql(
    config: ButtonGameConfig,
    seed: int,
    episodes: int = 20_000,
    alpha: float = 0.1,
    epsilon: EpsilonSchedule = GREEDY,
    check_convergence: bool = True,
    reward_log: Optional[List[int]] = None,
) -> QTables:
    """Self-play independent Q-learning on the shared one-shot reward."""
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    rng = Rng.from_seed(seed)
    tables = QTables.zeros(config)
    r_mag = config.reward_magnitude
    for episode in range(episodes):
        eps = epsilon(episode, episodes)
        pet = rng.randrange(2)
        button = _epsilon_greedy(tables.q_alice[pet], eps, config.n_buttons, rng)
        bulb = 2 * button + pet
        guess = _epsilon_greedy(tables.q_bob[bulb], eps, 2, rng)
        r = r_mag if guess == pet else -r_mag
        if reward_log is not None:
            reward_log.append(r)
        tables.q_alice[pet][button] += alpha * (r - tables.q_alice[pet][button])
        tables.q_bob[bulb][guess] += alpha * (r - tables.q_bob[bulb][guess])
    if check_convergence:
        sp = pair_expected_reward(tables, tables, config)
        if sp < 9.5:
            raise RuntimeError(
                f"self-play training failed to converge: greedy return {sp:.2f} < 9.5"
            )
    return tables


def train_br_uniform(
    config: ButtonGameConfig,
    seed: int,
    episodes: int = 20_000,
    alpha: float = 0.1,
    epsilon: EpsilonSchedule = GREEDY,
) -> QTables:
    """Bob as best response to a uniform-random Alice; decodes bulb parity."""
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    rng = Rng.from_seed(seed)
    tables = QTables.zeros(config)
    tables.q_alice = None  # the paired alice stays uniform
    r_mag = config.reward_magnitude
    visited = [False] * config.n_bulbs
    for episode in range(episodes):
        eps = epsilon(episode, episodes)
        pet = rng.randrange(2)
        button = rng.randrange(config.n_buttons)
        bulb = 2 * button + pet
        visited[bulb] = True
        guess = _epsilon_greedy(tables.q_bob[bulb], eps, 2, rng)
        r = r_mag if guess == pet else -r_mag
        tables.q_bob[bulb][guess] += alpha * (r - tables.q_bob[bulb][guess])
    unvisited = [b for b, seen in enumerate(visited) if not seen]
    if unvisited:
        raise UnvisitedBulbError(unvisited)
    for bulb in range(config.n_bulbs):
        probs = bob_probs(tables, bulb)
        if probs[bulb & 1] != 1.0:
            raise RuntimeError(
                f"best response failed to decode parity on bulb {bulb}"
            )
    return tables


# -- cross-play ------------------------------------------------------------------


@dataclass
class ButtonMatrix:
    """Exact expected rewards; entry (i, j) pairs alice_i with bob_j."""

    values: List[List[float]]
    labels: List[str] = field(default_factory=list)

    def to_csv(self) -> str:
        p = len(self.values)
        labels = self.labels or [f"p{i}" for i in range(p)]
        lines = [",".join([""] + labels)]
        for i in range(p):
            lines.append(",".join([labels[i]] + [f"{v:.6g}" for v in self.values[i]]))
        return "\n".join(lines) + "\n"

    def to_heatmap_json(self) -> dict:
        p = len(self.values)
        return {
            "labels": self.labels or [f"p{i}" for i in range(p)],
            "values": self.values,
        }


def crossplay_matrix(
    population: Sequence[QTables],
    config: ButtonGameConfig = ButtonGameConfig(),
    labels: Optional[Sequence[str]] = None,
) -> ButtonMatrix:
    if not population:
        raise ValueError("population must be non-empty")
    values = [
        [pair_expected_reward(a, b, config) for b in population] for a in population
    ]
    return ButtonMatrix(values=values, labels=list(labels or []))


@dataclass
class ButtonExperiment:
    matrix: ButtonMatrix
    n_seeds: int
    sp_mean: float          # self-play pairs, diagonal
    xp_mean: float          # self-play pairs, ordered off-diagonal
    br_scores: List[float]  # best-response bob against every alice

    def to_dict(self) -> dict:
        return {
            "matrix": self.matrix.to_heatmap_json(),
            "n_seeds": self.n_seeds,
            "sp_mean": self.sp_mean,
            "xp_mean": self.xp_mean,
            "br_scores": self.br_scores,
        }


def _train_one_seed(args) -> QTables:
    config, seed, episodes, alpha = args
    return train_iql(config, seed, episodes, alpha)


def run_button_experiment(
    n_seeds: int = 10,
    config: ButtonGameConfig = ButtonGameConfig(),
    episodes: int = 20_000,
    alpha: float = 0.1,
    epsilon: EpsilonSchedule = GREEDY,
    seed: int = 0,
    jobs: int = 1,
) -> ButtonExperiment:
    """Train n_seeds self-play pairs plus a best response, cross-play them all.

    The returned matrix is (n_seeds + 1) square with the best-response pair
    (uniform alice, parity-decoding bob) last. Seeds are independent, so
    ``jobs`` parallelizes training (only with the default schedule, which is
    the picklable one).
    """
    if jobs > 1 and epsilon is GREEDY:
        from multiprocessing import get_context

        tasks = [
            (config, derive_seed(seed, k), episodes, alpha) for k in range(n_seeds)
        ]
        with get_context("spawn").Pool(jobs) as pool:
            population = pool.map(_train_one_seed, tasks)
    else:
        population = [
            train_iql(config, derive_seed(seed, k), episodes, alpha, epsilon)
            for k in range(n_seeds)
        ]
    population.append(
        train_br_uniform(config, derive_seed(seed, n_seeds), episodes, alpha, epsilon)
    )
    labels = [f"sp{k}" for k in range(n_seeds)] + ["br"]
    matrix = crossplay_matrix(population, config, labels=labels)
    sp = [matrix.values[i][i] for i in range(n_seeds)]
    xp = [
        matrix.values[i][j]
        for i in range(n_seeds)
        for j in range(n_seeds)
        if i != j
    ]
    br_scores = [matrix.values[i][n_seeds] for i in range(n_seeds + 1)]
    return ButtonExperiment(
        matrix=matrix,
        n_seeds=n_seeds,
        sp_mean=statistics.fmean(sp),
        xp_mean=statistics.fmean(xp) if xp else 0.0,
        br_scores=br_scores,
    )

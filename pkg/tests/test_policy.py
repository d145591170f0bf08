"""Baseline policies: uniformity, determinism, competence, serialization."""
from collections import Counter

import pytest

from gridkitchen.eval import rollout
from gridkitchen.policy import (
    GreedyPolicy,
    RandomPolicy,
    TabularPolicy,
    load_policy,
    make_policy,
    policy_names,
    save_policy,
)
from gridkitchen.rng import Rng
from gridkitchen.state import NUM_ACTIONS, STAY

from .helpers import make_env
from .stats import chi_square_uniform_p


def test_random_policy_uniform():
    policy = RandomPolicy()
    rng = Rng.from_seed(11)
    counts = Counter()
    memory = policy.initial_memory()
    for _ in range(60_000):
        action, memory = policy.act(None, 0, memory, rng)
        assert 0 <= action < NUM_ACTIONS
        counts[action] += 1
    assert chi_square_uniform_p([counts[a] for a in range(NUM_ACTIONS)]) > 0.01


def test_random_policy_reproducible():
    policy = RandomPolicy()

    def run():
        rng = Rng.from_seed(5)
        memory = policy.initial_memory()
        out = []
        for _ in range(50):
            action, memory = policy.act(None, 0, memory, rng)
            out.append(action)
        return out

    assert run() == run()


def test_greedy_same_state_same_action():
    env = make_env("cramped_room")
    policy = GreedyPolicy()
    state = env.reset(0)
    rng = Rng.from_seed(0)
    a1, _ = policy.act((state, env.config), 0, policy.initial_memory(), rng)
    a2, _ = policy.act((state, env.config), 0, policy.initial_memory(), rng)
    assert a1 == a2


def test_greedy_pair_delivers_on_cramped_room():
    env = make_env("cramped_room")
    traj = rollout(env.config, [GreedyPolicy(), GreedyPolicy()], seed=0)
    assert traj.total_return() >= 20


def test_greedy_boxed_in_stays_forever():
    text = "WWWWWW\nWAWP 0\nWWWW B\nWWWWXW"
    env = make_env(text)
    policy = GreedyPolicy()
    state = env.reset(0)
    memory = policy.initial_memory()
    rng = Rng.from_seed(0)
    for _ in range(10):
        action, memory = policy.act((state, env.config), 0, memory, rng)
        assert action == STAY
        state, _ = env.step(state, [action])


def test_tabular_policy_serializes():
    env = make_env("cramped_room")
    state = env.reset(0)
    policy = TabularPolicy()
    key = policy.key(state, 0)
    policy.table[key] = [0, 0, 0, 0, 0, 9.5]
    action, _ = policy.act((state, env.config), 0, None, Rng.from_seed(0))
    assert action == 5

    spec = policy.to_spec()
    revived = make_policy(spec)
    action2, _ = revived.act((state, env.config), 0, None, Rng.from_seed(0))
    assert action2 == action


def test_tabular_default_tie_breaks_low_action():
    policy = TabularPolicy()
    env = make_env("cramped_room")
    state = env.reset(0)
    action, _ = policy.act((state, env.config), 0, None, Rng.from_seed(0))
    assert action == 0


def test_policy_file_round_trip(tmp_path):
    path = tmp_path / "policy.json"
    save_policy(GreedyPolicy(), path)
    policy = load_policy(path)
    assert isinstance(policy, GreedyPolicy)


def test_make_policy_unknown_kind():
    with pytest.raises(ValueError, match="greedy"):
        make_policy("frobnicator")


def test_policy_names():
    assert set(policy_names()) == {"random", "greedy", "tabular"}

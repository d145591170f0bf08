"""Rollout determinism, buffer arithmetic, cross-play stats, replay files."""
import json
import math
from collections import Counter

import pytest

from gridkitchen.eval import (
    BUFFER_STRIDE,
    StateBuffer,
    collect_buffer,
    crossplay,
    expected_buffer_size,
    load_replay,
    rollout,
    save_replay,
    summarize_matrix,
    verify_replay,
    verify_replay_file,
)
from gridkitchen.observation import observe
from gridkitchen.policy import GreedyPolicy, RandomPolicy
from gridkitchen.rng import Rng
from gridkitchen.state import state_hash

from .helpers import make_env
from .stats import chi_square_uniform_p


def short_config(name="cramped_room", **kw):
    kw.setdefault("max_steps", 40)
    return make_env(name, **kw).config


def test_rollout_runs_to_horizon_and_is_deterministic():
    config = short_config(max_steps=60)
    a = rollout(config, [RandomPolicy(), RandomPolicy()], seed=3)
    b = rollout(config, [RandomPolicy(), RandomPolicy()], seed=3)
    assert len(a) == 60
    assert [s.hash for s in a.steps] == [s.hash for s in b.steps]
    assert [s.actions for s in a.steps] == [s.actions for s in b.steps]
    c = rollout(config, [RandomPolicy(), RandomPolicy()], seed=4)
    assert [s.hash for s in c.steps] != [s.hash for s in a.steps]


def test_rollout_policy_arity_checked():
    config = short_config()
    with pytest.raises(ValueError):
        rollout(config, [RandomPolicy()], seed=0)


def test_rollout_from_buffer_state_matches_observation():
    config = short_config(view_radius=1)
    traj, snaps = rollout(
        config, [RandomPolicy(), RandomPolicy()], seed=9, state_stride=10
    )
    step, mid_state = snaps[2]
    assert step == 20
    restart = rollout(
        config, [RandomPolicy(), RandomPolicy()], seed=1, start_state=mid_state
    )
    obs_injected = observe(restart.initial_state, 0, config)
    obs_captured = observe(mid_state, 0, config)
    assert (obs_injected == obs_captured).all()


def test_buffer_size_formula():
    config = short_config(max_steps=40)
    pop = [RandomPolicy(), RandomPolicy()]
    buffer = collect_buffer(pop, rollouts_per_pair=1, config=config, seed=0)
    assert len(buffer) == expected_buffer_size(2, 1, 40)
    assert len(buffer) == 2 * 2 * 1 * math.ceil(41 / BUFFER_STRIDE)

    single = collect_buffer([RandomPolicy()], 2, config, seed=0)
    assert len(single) == expected_buffer_size(1, 2, 40)


def test_buffer_size_formula_T400():
    config = short_config(max_steps=400)
    pop = [RandomPolicy(), RandomPolicy()]
    buffer = collect_buffer(pop, rollouts_per_pair=1, config=config, seed=1)
    assert len(buffer) == 164  # 2^2 * 1 * ceil(401/10)


def test_buffer_steps_are_stride_multiples_with_metadata():
    config = short_config(max_steps=40)
    buffer = collect_buffer([RandomPolicy()], 3, config, seed=5)
    assert {e.step % BUFFER_STRIDE for e in buffer.entries} == {0}
    assert {e.pair for e in buffer.entries} == {(0, 0)}
    assert {e.rollout_index for e in buffer.entries} == {0, 1, 2}


def test_buffer_sampling_uniform():
    config = short_config(max_steps=40)
    buffer = collect_buffer([RandomPolicy(), RandomPolicy()], 1, config, seed=0)
    rng = Rng.from_seed(17)
    counts = Counter()
    draws = 10_000
    for _ in range(draws):
        entry = buffer.sample(rng)
        counts[(entry.pair, entry.rollout_index, entry.step)] += 1
    assert len(counts) == len(buffer)
    assert chi_square_uniform_p([counts[k] for k in counts]) > 0.01


def test_buffer_file_round_trip(tmp_path):
    config = short_config(max_steps=20)
    buffer = collect_buffer([RandomPolicy()], 1, config, seed=2)
    path = tmp_path / "buffer.jsonl"
    buffer.save(path)
    loaded = StateBuffer.load(path)
    assert len(loaded) == len(buffer)
    assert [state_hash(e.state) for e in loaded.entries] == [
        state_hash(e.state) for e in buffer.entries
    ]


def test_crossplay_identical_policies_zero_gap():
    config = short_config(max_steps=30)
    matrix = crossplay(config, [GreedyPolicy(), GreedyPolicy()], 2, seed=0)
    flat = [v for row in matrix.means for v in row]
    assert len(set(flat)) == 1  # same deterministic pair everywhere
    assert matrix.gap == 0.0


def test_crossplay_greedy_beats_random_seat():
    config = short_config(max_steps=120)
    matrix = crossplay(config, [GreedyPolicy(), RandomPolicy()], 3, seed=1)
    assert matrix.means[0][0] >= max(matrix.means[0][1], matrix.means[1][0])


def test_crossplay_stats_ordered_and_unordered():
    means = [[10.0, 2.0], [4.0, 8.0]]
    stds = [[0.0, 0.0], [0.0, 0.0]]
    ordered = summarize_matrix(means, stds, 1, ordered=True)
    assert ordered.sp_mean == 9.0
    assert ordered.xp_mean == 3.0
    assert ordered.gap == 6.0
    unordered = summarize_matrix(means, stds, 1, ordered=False)
    assert unordered.xp_mean == 3.0  # (2 + 4) / 2


def test_crossplay_reproducible():
    config = short_config(max_steps=30)
    pop = [RandomPolicy(), GreedyPolicy()]
    a = crossplay(config, pop, 2, seed=7)
    b = crossplay(config, pop, 2, seed=7)
    assert a.means == b.means


def test_crossplay_parallel_matches_serial():
    config = short_config(max_steps=30)
    pop = [RandomPolicy(), GreedyPolicy()]
    serial = crossplay(config, pop, 2, seed=7, jobs=1)
    parallel = crossplay(config, pop, 2, seed=7, jobs=2)
    assert serial.means == parallel.means


def test_replay_round_trip_and_verify(tmp_path):
    config = short_config(max_steps=50)
    for seed in range(5):
        traj = rollout(config, [RandomPolicy(), RandomPolicy()], seed=seed)
        path = tmp_path / f"replay_{seed}.jsonl"
        save_replay(traj, path)
        loaded = load_replay(path)
        assert loaded.final_hash == traj.final_hash
        assert verify_replay(loaded).ok
        assert verify_replay_file(path).ok


def test_replay_detects_corrupted_action(tmp_path):
    config = short_config(max_steps=30)
    traj = rollout(config, [RandomPolicy(), RandomPolicy()], seed=1)
    path = tmp_path / "replay.jsonl"
    save_replay(traj, path)

    lines = path.read_text().splitlines()
    record = json.loads(lines[12])  # step 12
    record["a"][0] = (record["a"][0] + 1) % 6
    lines[12] = json.dumps(record, sort_keys=True)
    corrupt = tmp_path / "corrupt.jsonl"
    corrupt.write_text("\n".join(lines) + "\n")

    result = verify_replay_file(corrupt)
    assert not result.ok
    assert result.divergence_step == 12


def test_replay_rejects_truncated_file(tmp_path):
    config = short_config(max_steps=10)
    traj = rollout(config, [RandomPolicy(), RandomPolicy()], seed=1)
    path = tmp_path / "replay.jsonl"
    save_replay(traj, path)
    truncated = tmp_path / "truncated.jsonl"
    truncated.write_text("\n".join(path.read_text().splitlines()[:-1]) + "\n")
    with pytest.raises(ValueError, match="footer"):
        load_replay(truncated)


def test_trajectory_total_return_counts_common_reward():
    config = short_config(max_steps=120)
    traj = rollout(config, [GreedyPolicy(), GreedyPolicy()], seed=0)
    delivered = sum(
        20 if e["correct"] else 0
        for s in traj.steps
        for e in s.events
        if e["type"] == "delivered"
    )
    assert traj.total_return() == delivered


def test_state_augmented_iteration_loop():
    """The outer loop: collect buffer over all pairs, then train each policy
    with buffer-sampled start states (exercised with a scripted stand-in)."""
    from gridkitchen.eval import state_augmented_iterations
    from gridkitchen.rng import Rng

    config = short_config(max_steps=20)
    calls = []

    def trainer(index, policy, buffer, iteration):
        assert len(buffer) == 2 * 2 * 1 * 3  # P^2 * R * ceil(21/10)
        rng = Rng.from_seed(iteration * 10 + index)
        start = buffer.sample(rng).state
        traj = rollout(config, [policy, policy], seed=index, start_state=start)
        calls.append((iteration, index, len(traj)))
        return policy

    population = [RandomPolicy(), RandomPolicy()]
    out = state_augmented_iterations(
        population, iterations=3, rollouts_per_pair=1, config=config,
        seed=9, trainer=trainer,
    )
    assert len(out) == 2
    assert [(it, idx) for it, idx, _ in calls] == [
        (0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1)
    ]
    assert all(steps == 20 for _, _, steps in calls)


def test_crossplay_default_episode_count():
    import inspect

    from gridkitchen.eval import crossplay as fn

    assert inspect.signature(fn).parameters["episodes_per_cell"].default == 500


def test_draw_permutations_identity_only():
    from gridkitchen.observation import draw_permutations
    from gridkitchen.rng import Rng

    perms = draw_permutations(Rng.from_seed(0), 3, [(0, 1, 2)])
    assert perms == [(0, 1, 2)] * 3

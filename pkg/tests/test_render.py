"""ASCII rendering, frame JSON, hashes, GIF export determinism."""
import json

import pytest

from gridkitchen.eval import rollout
from gridkitchen.items import encode_item
from gridkitchen.policy import RandomPolicy
from gridkitchen.render import (
    draw_state,
    export_animation,
    fnv1a32,
    frame_from_state,
    grid_canonical_string,
    render_ascii,
    visibility_mask,
)

from .helpers import make_env, put_item, put_timer, set_agent


def test_fnv1a32_known_vectors():
    # standard FNV-1a reference values
    assert fnv1a32(b"") == 0x811C9DC5
    assert fnv1a32(b"a") == 0xE40C292C
    assert fnv1a32(b"foobar") == 0xBF9CF968


def test_ascii_matches_layout_plus_arrows():
    env = make_env("cramped_room")
    state = env.reset(0)
    text = render_ascii(state, env.config)
    lines = text.splitlines()
    assert lines[0] == "WWPWW"
    assert lines[1] == "0  ^0"  # first agent at (3, 1) facing up
    assert lines[2] == "W^  W"
    assert lines[3] == "WBWXW"


def test_ascii_deterministic_and_annotates_cooking():
    env = make_env()
    state = env.reset(1)
    state = put_item(state, (2, 0), encode_item(False, False, [2, 1]))
    state = put_timer(state, (2, 0), 9)
    once = render_ascii(state, env.config)
    twice = render_ascii(state, env.config)
    assert once == twice
    assert "P(2,0): 2x0+1x1 timer=9" in once


def test_frame_schema_and_hash_stability():
    env = make_env()
    state = env.reset(0)
    state = set_agent(state, 0, inv=encode_item(True, False, [0, 0]))
    frame = frame_from_state(state, env.config, score=40)
    assert frame["v"] == 1
    assert frame["w"] == 5 and frame["h"] == 4
    assert frame["score"] == 40
    assert frame["agents"][0]["inv"]["plated"] is True
    assert frame["hash"] == f"{fnv1a32(grid_canonical_string(frame).encode()):08x}"
    assert json.loads(json.dumps(frame)) == frame  # JSON-clean

    same = frame_from_state(state, env.config, score=40)
    assert same["hash"] == frame["hash"]
    moved = frame_from_state(env.reset(0).replace(t=3), env.config, score=40)
    assert moved["hash"] != frame["hash"]


def test_visibility_mask_radius():
    env = make_env("cramped_room", view_radius=1)
    state = env.reset(0)  # agent 0 at (3, 1)
    mask = visibility_mask(state, 0, env.config)
    assert mask[0] == "00111"
    assert mask[2] == "00111"
    full = visibility_mask(state, 0, make_env("cramped_room").config)
    assert set("".join(full)) == {"1"}


def test_draw_state_shape_and_determinism():
    env = make_env()
    state = env.reset(2)
    a = draw_state(state, env.config)
    b = draw_state(state, env.config)
    assert a.shape == (4 * 12, 5 * 12)
    assert (a == b).all()


def test_gif_export_frame_count_and_determinism(tmp_path):
    env = make_env("cramped_room", max_steps=15)
    traj = rollout(env.config, [RandomPolicy(), RandomPolicy()], seed=0)
    out1 = tmp_path / "a.gif"
    out2 = tmp_path / "b.gif"
    export_animation(traj, out1)
    export_animation(traj, out2)
    data = out1.read_bytes()
    assert data[:6] in (b"GIF87a", b"GIF89a")
    assert data == out2.read_bytes()

    from PIL import Image

    with Image.open(out1) as img:
        assert img.n_frames == len(traj) + 1


def test_gif_export_empty_trajectory_single_frame(tmp_path):
    from gridkitchen.eval import Trajectory

    env = make_env("cramped_room")
    traj = Trajectory(config=env.config, seed=0, initial_state=env.reset(0))
    out = tmp_path / "still.gif"
    export_animation(traj, out)
    from PIL import Image

    with Image.open(out) as img:
        assert img.n_frames == 1


def test_gif_export_unwritable_path(tmp_path):
    env = make_env("cramped_room", max_steps=5)
    traj = rollout(env.config, [RandomPolicy(), RandomPolicy()], seed=0)
    with pytest.raises(OSError):
        export_animation(traj, tmp_path / "missing_dir" / "x.gif")

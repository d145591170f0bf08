"""CLI: subcommand behavior, exit codes, output files."""
import json

from gridkitchen.cli import main
from gridkitchen.eval import StateBuffer, load_replay, verify_replay


def test_rollout_writes_verifiable_replay(tmp_path, capsys):
    out = tmp_path / "episode.jsonl"
    code = main([
        "rollout", "--layout", "cramped_room", "--policies", "greedy,greedy",
        "--seed", "0", "--config", "max_steps=120", "--out", str(out), "--verify",
    ])
    assert code == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["return"] >= 20
    traj = load_replay(out)
    assert verify_replay(traj).ok


def test_rollout_reports_flags_in_summary(tmp_path, capsys):
    code = main([
        "rollout", "--layout", "cramped_room_v2", "--seed", "3",
        "--config", "max_steps=10", "--view-radius", "1",
    ])
    assert code == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["steps"] == 10


def test_eval_xp_outputs(tmp_path, capsys):
    out = tmp_path / "matrix.json"
    csv = tmp_path / "matrix.csv"
    code = main([
        "eval-xp", "--layout", "cramped_room", "--policies", "greedy,random",
        "--episodes", "2", "--config", "max_steps=40",
        "--out", str(out), "--csv", str(csv), "--seed", "1",
    ])
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["population"] == ["greedy", "random"]
    assert "gap" in payload["stats"]
    assert len(payload["means"]) == 2
    assert csv.read_text().startswith(",p0,p1")
    summary = json.loads(capsys.readouterr().out)
    assert set(summary) == {"sp_mean", "xp_mean", "gap"}


def test_augment_collect_buffer_size(tmp_path, capsys):
    out = tmp_path / "buffer.jsonl"
    code = main([
        "augment-collect", "--layout", "cramped_room",
        "--policies", "random,random", "--rollouts", "1",
        "--config", "max_steps=40", "--out", str(out), "--seed", "2",
    ])
    assert code == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["states"] == 4 * 5  # 2^2 pairs * ceil(41/10)
    buffer = StateBuffer.load(out)
    assert len(buffer) == 20


def test_button_game_csv_shape(tmp_path, capsys):
    out = tmp_path / "m.csv"
    code = main([
        "button-game", "--seeds", "10", "--buttons", "5",
        "--out", str(out), "--seed", "0",
    ])
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 12  # header + 10 SP + BR
    assert lines[0].split(",")[1:] == [f"sp{k}" for k in range(10)] + ["br"]
    summary = json.loads(capsys.readouterr().out)
    assert summary["sp_mean"] >= 9.5
    assert summary["br_min"] == 10.0


def test_render_gif_from_replay(tmp_path, capsys):
    replay = tmp_path / "r.jsonl"
    main([
        "rollout", "--layout", "cramped_room", "--seed", "5",
        "--config", "max_steps=8", "--out", str(replay),
    ])
    capsys.readouterr()
    gif = tmp_path / "r.gif"
    code = main(["render", "--replay", str(replay), "--out", str(gif)])
    assert code == 0
    assert gif.read_bytes()[:6] in (b"GIF87a", b"GIF89a")
    summary = json.loads(capsys.readouterr().out)
    assert summary["frames"] == 9


def test_render_ascii_frames(tmp_path, capsys):
    replay = tmp_path / "r.jsonl"
    main([
        "rollout", "--layout", "cramped_room", "--seed", "5",
        "--config", "max_steps=3", "--out", str(replay),
    ])
    capsys.readouterr()
    code = main(["render", "--replay", str(replay), "--format", "ascii"])
    assert code == 0
    text = capsys.readouterr().out
    assert text.count("WWPWW") == 4  # one grid per state


def test_validate_layout_ok(capsys):
    assert main(["validate-layout", "cramped_room"]) == 0
    assert "ok" in capsys.readouterr().out


def test_validate_layout_bad_file(tmp_path, capsys):
    bad = tmp_path / "bad.layout"
    bad.write_text("WWWWWW\n0A  B0\nW    W\nWBWXWW\nWWWPWW\nWWWWWW\n")
    code = main(["validate-layout", str(bad)])
    assert code == 1
    assert "pot unreachable" in capsys.readouterr().err


def test_unknown_layout_exit_code(capsys):
    code = main(["rollout", "--layout", "nope", "--policies", "random,random"])
    assert code == 1
    assert "nope" in capsys.readouterr().err


def test_unknown_policy_exit_code(capsys):
    code = main([
        "rollout", "--layout", "cramped_room", "--policies", "random,warp",
    ])
    assert code == 1


def test_missing_subcommand_is_user_error(capsys):
    assert main([]) == 1


def test_bad_config_value(capsys):
    code = main([
        "rollout", "--layout", "cramped_room", "--policies", "random,random",
        "--config", "cook_time=0",
    ])
    assert code == 1
    assert "cook_time" in capsys.readouterr().err


def test_play_scripted_session(tmp_path, capsys, monkeypatch):
    import io

    monkeypatch.setattr("sys.stdin", io.StringIO("u\nl\ni\nq\n"))
    code = main([
        "play", "--layout", "cramped_room", "--partners", "greedy",
        "--config", "max_steps=10",
    ])
    assert code == 0
    out = capsys.readouterr().out
    assert "WWPWW" in out
    assert "keys:" in out


def test_config_file_then_flag_precedence(tmp_path, capsys):
    config_file = tmp_path / "conf.json"
    config_file.write_text(json.dumps({"max_steps": 5, "cook_time": 7}))
    code = main([
        "rollout", "--layout", "cramped_room", "--policies", "random,random",
        "--config-file", str(config_file), "--config", "max_steps=3",
    ])
    assert code == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["steps"] == 3  # flag wins over file

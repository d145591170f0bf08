"""Live-play session server.

HTTP surface:
    GET  /layouts                   available layout names
    GET  /schema?layout=NAME        frame version, actions, observation schema
    POST /sessions                  create a session (layout, config, seats)
    GET  /sessions/{id}             session status
    GET  /sessions/{id}/replay      replay file (JSON lines) of the episode
    WS   /sessions/{id}/ws?seat=N   bidirectional play channel

Channel messages. Client: {"type": "act", "action": "up"} or
{"type": "reset"}. Server: {"type": "frame", ...} after every tick (and on
connect), {"type": "done", "score": s} when the episode ends,
{"type": "error", "reason": r} for rejected input.

Sessions are lock-step: one environment step happens exactly when every
connected human seat has submitted an action for the tick (policy seats are
computed server-side). Sessions are isolated single-writer state machines;
a disconnect pauses the session and reconnection within the grace period
resumes it.
"""
from __future__ import annotations

import asyncio
import json
import uuid
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from aiohttp import WSMsgType, web

from .env import Env
from .eval import Trajectory, TrajStep, replay_lines
from .layout import LayoutError, builtin, builtin_names
from .observation import obs_schema
from .policy import Policy, make_policy
from .render import FRAME_VERSION, frame_from_state
from .rng import Rng, derive_seed
from .state import ACTION_NAMES, STAY, EnvConfig, GameState, state_hash

DEFAULT_GRACE_SECONDS = 30.0

SESSIONS_KEY = web.AppKey("sessions", dict)

_ACTION_INDEX = {name: i for i, name in enumerate(ACTION_NAMES)}


@dataclass
class Seat:
    kind: str  # "human" or a policy name
    policy: Optional[Policy] = None
    memory: object = None
    rng: Optional[Rng] = None
    socket: Optional[web.WebSocketResponse] = None

    @property
    def is_human(self) -> bool:
        return self.kind == "human"


@dataclass
class Session:
    id: str
    config: EnvConfig
    env: Env
    seats: List[Seat]
    seed: int
    act_timeout: Optional[float]
    grace: float
    episode: int = 0
    state: GameState = None
    score: int = 0
    status: str = "waiting"
    pending: Dict[int, int] = field(default_factory=dict)
    trajectory: Trajectory = None
    tick_lock: asyncio.Lock = field(default_factory=asyncio.Lock)
    timeout_handle: Optional[asyncio.TimerHandle] = None
    grace_handle: Optional[asyncio.TimerHandle] = None

    def human_seats(self) -> List[int]:
        return [i for i, s in enumerate(self.seats) if s.is_human]

    def connected_humans(self) -> List[int]:
        return [
            i for i in self.human_seats() if self.seats[i].socket is not None
        ]

    def start_episode(self) -> None:
        episode_seed = derive_seed(self.seed, self.episode)
        self.state = self.env.reset(episode_seed)
        self.score = 0
        self.pending.clear()
        self.trajectory = Trajectory(
            config=self.config, seed=episode_seed, initial_state=self.state
        )
        for i, seat in enumerate(self.seats):
            if seat.policy is not None:
                seat.memory = seat.policy.initial_memory()
                seat.rng = Rng.from_seed(
                    derive_seed(episode_seed, 1000 + i)
                )
        self.episode += 1


def _policy_action(session: Session, seat_index: int) -> int:
    from .eval import _policy_input

    seat = session.seats[seat_index]
    inp = _policy_input(seat.policy, session.state, seat_index, session.config)
    action, seat.memory = seat.policy.act(inp, seat_index, seat.memory, seat.rng)
    return action


def _frame_message(session: Session, events=(), rewards=None) -> dict:
    frame = frame_from_state(
        session.state, session.config, score=session.score, events=list(events)
    )
    return {
        "type": "frame",
        "session": session.id,
        "status": session.status,
        "frame": frame,
        "rewards": list(rewards) if rewards is not None else None,
        "seats": [s.kind for s in session.seats],
    }


async def _broadcast(session: Session, message: dict) -> None:
    payload = json.dumps(message)
    for seat in session.seats:
        if seat.socket is not None and not seat.socket.closed:
            await seat.socket.send_str(payload)


async def _maybe_tick(session: Session) -> None:
    """Advance one step when every connected human seat has acted."""
    async with session.tick_lock:
        if session.status != "running":
            return
        humans = session.connected_humans()
        if any(i not in session.pending for i in humans):
            return
        if session.timeout_handle is not None:
            session.timeout_handle.cancel()
            session.timeout_handle = None
        actions = []
        for i, seat in enumerate(session.seats):
            if seat.is_human:
                actions.append(session.pending.get(i, STAY))
            else:
                actions.append(_policy_action(session, i))
        session.pending.clear()
        state, outcome = session.env.step(session.state, actions)
        session.state = state
        session.score += outcome.rewards[0]
        session.trajectory.steps.append(
            TrajStep(
                actions=tuple(actions),
                rewards=outcome.rewards,
                shaped=outcome.shaped,
                events=outcome.events,
                hash=state_hash(state),
            )
        )
        if outcome.done:
            session.status = "done"
    await _broadcast(
        session, _frame_message(session, events=outcome.events, rewards=outcome.rewards)
    )
    if session.status == "done":
        await _broadcast(session, {"type": "done", "score": session.score})


def _schedule_timeout(session: Session) -> None:
    if session.act_timeout is None or session.timeout_handle is not None:
        return

    def fire():
        session.timeout_handle = None
        for i in session.connected_humans():
            session.pending.setdefault(i, STAY)
        asyncio.ensure_future(_maybe_tick(session))

    session.timeout_handle = asyncio.get_event_loop().call_later(
        session.act_timeout, fire
    )


# -- request handlers --------------------------------------------------------------


def _json_error(reason: str, status: int = 400) -> web.Response:
    return web.json_response({"error": reason}, status=status)


async def handle_layouts(request: web.Request) -> web.Response:
    return web.json_response({"layouts": builtin_names()})


async def handle_schema(request: web.Request) -> web.Response:
    name = request.query.get("layout")
    observation = None
    if name:
        try:
            observation = obs_schema(builtin(name).num_ingredients)
        except LayoutError as err:
            return _json_error(str(err), status=404)
    return web.json_response(
        {
            "frame_version": FRAME_VERSION,
            "actions": list(ACTION_NAMES),
            "observation": observation,
            "messages": {
                "client": [{"type": "act", "action": "<name>"}, {"type": "reset"}],
                "server": ["frame", "done", "error"],
            },
        }
    )


async def handle_create_session(request: web.Request) -> web.Response:
    try:
        body = await request.json()
    except json.JSONDecodeError:
        return _json_error("request body must be JSON")
    name = body.get("layout")
    if not name:
        return _json_error("missing layout name")
    try:
        layout = builtin(name)
    except LayoutError as err:
        return _json_error(str(err), status=404)

    overrides = body.get("config") or {}
    try:
        config = EnvConfig(
            layout=layout,
            **{k: _coerce_config_value(k, v) for k, v in overrides.items()},
        )
    except (TypeError, ValueError) as err:
        return _json_error(f"bad config: {err}")

    seat_specs = body.get("seats") or ["human"] * layout.num_agents
    if len(seat_specs) != layout.num_agents:
        return _json_error(
            f"layout {name} needs {layout.num_agents} seats, got {len(seat_specs)}"
        )
    seats = []
    for spec in seat_specs:
        if spec == "human":
            seats.append(Seat(kind="human"))
        else:
            try:
                seats.append(Seat(kind=spec, policy=make_policy(spec)))
            except ValueError as err:
                return _json_error(str(err))
    if not any(s.is_human for s in seats):
        return _json_error("at least one seat must be human")

    session = Session(
        id=uuid.uuid4().hex[:12],
        config=config,
        env=Env(config),
        seats=seats,
        seed=int(body.get("seed", 0)),
        act_timeout=body.get("act_timeout"),
        grace=float(body.get("grace", DEFAULT_GRACE_SECONDS)),
    )
    session.start_episode()
    request.app[SESSIONS_KEY][session.id] = session
    return web.json_response(
        {
            "id": session.id,
            "status": session.status,
            "seats": [s.kind for s in session.seats],
            "schema": {
                "frame_version": FRAME_VERSION,
                "actions": list(ACTION_NAMES),
                "observation": obs_schema(layout.num_ingredients),
            },
            "frame": frame_from_state(session.state, config, score=0),
        }
    )


def _coerce_config_value(key: str, value):
    if key == "shaped_rewards" and isinstance(value, list):
        return tuple(value)
    if key == "other_play_symmetries" and isinstance(value, list):
        return tuple(tuple(p) for p in value)
    return value


def _get_session(request: web.Request) -> Optional[Session]:
    return request.app[SESSIONS_KEY].get(request.match_info["id"])


async def handle_session_status(request: web.Request) -> web.Response:
    session = _get_session(request)
    if session is None:
        return _json_error("unknown session", status=404)
    return web.json_response(
        {
            "id": session.id,
            "status": session.status,
            "score": session.score,
            "t": session.state.t,
            "seats": [s.kind for s in session.seats],
            "connected": session.connected_humans(),
        }
    )


async def handle_session_replay(request: web.Request) -> web.Response:
    session = _get_session(request)
    if session is None:
        return _json_error("unknown session", status=404)
    body = "\n".join(replay_lines(session.trajectory)) + "\n"
    return web.Response(text=body, content_type="application/jsonl")


async def handle_session_ws(request: web.Request) -> web.WebSocketResponse:
    session = _get_session(request)
    ws = web.WebSocketResponse()
    await ws.prepare(request)
    if session is None:
        await ws.send_str(json.dumps({"type": "error", "reason": "unknown session"}))
        await ws.close()
        return ws

    try:
        seat_index = int(request.query.get("seat", "-1"))
    except ValueError:
        seat_index = -1
    if seat_index not in session.human_seats():
        await ws.send_str(
            json.dumps(
                {"type": "error", "reason": f"seat must be one of {session.human_seats()}"}
            )
        )
        await ws.close()
        return ws
    seat = session.seats[seat_index]
    if seat.socket is not None and not seat.socket.closed:
        await ws.send_str(json.dumps({"type": "error", "reason": "seat taken"}))
        await ws.close()
        return ws

    seat.socket = ws
    if session.grace_handle is not None:
        session.grace_handle.cancel()
        session.grace_handle = None
    if session.status in ("waiting", "paused"):
        if len(session.connected_humans()) == len(session.human_seats()):
            session.status = "running" if session.state.t < session.config.max_steps else "done"
    await ws.send_str(json.dumps(_frame_message(session)))

    try:
        async for msg in ws:
            if msg.type != WSMsgType.TEXT:
                continue
            try:
                data = json.loads(msg.data)
            except json.JSONDecodeError:
                await ws.send_str(
                    json.dumps({"type": "error", "reason": "malformed message"})
                )
                continue
            kind = data.get("type")
            if kind == "act":
                if session.status != "running":
                    await ws.send_str(
                        json.dumps(
                            {"type": "error", "reason": f"session is {session.status}"}
                        )
                    )
                    continue
                action_name = data.get("action")
                if action_name not in _ACTION_INDEX:
                    await ws.send_str(
                        json.dumps(
                            {"type": "error", "reason": f"unknown action {action_name!r}"}
                        )
                    )
                    continue
                if seat_index in session.pending:
                    await ws.send_str(
                        json.dumps({"type": "error", "reason": "awaiting tick"})
                    )
                    continue
                session.pending[seat_index] = _ACTION_INDEX[action_name]
                _schedule_timeout(session)
                await _maybe_tick(session)
            elif kind == "reset":
                async with session.tick_lock:
                    session.start_episode()
                    if len(session.connected_humans()) == len(session.human_seats()):
                        session.status = "running"
                    else:
                        session.status = "waiting"
                await _broadcast(session, _frame_message(session))
            else:
                await ws.send_str(
                    json.dumps({"type": "error", "reason": f"unknown type {kind!r}"})
                )
    finally:
        if seat.socket is ws:
            seat.socket = None
            if session.status == "running":
                session.status = "paused"

            def expire():
                session.grace_handle = None
                session.status = "done"

            session.grace_handle = asyncio.get_event_loop().call_later(
                session.grace, expire
            )
    return ws


def create_app(static_dir: Optional[str] = None) -> web.Application:
    app = web.Application()
    app[SESSIONS_KEY] = {}
    app.router.add_get("/layouts", handle_layouts)
    app.router.add_get("/schema", handle_schema)
    app.router.add_post("/sessions", handle_create_session)
    app.router.add_get("/sessions/{id}", handle_session_status)
    app.router.add_get("/sessions/{id}/replay", handle_session_replay)
    app.router.add_get("/sessions/{id}/ws", handle_session_ws)

    if static_dir:
        import pathlib

        root = pathlib.Path(static_dir)
        index = root / "index.html"
        if index.is_file():

            async def handle_index(request: web.Request) -> web.FileResponse:
                return web.FileResponse(index)

            app.router.add_get("/", handle_index)
            dist = root / "dist"
            if dist.is_dir():
                app.router.add_static("/dist", dist)
    return app


def default_static_dir() -> Optional[str]:
    """The web client checkout next to this package, when present."""
    import pathlib

    candidate = pathlib.Path(__file__).resolve().parents[2] / "frontend"
    if (candidate / "index.html").is_file():
        return str(candidate)
    return None


def run_server(
    host: str = "127.0.0.1", port: int = 8765, static_dir: Optional[str] = None
) -> None:
    if static_dir is None:
        static_dir = default_static_dir()
    web.run_app(create_app(static_dir=static_dir), host=host, port=port)

"""Environment configuration, game state, and their canonical serial forms.

A ``GameState`` is an immutable-after-step value: ``Env.step`` never mutates
its input, so states can be shared freely across threads, stored in buffers,
and replayed. The canonical byte packing defined here is the basis of the
state hashes used by the replay format and the determinism suite; both the
scalar and the batched engine produce identical packings for equal states.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from typing import Dict, List, NamedTuple, Optional, Tuple

from .items import is_valid_item
from .layout import Cell, Layout, Recipe, parse_layout, serialize_layout

# Actions
UP, DOWN, LEFT, RIGHT, STAY, INTERACT = range(6)
ACTION_NAMES = ("up", "down", "left", "right", "stay", "interact")
NUM_ACTIONS = 6

# Directions share the first four action indices.
DIR_DELTAS = ((0, -1), (0, 1), (-1, 0), (1, 0))
DIR_ARROWS = ("^", "v", "<", ">")


class StateError(ValueError):
    """Raised for states that violate the game-state invariants."""


class AgentState(NamedTuple):
    pos: Tuple[int, int]
    dir: int
    inv: int


def recipe_code(recipe: Recipe) -> int:
    """Counts-only packing of a recipe (no plate/cook flags)."""
    code = 0
    for i, c in enumerate(recipe):
        code |= c << (2 * i)
    return code


def identity_perm(num_ingredients: int) -> Tuple[int, ...]:
    return tuple(range(num_ingredients))


@dataclass(frozen=True)
class EnvConfig:
    """Immutable environment configuration.

    ``view_radius=None`` means full observability. ``shaped_rewards`` is
    (pot placement, plate pickup, dish pickup).
    """

    layout: Layout
    view_radius: Optional[int] = None
    random_agent_positions: bool = False
    negative_rewards: bool = False
    sample_recipe_on_delivery: bool = False
    indicate_successful_delivery: bool = False
    auto_start_cooking: bool = True
    cook_time: int = 20
    button_duration: int = 10
    button_cost: int = -2
    max_steps: int = 400
    shaped_rewards: Tuple[int, int, int] = (3, 3, 5)
    other_play_symmetries: Optional[Tuple[Tuple[int, ...], ...]] = None

    def __post_init__(self):
        if self.cook_time < 1:
            raise ValueError(f"cook_time must be >= 1, got {self.cook_time}")
        if self.max_steps < 1:
            raise ValueError(f"max_steps must be >= 1, got {self.max_steps}")
        if self.button_duration < 1:
            raise ValueError(f"button_duration must be >= 1, got {self.button_duration}")
        if self.view_radius is not None and self.view_radius < 0:
            raise ValueError(f"view_radius must be >= 0, got {self.view_radius}")
        if self.other_play_symmetries is not None:
            n = self.layout.num_ingredients
            if not self.other_play_symmetries:
                raise ValueError("other_play_symmetries must be non-empty when given")
            for perm in self.other_play_symmetries:
                if len(perm) != n or sorted(perm) != list(range(n)):
                    raise ValueError(f"{perm} is not a bijection on 0..{n - 1}")

    def to_dict(self) -> dict:
        return {
            "layout_name": self.layout.name,
            "layout_text": serialize_layout(self.layout),
            "view_radius": self.view_radius,
            "random_agent_positions": self.random_agent_positions,
            "negative_rewards": self.negative_rewards,
            "sample_recipe_on_delivery": self.sample_recipe_on_delivery,
            "indicate_successful_delivery": self.indicate_successful_delivery,
            "auto_start_cooking": self.auto_start_cooking,
            "cook_time": self.cook_time,
            "button_duration": self.button_duration,
            "button_cost": self.button_cost,
            "max_steps": self.max_steps,
            "shaped_rewards": list(self.shaped_rewards),
            "other_play_symmetries": (
                None
                if self.other_play_symmetries is None
                else [list(p) for p in self.other_play_symmetries]
            ),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EnvConfig":
        layout = parse_layout(d["layout_text"], name=d.get("layout_name", "custom"))
        sym = d.get("other_play_symmetries")
        return cls(
            layout=layout,
            view_radius=d.get("view_radius"),
            random_agent_positions=d.get("random_agent_positions", False),
            negative_rewards=d.get("negative_rewards", False),
            sample_recipe_on_delivery=d.get("sample_recipe_on_delivery", False),
            indicate_successful_delivery=d.get("indicate_successful_delivery", False),
            auto_start_cooking=d.get("auto_start_cooking", True),
            cook_time=d.get("cook_time", 20),
            button_duration=d.get("button_duration", 10),
            button_cost=d.get("button_cost", -2),
            max_steps=d.get("max_steps", 400),
            shaped_rewards=tuple(d.get("shaped_rewards", (3, 3, 5))),
            other_play_symmetries=None if sym is None else tuple(tuple(p) for p in sym),
        )


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_digest(config: EnvConfig) -> str:
    return hashlib.sha256(_canonical_json(config.to_dict()).encode()).hexdigest()


def layout_digest(layout: Layout) -> str:
    payload = {
        "cells": [list(row) for row in layout.cells],
        "spawns": [list(p) for p in layout.agent_spawns],
        "num_ingredients": layout.num_ingredients,
    }
    return hashlib.sha256(_canonical_json(payload).encode()).hexdigest()


@dataclass(frozen=True)
class GameState:
    """Complete dynamic state of one episode."""

    layout: Layout
    items: Tuple[Tuple[Tuple[int, int], int], ...]  # ((x, y), code), sorted
    timers: Tuple[Tuple[Tuple[int, int], int], ...]  # ((x, y), ticks), sorted
    agents: Tuple[AgentState, ...]
    t: int
    recipe: Recipe
    perms: Tuple[Tuple[int, ...], ...]
    delivered_signal: bool
    rng_state: int

    def items_dict(self) -> Dict[Tuple[int, int], int]:
        return dict(self.items)

    def timers_dict(self) -> Dict[Tuple[int, int], int]:
        return dict(self.timers)

    def item_at(self, x: int, y: int) -> int:
        for pos, code in self.items:
            if pos == (x, y):
                return code
        return 0

    def timer_at(self, x: int, y: int) -> int:
        for pos, ticks in self.timers:
            if pos == (x, y):
                return ticks
        return 0

    def replace(self, **kw) -> "GameState":
        return replace(self, **kw)


def freeze_cells(d: Dict[Tuple[int, int], int]) -> Tuple[Tuple[Tuple[int, int], int], ...]:
    """Sorted, zero-free tuple form of a sparse cell map."""
    return tuple(sorted((pos, v) for pos, v in d.items() if v != 0))


def pack_state(state: GameState) -> bytes:
    """Canonical little-endian u32 packing, shared with the batched engine.

    Field order: t, delivered, rng lo/hi, recipe code, per-agent
    (x, y, dir, inv), per-agent permutation values, dense item layer
    (row-major), dense timer layer (row-major).
    """
    layout = state.layout
    words: List[int] = [
        state.t,
        1 if state.delivered_signal else 0,
        state.rng_state & 0xFFFFFFFF,
        (state.rng_state >> 32) & 0xFFFFFFFF,
        recipe_code(state.recipe),
    ]
    for agent in state.agents:
        words.extend((agent.pos[0], agent.pos[1], agent.dir, agent.inv))
    for perm in state.perms:
        words.extend(perm)
    dense_items = [0] * (layout.width * layout.height)
    for (x, y), code in state.items:
        dense_items[y * layout.width + x] = code
    dense_timers = [0] * (layout.width * layout.height)
    for (x, y), ticks in state.timers:
        dense_timers[y * layout.width + x] = ticks
    words.extend(dense_items)
    words.extend(dense_timers)
    return b"".join(w.to_bytes(4, "little") for w in words)


def state_hash(state: GameState) -> str:
    return hashlib.sha256(pack_state(state)).hexdigest()


def state_to_dict(state: GameState) -> dict:
    """Canonical JSON form (documented field order, items as raw integers)."""
    layout = state.layout
    dense_items = [0] * (layout.width * layout.height)
    for (x, y), code in state.items:
        dense_items[y * layout.width + x] = code
    dense_timers = [0] * (layout.width * layout.height)
    for (x, y), ticks in state.timers:
        dense_timers[y * layout.width + x] = ticks
    return {
        "v": 1,
        "layout_digest": layout_digest(layout),
        "t": state.t,
        "recipe": list(state.recipe),
        "agents": [
            {"x": a.pos[0], "y": a.pos[1], "dir": a.dir, "inv": a.inv}
            for a in state.agents
        ],
        "items": dense_items,
        "timers": dense_timers,
        "perms": [list(p) for p in state.perms],
        "delivered_signal": state.delivered_signal,
        "rng": state.rng_state,
    }


def state_from_dict(d: dict, layout: Layout) -> GameState:
    if d.get("v") != 1:
        raise StateError(f"unsupported state version {d.get('v')!r}")
    if d["layout_digest"] != layout_digest(layout):
        raise StateError("state layout digest does not match the configured layout")
    w, h = layout.width, layout.height
    if len(d["items"]) != w * h or len(d["timers"]) != w * h:
        raise StateError("dense layer size does not match the layout dimensions")
    items = {}
    for idx, code in enumerate(d["items"]):
        if code:
            items[(idx % w, idx // w)] = code
    timers = {}
    for idx, ticks in enumerate(d["timers"]):
        if ticks:
            timers[(idx % w, idx // w)] = ticks
    agents = tuple(
        AgentState(pos=(a["x"], a["y"]), dir=a["dir"], inv=a["inv"]) for a in d["agents"]
    )
    return GameState(
        layout=layout,
        items=freeze_cells(items),
        timers=freeze_cells(timers),
        agents=agents,
        t=d["t"],
        recipe=tuple(d["recipe"]),
        perms=tuple(tuple(p) for p in d["perms"]),
        delivered_signal=bool(d["delivered_signal"]),
        rng_state=d["rng"],
    )


def validate_state(config: EnvConfig, state: GameState) -> None:
    """Raise StateError on any invariant violation against the config."""
    layout = config.layout
    if layout_digest(state.layout) != layout_digest(layout):
        raise StateError("state layout does not match the configured layout")
    n_ing = layout.num_ingredients

    if not 0 <= state.t <= config.max_steps:
        raise StateError(f"timestep {state.t} outside 0..{config.max_steps}")
    if tuple(state.recipe) not in layout.possible_recipes:
        raise StateError(f"recipe {state.recipe} not in the layout's recipe set")

    if len(state.agents) != layout.num_agents:
        raise StateError(
            f"{len(state.agents)} agents in state, layout has {layout.num_agents}"
        )
    seen = set()
    for i, agent in enumerate(state.agents):
        x, y = agent.pos
        if not layout.is_floor(x, y):
            raise StateError(f"agent {i} at ({x}, {y}) is not on a floor cell")
        if agent.pos in seen:
            raise StateError(f"two agents share cell {agent.pos}")
        seen.add(agent.pos)
        if not 0 <= agent.dir < 4:
            raise StateError(f"agent {i} direction {agent.dir} invalid")
        if not is_valid_item(agent.inv, n_ing):
            raise StateError(f"agent {i} inventory {agent.inv:#x} is not a valid item")

    for (x, y), code in state.items:
        if not layout.in_bounds(x, y):
            raise StateError(f"item outside the grid at ({x}, {y})")
        kind = layout.cell(x, y)
        if kind not in (Cell.WALL, Cell.POT):
            raise StateError(f"item on non-counter, non-pot cell ({x}, {y})")
        if not is_valid_item(code, n_ing):
            raise StateError(f"invalid item code {code:#x} at ({x}, {y})")

    for (x, y), ticks in state.timers:
        if not layout.in_bounds(x, y):
            raise StateError(f"timer outside the grid at ({x}, {y})")
        kind = layout.cell(x, y)
        if kind not in (Cell.POT, Cell.BUTTON_RECIPE_INDICATOR):
            raise StateError(f"timer on non-pot, non-button cell ({x}, {y})")
        if ticks <= 0:
            raise StateError(f"stored timer at ({x}, {y}) must be positive")

    if len(state.perms) != layout.num_agents:
        raise StateError("one permutation required per agent")
    for perm in state.perms:
        if len(perm) != n_ing or sorted(perm) != list(range(n_ing)):
            raise StateError(f"{perm} is not a bijection on 0..{n_ing - 1}")

"""Cooperative cooking gridworld, evaluation harness, and live-play server."""

from .env import Env, StepOutcome, matches_recipe, move_agents, resolve_collisions
from .items import decode_item, encode_item
from .layout import Layout, builtin, builtin_names, parse_layout, serialize_layout, validate
from .observation import draw_permutations, obs_schema, observe, permute
from .state import EnvConfig, GameState, state_hash

__all__ = [
    "Env",
    "EnvConfig",
    "GameState",
    "Layout",
    "StepOutcome",
    "builtin",
    "builtin_names",
    "decode_item",
    "draw_permutations",
    "encode_item",
    "matches_recipe",
    "move_agents",
    "obs_schema",
    "observe",
    "parse_layout",
    "permute",
    "resolve_collisions",
    "serialize_layout",
    "state_hash",
    "validate",
]

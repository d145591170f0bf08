"""Per-agent observation tensors.

Shape is (width, height, channels) with channels = 19 + 4*I for I ingredient
types, laid out as documented by :func:`obs_schema`. With a view radius
configured, every cell at Chebyshev distance greater than the radius from
the observing agent is zeroed across all channels (grid-anchored masking;
the tensor keeps the full grid shape).
"""
from __future__ import annotations

import functools
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .items import item_counts, is_cooked, is_plated
from .layout import Cell, Layout, pile_index
from .rng import Rng
from .state import EnvConfig, GameState


def obs_schema(num_ingredients: int) -> dict:
    """Machine-readable channel descriptor: name, offset, width per group."""
    i = num_ingredients
    groups = [
        ("static_empty", 1), ("static_wall", 1), ("static_delivery", 1),
        ("static_pot", 1), ("static_recipe_indicator", 1),
        ("static_button_indicator", 1), ("static_plate_pile", 1),
        ("ingredient_pile", i),
        ("item_plated", 1), ("item_cooked", 1), ("item_counts", i),
        ("timer", 1),
        ("self_position", 1), ("other_positions", 1),
        ("facing", 4),
        ("inventory_plated", 1), ("inventory_cooked", 1), ("inventory_counts", i),
        ("recipe_counts", i),
        ("delivery_signal", 1),
    ]
    channels = []
    offset = 0
    for name, width in groups:
        channels.append({"name": name, "offset": offset, "width": width})
        offset += width
    return {
        "version": 1,
        "num_ingredients": i,
        "total_channels": offset,
        "channels": channels,
    }


def num_channels(num_ingredients: int) -> int:
    return 19 + 4 * num_ingredients


def _offsets(num_ingredients: int) -> Dict[str, int]:
    return {
        c["name"]: c["offset"] for c in obs_schema(num_ingredients)["channels"]
    }


@functools.lru_cache(maxsize=128)
def _static_planes(layout: Layout) -> np.ndarray:
    """(width, height, 7 + I) static one-hot planes, cached per layout."""
    i = layout.num_ingredients
    planes = np.zeros((layout.width, layout.height, 7 + i), dtype=np.int32)
    for y in range(layout.height):
        for x in range(layout.width):
            kind = layout.cells[y][x]
            pile = pile_index(kind)
            if pile is not None:
                planes[x, y, 7 + pile] = 1
            else:
                planes[x, y, int(kind)] = 1
    return planes


def observe(state: GameState, agent_index: int, config: EnvConfig) -> np.ndarray:
    """Observation tensor for one agent: populate, mask, then permute."""
    layout = config.layout
    if not 0 <= agent_index < layout.num_agents:
        raise IndexError(f"agent index {agent_index} out of range")
    i = layout.num_ingredients
    off = _offsets(i)
    obs = np.zeros((layout.width, layout.height, num_channels(i)), dtype=np.int32)

    obs[:, :, : 7 + i] = _static_planes(layout)

    for (x, y), code in state.items:
        obs[x, y, off["item_plated"]] = 1 if is_plated(code) else 0
        obs[x, y, off["item_cooked"]] = 1 if is_cooked(code) else 0
        counts = item_counts(code, i)
        for k in range(i):
            obs[x, y, off["item_counts"] + k] = counts[k]

    timer_map = dict(state.timers)
    for (x, y), ticks in state.timers:
        obs[x, y, off["timer"]] = ticks

    self_agent = state.agents[agent_index]
    obs[self_agent.pos[0], self_agent.pos[1], off["self_position"]] = 1
    for j, agent in enumerate(state.agents):
        x, y = agent.pos
        if j != agent_index:
            obs[x, y, off["other_positions"]] = 1
        obs[x, y, off["facing"] + agent.dir] = 1
        obs[x, y, off["inventory_plated"]] = 1 if is_plated(agent.inv) else 0
        obs[x, y, off["inventory_cooked"]] = 1 if is_cooked(agent.inv) else 0
        counts = item_counts(agent.inv, i)
        for k in range(i):
            obs[x, y, off["inventory_counts"] + k] = counts[k]

    # Recipe contents show on plain indicators always, and on button
    # indicators only while a press keeps them revealed.
    for y in range(layout.height):
        for x in range(layout.width):
            kind = layout.cells[y][x]
            if kind == Cell.RECIPE_INDICATOR or (
                kind == Cell.BUTTON_RECIPE_INDICATOR and timer_map.get((x, y), 0) > 0
            ):
                for k in range(i):
                    obs[x, y, off["recipe_counts"] + k] = state.recipe[k]

    if state.delivered_signal and config.indicate_successful_delivery:
        obs[:, :, off["delivery_signal"]] = 1

    if config.view_radius is not None:
        obs = mask_view(obs, self_agent.pos, config.view_radius)

    perm = state.perms[agent_index]
    if tuple(perm) != tuple(range(i)):
        obs = permute(obs, perm)
    return obs


def mask_view(obs: np.ndarray, center: Tuple[int, int], radius: int) -> np.ndarray:
    """Zero all channels at cells beyond Chebyshev ``radius`` from ``center``."""
    w, h = obs.shape[0], obs.shape[1]
    xs = np.abs(np.arange(w) - center[0])
    ys = np.abs(np.arange(h) - center[1])
    visible = (xs[:, None] <= radius) & (ys[None, :] <= radius)
    return obs * visible[:, :, None].astype(obs.dtype)


_PERMUTED_GROUPS = ("ingredient_pile", "item_counts", "inventory_counts", "recipe_counts")


def permute(obs: np.ndarray, phi: Sequence[int]) -> np.ndarray:
    """Relabel the ingredient-indexed channel groups: group[phi[i]] := group[i]."""
    i = len(phi)
    expected = num_channels(i)
    if obs.shape[2] != expected:
        raise ValueError(
            f"permutation arity {i} implies {expected} channels, tensor has {obs.shape[2]}"
        )
    if sorted(phi) != list(range(i)):
        raise ValueError(f"{tuple(phi)} is not a bijection on 0..{i - 1}")
    off = _offsets(i)
    out = obs.copy()
    for group in _PERMUTED_GROUPS:
        base = off[group]
        for src in range(i):
            out[:, :, base + phi[src]] = obs[:, :, base + src]
    return out


def invert_perm(phi: Sequence[int]) -> Tuple[int, ...]:
    inv = [0] * len(phi)
    for i, p in enumerate(phi):
        inv[p] = i
    return tuple(inv)


def draw_permutations(
    rng: Rng, n_agents: int, symmetries: Sequence[Sequence[int]]
) -> List[Tuple[int, ...]]:
    """Independent uniform draw per agent. Evaluation uses identity instead."""
    if not symmetries:
        raise ValueError("symmetry set must be non-empty")
    return [tuple(symmetries[rng.randrange(len(symmetries))]) for _ in range(n_agents)]


# -- relabeling helpers (used by the other-play equivariance checks) ----------


def relabel_item(code: int, phi: Sequence[int]) -> int:
    """Move ingredient i's count lanes to position phi[i]; flags unchanged."""
    out = code & 0x3  # plated/cooked flags
    for i, p in enumerate(phi):
        out |= ((code >> (2 + 2 * i)) & 0x3) << (2 + 2 * p)
    return out


def relabel_recipe(recipe: Sequence[int], phi: Sequence[int]) -> Tuple[int, ...]:
    out = [0] * len(recipe)
    for i, p in enumerate(phi):
        out[p] = recipe[i]
    return tuple(out)


def relabel_layout(layout: Layout, phi: Sequence[int]) -> Layout:
    rows = []
    for row in layout.cells:
        new_row = []
        for cell in row:
            idx = pile_index(cell)
            new_row.append(cell if idx is None else Cell.INGREDIENT_PILE + phi[idx])
        rows.append(tuple(new_row))
    return Layout(
        name=layout.name,
        width=layout.width,
        height=layout.height,
        cells=tuple(rows),
        agent_spawns=layout.agent_spawns,
        num_ingredients=layout.num_ingredients,
        possible_recipes=tuple(
            relabel_recipe(r, phi) for r in layout.possible_recipes
        ),
    )


def relabel_state(state: GameState, phi: Sequence[int]) -> GameState:
    """State over the relabeled layout: piles, item counts, and recipe move by phi."""
    new_layout = relabel_layout(state.layout, phi)
    return GameState(
        layout=new_layout,
        items=tuple(((pos, relabel_item(code, phi)) for pos, code in state.items)),
        timers=state.timers,
        agents=tuple(
            a._replace(inv=relabel_item(a.inv, phi)) for a in state.agents
        ),
        t=state.t,
        recipe=relabel_recipe(state.recipe, phi),
        perms=state.perms,
        delivered_signal=state.delivered_signal,
        rng_state=state.rng_state,
    )

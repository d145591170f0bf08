"""Rendering: ASCII frames, structured frame JSON, animated GIF export.

The frame JSON schema (version 1) is the wire format the web client
renders. Its ``hash`` field is a 32-bit FNV-1a digest of the canonical grid
string defined by :func:`grid_canonical_string`; the client recomputes the
same digest from the frame it displays, which catches any divergence
between the two renderers.
"""
from __future__ import annotations

from typing import List, Optional, Sequence

import numpy as np

from .items import is_cooked, is_plated, item_counts
from .layout import Cell, Layout, pile_index
from .state import DIR_ARROWS, EnvConfig, GameState

FRAME_VERSION = 1

_KIND_GLYPH = {
    Cell.EMPTY: " ",
    Cell.WALL: "W",
    Cell.DELIVERY: "X",
    Cell.POT: "P",
    Cell.RECIPE_INDICATOR: "R",
    Cell.BUTTON_RECIPE_INDICATOR: "L",
    Cell.PLATE_PILE: "B",
}


def static_glyph(layout: Layout, x: int, y: int) -> str:
    kind = layout.cells[y][x]
    idx = pile_index(kind)
    return str(idx) if idx is not None else _KIND_GLYPH[kind]


def fnv1a32(data: bytes) -> int:
    h = 0x811C9DC5
    for byte in data:
        h ^= byte
        h = (h * 0x01000193) & 0xFFFFFFFF
    return h


def _item_summary(code: int, num_ingredients: int) -> Optional[dict]:
    if code == 0:
        return None
    return {
        "code": code,
        "plated": is_plated(code),
        "cooked": is_cooked(code),
        "counts": list(item_counts(code, num_ingredients)),
    }


def visibility_mask(state: GameState, agent_index: int, config: EnvConfig) -> List[str]:
    """Row strings of '0'/'1', row-major; all-visible when no radius is set."""
    layout = config.layout
    radius = config.view_radius
    ax, ay = state.agents[agent_index].pos
    rows = []
    for y in range(layout.height):
        row = []
        for x in range(layout.width):
            if radius is None or max(abs(x - ax), abs(y - ay)) <= radius:
                row.append("1")
            else:
                row.append("0")
        rows.append("".join(row))
    return rows


def grid_canonical_string(frame: dict) -> str:
    """Canonical text the frame hash covers: dimensions, static rows, item
    codes, timers, agents, recipe, and timestep, in that order."""
    items = {(d["x"], d["y"]): d["code"] for d in frame["items"]}
    timers = {(d["x"], d["y"]): d["ticks"] for d in frame["timers"]}
    w, h = frame["w"], frame["h"]
    item_csv = ",".join(
        str(items.get((x, y), 0)) for y in range(h) for x in range(w)
    )
    timer_csv = ",".join(
        str(timers.get((x, y), 0)) for y in range(h) for x in range(w)
    )
    agents = ";".join(
        f"{a['x']},{a['y']},{a['dir']},{(a['inv'] or {}).get('code', 0)}"
        for a in frame["agents"]
    )
    recipe = ",".join(str(c) for c in frame["recipe"]) if frame["recipe"] else "-"
    return (
        f"v{frame['v']}|{w}x{h}|{''.join(frame['static'])}|{item_csv}|"
        f"{timer_csv}|{agents}|{recipe}|t={frame['t']}"
    )


def frame_from_state(
    state: GameState,
    config: EnvConfig,
    score: int = 0,
    events: Sequence[dict] = (),
) -> dict:
    layout = config.layout
    n_ing = layout.num_ingredients
    static_rows = [
        "".join(static_glyph(layout, x, y) for x in range(layout.width))
        for y in range(layout.height)
    ]
    frame = {
        "v": FRAME_VERSION,
        "t": state.t,
        "w": layout.width,
        "h": layout.height,
        "static": static_rows,
        "items": [
            {"x": x, "y": y, **_item_summary(code, n_ing)}
            for (x, y), code in state.items
        ],
        "timers": [{"x": x, "y": y, "ticks": ticks} for (x, y), ticks in state.timers],
        "agents": [
            {
                "x": a.pos[0],
                "y": a.pos[1],
                "dir": a.dir,
                "glyph": DIR_ARROWS[a.dir],
                "inv": _item_summary(a.inv, n_ing),
            }
            for a in state.agents
        ],
        "recipe": list(state.recipe),
        "score": score,
        "delivered": state.delivered_signal,
        "view_radius": config.view_radius,
        "masks": [
            visibility_mask(state, i, config) for i in range(layout.num_agents)
        ],
        "events": list(events),
    }
    frame["hash"] = f"{fnv1a32(grid_canonical_string(frame).encode()):08x}"
    return frame


def render_ascii(state: GameState, config: EnvConfig, score: int = 0) -> str:
    """One glyph per cell, agents as direction arrows, legend block below."""
    layout = config.layout
    n_ing = layout.num_ingredients
    agent_at = {a.pos: a for a in state.agents}
    items = dict(state.items)
    timers = dict(state.timers)

    lines = []
    for y in range(layout.height):
        row = []
        for x in range(layout.width):
            if (x, y) in agent_at:
                row.append(DIR_ARROWS[agent_at[(x, y)].dir])
            else:
                row.append(static_glyph(layout, x, y))
        lines.append("".join(row))

    def describe(code: int) -> str:
        plated, cooked, counts = (
            is_plated(code),
            is_cooked(code),
            item_counts(code, n_ing),
        )
        parts = [f"{c}x{i}" for i, c in enumerate(counts) if c]
        label = "+".join(parts) if parts else "empty"
        flags = "".join((" plated" if plated else "", " cooked" if cooked else ""))
        return label + flags

    legend = [f"t={state.t} score={score} recipe={describe(_recipe_code(state))}"]
    for (x, y), code in sorted(items.items()):
        cell = static_glyph(layout, x, y)
        entry = f"{cell}({x},{y}): {describe(code)}"
        if (x, y) in timers:
            entry += f" timer={timers[(x, y)]}"
        legend.append(entry)
    for (x, y), ticks in sorted(timers.items()):
        if (x, y) not in items:
            legend.append(f"{static_glyph(layout, x, y)}({x},{y}): timer={ticks}")
    for i, a in enumerate(state.agents):
        holding = describe(a.inv) if a.inv else "nothing"
        legend.append(f"agent{i}: ({a.pos[0]},{a.pos[1]}) {DIR_ARROWS[a.dir]} holding {holding}")
    if state.delivered_signal:
        legend.append("delivery signal on")
    return "\n".join(lines + legend) + "\n"


def _recipe_code(state: GameState) -> int:
    code = 0
    for i, c in enumerate(state.recipe):
        code |= c << (2 + 2 * i)
    return code | 0x3  # displayed as the finished dish


# -- image frames and GIF export ------------------------------------------------

TILE = 12

# fixed 16-color palette (RGB triples)
PALETTE = [
    (235, 235, 225),  # 0 floor
    (88, 88, 96),     # 1 wall
    (60, 160, 85),    # 2 delivery
    (40, 40, 46),     # 3 pot
    (150, 110, 200),  # 4 recipe indicator
    (220, 140, 60),   # 5 button indicator
    (250, 250, 252),  # 6 plate pile
    (230, 190, 60),   # 7 ingredient 0
    (110, 185, 70),   # 8 ingredient 1
    (205, 90, 80),    # 9 ingredient 2
    (95, 150, 210),   # 10 ingredient 3
    (170, 120, 80),   # 11 other ingredients
    (210, 60, 60),    # 12 agent 0
    (70, 100, 220),   # 13 agent 1
    (240, 220, 180),  # 14 plate / dish
    (20, 20, 20),     # 15 outline
]

_KIND_COLOR = {
    Cell.EMPTY: 0,
    Cell.WALL: 1,
    Cell.DELIVERY: 2,
    Cell.POT: 3,
    Cell.RECIPE_INDICATOR: 4,
    Cell.BUTTON_RECIPE_INDICATOR: 5,
    Cell.PLATE_PILE: 6,
}


def ingredient_color(index: int) -> int:
    return 7 + index if index < 4 else 11


def draw_state(state: GameState, config: EnvConfig) -> np.ndarray:
    """(height*TILE, width*TILE) palette-index array."""
    layout = config.layout
    n_ing = layout.num_ingredients
    canvas = np.zeros((layout.height * TILE, layout.width * TILE), dtype=np.uint8)

    for y in range(layout.height):
        for x in range(layout.width):
            kind = layout.cells[y][x]
            idx = pile_index(kind)
            color = ingredient_color(idx) if idx is not None else _KIND_COLOR[kind]
            canvas[y * TILE : (y + 1) * TILE, x * TILE : (x + 1) * TILE] = color

    def blob(x, y, color, inset):
        canvas[
            y * TILE + inset : (y + 1) * TILE - inset,
            x * TILE + inset : (x + 1) * TILE - inset,
        ] = color

    for (x, y), code in state.items:
        counts = item_counts(code, n_ing)
        main = next((i for i, c in enumerate(counts) if c), None)
        if is_plated(code):
            blob(x, y, 14, 3)
        if main is not None:
            blob(x, y, ingredient_color(main), 4)

    timers = dict(state.timers)
    for (x, y), ticks in timers.items():
        fill = min(TILE - 2, max(1, ticks % TILE))
        canvas[y * TILE + 1, x * TILE + 1 : x * TILE + 1 + fill] = 15

    for i, a in enumerate(state.agents):
        x, y = a.pos
        blob(x, y, 12 if i % 2 == 0 else 13, 2)
        # direction notch
        cx, cy = x * TILE + TILE // 2, y * TILE + TILE // 2
        dx, dy = ((0, -1), (0, 1), (-1, 0), (1, 0))[a.dir]
        canvas[cy + dy * (TILE // 2 - 2), cx + dx * (TILE // 2 - 2)] = 15
        if a.inv:
            blob(x, y, 14 if is_plated(a.inv) else 15, TILE // 2 - 2)

    # step ticker along the bottom edge; also keeps consecutive animation
    # frames distinct so the GIF writer cannot coalesce quiet steps
    canvas[-1, state.t % canvas.shape[1]] = 15
    return canvas


def export_animation(trajectory, path: str) -> None:
    """Re-simulate a trajectory and write one GIF frame per state.

    Deterministic output: identical trajectories produce identical bytes.
    """
    from PIL import Image

    from .env import Env

    config = trajectory.config
    env = Env(config)
    state = env.reset_to(trajectory.initial_state)
    frames = [draw_state(state, config)]
    for step in trajectory.steps:
        state, _ = env.step(state, list(step.actions))
        frames.append(draw_state(state, config))

    flat_palette = []
    for rgb in PALETTE:
        flat_palette.extend(rgb)
    flat_palette.extend([0, 0, 0] * (256 - len(PALETTE)))

    images = []
    for arr in frames:
        img = Image.fromarray(arr, mode="P")
        img.putpalette(flat_palette)
        images.append(img)
    images[0].save(
        path,
        save_all=True,
        append_images=images[1:],
        duration=120,
        loop=0,
        optimize=False,
    )

"""Policy contract and baseline agents.

A policy maps its input (observation tensor, or full state for privileged
baselines) to an action plus carried memory. ``act`` must be deterministic
given its inputs and the rng state, which is what makes recorded episodes
replayable.
"""
from __future__ import annotations

import json
from collections import deque
from typing import Any, Dict, List, Optional, Tuple

from .items import (
    PLATE,
    is_cooked,
    is_plated,
    is_raw_ingredients,
    item_counts,
    total_units,
)
from .layout import Cell, Layout, ingredient_pile
from .rng import Rng
from .state import (
    DIR_DELTAS,
    INTERACT,
    NUM_ACTIONS,
    STAY,
    EnvConfig,
    GameState,
    state_hash,
)


class Policy:
    """Base policy: subclasses set ``kind`` and ``wants``.

    ``wants`` declares the input ``act`` consumes: "none", "tensor"
    (the agent's observation), or "state" (the full (state, config) pair,
    for privileged baselines such as the greedy chef).
    """

    kind: str = "abstract"
    wants: str = "none"

    def initial_memory(self) -> Any:
        return None

    def act(self, inp: Any, agent_index: int, memory: Any, rng: Rng) -> Tuple[int, Any]:
        raise NotImplementedError

    def to_spec(self) -> dict:
        return {"kind": self.kind}


class RandomPolicy(Policy):
    """Uniform over the six actions."""

    kind = "random"
    wants = "none"

    def act(self, inp, agent_index, memory, rng):
        return rng.randrange(NUM_ACTIONS), memory


class TabularPolicy(Policy):
    """Action-value lookup keyed by state hash; greedy with fixed tie-break."""

    kind = "tabular"
    wants = "state"

    def __init__(self, table: Optional[Dict[str, List[float]]] = None,
                 default: Optional[List[float]] = None):
        self.table = dict(table or {})
        self.default = list(default) if default is not None else [0.0] * NUM_ACTIONS

    def key(self, state: GameState, agent_index: int) -> str:
        return f"{agent_index}:{state_hash(state)}"

    def act(self, inp, agent_index, memory, rng):
        state, _config = inp
        values = self.table.get(self.key(state, agent_index), self.default)
        best = max(range(NUM_ACTIONS), key=lambda a: (values[a], -a))
        return best, memory

    def to_spec(self) -> dict:
        return {
            "kind": self.kind,
            "parameters": {"table": self.table, "default": self.default},
        }


class GreedyPolicy(Policy):
    """Full-observability scripted chef.

    Plans with breadth-first search over floor cells: acquire a
    recipe-aligned ingredient, fill a pot, start or wait for cooking, plate
    the dish, deliver. Ties break by (task priority, path length, action
    index); the other agent only matters as an obstacle, with a small
    yield-and-detour rule to break stand-offs.
    """

    kind = "greedy"
    wants = "state"

    def initial_memory(self):
        return {"stuck": 0, "last_pos": None, "attempted": False}

    # task priorities, lower runs first
    _DELIVER, _PLATE_POT, _START, _FETCH_PLATE, _ADD_ING, _FETCH_ING, _DUMP = range(7)

    def act(self, inp, agent_index, memory, rng):
        state, config = inp
        layout: Layout = state.layout
        me = state.agents[agent_index]
        others = {a.pos for j, a in enumerate(state.agents) if j != agent_index}
        memory = dict(memory or self.initial_memory())

        plan = self._plan(state, config, agent_index)
        if plan is None:
            action = STAY
        else:
            target_cell, interact_when_adjacent = plan
            action = self._step_toward(layout, me, others, target_cell,
                                       interact_when_adjacent)

        # Stand-off breaking. A move attempt that left us in place means we
        # bounced off another agent (walls never pass the floor check).
        # Higher seats wait one extra step before dodging, so two chefs never
        # dodge into each other simultaneously.
        was_blocked = memory.get("attempted") and memory.get("last_pos") == me.pos
        stuck = memory.get("stuck", 0) + 1 if was_blocked else 0
        if stuck > agent_index and self._is_move_attempt(layout, me, action):
            action = self._sidestep(layout, me, others, action, salt=stuck)
        return action, {
            "stuck": stuck,
            "last_pos": me.pos,
            "attempted": self._is_move_attempt(layout, me, action),
        }

    @staticmethod
    def _is_move_attempt(layout, me, action) -> bool:
        if action >= 4:
            return False
        dx, dy = DIR_DELTAS[action]
        return layout.is_floor(me.pos[0] + dx, me.pos[1] + dy)

    # -- task selection -------------------------------------------------------

    def _plan(self, state: GameState, config: EnvConfig, agent_index: int):
        """Returns (target station cell, interact?) or None to idle."""
        layout = state.layout
        n_ing = layout.num_ingredients
        recipe = tuple(state.recipe)
        me = state.agents[agent_index]
        inv = me.inv
        items = dict(state.items)
        timers = dict(state.timers)

        pots = layout.stations(Cell.POT)
        cooked_match = []
        cooking_match = []
        startable = []
        fillable: List[Tuple[Tuple[int, int], Tuple[int, ...]]] = []
        for pot in pots:
            contents = items.get(pot, 0)
            counts = item_counts(contents, n_ing)
            cooking = timers.get(pot, 0) > 0
            if is_cooked(contents):
                if counts == recipe:
                    cooked_match.append(pot)
                continue
            if cooking:
                if counts == recipe:
                    cooking_match.append(pot)
                continue
            if all(c <= r for c, r in zip(counts, recipe)):
                if counts == recipe:
                    startable.append(pot)
                else:
                    fillable.append((pot, counts))

        tasks: List[Tuple[int, Tuple[int, int], bool]] = []

        if is_plated(inv) and is_cooked(inv):
            if item_counts(inv, n_ing) == recipe:
                for cell in layout.stations(Cell.DELIVERY):
                    tasks.append((self._DELIVER, cell, True))
            else:
                self._dump_tasks(layout, items, tasks)
        elif inv == PLATE:
            for cell in cooked_match:
                tasks.append((self._PLATE_POT, cell, True))
            for cell in cooking_match:
                tasks.append((self._PLATE_POT, cell, False))  # wait next to it
            if not cooked_match and not cooking_match:
                self._dump_tasks(layout, items, tasks)
        elif is_raw_ingredients(inv) and total_units(inv, n_ing) == 1:
            held = item_counts(inv, n_ing).index(1)
            useful = [
                pot for pot, counts in fillable if counts[held] < recipe[held]
            ]
            if useful:
                for cell in useful:
                    tasks.append((self._ADD_ING, cell, True))
            else:
                self._dump_tasks(layout, items, tasks)
        elif inv == 0:
            if cooked_match or cooking_match:
                for cell in layout.stations(Cell.PLATE_PILE):
                    tasks.append((self._FETCH_PLATE, cell, True))
            if startable and not config.auto_start_cooking:
                for cell in startable:
                    tasks.append((self._START, cell, True))
            if fillable:
                needed = sorted(
                    {
                        k
                        for _, counts in fillable
                        for k in range(n_ing)
                        if counts[k] < recipe[k]
                    }
                )
                for k in needed:
                    for cell in layout.stations(ingredient_pile(k)):
                        tasks.append((self._FETCH_ING, cell, True))
        else:
            self._dump_tasks(layout, items, tasks)

        return self._nearest_task(state, agent_index, tasks)

    def _dump_tasks(self, layout, items, tasks):
        for cell in layout.stations(Cell.WALL):
            if cell not in items:
                tasks.append((self._DUMP, cell, True))

    def _nearest_task(self, state, agent_index, tasks):
        if not tasks:
            return None
        layout = state.layout
        me = state.agents[agent_index]
        others = {a.pos for j, a in enumerate(state.agents) if j != agent_index}
        dist = self._distances(layout, me.pos, others)
        dist_free = None
        best = None
        for priority, cell, interact in sorted(
            tasks, key=lambda t: (t[0], t[1][1], t[1][0])
        ):
            d = self._station_distance(layout, dist, cell)
            if d is None:
                # unreachable around the partner: re-plan as if alone
                if dist_free is None:
                    dist_free = self._distances(layout, me.pos, set())
                d = self._station_distance(layout, dist_free, cell)
                if d is None:
                    continue
                d += 100  # prefer genuinely open routes
            key = (priority, d, cell[1], cell[0])
            if best is None or key < best[0]:
                best = (key, cell, interact)
        if best is None:
            return None
        return best[1], best[2]

    # -- movement -------------------------------------------------------------

    @staticmethod
    def _distances(layout: Layout, start, blocked):
        dist = {start: 0}
        queue = deque([start])
        while queue:
            cell = queue.popleft()
            d = dist[cell]
            for dx, dy in DIR_DELTAS:
                nxt = (cell[0] + dx, cell[1] + dy)
                if nxt in dist or nxt in blocked or not layout.is_floor(*nxt):
                    continue
                dist[nxt] = d + 1
                queue.append(nxt)
        return dist

    @staticmethod
    def _station_distance(layout, dist, station):
        best = None
        for dx, dy in DIR_DELTAS:
            adj = (station[0] + dx, station[1] + dy)
            if adj in dist and (best is None or dist[adj] < best):
                best = dist[adj]
        return best

    def _step_toward(self, layout, me, others, station, interact_when_adjacent):
        sx, sy = station
        mx, my = me.pos
        if max(abs(sx - mx), abs(sy - my)) == 1 and abs(sx - mx) + abs(sy - my) == 1:
            needed = DIR_DELTAS.index((sx - mx, sy - my))
            if me.dir != needed:
                return needed  # turning in place: the cell ahead is not floor
            return INTERACT if interact_when_adjacent else STAY

        # BFS from the adjacent cells of the station back to us
        goals = {
            (sx + dx, sy + dy)
            for dx, dy in DIR_DELTAS
            if layout.is_floor(sx + dx, sy + dy)
        }
        action = self._first_step(layout, me.pos, others, goals)
        if action is None:
            action = self._first_step(layout, me.pos, set(), goals)
        return action if action is not None else STAY

    @staticmethod
    def _first_step(layout, start, blocked, goals):
        """First action of a shortest path from start into ``goals``.

        Ties break by action index because neighbors expand in action order.
        """
        if start in goals:
            return STAY
        first: Dict[Tuple[int, int], int] = {start: -1}
        queue = deque([start])
        while queue:
            cell = queue.popleft()
            for action, (dx, dy) in enumerate(DIR_DELTAS):
                nxt = (cell[0] + dx, cell[1] + dy)
                if nxt in first or nxt in blocked or not layout.is_floor(*nxt):
                    continue
                first[nxt] = first[cell] if first[cell] != -1 else action
                if nxt in goals:
                    return first[nxt]
                queue.append(nxt)
        return None

    def _sidestep(self, layout, me, others, intended, salt=0):
        # rotate the preference order so repeated dodges explore new exits
        for k in range(4):
            action = (k + salt) % 4
            if action == intended:
                continue
            dx, dy = DIR_DELTAS[action]
            nxt = (me.pos[0] + dx, me.pos[1] + dy)
            if layout.is_floor(*nxt) and nxt not in others:
                return action
        return STAY


_POLICY_KINDS = {
    "random": RandomPolicy,
    "greedy": GreedyPolicy,
    "tabular": TabularPolicy,
}


def make_policy(spec) -> Policy:
    """Instantiate from a name or a {kind, parameters} mapping."""
    if isinstance(spec, str):
        spec = {"kind": spec}
    kind = spec.get("kind")
    if kind not in _POLICY_KINDS:
        known = ", ".join(sorted(_POLICY_KINDS))
        raise ValueError(f"unknown policy kind {kind!r}; available: {known}")
    params = spec.get("parameters") or {}
    return _POLICY_KINDS[kind](**params)


def save_policy(policy: Policy, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(policy.to_spec(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_policy(path) -> Policy:
    with open(path, encoding="utf-8") as fh:
        return make_policy(json.load(fh))


def policy_names() -> List[str]:
    return sorted(_POLICY_KINDS)

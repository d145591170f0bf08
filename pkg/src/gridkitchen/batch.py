"""Vectorized stepping over a batch of independent episodes.

State-of-arrays mirror of the scalar engine: same transition semantics,
same PRNG arithmetic, same canonical state packing, so a batched run and a
scalar run from equal states stay bit-identical (the equivalence property
tests hold both engines to that). The batch engine returns rewards and
shaped rewards but not event lists; use the scalar engine when events
matter.
"""
from __future__ import annotations

import hashlib
from typing import List, Sequence

import numpy as np

from .env import DELIVERY_REWARD, Env
from .items import COOKED_BIT, PLATED_BIT
from .layout import Cell, pile_index
from .rng import GAMMA
from .state import AgentState, EnvConfig, GameState, freeze_cells, recipe_code

_U64 = np.uint64
_GAMMA64 = _U64(GAMMA)
_MIX1 = _U64(0xBF58476D1CE4E5B9)
_MIX2 = _U64(0x94D049BB133111EB)

# per-action position deltas; stay/interact move nothing
_DX = np.array([0, 0, -1, 1, 0, 0], dtype=np.int32)
_DY = np.array([-1, 1, 0, 0, 0, 0], dtype=np.int32)

INTERACT = 5


def mix64_np(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _U64(30))) * _MIX1
    z = (z ^ (z >> _U64(27))) * _MIX2
    return z ^ (z >> _U64(31))


class BatchRng:
    """Vector of independent splitmix64 streams, one per environment."""

    def __init__(self, states: np.ndarray):
        self.state = states.astype(np.uint64)

    def next_u64(self, mask: np.ndarray) -> np.ndarray:
        """Advance only the masked lanes; others keep their state."""
        self.state[mask] += _GAMMA64
        return mix64_np(self.state)

    def randrange(self, n: int, mask: np.ndarray) -> np.ndarray:
        """Per-lane uniform draw in [0, n) with the scalar rejection rule."""
        limit = _U64((1 << 64) - ((1 << 64) % n))
        out = np.zeros(len(self.state), dtype=np.int64)
        pending = mask.copy()
        while pending.any():
            v = self.next_u64(pending)
            ok = pending & (v < limit)
            out[ok] = (v[ok] % _U64(n)).astype(np.int64)
            pending &= ~ok
        return out


class BatchEnv:
    """A batch of B independent episodes of one configuration.

    All per-episode state lives in arrays indexed by lane; ``step`` applies
    one joint action per lane. Episodes share the horizon, so lanes finish
    together; reset and restart the batch to continue.
    """

    def __init__(self, config: EnvConfig, batch_size: int):
        self.config = config
        self.batch = batch_size
        layout = config.layout
        self.layout = layout
        w, h = layout.width, layout.height
        self.w, self.h = w, h
        self.n_agents = layout.num_agents
        self.n_ing = layout.num_ingredients

        static = np.zeros((h, w), dtype=np.int32)
        pile_unit = np.zeros(h * w, dtype=np.uint32)
        for y in range(h):
            for x in range(w):
                kind = layout.cells[y][x]
                static[y, x] = int(kind)
                idx = pile_index(kind)
                if idx is not None:
                    static[y, x] = int(Cell.INGREDIENT_PILE)  # piles share a branch
                    pile_unit[y * w + x] = 1 << (2 + 2 * idx)
        self.static_flat = static.reshape(-1)
        self.pile_unit = pile_unit
        self.floor_flat = self.static_flat == int(Cell.EMPTY)
        self.pot_flat = self.static_flat == int(Cell.POT)
        self.pot_indices = np.nonzero(self.pot_flat)[0]

        # recipes packed into the item count lanes (offset 2)
        self.recipes_units = np.array(
            [recipe_code(r) << 2 for r in layout.possible_recipes], dtype=np.uint32
        )

        b = batch_size
        self.items = np.zeros((b, h * w), dtype=np.uint32)
        self.timers = np.zeros((b, h * w), dtype=np.int32)
        self.ax = np.zeros((b, self.n_agents), dtype=np.int32)
        self.ay = np.zeros((b, self.n_agents), dtype=np.int32)
        self.adir = np.zeros((b, self.n_agents), dtype=np.int32)
        self.ainv = np.zeros((b, self.n_agents), dtype=np.uint32)
        self.t = np.zeros(b, dtype=np.int32)
        self.recipe_units = np.zeros(b, dtype=np.uint32)
        self.perms = np.zeros((b, self.n_agents, self.n_ing), dtype=np.int32)
        self.delivered = np.zeros(b, dtype=bool)
        self.rng = BatchRng(np.zeros(b, dtype=np.uint64))
        self._lane_ids = np.arange(b)

    # -- loading -----------------------------------------------------------------

    def reset(self, seeds: Sequence[int]) -> None:
        """Scalar resets loaded into the arrays: bit-identical by construction."""
        if len(seeds) != self.batch:
            raise ValueError(f"need {self.batch} seeds, got {len(seeds)}")
        env = Env(self.config)
        self.load_states([env.reset(int(s)) for s in seeds])

    def load_states(self, states: Sequence[GameState]) -> None:
        if len(states) != self.batch:
            raise ValueError(f"need {self.batch} states, got {len(states)}")
        w = self.w
        self.items[:] = 0
        self.timers[:] = 0
        for lane, s in enumerate(states):
            for (x, y), code in s.items:
                self.items[lane, y * w + x] = code
            for (x, y), ticks in s.timers:
                self.timers[lane, y * w + x] = ticks
            for j, a in enumerate(s.agents):
                self.ax[lane, j] = a.pos[0]
                self.ay[lane, j] = a.pos[1]
                self.adir[lane, j] = a.dir
                self.ainv[lane, j] = a.inv
            self.t[lane] = s.t
            self.recipe_units[lane] = recipe_code(s.recipe) << 2
            self.perms[lane] = np.array(s.perms, dtype=np.int32)
            self.delivered[lane] = s.delivered_signal
            self.rng.state[lane] = s.rng_state

    def to_states(self) -> List[GameState]:
        w = self.w
        out = []
        for lane in range(self.batch):
            items = {}
            for idx in np.nonzero(self.items[lane])[0]:
                items[(int(idx) % w, int(idx) // w)] = int(self.items[lane, idx])
            timers = {}
            for idx in np.nonzero(self.timers[lane])[0]:
                timers[(int(idx) % w, int(idx) // w)] = int(self.timers[lane, idx])
            agents = tuple(
                AgentState(
                    pos=(int(self.ax[lane, j]), int(self.ay[lane, j])),
                    dir=int(self.adir[lane, j]),
                    inv=int(self.ainv[lane, j]),
                )
                for j in range(self.n_agents)
            )
            units = int(self.recipe_units[lane]) >> 2
            recipe = tuple((units >> (2 * i)) & 0x3 for i in range(self.n_ing))
            out.append(
                GameState(
                    layout=self.layout,
                    items=freeze_cells(items),
                    timers=freeze_cells(timers),
                    agents=agents,
                    t=int(self.t[lane]),
                    recipe=recipe,
                    perms=tuple(tuple(int(v) for v in p) for p in self.perms[lane]),
                    delivered_signal=bool(self.delivered[lane]),
                    rng_state=int(self.rng.state[lane]),
                )
            )
        return out

    # -- helpers -----------------------------------------------------------------

    def _units(self, codes: np.ndarray) -> np.ndarray:
        total = np.zeros(codes.shape, dtype=np.int32)
        for i in range(self.n_ing):
            total += ((codes >> np.uint32(2 + 2 * i)) & np.uint32(3)).astype(np.int32)
        return total

    def _submultiset(self, codes: np.ndarray, recipe_units: np.ndarray) -> np.ndarray:
        ok = np.ones(codes.shape, dtype=bool)
        for i in range(self.n_ing):
            shift = np.uint32(2 + 2 * i)
            ok &= ((codes >> shift) & np.uint32(3)) <= ((recipe_units >> shift) & np.uint32(3))
        return ok

    def _matching_active_pot(self) -> np.ndarray:
        """Lanes with a pot cooking or cooked whose contents equal the recipe."""
        result = np.zeros(self.batch, dtype=bool)
        for idx in self.pot_indices:
            contents = self.items[:, idx]
            active = (self.timers[:, idx] > 0) | ((contents & COOKED_BIT) != 0)
            counts_only = contents & ~np.uint32(PLATED_BIT | COOKED_BIT)
            result |= active & (counts_only == self.recipe_units)
        return result

    # -- stepping ----------------------------------------------------------------

    def step(self, actions: np.ndarray):
        """One joint step in every lane. Returns (rewards, shaped, done)."""
        if actions.shape != (self.batch, self.n_agents):
            raise ValueError(
                f"actions must have shape {(self.batch, self.n_agents)}"
            )
        if (self.t >= self.config.max_steps).any():
            raise RuntimeError("cannot step finished lanes; reset the batch")
        config = self.config
        b, n, w, h = self.batch, self.n_agents, self.w, self.h
        lanes = self._lane_ids

        prev_x, prev_y = self.ax.copy(), self.ay.copy()

        # 1. movement proposals
        is_move = actions < 4
        dx = _DX[actions]
        dy = _DY[actions]
        nx = self.ax + dx
        ny = self.ay + dy
        inside = (nx >= 0) & (nx < w) & (ny >= 0) & (ny < h)
        nxc = np.clip(nx, 0, w - 1)
        nyc = np.clip(ny, 0, h - 1)
        open_floor = inside & self.floor_flat[nyc * w + nxc]
        moved = is_move & open_floor
        self.ax = np.where(moved, nx, self.ax)
        self.ay = np.where(moved, ny, self.ay)
        self.adir = np.where(is_move, actions, self.adir)

        # 2. iterative collision resolution, then swap rejection
        for _ in range(n):
            same = (
                (self.ax[:, :, None] == self.ax[:, None, :])
                & (self.ay[:, :, None] == self.ay[:, None, :])
            )
            conflicted = same.sum(axis=2) > 1
            if not conflicted.any():
                break
            self.ax = np.where(conflicted, prev_x, self.ax)
            self.ay = np.where(conflicted, prev_y, self.ay)
        for i in range(n):
            for j in range(i + 1, n):
                swapped = (
                    (self.ax[:, i] == prev_x[:, j])
                    & (self.ay[:, i] == prev_y[:, j])
                    & (self.ax[:, j] == prev_x[:, i])
                    & (self.ay[:, j] == prev_y[:, i])
                )
                for k in (i, j):
                    self.ax[swapped, k] = prev_x[swapped, k]
                    self.ay[swapped, k] = prev_y[swapped, k]

        # 3. sequential interactions, vectorized per seat
        rewards = np.zeros(b, dtype=np.int64)
        shaped = np.zeros((b, n), dtype=np.int64)
        fresh_timer = np.zeros((b, h * w), dtype=bool)
        correct_delivery = np.zeros(b, dtype=bool)
        pot_place, plate_pick, dish_pick = config.shaped_rewards

        for j in range(n):
            acting = actions[:, j] == INTERACT
            if not acting.any():
                continue
            fx = self.ax[:, j] + _DX[self.adir[:, j]]
            fy = self.ay[:, j] + _DY[self.adir[:, j]]
            inside = (fx >= 0) & (fx < w) & (fy >= 0) & (fy < h)
            acting &= inside
            idx = np.clip(fy, 0, h - 1) * w + np.clip(fx, 0, w - 1)
            kind = self.static_flat[idx]
            it = self.items[lanes, idx]
            ticks = self.timers[lanes, idx]
            inv = self.ainv[:, j]
            inv_units = self._units(inv)
            it_units = self._units(it)
            inv_empty = inv == 0
            inv_raw = (inv != 0) & ((inv & np.uint32(PLATED_BIT | COOKED_BIT)) == 0)

            # ingredient pile
            m = acting & (kind == int(Cell.INGREDIENT_PILE)) & inv_empty
            self.ainv[m, j] = self.pile_unit[idx[m]]

            # plate pile
            m = acting & (kind == int(Cell.PLATE_PILE)) & inv_empty
            if m.any():
                self.ainv[m, j] = PLATED_BIT
                shaped[m & self._matching_active_pot(), j] += plate_pick

            # counters
            m = acting & (kind == int(Cell.WALL)) & (it != 0) & inv_empty
            self.ainv[m, j] = it[m]
            self.items[lanes[m], idx[m]] = 0
            m = acting & (kind == int(Cell.WALL)) & (it == 0) & ~inv_empty
            self.items[lanes[m], idx[m]] = inv[m]
            self.ainv[m, j] = 0

            # pots
            pot = acting & (kind == int(Cell.POT))
            cooking = ticks > 0
            cooked = (it & COOKED_BIT) != 0
            idle = pot & ~cooking & ~cooked
            m = pot & ~cooking & cooked & (inv == PLATED_BIT)
            if m.any():
                dish = it[m] | np.uint32(PLATED_BIT)
                self.ainv[m, j] = dish
                self.items[lanes[m], idx[m]] = 0
                match = np.zeros(b, dtype=bool)
                match[m] = (it[m] & ~np.uint32(PLATED_BIT)) == (
                    self.recipe_units[m] | COOKED_BIT
                )
                shaped[match, j] += dish_pick
            m = idle & inv_raw & (it_units + inv_units <= 3)
            if m.any():
                merged = it[m] + inv[m]
                self.items[lanes[m], idx[m]] = merged
                self.ainv[m, j] = 0
                aligned = np.zeros(b, dtype=bool)
                aligned[m] = self._submultiset(merged, self.recipe_units[m])
                shaped[aligned, j] += pot_place
            if not config.auto_start_cooking:
                m = idle & inv_empty & (it_units == 3)
                self.timers[lanes[m], idx[m]] = config.cook_time
                fresh_timer[lanes[m], idx[m]] = True

            # delivery
            dish_in_hand = (inv & np.uint32(PLATED_BIT | COOKED_BIT)) == np.uint32(
                PLATED_BIT | COOKED_BIT
            )
            m = acting & (kind == int(Cell.DELIVERY)) & dish_in_hand
            if m.any():
                correct = np.zeros(b, dtype=bool)
                correct[m] = inv[m] == (
                    self.recipe_units[m] | np.uint32(PLATED_BIT | COOKED_BIT)
                )
                rewards[correct] += DELIVERY_REWARD
                if config.negative_rewards:
                    rewards[m & ~correct] -= DELIVERY_REWARD
                self.ainv[m, j] = 0
                correct_delivery |= correct

            # button recipe indicator
            m = acting & (kind == int(Cell.BUTTON_RECIPE_INDICATOR)) & inv_empty
            if m.any():
                self.timers[lanes[m], idx[m]] = config.button_duration
                fresh_timer[lanes[m], idx[m]] = True
                rewards[m] += config.button_cost

        # 4. global updates
        self.t += 1
        ticking = (self.timers > 0) & ~fresh_timer
        self.timers[ticking] -= 1
        finished = ticking & (self.timers == 0) & self.pot_flat[None, :] & (
            self.items != 0
        )
        self.items[finished] |= COOKED_BIT
        if config.auto_start_cooking:
            for idx in self.pot_indices:
                contents = self.items[:, idx]
                start = (
                    (contents != 0)
                    & ((contents & COOKED_BIT) == 0)
                    & (self._units(contents) == 3)
                    & (self.timers[:, idx] == 0)
                )
                self.timers[start, idx] = config.cook_time

        if config.sample_recipe_on_delivery:
            resample = correct_delivery.copy()
            if resample.any():
                draws = self.rng.randrange(len(self.recipes_units), resample)
                self.recipe_units[resample] = self.recipes_units[draws[resample]]

        self.delivered = correct_delivery & config.indicate_successful_delivery
        done = self.t >= config.max_steps
        return rewards, shaped, done

    # -- hashing -----------------------------------------------------------------

    def packed(self) -> np.ndarray:
        """(B, K) uint32 little-endian words matching state.pack_state."""
        b = self.batch
        cols = [
            self.t.astype(np.uint32)[:, None],
            self.delivered.astype(np.uint32)[:, None],
            (self.rng.state & _U64(0xFFFFFFFF)).astype(np.uint32)[:, None],
            (self.rng.state >> _U64(32)).astype(np.uint32)[:, None],
            (self.recipe_units >> np.uint32(2)).astype(np.uint32)[:, None],
        ]
        for j in range(self.n_agents):
            cols.extend(
                [
                    self.ax[:, j].astype(np.uint32)[:, None],
                    self.ay[:, j].astype(np.uint32)[:, None],
                    self.adir[:, j].astype(np.uint32)[:, None],
                    self.ainv[:, j].astype(np.uint32)[:, None],
                ]
            )
        cols.append(self.perms.reshape(b, -1).astype(np.uint32))
        cols.append(self.items.astype(np.uint32))
        cols.append(self.timers.astype(np.uint32))
        words = np.concatenate(cols, axis=1)
        if words.dtype.byteorder not in ("<", "="):  # pragma: no cover
            words = words.astype("<u4")
        return words

    def state_hashes(self) -> List[str]:
        words = np.ascontiguousarray(self.packed().astype("<u4"))
        return [hashlib.sha256(words[lane].tobytes()).hexdigest()
                for lane in range(self.batch)]

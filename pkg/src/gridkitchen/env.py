"""The kitchen state machine: reset, the three-sub-step transition, rewards.

One step applies, in order:

1. movement proposals (collisions ignored, bumping a non-floor cell only
   turns the agent),
2. iterative collision resolution followed by swap rejection,
3. sequential interactions in agent-index order,
4. global updates: advance time, tick timers, finish cooking, auto-start
   full pots, resample the recipe after a correct delivery if configured.

Timers written during the interaction phase are not ticked in the same
step's global update, so a pot spends exactly ``cook_time`` steps cooking
and a pressed button stays revealed for exactly ``button_duration``
observations.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

from .items import (
    COOKED_BIT,
    PLATE,
    PLATED_BIT,
    is_cooked,
    is_plated,
    is_raw_ingredients,
    item_counts,
    total_units,
)
from .layout import Cell, pile_index, reachable_floor
from .rng import Rng
from .state import (
    ACTION_NAMES,
    DIR_DELTAS,
    INTERACT,
    STAY,
    AgentState,
    EnvConfig,
    GameState,
    StateError,
    freeze_cells,
    identity_perm,
    validate_state,
)

DELIVERY_REWARD = 20


@dataclass(frozen=True)
class StepOutcome:
    rewards: Tuple[int, ...]  # identical entries: the game is common-payoff
    shaped: Tuple[int, ...]
    done: bool
    events: Tuple[dict, ...]


def move_agents(
    state: GameState, actions: Sequence[int]
) -> Tuple[List[Tuple[int, int]], List[int]]:
    """Proposed positions and updated directions, ignoring collisions."""
    layout = state.layout
    proposed = []
    dirs = []
    for agent, action in zip(state.agents, actions):
        if action in (STAY, INTERACT):
            proposed.append(agent.pos)
            dirs.append(agent.dir)
            continue
        dx, dy = DIR_DELTAS[action]
        nx, ny = agent.pos[0] + dx, agent.pos[1] + dy
        if layout.is_floor(nx, ny):
            proposed.append((nx, ny))
        else:
            proposed.append(agent.pos)
        dirs.append(action)  # direction updates even when the move is blocked
    return proposed, dirs


def resolve_collisions(
    proposed: Sequence[Tuple[int, int]],
    previous: Sequence[Tuple[int, int]],
) -> List[Tuple[int, int]]:
    """Iteratively bounce colliding agents back, then reject swapped pairs.

    Reaches a fixed point within ``len(proposed)`` iterations: every
    productive iteration pins at least one more agent to its previous cell.
    """
    n = len(proposed)
    if len(previous) != n:
        raise ValueError("proposed and previous positions must have equal arity")
    pos = list(proposed)
    for _ in range(n):
        counts = Counter(pos)
        conflicted = [i for i in range(n) if counts[pos[i]] > 1]
        if not conflicted:
            break
        for i in conflicted:
            pos[i] = previous[i]
    swapped = set()
    for i in range(n):
        for j in range(i + 1, n):
            if pos[i] == previous[j] and pos[j] == previous[i] and i != j:
                swapped.add(i)
                swapped.add(j)
    for i in swapped:
        pos[i] = previous[i]
    return pos


class Env:
    """Stateless transition engine bound to one immutable config.

    All methods are pure with respect to the passed state; an ``Env`` can be
    shared across threads.
    """

    def __init__(self, config: EnvConfig):
        self.config = config
        layout = config.layout
        self.layout = layout
        self.pot_cells = [tuple(p) for p in layout.stations(Cell.POT)]
        self.spawn_regions = [
            sorted(reachable_floor(layout, spawn), key=lambda c: (c[1], c[0]))
            for spawn in layout.agent_spawns
        ]
        self._identity = identity_perm(layout.num_ingredients)

    @property
    def num_agents(self) -> int:
        return self.layout.num_agents

    # -- reset ---------------------------------------------------------------

    def reset(self, seed: int) -> GameState:
        """Fresh episode state. Draw order: recipe, positions, directions,
        then per-agent symmetry permutations."""
        config = self.config
        layout = self.layout
        rng = Rng.from_seed(seed)

        recipe = layout.possible_recipes[rng.randrange(len(layout.possible_recipes))]

        if config.random_agent_positions:
            taken = set()
            positions = []
            for i in range(layout.num_agents):
                free = [c for c in self.spawn_regions[i] if c not in taken]
                if not free:
                    raise StateError(
                        f"agent {i} has no free reachable floor cell to spawn on"
                    )
                pos = free[rng.randrange(len(free))]
                taken.add(pos)
                positions.append(pos)
            directions = [rng.randrange(4) for _ in range(layout.num_agents)]
        else:
            positions = list(layout.agent_spawns)
            directions = [0] * layout.num_agents  # all facing up

        if config.other_play_symmetries is not None:
            perms = tuple(
                config.other_play_symmetries[
                    rng.randrange(len(config.other_play_symmetries))
                ]
                for _ in range(layout.num_agents)
            )
        else:
            perms = tuple(self._identity for _ in range(layout.num_agents))

        agents = tuple(
            AgentState(pos=tuple(p), dir=d, inv=0)
            for p, d in zip(positions, directions)
        )
        return GameState(
            layout=layout,
            items=(),
            timers=(),
            agents=agents,
            t=0,
            recipe=recipe,
            perms=perms,
            delivered_signal=False,
            rng_state=rng.state,
        )

    def reset_to(self, state: GameState) -> GameState:
        """Inject a stored state as the start of a new episode (t reset to 0)."""
        validate_state(self.config, state)
        return state.replace(t=0)

    # -- step ----------------------------------------------------------------

    def step(self, state: GameState, actions: Sequence[int]) -> Tuple[GameState, StepOutcome]:
        config = self.config
        layout = self.layout
        n = layout.num_agents
        if len(actions) != n:
            raise ValueError(f"expected {n} actions, got {len(actions)}")
        for a in actions:
            if not 0 <= a < len(ACTION_NAMES):
                raise ValueError(f"action {a} outside 0..{len(ACTION_NAMES) - 1}")
        if state.t >= config.max_steps:
            raise StateError("cannot step a finished episode")

        # 1-2. movement and collision resolution
        previous = [agent.pos for agent in state.agents]
        proposed, dirs = move_agents(state, actions)
        final_pos = resolve_collisions(proposed, previous)

        items = state.items_dict()
        timers = state.timers_dict()
        inventories = [agent.inv for agent in state.agents]
        rng = Rng(state.rng_state)

        # 3. sequential interactions
        reward = 0
        shaped = [0] * n
        events: List[dict] = []
        timers_set_now: set = set()
        correct_delivery = False
        for i in range(n):
            if actions[i] != INTERACT:
                continue
            delta_r, delta_s, evs, correct = self._interact(
                i, final_pos[i], dirs[i], inventories, items, timers,
                timers_set_now, state.recipe,
            )
            reward += delta_r
            shaped[i] += delta_s
            events.extend(evs)
            correct_delivery = correct_delivery or correct

        # 4. global updates
        new_t = state.t + 1
        for cell in list(timers.keys()):
            if cell in timers_set_now:
                continue
            ticks = timers[cell] - 1
            if ticks > 0:
                timers[cell] = ticks
            else:
                del timers[cell]
                if layout.cell(*cell) == Cell.POT and cell in items:
                    items[cell] |= COOKED_BIT

        if config.auto_start_cooking:
            for cell in self.pot_cells:
                contents = items.get(cell, 0)
                if (
                    contents
                    and not is_cooked(contents)
                    and total_units(contents, layout.num_ingredients) == 3
                    and timers.get(cell, 0) == 0
                ):
                    timers[cell] = config.cook_time
                    events.append(
                        {"type": "cooking_started", "pos": list(cell), "auto": True}
                    )

        recipe = state.recipe
        if correct_delivery and config.sample_recipe_on_delivery:
            recipe = layout.possible_recipes[
                rng.randrange(len(layout.possible_recipes))
            ]

        agents = tuple(
            AgentState(pos=final_pos[i], dir=dirs[i], inv=inventories[i])
            for i in range(n)
        )
        new_state = GameState(
            layout=layout,
            items=freeze_cells(items),
            timers=freeze_cells(timers),
            agents=agents,
            t=new_t,
            recipe=recipe,
            perms=state.perms,
            delivered_signal=correct_delivery and config.indicate_successful_delivery,
            rng_state=rng.state,
        )
        outcome = StepOutcome(
            rewards=tuple(reward for _ in range(n)),
            shaped=tuple(shaped),
            done=new_t >= config.max_steps,
            events=tuple(events),
        )
        return new_state, outcome

    # -- interaction matrix ----------------------------------------------------

    def _interact(
        self,
        agent_index: int,
        pos: Tuple[int, int],
        direction: int,
        inventories: List[int],
        items: Dict[Tuple[int, int], int],
        timers: Dict[Tuple[int, int], int],
        timers_set_now: set,
        recipe: Tuple[int, ...],
    ) -> Tuple[int, int, List[dict], bool]:
        """Apply one agent's interaction. Invalid combinations are no-ops."""
        config = self.config
        layout = self.layout
        n_ing = layout.num_ingredients
        dx, dy = DIR_DELTAS[direction]
        fx, fy = pos[0] + dx, pos[1] + dy
        if not layout.in_bounds(fx, fy):
            return 0, 0, [], False
        cell = (fx, fy)
        kind = layout.cell(fx, fy)
        inv = inventories[agent_index]

        reward = 0
        shaped = 0
        events: List[dict] = []
        correct_delivery = False

        pile = pile_index(kind)
        if pile is not None:
            if inv == 0:
                new_inv = 1 << (2 + 2 * pile)
                inventories[agent_index] = new_inv
                events.append(
                    {"type": "picked_up", "pos": [fx, fy], "item": new_inv,
                     "agent": agent_index}
                )
        elif kind == Cell.PLATE_PILE:
            if inv == 0:
                inventories[agent_index] = PLATE
                if self._plate_is_aligned(items, timers, recipe):
                    shaped += config.shaped_rewards[1]
                events.append(
                    {"type": "picked_up", "pos": [fx, fy], "item": PLATE,
                     "agent": agent_index}
                )
        elif kind == Cell.WALL:
            counter_item = items.get(cell, 0)
            if counter_item and inv == 0:
                inventories[agent_index] = counter_item
                del items[cell]
                events.append(
                    {"type": "picked_up", "pos": [fx, fy], "item": counter_item,
                     "agent": agent_index}
                )
            elif counter_item == 0 and inv != 0:
                items[cell] = inv
                inventories[agent_index] = 0
                events.append(
                    {"type": "placed", "pos": [fx, fy], "item": inv,
                     "agent": agent_index}
                )
        elif kind == Cell.POT:
            contents = items.get(cell, 0)
            cooking = timers.get(cell, 0) > 0
            if cooking:
                pass  # pot is locked while the timer runs
            elif is_cooked(contents):
                if inv == PLATE:
                    dish = contents | PLATED_BIT
                    inventories[agent_index] = dish
                    del items[cell]
                    if item_counts(contents, n_ing) == recipe:
                        shaped += config.shaped_rewards[2]
                    events.append(
                        {"type": "picked_up", "pos": [fx, fy], "item": dish,
                         "agent": agent_index}
                    )
            else:
                if is_raw_ingredients(inv):
                    # check the sum first: adding codes carries across count
                    # lanes once any lane would exceed 3
                    if total_units(contents, n_ing) + total_units(inv, n_ing) <= 3:
                        merged = contents + inv
                        items[cell] = merged
                        inventories[agent_index] = 0
                        if self._submultiset(item_counts(merged, n_ing), recipe):
                            shaped += config.shaped_rewards[0]
                        events.append(
                            {"type": "placed", "pos": [fx, fy], "item": inv,
                             "agent": agent_index}
                        )
                elif (
                    inv == 0
                    and not config.auto_start_cooking
                    and total_units(contents, n_ing) == 3
                ):
                    timers[cell] = config.cook_time
                    timers_set_now.add(cell)
                    events.append(
                        {"type": "cooking_started", "pos": [fx, fy], "auto": False,
                         "agent": agent_index}
                    )
        elif kind == Cell.DELIVERY:
            if is_plated(inv) and is_cooked(inv):
                dish_counts = item_counts(inv, n_ing)
                correct = dish_counts == tuple(recipe)
                if correct:
                    reward += DELIVERY_REWARD
                elif config.negative_rewards:
                    reward -= DELIVERY_REWARD
                inventories[agent_index] = 0
                correct_delivery = correct
                events.append(
                    {"type": "delivered", "pos": [fx, fy], "correct": correct,
                     "recipe": list(recipe), "dish": list(dish_counts),
                     "agent": agent_index}
                )
        elif kind == Cell.BUTTON_RECIPE_INDICATOR:
            if inv == 0:
                timers[cell] = config.button_duration
                timers_set_now.add(cell)
                reward += config.button_cost
                events.append(
                    {"type": "button_pressed", "pos": [fx, fy], "agent": agent_index}
                )
        # Cell.RECIPE_INDICATOR and Cell.EMPTY: nothing to interact with.
        return reward, shaped, events, correct_delivery

    def _plate_is_aligned(self, items, timers, recipe) -> bool:
        """A plate helps iff some pot is cooking or cooked with the recipe."""
        n_ing = self.layout.num_ingredients
        for cell in self.pot_cells:
            contents = items.get(cell, 0)
            if not contents:
                continue
            active = timers.get(cell, 0) > 0 or is_cooked(contents)
            if active and item_counts(contents, n_ing) == tuple(recipe):
                return True
        return False

    @staticmethod
    def _submultiset(counts: Tuple[int, ...], recipe: Sequence[int]) -> bool:
        return all(c <= r for c, r in zip(counts, recipe))

    # -- single-phase surfaces (the step phases, exposed for probing) ----------

    def process_interaction(
        self, state: GameState, agent_index: int
    ) -> Tuple[GameState, int, int, Tuple[dict, ...]]:
        """Apply one agent's interact in isolation.

        Returns (state', common reward delta, that agent's shaped delta,
        events). Fresh timers written here keep their full value through the
        next global update, exactly as inside step().
        """
        if not 0 <= agent_index < self.num_agents:
            raise IndexError(f"agent index {agent_index} out of range")
        items = state.items_dict()
        timers = state.timers_dict()
        inventories = [a.inv for a in state.agents]
        agent = state.agents[agent_index]
        reward, shaped, events, _correct = self._interact(
            agent_index, agent.pos, agent.dir, inventories, items, timers,
            set(), state.recipe,
        )
        agents = tuple(
            a._replace(inv=inventories[i]) for i, a in enumerate(state.agents)
        )
        new_state = state.replace(
            items=freeze_cells(items), timers=freeze_cells(timers), agents=agents
        )
        return new_state, reward, shaped, tuple(events)

    def update_globals(self, state: GameState) -> GameState:
        """The per-step global update alone: advance time, tick timers,
        finish cooking, auto-start full pots."""
        config = self.config
        layout = self.layout
        items = state.items_dict()
        timers = state.timers_dict()
        for cell in list(timers.keys()):
            ticks = timers[cell] - 1
            if ticks > 0:
                timers[cell] = ticks
            else:
                del timers[cell]
                if layout.cell(*cell) == Cell.POT and cell in items:
                    items[cell] |= COOKED_BIT
        if config.auto_start_cooking:
            for cell in self.pot_cells:
                contents = items.get(cell, 0)
                if (
                    contents
                    and not is_cooked(contents)
                    and total_units(contents, layout.num_ingredients) == 3
                    and timers.get(cell, 0) == 0
                ):
                    timers[cell] = config.cook_time
        return state.replace(
            items=freeze_cells(items),
            timers=freeze_cells(timers),
            t=state.t + 1,
        )

    # -- convenience ----------------------------------------------------------

    def matches_recipe(self, item: int, recipe: Sequence[int]) -> bool:
        return matches_recipe(item, recipe, self.layout.num_ingredients)


def matches_recipe(item: int, recipe: Sequence[int], num_ingredients: int) -> bool:
    """True iff the item is a plated, cooked dish with exactly the recipe's counts."""
    return (
        is_plated(item)
        and is_cooked(item)
        and item_counts(item, num_ingredients) == tuple(recipe)
    )

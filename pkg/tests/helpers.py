"""State-construction helpers shared across the environment test modules."""
from typing import Optional, Tuple

from gridkitchen.env import Env
from gridkitchen.layout import builtin, builtin_names, parse_layout
from gridkitchen.state import EnvConfig, GameState, freeze_cells

# Every station kind adjacent to floor; two agents.
LAB = """
WWPWW
0A AB
L   R
W1WXW
"""


def make_env(source: str = LAB, **config_overrides) -> Env:
    if source in builtin_names():
        layout = builtin(source)
    else:
        layout = parse_layout(source, name="test")
    return Env(EnvConfig(layout=layout, **config_overrides))


def set_agent(
    state: GameState,
    index: int,
    pos: Optional[Tuple[int, int]] = None,
    dir: Optional[int] = None,
    inv: Optional[int] = None,
) -> GameState:
    agents = list(state.agents)
    a = agents[index]
    agents[index] = a._replace(
        pos=pos if pos is not None else a.pos,
        dir=dir if dir is not None else a.dir,
        inv=inv if inv is not None else a.inv,
    )
    return state.replace(agents=tuple(agents))


def put_item(state: GameState, pos: Tuple[int, int], code: int) -> GameState:
    items = state.items_dict()
    if code:
        items[pos] = code
    else:
        items.pop(pos, None)
    return state.replace(items=freeze_cells(items))


def put_timer(state: GameState, pos: Tuple[int, int], ticks: int) -> GameState:
    timers = state.timers_dict()
    if ticks:
        timers[pos] = ticks
    else:
        timers.pop(pos, None)
    return state.replace(timers=freeze_cells(timers))


def set_recipe(state: GameState, counts) -> GameState:
    return state.replace(recipe=tuple(counts))


def drive(env: Env, state: GameState, joint_actions):
    """Apply a sequence of joint actions; returns (states, outcomes)."""
    states = [state]
    outcomes = []
    for actions in joint_actions:
        state, outcome = env.step(state, actions)
        states.append(state)
        outcomes.append(outcome)
    return states, outcomes

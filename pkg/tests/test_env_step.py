"""Transition-function behavior: movement, interactions, timers, rewards."""
import pytest

from gridkitchen.env import DELIVERY_REWARD, matches_recipe, move_agents
from gridkitchen.items import PLATE, encode_item, ingredient_unit, total_units
from gridkitchen.state import (
    DOWN,
    INTERACT,
    LEFT,
    RIGHT,
    STAY,
    UP,
    StateError,
    state_hash,
)

from .helpers import drive, make_env, put_item, put_timer, set_agent, set_recipe

DISH_A = encode_item(True, True, [3, 0])  # plated cooked, three of ingredient 0
DISH_B = encode_item(True, True, [0, 3])


def lab_state(env, **kw):
    state = env.reset(0)
    return set_recipe(state, kw.pop("recipe", (3, 0)))


# -- movement -----------------------------------------------------------------


def test_move_into_floor():
    env = make_env()
    state = lab_state(env)  # agents at (1, 1) and (3, 1)
    proposed, dirs = move_agents(state, [RIGHT, DOWN])
    assert proposed == [(2, 1), (3, 2)]
    assert dirs == [RIGHT, DOWN]


def test_move_into_wall_turns_in_place():
    env = make_env()
    state = lab_state(env)
    proposed, dirs = move_agents(state, [UP, UP])  # pot / wall above both
    assert proposed == [(1, 1), (3, 1)]
    assert dirs == [UP, UP]


def test_stay_and_interact_keep_position_and_direction():
    env = make_env()
    state = set_agent(lab_state(env), 0, dir=LEFT)
    proposed, dirs = move_agents(state, [STAY, INTERACT])
    assert proposed == [(1, 1), (3, 1)]
    assert dirs == [LEFT, UP]


def test_step_rejects_bad_arity_and_done_state():
    env = make_env()
    state = lab_state(env)
    with pytest.raises(ValueError):
        env.step(state, [STAY])
    done_state = state.replace(t=env.config.max_steps)
    with pytest.raises(StateError):
        env.step(done_state, [STAY, STAY])


def test_step_rejects_unknown_action():
    env = make_env()
    with pytest.raises(ValueError):
        env.step(lab_state(env), [STAY, 17])


# -- deliveries ----------------------------------------------------------------


def deliver_setup(env, inv, recipe=(3, 0)):
    state = lab_state(env)
    state = set_recipe(state, recipe)
    return set_agent(state, 0, pos=(3, 2), dir=DOWN, inv=inv)


def test_correct_delivery_rewards_everyone():
    env = make_env()
    state = deliver_setup(env, DISH_A)
    new, outcome = env.step(state, [INTERACT, STAY])
    assert outcome.rewards == (DELIVERY_REWARD, DELIVERY_REWARD)
    assert new.agents[0].inv == 0
    delivered = [e for e in outcome.events if e["type"] == "delivered"]
    assert delivered == [
        {
            "type": "delivered", "pos": [3, 3], "correct": True,
            "recipe": [3, 0], "dish": [3, 0], "agent": 0,
        }
    ]


def test_incorrect_delivery_negative_rewards_on():
    env = make_env(negative_rewards=True)
    state = deliver_setup(env, DISH_B)
    new, outcome = env.step(state, [INTERACT, STAY])
    assert outcome.rewards == (-DELIVERY_REWARD, -DELIVERY_REWARD)
    assert new.agents[0].inv == 0


def test_incorrect_delivery_negative_rewards_off():
    env = make_env()
    state = deliver_setup(env, DISH_B)
    new, outcome = env.step(state, [INTERACT, STAY])
    assert outcome.rewards == (0, 0)
    assert new.agents[0].inv == 0  # dish is gone either way


@pytest.mark.parametrize(
    "inv",
    [PLATE, encode_item(False, True, [3, 0]), encode_item(False, False, [1, 0]), 0],
)
def test_delivery_requires_plated_cooked_dish(inv):
    env = make_env()
    state = deliver_setup(env, inv)
    new, outcome = env.step(state, [INTERACT, STAY])
    assert outcome.rewards == (0, 0)
    assert new.agents[0].inv == inv


def test_delivered_signal_lasts_exactly_one_step():
    env = make_env(indicate_successful_delivery=True)
    state = deliver_setup(env, DISH_A)
    s1, _ = env.step(state, [INTERACT, STAY])
    assert s1.delivered_signal
    s2, _ = env.step(s1, [STAY, STAY])
    assert not s2.delivered_signal


def test_delivered_signal_requires_config_flag():
    env = make_env()
    state = deliver_setup(env, DISH_A)
    s1, _ = env.step(state, [INTERACT, STAY])
    assert not s1.delivered_signal


def test_recipe_resample_only_on_correct_delivery():
    env = make_env(sample_recipe_on_delivery=True)
    # correct deliveries resample: over many rng states all recipes appear
    seen = set()
    for k in range(40):
        state = deliver_setup(env, DISH_A).replace(rng_state=k * 977)
        new, _ = env.step(state, [INTERACT, STAY])
        seen.add(new.recipe)
    assert seen == set(env.layout.possible_recipes)

    # incorrect deliveries never do
    for k in range(20):
        state = deliver_setup(env, DISH_B).replace(rng_state=k * 977)
        new, _ = env.step(state, [INTERACT, STAY])
        assert new.recipe == (3, 0)


# -- piles and counters ---------------------------------------------------------


def test_pile_pickup_empty_hand():
    env = make_env()
    state = set_agent(lab_state(env), 0, pos=(1, 2), dir=DOWN)  # pile 1 at (1, 3)
    new, _ = env.step(state, [INTERACT, STAY])
    assert new.agents[0].inv == encode_item(False, False, [0, 1])


def test_pile_pickup_requires_empty_hand():
    env = make_env()
    state = set_agent(lab_state(env), 0, pos=(1, 1), dir=LEFT, inv=PLATE)
    new, _ = env.step(state, [INTERACT, STAY])
    assert new.agents[0].inv == PLATE


def test_plate_pile_pickup():
    env = make_env()
    state = set_agent(lab_state(env), 0, pos=(3, 1), dir=RIGHT)
    new, _ = env.step(state, [INTERACT, STAY])
    assert new.agents[0].inv == PLATE


def test_counter_place_then_pickup():
    env = make_env()
    onion = ingredient_unit(0)
    state = set_agent(lab_state(env), 0, pos=(1, 1), dir=UP, inv=onion)  # wall (1, 0)
    s1, o1 = env.step(state, [INTERACT, STAY])
    assert s1.agents[0].inv == 0
    assert s1.item_at(1, 0) == onion
    assert any(e["type"] == "placed" for e in o1.events)

    s2, o2 = env.step(s1, [INTERACT, STAY])
    assert s2.agents[0].inv == onion
    assert s2.item_at(1, 0) == 0
    assert any(e["type"] == "picked_up" for e in o2.events)


def test_counter_occupied_rejects_placement():
    env = make_env()
    onion = ingredient_unit(0)
    state = set_agent(lab_state(env), 0, pos=(1, 1), dir=UP, inv=PLATE)
    state = put_item(state, (1, 0), onion)
    new, _ = env.step(state, [INTERACT, STAY])
    assert new.agents[0].inv == PLATE
    assert new.item_at(1, 0) == onion


def test_contested_pickup_first_agent_wins():
    text = "WWPWW\n0AWAB\nW   W\nWWXWW"
    env = make_env(text)
    state = env.reset(0)
    state = put_item(state, (2, 1), ingredient_unit(0))
    state = set_agent(state, 0, dir=RIGHT)
    state = set_agent(state, 1, dir=LEFT)
    new, _ = env.step(state, [INTERACT, INTERACT])
    assert new.agents[0].inv == ingredient_unit(0)
    assert new.agents[1].inv == 0
    assert new.item_at(2, 1) == 0


# -- pots ------------------------------------------------------------------------


def pot_state(env, inv=0, contents=0, timer=0, recipe=(3, 0)):
    state = lab_state(env)
    state = set_recipe(state, recipe)
    state = set_agent(state, 0, pos=(2, 1), dir=UP, inv=inv)  # pot at (2, 0)
    if contents:
        state = put_item(state, (2, 0), contents)
    if timer:
        state = put_timer(state, (2, 0), timer)
    return state


def test_pot_accepts_aligned_ingredient_with_shaped_reward():
    env = make_env()
    state = pot_state(env, inv=ingredient_unit(0))
    new, outcome = env.step(state, [INTERACT, STAY])
    assert new.item_at(2, 0) == ingredient_unit(0)
    assert new.agents[0].inv == 0
    assert outcome.shaped == (3, 0)


def test_pot_misaligned_ingredient_no_shaped_reward():
    env = make_env()
    state = pot_state(env, inv=ingredient_unit(1), recipe=(3, 0))
    new, outcome = env.step(state, [INTERACT, STAY])
    assert new.item_at(2, 0) == ingredient_unit(1)  # still goes in
    assert outcome.shaped == (0, 0)


def test_pot_rejects_overfill():
    env = make_env(auto_start_cooking=False)
    full = encode_item(False, False, [3, 0])
    state = pot_state(env, inv=ingredient_unit(0), contents=full)
    new, _ = env.step(state, [INTERACT, STAY])
    assert new.agents[0].inv == ingredient_unit(0)
    assert new.item_at(2, 0) == full


def test_pot_locked_while_cooking():
    env = make_env()
    state = pot_state(env, inv=ingredient_unit(0),
                      contents=encode_item(False, False, [2, 0]), timer=5)
    new, _ = env.step(state, [INTERACT, STAY])
    assert new.agents[0].inv == ingredient_unit(0)
    assert total_units(new.item_at(2, 0), 2) == 2


def test_plating_cooked_pot():
    env = make_env()
    cooked = encode_item(False, True, [3, 0])
    state = pot_state(env, inv=PLATE, contents=cooked)
    new, outcome = env.step(state, [INTERACT, STAY])
    assert new.agents[0].inv == DISH_A
    assert new.item_at(2, 0) == 0
    assert outcome.shaped == (5, 0)  # dish matches the recipe


def test_plating_off_recipe_dish_no_shaped_reward():
    env = make_env()
    cooked = encode_item(False, True, [0, 3])
    state = pot_state(env, inv=PLATE, contents=cooked, recipe=(3, 0))
    new, outcome = env.step(state, [INTERACT, STAY])
    assert new.agents[0].inv == DISH_B
    assert outcome.shaped == (0, 0)


def test_plating_requires_bare_plate():
    env = make_env()
    cooked = encode_item(False, True, [3, 0])
    state = pot_state(env, inv=DISH_B, contents=cooked)
    new, _ = env.step(state, [INTERACT, STAY])
    assert new.agents[0].inv == DISH_B
    assert new.item_at(2, 0) == cooked


def test_plate_pickup_shaped_only_while_matching_pot_active():
    # cooking pot with recipe contents: shaped plate pickup
    env = make_env()
    state = lab_state(env)
    state = set_agent(state, 0, pos=(3, 1), dir=RIGHT)
    state = put_item(state, (2, 0), encode_item(False, False, [3, 0]))
    state = put_timer(state, (2, 0), 7)
    _, outcome = env.step(state, [INTERACT, STAY])
    assert outcome.shaped == (3, 0)

    # idle pot, nothing cooking: no shaped reward
    bare = set_agent(lab_state(env), 0, pos=(3, 1), dir=RIGHT)
    _, outcome = env.step(bare, [INTERACT, STAY])
    assert outcome.shaped == (0, 0)

    # cooking pot with the wrong contents: no shaped reward
    wrong = set_agent(lab_state(env), 0, pos=(3, 1), dir=RIGHT)
    wrong = put_item(wrong, (2, 0), encode_item(False, False, [0, 3]))
    wrong = put_timer(wrong, (2, 0), 7)
    _, outcome = env.step(wrong, [INTERACT, STAY])
    assert outcome.shaped == (0, 0)


def test_auto_start_cooking_and_exact_cook_time():
    env = make_env(cook_time=20)
    state = pot_state(env, inv=ingredient_unit(0),
                      contents=encode_item(False, False, [2, 0]))
    s1, outcome = env.step(state, [INTERACT, STAY])
    assert any(e["type"] == "cooking_started" and e["auto"] for e in outcome.events)
    assert s1.timer_at(2, 0) == 20
    states, _ = drive(env, s1, [[STAY, STAY]] * 20)
    for k, s in enumerate(states[:-1]):
        assert s.timer_at(2, 0) == 20 - k
        assert not s.item_at(2, 0) & 0x2  # not cooked while ticking
    final = states[-1]
    assert final.timer_at(2, 0) == 0
    assert final.item_at(2, 0) == encode_item(False, True, [3, 0])


def test_manual_start_cooking():
    env = make_env(auto_start_cooking=False, cook_time=6)
    full = encode_item(False, False, [2, 1])
    state = pot_state(env, contents=full, recipe=(2, 1))
    # pot does not start by itself
    s1, _ = env.step(state, [STAY, STAY])
    assert s1.timer_at(2, 0) == 0
    s2, outcome = env.step(s1, [INTERACT, STAY])
    assert s2.timer_at(2, 0) == 6
    assert any(e["type"] == "cooking_started" and not e["auto"] for e in outcome.events)
    states, _ = drive(env, s2, [[STAY, STAY]] * 6)
    assert states[-1].item_at(2, 0) == encode_item(False, True, [2, 1])


def test_manual_start_requires_full_pot():
    env = make_env(auto_start_cooking=False)
    state = pot_state(env, contents=encode_item(False, False, [2, 0]))
    new, _ = env.step(state, [INTERACT, STAY])
    assert new.timer_at(2, 0) == 0


def test_timer_ticks_are_pure_decrements():
    env = make_env()
    state = put_timer(lab_state(env), (0, 2), 5)  # button cell
    new, _ = env.step(state, [STAY, STAY])
    assert new.timer_at(0, 2) == 4
    assert new.items == state.items


# -- button ----------------------------------------------------------------------


def test_button_press_sets_timer_and_costs_everyone():
    env = make_env(button_duration=10, button_cost=-2)
    state = set_agent(lab_state(env), 0, pos=(1, 2), dir=LEFT)
    new, outcome = env.step(state, [INTERACT, STAY])
    assert new.timer_at(0, 2) == 10
    assert outcome.rewards == (-2, -2)
    assert any(e["type"] == "button_pressed" for e in outcome.events)
    # reveal lasts exactly button_duration states after the press
    states, _ = drive(env, new, [[STAY, STAY]] * 10)
    for k, s in enumerate(states[:-1]):
        assert s.timer_at(0, 2) == 10 - k
    assert states[-1].timer_at(0, 2) == 0


def test_button_requires_empty_hand():
    env = make_env()
    state = set_agent(lab_state(env), 0, pos=(1, 2), dir=LEFT, inv=PLATE)
    new, outcome = env.step(state, [INTERACT, STAY])
    assert new.timer_at(0, 2) == 0
    assert outcome.rewards == (0, 0)


def test_interact_on_plain_indicator_is_noop():
    env = make_env()
    state = set_agent(lab_state(env), 0, pos=(3, 2), dir=RIGHT)  # indicator (4, 2)
    new, outcome = env.step(state, [INTERACT, STAY])
    assert outcome.rewards == (0, 0)
    assert new.agents[0].inv == 0
    assert new.items == () and new.timers == ()


# -- misc -------------------------------------------------------------------------


def test_matches_recipe():
    assert matches_recipe(encode_item(True, True, [3, 0]), (3, 0), 2)
    assert not matches_recipe(encode_item(True, True, [2, 1]), (3, 0), 2)
    assert not matches_recipe(encode_item(False, True, [3, 0]), (3, 0), 2)
    assert not matches_recipe(encode_item(True, False, [0, 0]), (3, 0), 2)


def test_done_exactly_at_max_steps():
    env = make_env(max_steps=3)
    state = lab_state(env)
    dones = []
    for _ in range(3):
        state, outcome = env.step(state, [STAY, STAY])
        dones.append(outcome.done)
    assert dones == [False, False, True]
    assert state.t == 3


def test_identical_runs_identical_hashes():
    env = make_env("cramped_room_v2", sample_recipe_on_delivery=True)

    def run():
        state = env.reset(5)
        hashes = [state_hash(state)]
        actions = [[k % 6, (k * 7 + 3) % 6] for k in range(60)]
        for a in actions:
            state, _ = env.step(state, a)
            hashes.append(state_hash(state))
        return hashes

    assert run() == run()


# -- single-phase surfaces ---------------------------------------------------------


def test_process_interaction_phase_matches_step():
    env = make_env()
    state = pot_state(make_env(), inv=ingredient_unit(0))
    new, reward, shaped, events = env.process_interaction(state, 0)
    assert new.item_at(2, 0) == ingredient_unit(0)
    assert new.agents[0].inv == 0
    assert reward == 0 and shaped == 3
    assert events[0]["type"] == "placed"
    # the original state is untouched
    assert state.item_at(2, 0) == 0


def test_process_interaction_noop_returns_equal_state():
    env = make_env()
    state = set_agent(lab_state(env), 0, pos=(3, 2), dir=RIGHT)  # indicator
    new, reward, shaped, events = env.process_interaction(state, 0)
    assert state_hash(new) == state_hash(state)
    assert (reward, shaped, events) == (0, 0, ())


def test_update_globals_phase():
    env = make_env(cook_time=4)
    state = put_timer(lab_state(env), (2, 0), 1)
    state = put_item(state, (2, 0), encode_item(False, False, [3, 0]))
    ticked = env.update_globals(state)
    assert ticked.t == state.t + 1
    assert ticked.timer_at(2, 0) == 0
    assert ticked.item_at(2, 0) == encode_item(False, True, [3, 0])

    # auto-start: a freshly full idle pot begins cooking
    full = put_item(lab_state(env), (2, 0), encode_item(False, False, [2, 1]))
    started = env.update_globals(full)
    assert started.timer_at(2, 0) == 4

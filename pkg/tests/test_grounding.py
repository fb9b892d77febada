import numpy as np
import pytest

from lnnrl.grounding import (FEATURE_NAMES, GroundingMemory, feature_vector, ground,
                             parse_observation, update_memory)
from lnnrl.logic import FALSE, TRUE
from lnnrl.world import ACTIONS, DIRECTIONS, Action, RoomGraph, generate_level, reset, step


def _episode(level):
    state, obs = reset(level)
    memory = GroundingMemory()
    here = parse_observation(obs.text)
    update_memory(memory, None, None, here.room, here.coin)
    return state, obs, memory, here


def _advance(level, state, memory, here, action):
    state, obs = step(level, state, action)
    nxt = parse_observation(obs.text)
    if nxt.room != here.room:
        update_memory(memory, here.room, action, nxt.room, nxt.coin)
    return state, obs, nxt


def test_west_exit_unvisited():
    memory = GroundingMemory()
    update_memory(memory, None, None, 0, False)
    props = ground("-= Room 0 =- There is an unguarded exit to the west.", memory)
    assert props["found_west_room"] == TRUE
    assert props["no_coin_in_west_room"] == FALSE
    assert props["found_east_room"] == FALSE
    assert props["visited_all_connected_rooms"] == FALSE


def test_dead_end_all_visited():
    level = RoomGraph([{"east": 1}, {"west": 0, "north": 2, "east": 3}, {"south": 1}, {"west": 1}], 0, 3)
    state, obs, memory, here = _episode(level)
    state, obs, here = _advance(level, state, memory, here, Action.GO_EAST)
    state, obs, here = _advance(level, state, memory, here, Action.GO_NORTH)
    props = ground(obs.text, memory)
    assert props["visited_all_connected_rooms"] == TRUE
    assert props["no_coin_in_south_room"] == TRUE
    state, obs, here = _advance(level, state, memory, here, Action.GO_SOUTH)
    props = ground(obs.text, memory)
    # east neighbour still unexplored
    assert props["visited_all_connected_rooms"] == FALSE
    assert props["no_coin_in_west_room"] == TRUE and props["no_coin_in_north_room"] == TRUE
    assert props["no_coin_in_east_room"] == FALSE


def test_coin_sentence():
    props = ground("-= Room 4 =- There is an unguarded exit to the east. There is a coin on the floor.",
                   GroundingMemory())
    assert props["found_coin_in_the_room"] == TRUE


def test_unrecognized_sentence_counted():
    memory = GroundingMemory()
    ground("-= Room 0 =- There is an unguarded exit to the east. A dragon sleeps here.", memory)
    assert memory.unrecognized == 1


def test_update_memory_cases():
    memory = GroundingMemory()
    update_memory(memory, 0, Action.GO_EAST, 1, coin_present=False)
    assert 1 in memory.visited and 1 in memory.coin_seen_absent
    assert memory.adjacency[(0, "east")] == 1 and memory.adjacency[(1, "west")] == 0
    snapshot = (set(memory.visited), set(memory.coin_seen_absent), dict(memory.adjacency))
    update_memory(memory, 0, Action.GO_EAST, 1, coin_present=False)
    assert (memory.visited, memory.coin_seen_absent, memory.adjacency) == snapshot
    update_memory(memory, 1, Action.GO_NORTH, 2, coin_present=True)
    assert 2 in memory.visited and 2 not in memory.coin_seen_absent
    memory.clear()
    assert not memory.visited and not memory.adjacency


def test_features_layout():
    assert len(FEATURE_NAMES) == 14
    props = ground("-= Room 0 =- There is an unguarded exit to the north.", GroundingMemory())
    f = feature_vector(props)
    assert f[FEATURE_NAMES.index("found_north_room")] == 1.0
    assert f[FEATURE_NAMES.index("blocked_north")] == 0.0
    assert f[FEATURE_NAMES.index("blocked_south")] == 1.0
    assert set(f) <= {0.0, 1.0}


def test_grounding_matches_environment_on_random_walks():
    """found_d agrees with the real exits; bounds are crisp; absence implies a visit."""
    rng = np.random.default_rng(0)
    checked = 0
    while checked < 1000:
        level = generate_level(int(rng.integers(2, 12)), int(rng.integers(0, 3)), int(rng.integers(1 << 30)))
        state, obs, memory, here = _episode(level)
        while not obs.done and checked < 1000:
            props = ground(obs.text, memory)
            room = state.current_room
            for d in DIRECTIONS:
                assert (props[f"found_{d}_room"] == TRUE) == (d in level.exits[room])
                if props[f"no_coin_in_{d}_room"] == TRUE:
                    assert props[f"visited_{d}_room"] == TRUE
                    assert level.exits[room][d] in state.coin_seen_absent
                assert (props[f"visited_{d}_room"] == TRUE) == (
                    d in level.exits[room] and level.exits[room][d] in state.visited)
            expected_all = all(level.exits[room][d] in state.visited for d in level.exits[room])
            assert (props["visited_all_connected_rooms"] == TRUE) == expected_all
            assert all(v in (TRUE, FALSE) for v in props.values())
            checked += 1
            state, obs, here = _advance(level, state, memory, here, ACTIONS[rng.integers(5)])

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lnnrl.agent import QFunction
from lnnrl.constraints import (GUIDE_TIE_ORDER, ShieldConfig, action_contradictions,
                               guide_distribution, guide_pick, guide_select, guide_value,
                               query_action, shield_filter, shield_select, softmax)
from lnnrl.dsl import compile_rules, default_knowledge
from lnnrl.grounding import N_FEATURES
from lnnrl.harness import run_experiment
from lnnrl.logic import FALSE, TRUE, build_graph
from lnnrl.world import ACTIONS, Action

from conftest import corridor_config, within_3_sigma

FORBID_WEST = {"no_coin_in_west_room": TRUE, "visited_all_connected_rooms": FALSE}
# came back through the west door: exit seen, room empty, other neighbours unexplored
CAME_FROM_WEST = {"found_west_room": TRUE, "no_coin_in_west_room": TRUE,
                  "visited_all_connected_rooms": FALSE}


@pytest.fixture
def graph():
    return build_graph(default_knowledge())


def test_shield_rejects_forbidden_move(graph):
    res = shield_filter(graph, FORBID_WEST, [Action.GO_WEST, Action.GO_EAST], ShieldConfig())
    assert res.action is Action.GO_EAST
    assert res.rejected == [Action.GO_WEST]
    assert res.contradictions[Action.GO_WEST] == 1.0 and not res.fallback


def test_shield_passes_first_when_nothing_fires(graph):
    res = shield_filter(graph, {}, list(ACTIONS), ShieldConfig())
    assert res.action is Action.GO_NORTH and res.rejected == [] and not res.fallback


def test_shield_fallback_when_all_contradicted():
    text = "\n".join(f"danger -> ~{a.proposition}" for a in ACTIONS)
    g = compile_rules(text)
    order = [Action.GO_EAST, Action.TAKE_COIN, Action.GO_NORTH, Action.GO_WEST, Action.GO_SOUTH]
    res = shield_filter(g, {"danger": TRUE}, order, ShieldConfig())
    assert res.fallback and res.action is Action.GO_SOUTH
    assert res.rejected == order[:4]
    assert all(c >= 1.0 for c in res.contradictions.values())


def test_max_rejections_limits_search():
    g = compile_rules("danger -> ~go_north\ndanger -> ~go_south")
    res = shield_filter(g, {"danger": TRUE}, [Action.GO_NORTH, Action.GO_SOUTH, Action.GO_EAST],
                        ShieldConfig(max_rejections=2))
    assert res.fallback and res.action is Action.GO_SOUTH


def test_shield_config_validation():
    with pytest.raises(ValueError):
        ShieldConfig(alpha=0.0)
    with pytest.raises(ValueError):
        ShieldConfig(max_rejections=6)


def test_shield_select_greedy_uses_ranking(graph):
    qf = QFunction()
    qf.b2[Action.GO_WEST] = 1.0
    res = shield_select(graph, FORBID_WEST, qf, np.zeros(N_FEATURES), 0.0, ShieldConfig(),
                        np.random.default_rng(0))
    assert res.rejected == [Action.GO_WEST] and res.action is Action.GO_NORTH


def test_guide_values(graph):
    assert guide_value(graph, {"found_west_room": TRUE}, Action.GO_WEST) == 1.0
    assert guide_value(graph, {}, Action.GO_WEST) == 0.5
    assert guide_value(graph, {}, Action.GO_WEST, pinned_midpoint=True) == 1.0
    # unpinned go_west is forced to (1, 0); the pinned query contradicts by 1
    assert query_action(graph, CAME_FROM_WEST, Action.GO_WEST, pinned=False).bounds == (1.0, 0.0)
    assert guide_value(graph, CAME_FROM_WEST, Action.GO_WEST) == -0.5
    assert guide_value(graph, FORBID_WEST, Action.GO_WEST) == -1.0


def test_pins_do_not_leak(graph):
    state = {"found_east_room": TRUE}
    before = guide_value(graph, state, Action.GO_WEST)
    guide_distribution(graph, FORBID_WEST)
    graph.memo.clear()
    assert guide_value(graph, state, Action.GO_WEST) == before
    assert action_contradictions(graph, state) == {a: 0.0 for a in ACTIONS}


def test_softmax_examples():
    assert np.allclose(softmax([1.0, -0.5]), [0.8176, 0.1824], atol=1e-4)
    assert np.allclose(softmax([0.3] * 5), 0.2)
    e = math.exp(1.5)
    assert softmax([1.0, -0.5])[0] == pytest.approx(e / (e + 1.0), abs=1e-12)


@given(st.lists(st.floats(-5, 5), min_size=5, max_size=5), st.floats(-50, 50))
def test_softmax_shift_invariance(v, c):
    p = softmax(v)
    assert abs(p.sum() - 1.0) < 1e-9
    assert np.allclose(p, softmax(np.asarray(v) + c), atol=1e-9, rtol=0)


props = ["found_north_room", "found_south_room", "found_east_room", "found_west_room",
         "no_coin_in_north_room", "no_coin_in_south_room", "no_coin_in_east_room", "no_coin_in_west_room",
         "visited_all_connected_rooms", "found_coin_in_the_room"]


@settings(max_examples=60, deadline=None)
@given(st.fixed_dictionaries({}, optional={p: st.sampled_from([TRUE, FALSE]) for p in props}))
def test_guide_distribution_is_valid(state):
    p = guide_distribution(build_graph(default_knowledge()), state)
    assert np.all(p >= 0) and abs(p.sum() - 1.0) < 1e-9


def test_guide_pick_product_rule():
    p = [0.8, 0.2, 0.0, 0.0, 0.0]
    q = [0.5, 0.2, 0.0, 0.0, 0.0]
    action, greedy = guide_pick(p, q, 0.0, np.random.default_rng(0))
    assert action is Action.GO_NORTH and greedy


def test_guide_pick_zero_q_uses_probability_then_tie_order():
    p = softmax([0.5, 1.0, 0.5, 0.5, 0.5])
    assert guide_pick(p, np.zeros(5), 0.0, np.random.default_rng(0))[0] is Action.GO_SOUTH
    assert guide_pick(np.full(5, 0.2), np.zeros(5), 0.0, np.random.default_rng(0))[0] is GUIDE_TIE_ORDER[0]


def test_guide_pick_warns_on_negative_q():
    with pytest.warns(RuntimeWarning):
        guide_pick(np.full(5, 0.2), -np.ones(5), 0.0, np.random.default_rng(0))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        guide_pick(np.full(5, 0.2), np.ones(5), 0.0, np.random.default_rng(0))


def test_guide_sampling_matches_distribution(graph):
    p = guide_distribution(graph, CAME_FROM_WEST | {"found_east_room": TRUE})
    rng = np.random.default_rng(0)
    n = 10_000
    draws = [int(guide_pick(p, np.zeros(5), 1.0, rng)[0]) for _ in range(n)]
    assert within_3_sigma(np.bincount(draws, minlength=5), p, n)


def test_guide_select_is_deterministic_at_zero_epsilon(graph):
    qf = QFunction()
    state = {"found_east_room": TRUE}
    picks = {guide_select(graph, state, qf, np.zeros(N_FEATURES), 0.0, np.random.default_rng(s))
             for s in range(10)}
    assert picks == {Action.GO_EAST}


@pytest.mark.parametrize("length", [1, 3, 5, 10])
def test_untrained_guide_follows_shortest_path(length):
    (record,) = run_experiment(corridor_config(length), greedy=True)
    assert record.reward == 1.0 and record.steps == length + 1

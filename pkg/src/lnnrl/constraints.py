"""Logic-driven action constraints layered over an epsilon-greedy Q-learner.

Two wrappers share one logic graph:

* **shield** -- walk the learner's candidate ranking and execute the first
  action whose contradiction (action pinned true against the grounded state)
  stays below ``alpha``; contradicted actions go back to the learner.
* **guide** -- turn every action's logical truth level into a softmax
  distribution and blend it with the Q-values when choosing.

Safe means ``contradiction < alpha``: an action is blocked once its
contradiction reaches the threshold.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .agent import N_ACTIONS, QFunction, ranked_actions
from .logic import (DEFAULT_MAX_ITERS, DEFAULT_TOL, TRUE, UNKNOWN, LogicGraph,
                    TruthBounds, infer, node_contradiction)
from .world import ACTIONS, Action

# tie order for the guide's greedy choice once P_LNN is also tied: a visible
# coin is never passed up for a move the rules rate equally
GUIDE_TIE_ORDER = (Action.TAKE_COIN, Action.GO_NORTH, Action.GO_SOUTH,
                   Action.GO_EAST, Action.GO_WEST)
_TIE_RANK = {a: k for k, a in enumerate(GUIDE_TIE_ORDER)}


@dataclass(frozen=True)
class ShieldConfig:
    alpha: float = 1.0
    max_rejections: int = N_ACTIONS

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if not 1 <= self.max_rejections <= N_ACTIONS:
            raise ValueError(f"max_rejections must lie in [1, {N_ACTIONS}]")


class ShieldResult(NamedTuple):
    action: Action
    rejected: list
    contradictions: dict
    fallback: bool


class ActionQuery(NamedTuple):
    bounds: TruthBounds
    contradiction: float


def _state_key(state) -> tuple:
    return tuple(sorted((k, float(v[0]), float(v[1])) for k, v in state.items()))


def query_action(graph: LogicGraph, state, action: Action, pinned: bool,
                 max_iters: int = DEFAULT_MAX_ITERS, tol: float = DEFAULT_TOL) -> ActionQuery:
    """Bounds of the action's proposition and its contradiction after inference.

    With ``pinned`` the action proposition is set true on top of ``state``
    (the learner proposing it).  Queries are memoized per graph version.
    Propositions the graph does not know are dropped from ``state``.
    """
    action = Action(action)
    key = (_state_key(state), int(action), pinned, max_iters, tol)
    hit = graph.memo.get(key)
    if hit is not None:
        return hit
    name = action.proposition
    if name not in graph.by_name:
        result = ActionQuery(TruthBounds(*(TRUE if pinned else UNKNOWN)), 0.0)
    else:
        query = {k: v for k, v in state.items() if k in graph.by_name}
        if pinned:
            query[name] = TRUE
        infer(graph, query, max_iters, tol)
        idx = graph.by_name[name]
        ctrd = sum(node_contradiction(graph, j) for j in graph.connected(idx))
        result = ActionQuery(graph.bounds(idx), ctrd)
    graph.memo[key] = result
    return result


def action_contradictions(graph: LogicGraph, state, actions=ACTIONS) -> dict:
    return {a: query_action(graph, state, a, pinned=True).contradiction for a in actions}


def shield_filter(graph: LogicGraph, state, candidates, cfg: ShieldConfig) -> ShieldResult:
    """Execute the first candidate with contradiction below ``alpha``.

    At most ``cfg.max_rejections`` candidates are examined; if every one of
    them is contradicted the last examined is executed anyway and the result
    is flagged as a fallback.
    """
    candidates = [Action(a) for a in candidates][:cfg.max_rejections]
    if not candidates:
        raise ValueError("no candidate actions")
    rejected, ctrds = [], {}
    for a in candidates:
        ctrds[a] = query_action(graph, state, a, pinned=True).contradiction
        if ctrds[a] < cfg.alpha:
            return ShieldResult(a, rejected, ctrds, False)
        rejected.append(a)
    chosen = rejected.pop()
    return ShieldResult(chosen, rejected, ctrds, True)


def shield_select(graph: LogicGraph, state, qf: QFunction, features, epsilon: float,
                  cfg: ShieldConfig, rng: np.random.Generator) -> ShieldResult:
    """Epsilon-greedy candidate ranking filtered through the shield."""
    if rng.random() < epsilon:
        ranking = [ACTIONS[i] for i in rng.permutation(N_ACTIONS)]
    else:
        ranking = ranked_actions(qf, features)
    return shield_filter(graph, state, ranking, cfg)


def guide_value(graph: LogicGraph, state, action: Action, pinned_midpoint: bool = False) -> float:
    """Truth level of ``action`` minus its contradiction.

    The midpoint ``(lower + upper) / 2`` comes from the unpinned query, so an
    action the rules recommend scores 1, an unconstrained one 0.5 and a
    forbidden one 0; the contradiction term always comes from the pinned
    query.  ``pinned_midpoint=True`` takes the midpoint from the pinned
    query instead.
    """
    pinned = query_action(graph, state, action, pinned=True)
    mid_source = pinned if pinned_midpoint else query_action(graph, state, action, pinned=False)
    lo, up = mid_source.bounds
    return (lo + up) / 2.0 - pinned.contradiction


def softmax(values) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    e = np.exp(v - v.max())
    return e / e.sum()


def guide_distribution(graph: LogicGraph, state, pinned_midpoint: bool = False) -> np.ndarray:
    """P_LNN over all actions in canonical order."""
    return softmax([guide_value(graph, state, a, pinned_midpoint) for a in ACTIONS])


def guide_pick(probs, q, epsilon: float, rng: np.random.Generator) -> tuple[Action, bool]:
    """Choose from P_LNN and Q; returns the action and whether the greedy branch fired.

    Greedy (``zeta >= epsilon``): argmax of ``P * Q``, ties broken by larger
    P and then :data:`GUIDE_TIE_ORDER`.  Otherwise sample from ``P``.
    """
    probs = np.asarray(probs, dtype=float)
    zeta = rng.random()
    if zeta >= epsilon:
        q = np.asarray(q, dtype=float)
        score = probs * q
        order = sorted(ACTIONS, key=lambda a: (-score[a], -probs[a], _TIE_RANK[a]))
        if q[order[0]] < 0:
            warnings.warn("negative Q-value selected by the guide's product rule", RuntimeWarning)
        return order[0], True
    return ACTIONS[int(rng.choice(N_ACTIONS, p=probs))], False


def guide_select(graph: LogicGraph, state, qf: QFunction, features, epsilon: float,
                 rng: np.random.Generator, pinned_midpoint: bool = False) -> Action:
    probs = guide_distribution(graph, state, pinned_midpoint)
    return guide_pick(probs, qf(features), epsilon, rng)[0]


def trace_record(step: int, state, method: str, chosen: Action, candidates=None,
                 contradictions=None, probs=None) -> dict:
    """JSON-ready record of one decision."""
    rec = {
        "step": step,
        "method": method,
        "state": {k: [float(v[0]), float(v[1])] for k, v in sorted(state.items())},
        "chosen": Action(chosen).name,
    }
    if candidates is not None:
        rec["candidates"] = [Action(a).name for a in candidates]
    if contradictions is not None:
        rec["contradictions"] = {Action(a).name: c for a, c in contradictions.items()}
    if probs is not None:
        rec["p_lnn"] = [round(float(p), 12) for p in probs]
    return rec


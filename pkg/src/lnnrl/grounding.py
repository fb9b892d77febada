"""Rule-based semantic parser from observation text to proposition bounds.

The parser sees only the text the game prints plus what the agent itself
remembers (rooms entered, which of them held no coin, and which exit led
where).  It never looks at the hidden level layout.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field

from .logic import FALSE, TRUE
from .world import COIN_SENTENCE, DIRECTIONS, OPPOSITE, Action

logger = logging.getLogger(__name__)

_TITLE = re.compile(r"-= Room (\d+) =-")
_EXIT = re.compile(r"There is an unguarded exit to the (north|south|east|west)\.")
_SENTENCE = re.compile(r"-= Room \d+ =-|[^.]*\.")

# fixed feature order: 10 grounded propositions, then 4 blocked-exit flags
FEATURE_PROPOSITIONS = (
    [f"found_{d}_room" for d in DIRECTIONS]
    + [f"no_coin_in_{d}_room" for d in DIRECTIONS]
    + ["visited_all_connected_rooms", "found_coin_in_the_room"]
)
FEATURE_NAMES = FEATURE_PROPOSITIONS + [f"blocked_{d}" for d in DIRECTIONS]
N_FEATURES = len(FEATURE_NAMES)


@dataclass
class ParsedObservation:
    room: int | None
    exits: tuple
    coin: bool
    unrecognized: int = 0


@dataclass
class GroundingMemory:
    visited: set = field(default_factory=set)
    coin_seen_absent: set = field(default_factory=set)
    adjacency: dict = field(default_factory=dict)  # (room, direction) -> room
    unrecognized: int = 0

    def clear(self) -> None:
        self.visited.clear()
        self.coin_seen_absent.clear()
        self.adjacency.clear()
        self.unrecognized = 0


def parse_observation(text: str) -> ParsedObservation:
    title = _TITLE.search(text)
    exits = tuple(d for d in DIRECTIONS if f"exit to the {d}." in text)
    coin = COIN_SENTENCE in text
    unknown = 0
    for m in _SENTENCE.finditer(text):
        s = m.group(0).strip()
        if s and not (_TITLE.fullmatch(s) or _EXIT.fullmatch(s) or s == COIN_SENTENCE):
            unknown += 1
    return ParsedObservation(int(title.group(1)) if title else None, exits, coin, unknown)


def update_memory(memory: GroundingMemory, prev_room: int | None, action: Action | None,
                  new_room: int, coin_present: bool) -> GroundingMemory:
    """Record entering ``new_room`` (from ``prev_room`` via ``action``, if any)."""
    memory.visited.add(new_room)
    if not coin_present:
        memory.coin_seen_absent.add(new_room)
    if prev_room is not None and action is not None and new_room != prev_room:
        d = Action(action).direction
        if d is not None:
            memory.adjacency[(prev_room, d)] = new_room
            memory.adjacency[(new_room, OPPOSITE[d])] = prev_room
    return memory


def ground(observation_text: str, memory: GroundingMemory) -> dict:
    """Crisp proposition bounds for the current observation."""
    obs = parse_observation(observation_text)
    if obs.unrecognized:
        memory.unrecognized += obs.unrecognized
        logger.warning("ignored %d unrecognized sentence(s)", obs.unrecognized)
    state = {}
    all_visited = True
    for d in DIRECTIONS:
        behind = memory.adjacency.get((obs.room, d))
        found = d in obs.exits
        visited = found and behind is not None and behind in memory.visited
        state[f"found_{d}_room"] = TRUE if found else FALSE
        state[f"visited_{d}_room"] = TRUE if visited else FALSE
        state[f"no_coin_in_{d}_room"] = (
            TRUE if visited and behind in memory.coin_seen_absent else FALSE)
        if found and not visited:
            all_visited = False
    state["visited_all_connected_rooms"] = TRUE if all_visited else FALSE
    state["found_coin_in_the_room"] = TRUE if obs.coin else FALSE
    return state


def feature_vector(state) -> list[float]:
    """Binary features in :data:`FEATURE_NAMES` order."""
    feats = [float(state.get(name, FALSE)[0]) for name in FEATURE_PROPOSITIONS]
    feats += [1.0 - float(state.get(f"found_{d}_room", FALSE)[0]) for d in DIRECTIONS]
    return feats

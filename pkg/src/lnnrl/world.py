"""A small Coin-collector text game.

A level is a corridor of rooms from the start room to the coin room, laid out
by a seeded self-avoiding walk on a grid, with optional dead-end side rooms
hanging off interior corridor rooms.  The agent moves with four compass
actions and wins (reward 1) by taking the coin in the coin room.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

DIRECTIONS = ("north", "south", "east", "west")
OPPOSITE = {"north": "south", "south": "north", "east": "west", "west": "east"}
_DELTA = {"north": (0, 1), "south": (0, -1), "east": (1, 0), "west": (-1, 0)}

DEFAULT_MAX_STEPS = 50
EXIT_SENTENCE = "There is an unguarded exit to the {}."
COIN_SENTENCE = "There is a coin on the floor."
LEVEL_FORMAT = "coinworld-level"
LEVEL_VERSION = 1


class Action(enum.IntEnum):
    GO_NORTH = 0
    GO_SOUTH = 1
    GO_EAST = 2
    GO_WEST = 3
    TAKE_COIN = 4

    @property
    def direction(self) -> str | None:
        return None if self is Action.TAKE_COIN else DIRECTIONS[self.value]

    @property
    def proposition(self) -> str:
        return "take_coin" if self is Action.TAKE_COIN else "go_" + DIRECTIONS[self.value]

    @classmethod
    def go(cls, direction: str) -> "Action":
        return cls(DIRECTIONS.index(direction))


ACTIONS = tuple(Action)


class LevelError(ValueError):
    pass


class EpisodeFinished(RuntimeError):
    pass


@dataclass
class RoomGraph:
    """Rooms with symmetric compass exits.  ``exits[r]`` maps direction -> room id."""

    exits: list[dict[str, int]]
    start_room: int
    coin_room: int

    @property
    def n_rooms(self) -> int:
        return len(self.exits)

    def degree(self, room: int) -> int:
        return len(self.exits[room])

    def validate(self) -> None:
        n = self.n_rooms
        if not (0 <= self.start_room < n and 0 <= self.coin_room < n):
            raise LevelError("start/coin room out of range")
        if self.start_room == self.coin_room:
            raise LevelError("coin room must differ from start room")
        for r, ex in enumerate(self.exits):
            for d, other in ex.items():
                if d not in _DELTA:
                    raise LevelError(f"unknown direction {d!r}")
                if other == r:
                    raise LevelError(f"room {r} exits into itself")
                if self.exits[other].get(OPPOSITE[d]) != r:
                    raise LevelError(f"exit {d} of room {r} is not symmetric")
        if len(self.reachable()) != n:
            raise LevelError("rooms are not connected")

    def reachable(self, source: int | None = None) -> set[int]:
        source = self.start_room if source is None else source
        seen, frontier = {source}, [source]
        while frontier:
            r = frontier.pop()
            for other in self.exits[r].values():
                if other not in seen:
                    seen.add(other)
                    frontier.append(other)
        return seen

    def shortest_path(self, source: int | None = None, target: int | None = None) -> list[str]:
        """Directions of a BFS shortest path (start to coin by default)."""
        source = self.start_room if source is None else source
        target = self.coin_room if target is None else target
        prev = {source: None}
        queue = [source]
        for r in queue:
            if r == target:
                break
            for d in DIRECTIONS:
                other = self.exits[r].get(d)
                if other is not None and other not in prev:
                    prev[other] = (r, d)
                    queue.append(other)
        if target not in prev:
            raise LevelError("target unreachable")
        path = []
        r = target
        while prev[r] is not None:
            r, d = prev[r]
            path.append(d)
        return path[::-1]


def _link(exits, a, b, d):
    exits[a][d] = b
    exits[b][OPPOSITE[d]] = a


def generate_level(length: int, distractors: int = 0, seed: int = 0,
                   max_tries: int = 200) -> RoomGraph:
    """Corridor of ``length`` moves from start to coin plus dead-end side rooms.

    Room ids follow the corridor (start is 0, coin is ``length``); side rooms
    come after.  Deterministic for a given (length, distractors, seed).
    """
    if length < 1 or distractors < 0:
        raise ValueError("need length >= 1 and distractors >= 0")
    if distractors and length < 2:
        raise LevelError("side rooms need an interior corridor room")
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        cells = [(0, 0)]
        occupied = {(0, 0)}
        dirs = []
        while len(cells) <= length:
            x, y = cells[-1]
            free = [d for d in DIRECTIONS
                    if (x + _DELTA[d][0], y + _DELTA[d][1]) not in occupied]
            if not free:
                break
            d = free[rng.integers(len(free))]
            cell = (x + _DELTA[d][0], y + _DELTA[d][1])
            cells.append(cell)
            occupied.add(cell)
            dirs.append(d)
        if len(cells) <= length:
            continue  # walk trapped itself
        exits = [dict() for _ in cells]
        for r, d in enumerate(dirs):
            _link(exits, r, r + 1, d)
        if _attach_side_rooms(exits, cells, occupied, length, distractors, rng):
            level = RoomGraph(exits, start_room=0, coin_room=length)
            level.validate()
            return level
    raise LevelError(f"could not place level ({length}, {distractors}) after {max_tries} tries")


def _attach_side_rooms(exits, cells, occupied, length, distractors, rng) -> bool:
    for _ in range(distractors):
        options = []
        for r in range(1, length):
            x, y = cells[r]
            for d in DIRECTIONS:
                cell = (x + _DELTA[d][0], y + _DELTA[d][1])
                if d not in exits[r] and cell not in occupied:
                    options.append((r, d, cell))
        if not options:
            return False
        r, d, cell = options[rng.integers(len(options))]
        cells.append(cell)
        occupied.add(cell)
        exits.append({})
        _link(exits, r, len(exits) - 1, d)
    return True


@dataclass(frozen=True)
class GameState:
    current_room: int
    visited: frozenset
    coin_taken: bool = False
    steps: int = 0
    coin_seen_absent: frozenset = field(default_factory=frozenset)
    max_steps: int = DEFAULT_MAX_STEPS
    done: bool = False


@dataclass(frozen=True)
class Observation:
    text: str
    reward: float
    done: bool


def room_title(room: int) -> str:
    return f"-= Room {room} =-"


def render_text(level: RoomGraph, state: GameState) -> str:
    room = state.current_room
    parts = [room_title(room)]
    parts += [EXIT_SENTENCE.format(d) for d in DIRECTIONS if d in level.exits[room]]
    if room == level.coin_room and not state.coin_taken:
        parts.append(COIN_SENTENCE)
    return " ".join(parts)


def reset(level: RoomGraph, max_steps: int = DEFAULT_MAX_STEPS) -> tuple[GameState, Observation]:
    start = level.start_room
    absent = frozenset() if start == level.coin_room else frozenset({start})
    state = GameState(start, frozenset({start}), coin_seen_absent=absent, max_steps=max_steps)
    return state, Observation(render_text(level, state), 0.0, False)


def step(level: RoomGraph, state: GameState, action: Action) -> tuple[GameState, Observation]:
    if state.done:
        raise EpisodeFinished("episode is over; call reset()")
    action = Action(action)
    reward = 0.0
    room, visited, absent, taken = state.current_room, state.visited, state.coin_seen_absent, False
    if action is Action.TAKE_COIN:
        if room == level.coin_room and not state.coin_taken:
            reward, taken = 1.0, True
    else:
        target = level.exits[room].get(action.direction)
        if target is not None:
            room = target
            visited = visited | {room}
            if room != level.coin_room:
                absent = absent | {room}
    steps = state.steps + 1
    done = taken or steps >= state.max_steps
    nxt = replace(state, current_room=room, visited=visited, coin_taken=state.coin_taken or taken,
                  steps=steps, coin_seen_absent=absent, done=done)
    return nxt, Observation(render_text(level, nxt), reward, done)


def dump_level(level: RoomGraph) -> str:
    """Versioned plain-text snapshot of a level."""
    lines = [f"{LEVEL_FORMAT} v{LEVEL_VERSION}",
             f"start {level.start_room}",
             f"coin {level.coin_room}"]
    for r, ex in enumerate(level.exits):
        links = " ".join(f"{d}={ex[d]}" for d in DIRECTIONS if d in ex)
        lines.append(f"room {r} {links}".rstrip())
    return "\n".join(lines) + "\n"


def load_level(text: str) -> RoomGraph:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != f"{LEVEL_FORMAT} v{LEVEL_VERSION}":
        raise LevelError(f"expected header '{LEVEL_FORMAT} v{LEVEL_VERSION}'")
    start = coin = None
    rooms: dict[int, dict[str, int]] = {}
    for ln in lines[1:]:
        key, *rest = ln.split()
        try:
            if key == "start":
                start = int(rest[0])
            elif key == "coin":
                coin = int(rest[0])
            elif key == "room":
                ex = {}
                for item in rest[1:]:
                    d, other = item.split("=")
                    ex[d] = int(other)
                rooms[int(rest[0])] = ex
            else:
                raise LevelError(f"unknown record {key!r}")
        except (IndexError, ValueError) as err:
            raise LevelError(f"bad line {ln!r}: {err}") from None
    if start is None or coin is None or sorted(rooms) != list(range(len(rooms))):
        raise LevelError("incomplete level snapshot")
    level = RoomGraph([rooms[r] for r in range(len(rooms))], start, coin)
    level.validate()
    return level

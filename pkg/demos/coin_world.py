"""
Generating and walking a coin-collector level
=============================================
"""

from lnnrl.grounding import GroundingMemory, ground, parse_observation, update_memory
from lnnrl.world import Action, dump_level, generate_level, reset, step

level = generate_level(length=6, distractors=2, seed=1)
print(dump_level(level))

###############################################################################
# Follow the shortest path and print what the grounder extracts on the way.
state, obs = reset(level)
memory = GroundingMemory()
here = parse_observation(obs.text)
update_memory(memory, None, None, here.room, here.coin)
for d in level.shortest_path():
    print(obs.text)
    props = ground(obs.text, memory)
    print("  true:", sorted(k for k, v in props.items() if v == (1.0, 1.0)))
    state, obs = step(level, state, Action.go(d))
    nxt = parse_observation(obs.text)
    update_memory(memory, here.room, Action.go(d), nxt.room, nxt.coin)
    here = nxt

state, obs = step(level, state, Action.TAKE_COIN)
print(obs.text, "reward", obs.reward, "steps", state.steps)

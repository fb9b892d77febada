"""
Shield and guide on a single state
==================================

The shield walks a candidate list and drops contradicted actions; the guide
scores every action and turns the scores into a distribution.
"""

import numpy as np

from lnnrl.constraints import ShieldConfig, guide_distribution, guide_value, shield_filter
from lnnrl.dsl import default_knowledge
from lnnrl.logic import FALSE, TRUE, build_graph
from lnnrl.world import ACTIONS, Action

graph = build_graph(default_knowledge())

# standing in a room entered from the west, with an unexplored exit east
state = {"found_west_room": TRUE, "found_east_room": TRUE,
         "no_coin_in_west_room": TRUE, "visited_all_connected_rooms": FALSE}

###############################################################################
# The learner proposes going back west first.
res = shield_filter(graph, state, [Action.GO_WEST, Action.GO_EAST], ShieldConfig(alpha=1.0))
print("executed:", res.action.name, "rejected:", [a.name for a in res.rejected])

###############################################################################
# Guide values: recommended moves score 1, unconstrained ones 0.5 and
# forbidden ones go negative.
for a in ACTIONS:
    print(f"{a.name:<10} v = {guide_value(graph, state, a):+.2f}")
p = guide_distribution(graph, state)
print("P_LNN:", np.round(p, 4))

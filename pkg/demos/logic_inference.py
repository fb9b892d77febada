"""
Bound propagation over the coin-collector rules
================================================

Compile the default rule file, feed grounded facts and watch the truth
bounds of the action propositions tighten.
"""

from lnnrl.dsl import default_knowledge, format_rules
from lnnrl.logic import FALSE, TRUE, action_contradiction, build_graph, infer

rules = default_knowledge()
print(format_rules(rules))

graph = build_graph(rules)
print(len(graph.nodes), "nodes,", len(graph.propositions), "propositions")
print(graph.describe(graph.node_id("go_east")))

###############################################################################
# An open exit to the east: the matching rule fires and go_east becomes true.
infer(graph, {"found_east_room": TRUE})
print("go_east bounds:", graph.bounds("go_east"))

###############################################################################
# The west room was already searched and other rooms are still unexplored, so
# the rules forbid walking back.  Pinning go_west true contradicts that.
blocked = {"no_coin_in_west_room": TRUE, "visited_all_connected_rooms": FALSE}
print("ctrd(go_west):", action_contradiction(graph, "go_west", blocked))
print("ctrd(go_east):", action_contradiction(graph, "go_east", blocked))

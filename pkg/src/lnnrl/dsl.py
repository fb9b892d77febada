"""Line-oriented rule language.

Grammar (whitespace-insensitive, ``#`` starts a comment)::

    rule    := conj "->" literal
    conj    := literal ("&" literal)*
    literal := "~"? IDENT            IDENT = [a-z][a-z0-9_]*

Example::

    ~visited_all_connected_rooms & no_coin_in_east_room -> ~go_east
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .logic import IMPLIES, NOT, AND, PROPOSITION, LogicGraph, build_graph

IDENT = re.compile(r"[a-z][a-z0-9_]*")
_TOKEN = re.compile(r"\s*(?:(->)|(&)|(~)|([a-z][a-z0-9_]*)|(\S))")

DEFAULT_RULE_FILE = "coin_collector.lnr"


class RuleSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Literal:
    name: str
    negated: bool = False

    def __post_init__(self):
        if not IDENT.fullmatch(self.name or ""):
            raise ValueError(f"bad identifier {self.name!r}")

    def __str__(self):
        return ("~" if self.negated else "") + self.name


@dataclass(frozen=True)
class Rule:
    antecedents: tuple
    consequent: Literal

    def __post_init__(self):
        object.__setattr__(self, "antecedents", tuple(self.antecedents))
        if not self.antecedents:
            raise ValueError("rule needs at least one antecedent literal")
        if len(set(self.antecedents)) != len(self.antecedents):
            raise ValueError("antecedent literals must be distinct")

    def __str__(self):
        return " & ".join(map(str, self.antecedents)) + " -> " + str(self.consequent)


def _tokens(line: str, lineno: int):
    pos = 0
    out = []
    while pos < len(line):
        m = _TOKEN.match(line, pos)
        if m is None:  # only trailing whitespace left
            break
        col = m.start(m.lastindex) + 1
        if m.group(5) is not None:
            raise RuleSyntaxError(f"unexpected character {m.group(5)!r}", lineno, col)
        kind = ("->", "&", "~", "ident")[m.lastindex - 1]
        out.append((kind, m.group(m.lastindex), col))
        pos = m.end()
    return out


def _parse_line(line: str, lineno: int) -> Rule:
    toks = _tokens(line, lineno)
    end_col = len(line.rstrip()) + 1
    pos = 0

    def literal():
        nonlocal pos
        negated = False
        if pos < len(toks) and toks[pos][0] == "~":
            negated = True
            pos += 1
        if pos >= len(toks):
            raise RuleSyntaxError("expected identifier", lineno, end_col)
        kind, text, col = toks[pos]
        if kind != "ident":
            raise RuleSyntaxError(f"expected identifier, got {text!r}", lineno, col)
        pos += 1
        return Literal(text, negated)

    if toks and toks[0][0] == "->":
        raise RuleSyntaxError("empty antecedent", lineno, toks[0][2])
    antecedents = [literal()]
    while pos < len(toks) and toks[pos][0] == "&":
        pos += 1
        antecedents.append(literal())
    if pos >= len(toks) or toks[pos][0] != "->":
        col = toks[pos][2] if pos < len(toks) else end_col
        raise RuleSyntaxError("expected '->'", lineno, col)
    pos += 1
    consequent = literal()
    if pos < len(toks):
        raise RuleSyntaxError(f"unexpected {toks[pos][1]!r} after consequent", lineno, toks[pos][2])
    if len(set(antecedents)) != len(antecedents):
        raise RuleSyntaxError("repeated antecedent literal", lineno, 1)
    return Rule(tuple(antecedents), consequent)


def parse_rules(text: str) -> list[Rule]:
    rules = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if line.strip():
            rules.append(_parse_line(line, lineno))
    return rules


def format_rules(rules) -> str:
    return "".join(f"{rule}\n" for rule in rules)


def load_rules(path) -> list[Rule]:
    return parse_rules(Path(path).read_text(encoding="utf-8"))


def default_rule_text() -> str:
    return resources.files("lnnrl").joinpath("rules", DEFAULT_RULE_FILE).read_text(encoding="utf-8")


def default_knowledge() -> list[Rule]:
    """The nine Coin-collector rules: four direction pairs plus the coin rule."""
    return parse_rules(default_rule_text())


def _literal_of(graph: LogicGraph, idx: int) -> Literal:
    node = graph.nodes[idx]
    if node.kind == PROPOSITION:
        return Literal(node.name)
    if node.kind == NOT and graph.nodes[node.children[0]].kind == PROPOSITION:
        return Literal(graph.nodes[node.children[0]].name, True)
    raise ValueError(f"node {graph.describe(idx)} is not a literal")


def graph_rules(graph: LogicGraph) -> list[Rule]:
    """Recover the rule list from the asserted roots of a compiled graph."""
    rules = []
    for root in sorted(graph.asserted):
        node = graph.nodes[root]
        if node.kind != IMPLIES:
            raise ValueError("asserted node is not an implication")
        ante, cons = node.children
        if graph.nodes[ante].kind == AND:
            lits = tuple(_literal_of(graph, c) for c in graph.nodes[ante].children)
        else:
            lits = (_literal_of(graph, ante),)
        rules.append(Rule(lits, _literal_of(graph, cons)))
    return rules


def compile_rules(text: str) -> LogicGraph:
    return build_graph(parse_rules(text))

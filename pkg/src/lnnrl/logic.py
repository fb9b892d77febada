"""Propositional logical neural network with lower/upper truth bounds.

Every node of a :class:`LogicGraph` carries a pair ``(lower, upper)`` in
``[0, 1]``.  Connectives use weighted Lukasiewicz activations::

    And(x)        = clamp(bias - sum_i w_i * (1 - x_i))
    Or(x)         = clamp(1 - bias + sum_i w_i * x_i)
    Implies(a, b) = clamp(1 - bias + w_a * (1 - a) + w_b * b)
    Not(x)        = 1 - x            (lower and upper swap)

which reduce to Boolean logic when every weight and bias is 1.  Inference
alternates an upward pass (bounds of a connective from its operands) with a
downward pass (bounds of operands from the connective, i.e. generalized
modus ponens / tollens) until no bound moves by more than ``tol``.  Bounds
only ever tighten.  A node whose lower bound exceeds its upper bound is
contradictory; it is frozen and stops propagating, so a conflict shows up
at the node where the clashing evidence meets.

Asserted nodes (rule roots) are axioms: their bounds are pinned and the
upward pass never overwrites them, only the downward pass reads them.
"""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence, Union

import numpy as np

logger = logging.getLogger(__name__)

PROPOSITION = "prop"
NOT = "not"
AND = "and"
OR = "or"
IMPLIES = "implies"

UNKNOWN = (0.0, 1.0)
TRUE = (1.0, 1.0)
FALSE = (0.0, 0.0)

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITERS = 10


class LogicError(Exception):
    """Base class for logic graph errors."""


class StructureError(LogicError):
    """The graph (or the rules compiled into it) is malformed."""


class UnknownPropositionError(LogicError, KeyError):
    pass


class TruthBounds(NamedTuple):
    lower: float
    upper: float

    @property
    def contradiction(self) -> float:
        return max(0.0, float(self.lower) - float(self.upper))


# name -> (lower, upper); unmentioned propositions stay unknown
PropositionState = Mapping[str, tuple]
NodeRef = Union[int, str]


class Dual:
    """Forward-mode dual number: a value with its gradient vector."""

    __slots__ = ("value", "grad")

    def __init__(self, value: float, grad: np.ndarray):
        self.value = float(value)
        self.grad = grad

    def __float__(self):
        return self.value

    def __repr__(self):
        return f"Dual({self.value!r})"

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.value + other.value, self.grad + other.grad)
        return Dual(self.value + other, self.grad)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.value - other.value, self.grad - other.grad)
        return Dual(self.value - other, self.grad)

    def __rsub__(self, other):
        return Dual(other - self.value, -self.grad)

    def __neg__(self):
        return Dual(-self.value, -self.grad)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.value * other.value,
                        self.grad * other.value + other.grad * self.value)
        return Dual(self.value * other, self.grad * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            v = other.value
            return Dual(self.value / v, (self.grad * v - other.grad * self.value) / (v * v))
        return Dual(self.value / other, self.grad / other)

    def __rtruediv__(self, other):
        return Dual(other / self.value, -other * self.grad / (self.value * self.value))


def clamp(z):
    """Clip to [0, 1].  Saturation is strict, so z == 0 or z == 1 keeps its gradient."""
    v = float(z)
    if v < 0.0:
        return 0.0
    if v > 1.0:
        return 1.0
    return z


@dataclass
class LogicNode:
    kind: str
    children: tuple = ()
    weights: list = field(default_factory=list)
    bias: float = 1.0
    name: str | None = None

    @property
    def is_connective(self) -> bool:
        return self.kind != PROPOSITION


class LogicGraph:
    """A DAG of propositions and weighted connectives with truth bounds.

    Nodes are appended in topological order (operands before the connectives
    that use them), so node ids double as a valid evaluation order.  A graph
    answers one query at a time; use :meth:`copy` for parallel queries.
    """

    def __init__(self):
        self.nodes: list[LogicNode] = []
        self.lower: list = []
        self.upper: list = []
        self.asserted: dict[int, TruthBounds] = {}
        self.by_name: dict[str, int] = {}
        self.parents: list[list[int]] = []
        self.converged = True
        self.iterations = 0
        # bumped whenever weights change; lets callers memoize queries
        self.version = 0
        self.memo: dict = {}
        self._not_of: dict[int, int] = {}

    # -- construction -------------------------------------------------

    def __len__(self):
        return len(self.nodes)

    def _add(self, node: LogicNode) -> int:
        for c in node.children:
            self._check(c)
        if any(float(w) < 0 for w in node.weights) or float(node.bias) < 0:
            raise StructureError("weights and bias must be non-negative")
        idx = len(self.nodes)
        self.nodes.append(node)
        self.lower.append(0.0)
        self.upper.append(1.0)
        self.parents.append([])
        for c in node.children:
            if idx not in self.parents[c]:
                self.parents[c].append(idx)
        self.version += 1
        self.memo.clear()
        return idx

    def proposition(self, name: str) -> int:
        """Id of the proposition ``name``, created on first use."""
        if name in self.by_name:
            return self.by_name[name]
        idx = self._add(LogicNode(PROPOSITION, name=name))
        self.by_name[name] = idx
        return idx

    def negation(self, child: int) -> int:
        # one Not per operand
        if child in self._not_of:
            return self._not_of[child]
        idx = self._add(LogicNode(NOT, (child,)))
        self._not_of[child] = idx
        return idx

    def conjunction(self, children: Sequence[int], weights=None, bias: float = 1.0) -> int:
        return self._nary(AND, children, weights, bias)

    def disjunction(self, children: Sequence[int], weights=None, bias: float = 1.0) -> int:
        return self._nary(OR, children, weights, bias)

    def _nary(self, kind, children, weights, bias):
        children = tuple(children)
        if not children:
            raise StructureError(f"{kind} needs at least one operand")
        weights = [1.0] * len(children) if weights is None else [float(w) for w in weights]
        if len(weights) != len(children):
            raise StructureError("one weight per operand")
        return self._add(LogicNode(kind, children, weights, float(bias)))

    def implication(self, antecedent: int, consequent: int,
                    weights=(1.0, 1.0), bias: float = 1.0) -> int:
        weights = [float(w) for w in weights]
        if len(weights) != 2:
            raise StructureError("implication takes exactly two weights")
        return self._add(LogicNode(IMPLIES, (antecedent, consequent), weights, float(bias)))

    def assert_node(self, idx: int, bounds=TRUE) -> None:
        self._check(idx)
        if self.nodes[idx].kind != IMPLIES:
            raise StructureError("only implication roots can be asserted")
        self.asserted[idx] = TruthBounds(float(bounds[0]), float(bounds[1]))

    def copy(self) -> "LogicGraph":
        return copy.deepcopy(self)

    # -- lookup -------------------------------------------------------

    def _check(self, idx) -> None:
        if not isinstance(idx, (int, np.integer)) or not 0 <= idx < len(self.nodes):
            raise LogicError(f"invalid node id {idx!r}")

    def node_id(self, ref: NodeRef) -> int:
        if isinstance(ref, str):
            try:
                return self.by_name[ref]
            except KeyError:
                raise UnknownPropositionError(ref) from None
        self._check(ref)
        return int(ref)

    def bounds(self, ref: NodeRef) -> TruthBounds:
        i = self.node_id(ref)
        return TruthBounds(float(self.lower[i]), float(self.upper[i]))

    def is_contradictory(self, i: int) -> bool:
        return float(self.lower[i]) > float(self.upper[i])

    @property
    def propositions(self) -> list[str]:
        return list(self.by_name)

    def connected(self, ref: NodeRef) -> list[int]:
        """The node itself plus every connective that takes it as an operand."""
        i = self.node_id(ref)
        return [i] + self.parents[i]

    def describe(self, idx: int) -> str:
        node = self.nodes[idx]
        if node.kind == PROPOSITION:
            return node.name
        if node.kind == NOT:
            return "~" + self.describe(node.children[0])
        if node.kind == IMPLIES:
            a, b = node.children
            return f"({self.describe(a)} -> {self.describe(b)})"
        op = " & " if node.kind == AND else " | "
        return "(" + op.join(self.describe(c) for c in node.children) + ")"

    # -- parameters ---------------------------------------------------

    def parameter_slots(self) -> list[tuple[int, int | None]]:
        """(node, weight index) pairs in flat-vector order; ``None`` marks a bias."""
        slots = []
        for i, node in enumerate(self.nodes):
            if node.kind in (AND, OR, IMPLIES):
                slots.extend((i, k) for k in range(len(node.weights)))
                slots.append((i, None))
        return slots

    def get_parameters(self) -> np.ndarray:
        return np.array([float(self.nodes[i].bias if k is None else self.nodes[i].weights[k])
                         for i, k in self.parameter_slots()], dtype=float)

    def set_parameters(self, flat) -> None:
        slots = self.parameter_slots()
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (len(slots),):
            raise ValueError(f"expected {len(slots)} parameters, got {flat.shape}")
        for (i, k), v in zip(slots, flat):
            if k is None:
                self.nodes[i].bias = float(v)
            else:
                self.nodes[i].weights[k] = float(v)
        self.version += 1
        self.memo.clear()

    # -- inference ----------------------------------------------------

    def reset_bounds(self) -> None:
        """Forget all evidence: leaves unknown, axioms re-pinned, connectives recomputed."""
        n = len(self.nodes)
        self.lower = [0.0] * n
        self.upper = [1.0] * n
        for i, b in self.asserted.items():
            self.lower[i], self.upper[i] = b.lower, b.upper
        self.upward_pass()

    def set_input(self, state: PropositionState, strict: bool = True) -> None:
        """Intersect proposition bounds with ``state`` (max of lowers, min of uppers)."""
        for name, b in state.items():
            idx = self.by_name.get(name)
            if idx is None:
                if strict:
                    raise UnknownPropositionError(name)
                logger.warning("ignoring unknown proposition %r", name)
                continue
            lo, up = float(b[0]), float(b[1])
            if not (0.0 <= lo <= 1.0 and 0.0 <= up <= 1.0):
                raise ValueError(f"bounds for {name!r} outside [0, 1]: {b!r}")
            if lo > float(self.lower[idx]):
                self.lower[idx] = lo
            if up < float(self.upper[idx]):
                self.upper[idx] = up

    def _tighten(self, i: int, lo=None, up=None) -> float:
        change = 0.0
        if lo is not None and float(lo) > float(self.lower[i]):
            change = float(lo) - float(self.lower[i])
            self.lower[i] = lo
        if up is not None and float(up) < float(self.upper[i]):
            change = max(change, float(self.upper[i]) - float(up))
            self.upper[i] = up
        return change

    def _evaluate(self, node: LogicNode):
        lo, up = self.lower, self.upper
        ch = node.children
        if node.kind == NOT:
            return 1.0 - up[ch[0]], 1.0 - lo[ch[0]]
        w, b = node.weights, node.bias
        if node.kind == AND:
            lower = b - sum(wi * (1.0 - lo[c]) for wi, c in zip(w, ch))
            upper = b - sum(wi * (1.0 - up[c]) for wi, c in zip(w, ch))
        elif node.kind == OR:
            lower = 1.0 - b + sum(wi * lo[c] for wi, c in zip(w, ch))
            upper = 1.0 - b + sum(wi * up[c] for wi, c in zip(w, ch))
        else:
            a, c = ch
            lower = 1.0 - b + w[0] * (1.0 - up[a]) + w[1] * lo[c]
            upper = 1.0 - b + w[0] * (1.0 - lo[a]) + w[1] * up[c]
        return clamp(lower), clamp(upper)

    def upward_pass(self) -> float:
        change = 0.0
        for i, node in enumerate(self.nodes):
            if node.kind == PROPOSITION or i in self.asserted or self.is_contradictory(i):
                continue
            if any(self.is_contradictory(c) for c in node.children):
                continue
            lo, up = self._evaluate(node)
            change = max(change, self._tighten(i, lo, up))
        return change

    def downward_pass(self) -> float:
        change = 0.0
        for i in range(len(self.nodes) - 1, -1, -1):
            node = self.nodes[i]
            if node.kind == PROPOSITION or self.is_contradictory(i):
                continue
            if node.kind == NOT:
                c = node.children[0]
                if not self.is_contradictory(c):
                    change = max(change, self._tighten(c, 1.0 - self.upper[i], 1.0 - self.lower[i]))
            elif node.kind == IMPLIES:
                change = max(change, self._down_implies(i, node))
            else:
                change = max(change, self._down_nary(i, node))
        return change

    def _down_implies(self, i: int, node: LogicNode) -> float:
        a, c = node.children
        (wa, wb), beta = node.weights, node.bias
        L, U = self.lower[i], self.upper[i]
        change = 0.0
        # consequent first (modus ponens), then antecedent (modus tollens)
        if float(wb) > 0 and not self.is_contradictory(a) and not self.is_contradictory(c):
            lo = clamp((L - 1.0 + beta - wa * (1.0 - self.lower[a])) / wb) if float(L) > 0 else None
            up = clamp((U - 1.0 + beta - wa * (1.0 - self.upper[a])) / wb) if float(U) < 1 else None
            change = max(change, self._tighten(c, lo, up))
        if float(wa) > 0 and not self.is_contradictory(a) and not self.is_contradictory(c):
            up = clamp(1.0 - (L - 1.0 + beta - wb * self.upper[c]) / wa) if float(L) > 0 else None
            lo = clamp(1.0 - (U - 1.0 + beta - wb * self.lower[c]) / wa) if float(U) < 1 else None
            change = max(change, self._tighten(a, lo, up))
        return change

    def _down_nary(self, i: int, node: LogicNode) -> float:
        L, U = self.lower[i], self.upper[i]
        if float(L) <= 0 and float(U) >= 1:
            return 0.0
        ch, w, beta = node.children, node.weights, node.bias
        change = 0.0
        for k, c in enumerate(ch):
            if float(w[k]) <= 0 or any(self.is_contradictory(x) for x in ch):
                continue
            others = [(w[j], ch[j]) for j in range(len(ch)) if j != k]
            lo = up = None
            if node.kind == AND:
                if float(L) > 0:
                    slack = beta - L - sum(wj * (1.0 - self.upper[x]) for wj, x in others)
                    lo = clamp(1.0 - slack / w[k])
                if float(U) < 1:
                    slack = beta - U - sum(wj * (1.0 - self.lower[x]) for wj, x in others)
                    up = clamp(1.0 - slack / w[k])
            else:
                if float(L) > 0:
                    need = L - 1.0 + beta - sum(wj * self.upper[x] for wj, x in others)
                    lo = clamp(need / w[k])
                if float(U) < 1:
                    room = U - 1.0 + beta - sum(wj * self.lower[x] for wj, x in others)
                    up = clamp(room / w[k])
            change = max(change, self._tighten(c, lo, up))
        return change


def build_graph(rules: Iterable) -> LogicGraph:
    """Compile implication rules into a graph with one asserted root per rule.

    Each rule needs ``antecedents`` (literals) and a ``consequent`` literal,
    where a literal has ``name`` and ``negated``.  Propositions and negations
    are shared between rules; a multi-literal antecedent becomes an And node.
    """
    graph = LogicGraph()
    seen = set()
    for rule in rules:
        key = (tuple(rule.antecedents), rule.consequent)
        if key in seen:
            raise StructureError(f"duplicate rule: {rule}")
        seen.add(key)
        operands = [_literal_node(graph, lit) for lit in rule.antecedents]
        if not operands:
            raise StructureError("rule has an empty antecedent")
        ante = operands[0] if len(operands) == 1 else graph.conjunction(operands)
        root = graph.implication(ante, _literal_node(graph, rule.consequent))
        graph.assert_node(root)
    graph.reset_bounds()
    return graph


def _literal_node(graph: LogicGraph, lit) -> int:
    idx = graph.proposition(lit.name)
    return graph.negation(idx) if lit.negated else idx


def reset_bounds(graph: LogicGraph) -> None:
    graph.reset_bounds()


def set_input(graph: LogicGraph, state: PropositionState, strict: bool = True) -> None:
    graph.set_input(state, strict=strict)


def upward_pass(graph: LogicGraph) -> float:
    return graph.upward_pass()


def downward_pass(graph: LogicGraph) -> float:
    return graph.downward_pass()


def infer(graph: LogicGraph, state: PropositionState | None = None,
          max_iters: int = DEFAULT_MAX_ITERS, tol: float = DEFAULT_TOL,
          strict: bool = True) -> bool:
    """Run a fresh query to fixpoint.  Returns False if ``max_iters`` ran out first."""
    if max_iters < 1 or tol <= 0:
        raise ValueError("need max_iters >= 1 and tol > 0")
    graph.reset_bounds()
    graph.set_input(state or {}, strict=strict)
    graph.converged = False
    for it in range(1, max_iters + 1):
        delta = max(graph.upward_pass(), graph.downward_pass())
        graph.iterations = it
        if delta < tol:
            graph.converged = True
            break
    if not graph.converged:
        logger.warning("inference stopped after %d passes without reaching a fixpoint", max_iters)
    return graph.converged


def node_contradiction(graph: LogicGraph, n: NodeRef) -> float:
    i = graph.node_id(n)
    return max(0.0, float(graph.lower[i]) - float(graph.upper[i]))


def action_contradiction(graph: LogicGraph, action_prop: NodeRef, state: PropositionState,
                         max_iters: int = DEFAULT_MAX_ITERS, tol: float = DEFAULT_TOL) -> float:
    """Contradiction caused by proposing ``action_prop``.

    The action proposition is pinned true on top of ``state``; the result is
    the summed ``max(0, lower - upper)`` over the action node and every
    connective that takes it as a direct operand.
    """
    i = graph.node_id(action_prop)
    if graph.nodes[i].kind != PROPOSITION:
        raise LogicError("action must be a proposition node")
    pinned = dict(state)
    pinned[graph.nodes[i].name] = TRUE
    infer(graph, pinned, max_iters, tol, strict=False)
    return sum(node_contradiction(graph, j) for j in graph.connected(i))


def _total_contradiction(graph: LogicGraph):
    total = 0.0
    for i in range(len(graph.nodes)):
        if graph.is_contradictory(i):
            total = total + (graph.lower[i] - graph.upper[i])
    return total


def contradiction_loss(graph: LogicGraph, dataset: Sequence[PropositionState],
                       max_iters: int = DEFAULT_MAX_ITERS, tol: float = DEFAULT_TOL) -> float:
    """Total contradiction over all nodes, summed over the dataset."""
    total = 0.0
    for state in dataset:
        infer(graph, state, max_iters, tol)
        total += float(_total_contradiction(graph))
    return total


def contradiction_loss_and_grad(graph: LogicGraph, dataset: Sequence[PropositionState],
                                max_iters: int = DEFAULT_MAX_ITERS,
                                tol: float = DEFAULT_TOL) -> tuple[float, np.ndarray]:
    """Loss plus its gradient w.r.t. :meth:`LogicGraph.get_parameters`.

    The gradient is exact forward-mode differentiation through the inference
    passes; clamp saturation and bound-selection kinks contribute zero.
    """
    slots = graph.parameter_slots()
    n = len(slots)
    saved = [(node.weights, node.bias) for node in graph.nodes]
    eye = np.eye(n)
    for p, (i, k) in enumerate(slots):
        node = graph.nodes[i]
        if k is None:
            node.bias = Dual(float(node.bias), eye[p])
        else:
            if node.weights is saved[i][0]:
                node.weights = list(node.weights)
            node.weights[k] = Dual(float(node.weights[k]), eye[p])
    loss, grad = 0.0, np.zeros(n)
    try:
        for state in dataset:
            infer(graph, state, max_iters, tol)
            total = _total_contradiction(graph)
            loss += float(total)
            if isinstance(total, Dual):
                grad += total.grad
    finally:
        for node, (w, b) in zip(graph.nodes, saved):
            node.weights, node.bias = w, b
        graph.reset_bounds()
    return loss, grad


def train(graph: LogicGraph, dataset: Sequence[PropositionState], epochs: int, lr: float,
          max_iters: int = DEFAULT_MAX_ITERS, tol: float = DEFAULT_TOL) -> list[float]:
    """Projected (sub)gradient descent on the contradiction loss.

    Returns the loss measured at the start of each epoch.  Weights and
    biases are projected back onto ``>= 0`` after every step.
    """
    if epochs < 1 or lr <= 0:
        raise ValueError("need epochs >= 1 and lr > 0")
    if not dataset:
        raise ValueError("dataset must not be empty")
    history = []
    for _ in range(epochs):
        loss, grad = contradiction_loss_and_grad(graph, dataset, max_iters, tol)
        history.append(loss)
        if loss == 0.0 or not grad.any():
            continue
        params = np.maximum(graph.get_parameters() - lr * grad, 0.0)
        graph.set_parameters(params)
    return history

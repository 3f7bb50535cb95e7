"""Exact transport solvers on finite bipartite supports, and the brute-force oracles they are checked against."""

import itertools
import logging
import math
import typing
from fractions import Fraction

import networkx as nx

logger = logging.getLogger(__name__)

Weights = typing.Sequence[Fraction]
CostMatrix = typing.Sequence[typing.Sequence[Fraction]]
FlowEntry = typing.Tuple[int, int, Fraction]

SOURCE = "source"
SINK = "sink"


def _common_denominator(values: typing.Iterable[Fraction]) -> int:
    denominator = 1
    for value in values:
        denominator = denominator * value.denominator // math.gcd(denominator, value.denominator)
    return denominator


def _check_marginals(source: Weights, target: Weights) -> None:
    if sum(source) != sum(target):
        raise ValueError(f"marginals carry different mass: {sum(source)} != {sum(target)}")
    if any(weight < 0 for weight in itertools.chain(source, target)):
        raise ValueError("marginal weights must be nonnegative")


def min_cost_flow(
    source: Weights, target: Weights, costs: CostMatrix
) -> typing.Tuple[Fraction, typing.List[FlowEntry]]:
    """Solve the transport problem exactly with the network simplex.

    Supplies, demands and costs are scaled to integers by their common denominators so the
    simplex runs on python integers, then the optimum is scaled back to a rational.

    Args:
        source: Source weights, one per row of `costs`
        target: Target weights, one per column of `costs`
        costs: Cost of moving a unit of mass from source i to target j

    Returns:
        The optimal cost and the plan as (i, j, mass) entries with positive mass.
    """
    _check_marginals(source, target)
    mass_scale = _common_denominator(itertools.chain(source, target))
    cost_scale = _common_denominator(cost for row in costs for cost in row)

    graph = nx.DiGraph()
    for i, weight in enumerate(source):
        graph.add_node(("mu", i), demand=-int(weight * mass_scale))
    for j, weight in enumerate(target):
        graph.add_node(("nu", j), demand=int(weight * mass_scale))
    for i, row in enumerate(costs):
        if source[i] == 0:
            continue
        for j, cost in enumerate(row):
            if target[j] == 0:
                continue
            graph.add_edge(("mu", i), ("nu", j), weight=int(cost * cost_scale))

    flow_cost, flow = nx.network_simplex(graph)

    plan = [
        (i, j, Fraction(flow[("mu", i)][("nu", j)], mass_scale))
        for i in range(len(source))
        if source[i] != 0
        for j in range(len(target))
        if target[j] != 0 and flow[("mu", i)][("nu", j)] > 0
    ]
    return Fraction(flow_cost, mass_scale * cost_scale), plan


def tree_cost(
    source: typing.Mapping[str, Fraction],
    target: typing.Mapping[str, Fraction],
    height: typing.Callable[[int], Fraction],
) -> Fraction:
    """Optimal transport cost when the ground cost is an ultrametric of the first disagreement.

    `height(j)` is the cost between two words whose first disagreement is at index j, and must be
    nonincreasing in j. Words are leaves of the prefix tree; the edge above an internal node at
    depth k has length (height(k-1) - height(k)) / 2 and the edge above a leaf at depth k has
    length height(k-1) / 2. The cost is the sum over edges of length times the mass imbalance
    of the subtree below.

    Words must not be proper prefixes of one another.
    """
    imbalance: typing.Dict[str, Fraction] = {}
    leaves = set(source) | set(target)
    for word in leaves:
        delta = source.get(word, Fraction(0)) - target.get(word, Fraction(0))
        if delta == 0:
            continue
        for depth in range(1, len(word) + 1):
            prefix = word[:depth]
            imbalance[prefix] = imbalance.get(prefix, Fraction(0)) + delta

    total = Fraction(0)
    for node, delta in imbalance.items():
        if delta == 0:
            continue
        depth = len(node)
        if node in leaves:
            length = height(depth - 1)
        else:
            length = height(depth - 1) - height(depth)
        total += length * abs(delta)
    return total / 2


def assignment_cost(costs: CostMatrix) -> Fraction:
    """Brute-force oracle for uniform marginals of equal size: best permutation, averaged."""
    size = len(costs)
    best = min(
        sum((costs[i][j] for i, j in enumerate(permutation)), Fraction(0))
        for permutation in itertools.permutations(range(size))
    )
    return best / size


def vertex_cost(source: Weights, target: Weights, costs: CostMatrix) -> Fraction:
    """Brute-force oracle enumerating every vertex of the transport polytope.

    Each vertex is the unique flow supported on a spanning tree of the complete bipartite graph,
    found by peeling leaves; trees whose flow goes negative are not feasible.
    """
    _check_marginals(source, target)
    rows, columns = len(source), len(target)
    graph = nx.complete_bipartite_graph(rows, columns)

    best: typing.Optional[Fraction] = None
    for tree in nx.SpanningTreeIterator(graph):
        flow = _tree_flow(tree, source, target, rows)
        if flow is None:
            continue
        cost = sum((mass * costs[i][j] for (i, j), mass in flow.items()), Fraction(0))
        if best is None or cost < best:
            best = cost

    if best is None:
        raise ValueError("transport polytope has no vertex")
    return best


def _tree_flow(
    tree: nx.Graph, source: Weights, target: Weights, rows: int
) -> typing.Optional[typing.Dict[typing.Tuple[int, int], Fraction]]:
    residual = {node: (source[node] if node < rows else target[node - rows]) for node in tree.nodes}
    remaining = nx.Graph(tree)
    flow: typing.Dict[typing.Tuple[int, int], Fraction] = {}

    while remaining.number_of_edges():
        leaf = next(node for node, degree in remaining.degree() if degree == 1)
        neighbour = next(iter(remaining[leaf]))
        mass = residual[leaf]
        if mass < 0:
            return None
        i, j = (leaf, neighbour - rows) if leaf < rows else (neighbour, leaf - rows)
        flow[(i, j)] = mass
        residual[neighbour] -= mass
        remaining.remove_node(leaf)
    return flow


def max_flow_mass(source: Weights, target: Weights, allowed: typing.Iterable[typing.Tuple[int, int]]) -> Fraction:
    """Largest mass a coupling can place on the allowed (i, j) pairs (maximum flow)."""
    scale = _common_denominator(itertools.chain(source, target))
    graph = nx.DiGraph()
    graph.add_node(SOURCE)
    graph.add_node(SINK)
    for i, weight in enumerate(source):
        graph.add_edge(SOURCE, ("mu", i), capacity=int(weight * scale))
    for j, weight in enumerate(target):
        graph.add_edge(("nu", j), SINK, capacity=int(weight * scale))
    for i, j in allowed:
        # no capacity attribute: unbounded
        graph.add_edge(("mu", i), ("nu", j))

    value = nx.maximum_flow_value(graph, SOURCE, SINK)
    return Fraction(value, scale)


def prokhorov_threshold(source: Weights, target: Weights, distances: CostMatrix) -> Fraction:
    """Smallest eps such that some coupling puts at most eps mass on pairs farther apart than eps.

    The excess mass m(t) = 1 - maxflow(d <= t) is a step function that only changes at the
    pairwise distances, so the infimum is attained at max(d_i, m(d_i)) on one of the steps.
    """
    total = sum(source)
    levels = sorted({Fraction(0)} | {value for row in distances for value in row})
    candidates: typing.List[Fraction] = []
    for index, level in enumerate(levels):
        allowed = [
            (i, j) for i, row in enumerate(distances) for j, value in enumerate(row) if value <= level
        ]
        excess = total - max_flow_mass(source, target, allowed)
        candidate = max(level, excess)
        upper = levels[index + 1] if index + 1 < len(levels) else None
        if upper is None or candidate < upper:
            candidates.append(candidate)
        if excess == 0:
            break
    return min(candidates)

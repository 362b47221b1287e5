"""Undirected network graph with neighbor / 2-hop queries and dynamic membership.

Node identifiers are small non-negative integers.  The natural ordering on
ids is the global tie-breaker used by every election in this package
(lowest id wins), which keeps all outcomes deterministic.

Graphs are immutable values: mutating operations return a new Graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .errors import DuplicateNode, SelfLoop, UnknownEndpoint, UnknownNode

NodeId = int


def _norm_link(a: NodeId, b: NodeId) -> tuple[NodeId, NodeId]:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class Graph:
    """Undirected graph as a node set plus a set of unordered link pairs."""

    nodes: frozenset[NodeId]
    links: frozenset[tuple[NodeId, NodeId]]
    _adj: dict[NodeId, frozenset[NodeId]] = field(
        default=None, compare=False, repr=False)

    def __post_init__(self):
        adj: dict[NodeId, set[NodeId]] = {n: set() for n in self.nodes}
        for a, b in self.links:
            adj[a].add(b)
            adj[b].add(a)
        object.__setattr__(
            self, "_adj", {n: frozenset(s) for n, s in adj.items()})

    def __contains__(self, k: NodeId) -> bool:
        return k in self.nodes

    def degree(self, k: NodeId) -> int:
        return len(neighbors(self, k))


def build_graph(nodes: Iterable[NodeId],
                links: Iterable[tuple[NodeId, NodeId]]) -> Graph:
    """Build a graph, normalizing links (dedup, unordered, no self-loops)."""
    node_set = frozenset(nodes)
    norm: set[tuple[NodeId, NodeId]] = set()
    for a, b in links:
        if a == b:
            raise SelfLoop(f"self-loop on node {a}")
        if a not in node_set or b not in node_set:
            raise UnknownEndpoint(f"link ({a}, {b}) references a missing node")
        norm.add(_norm_link(a, b))
    return Graph(node_set, frozenset(norm))


def neighbors(g: Graph, k: NodeId) -> frozenset[NodeId]:
    """All nodes sharing a link with k; never contains k itself."""
    if k not in g.nodes:
        raise UnknownNode(f"node {k} not in graph")
    return g._adj[k]


def two_hop_neighbors(g: Graph, k: NodeId) -> frozenset[NodeId]:
    """Union of neighbors and neighbors-of-neighbors, excluding k."""
    one = neighbors(g, k)
    out = set(one)
    for m in one:
        out |= g._adj[m]
    out.discard(k)
    return frozenset(out)


def add_node(g: Graph, k: NodeId,
             links: Iterable[NodeId] = ()) -> Graph:
    """Insert node k with the given adjacency."""
    if k in g.nodes:
        raise DuplicateNode(f"node {k} already present")
    link_list = list(links)
    for m in link_list:
        if m not in g.nodes:
            raise UnknownEndpoint(f"link target {m} not in graph")
        if m == k:
            raise SelfLoop(f"self-loop on node {k}")
    new_links = set(g.links) | {_norm_link(k, m) for m in link_list}
    return Graph(g.nodes | {k}, frozenset(new_links))


def remove_node(g: Graph, k: NodeId) -> Graph:
    """Remove node k and all its incident links."""
    if k not in g.nodes:
        raise UnknownNode(f"node {k} not in graph")
    kept = frozenset(l for l in g.links if k not in l)
    return Graph(g.nodes - {k}, kept)

"""1-hop cluster formation and per-cluster elections (CDLE mode).

Clusters are built by a greedy dominating-set pass: repeatedly seed a new
cluster at the uncovered node with the most uncovered neighbors (lowest id
on ties) and absorb its uncovered 1-hop neighborhood.  The seed anchors
formation only; the leader is elected afterwards from the whole cluster.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import payments as pay
from .cost_model import CostOfAnalysis
from .election import ElectionOutcome
from .errors import MissingCost
from .messages import Vote
from .topology import Graph, NodeId, neighbors


@dataclass(frozen=True)
class Cluster:
    head_seed: NodeId
    members: frozenset[NodeId]


def form_clusters(g: Graph) -> list[Cluster]:
    """Partition the node set into 1-hop clusters (greedy dominating set)."""
    uncovered = set(g.nodes)
    clusters: list[Cluster] = []
    while uncovered:
        seed = max(uncovered,
                   key=lambda n: (len(neighbors(g, n) & uncovered), -n))
        members = ({seed} | neighbors(g, seed)) & uncovered
        uncovered -= members
        clusters.append(Cluster(head_seed=seed, members=frozenset(members)))
    return clusters


def elect_per_cluster(clusters: list[Cluster],
                      costs: dict[NodeId, CostOfAnalysis],
                      budget_per_vote: float) -> ElectionOutcome:
    """Elect the (cost, id)-minimal member of each cluster.

    Candidate sets are cluster-wide, so every voter's second cost is the
    cluster's second-least cost.  Outcomes are merged across clusters.
    """
    affiliation: dict[NodeId, NodeId] = {}
    votes: dict[NodeId, tuple[Vote, ...]] = {}
    payments: dict[NodeId, pay.Payment] = {}
    counts = {"hello": 0, "begin_election": 0, "vote": 0, "acknowledge": 0}
    sent: dict[NodeId, int] = {}
    for cluster in clusters:
        for m in cluster.members:
            if m not in costs:
                raise MissingCost(f"no cost for cluster member {m}")
        order = sorted(cluster.members, key=lambda n: (costs[n].value, n))
        leader = order[0]
        voters = order[1:]
        second = costs[order[1]] if voters else None
        vs = tuple(Vote(sender=v, candidate=leader, second_cost=second)
                   for v in voters)
        for m in cluster.members:
            affiliation[m] = leader
            counts["hello"] += 1
            counts["begin_election"] += 1
            sent[m] = 2
        counts["vote"] += len(voters)
        counts["acknowledge"] += 1
        for v in voters:
            sent[v] += 1
        sent[leader] += 1
        votes[leader] = vs
        payments[leader] = pay.compute_payment(vs, budget_per_vote)
    return ElectionOutcome(
        leaders=frozenset(votes), affiliation=affiliation, payments=payments,
        excluded=frozenset(), votes=votes, message_counts=counts,
        messages_sent=sent)

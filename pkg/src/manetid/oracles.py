"""Independent brute-force verifiers for the election mechanism.

These deliberately avoid the protocol code paths: global-cost evaluation
works directly on an affiliation map, the minimizer enumerates every
affiliation choice, and the truthfulness check replays full elections
under every unilateral misreport on a quantized cost grid.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from . import payments as pay
from .cost_model import CostOfAnalysis
from .election import PaymentRule, run_election_round
from .errors import InvalidAffiliation, TooLarge
from .topology import Graph, NodeId, build_graph, neighbors


def scf_value(g: Graph, costs: dict[NodeId, CostOfAnalysis],
              affiliation: dict[NodeId, NodeId], budget_per_vote: float) -> float:
    """Global cost of analysis of an affiliation: sum over leaders of
    leader_cost * external_votes * budget.  Self-votes contribute nothing."""
    external: dict[NodeId, int] = {}
    for node, target in affiliation.items():
        if target != node and target not in (neighbors(g, node) | {node}):
            raise InvalidAffiliation(
                f"node {node} affiliated to non-candidate {target}")
        if target != node:
            external[target] = external.get(target, 0) + 1
    return sum(costs[k].value * n * budget_per_vote
               for k, n in external.items())


def brute_force_min_scf(g: Graph, costs: dict[NodeId, CostOfAnalysis],
                        budget_per_vote: float,
                        ) -> tuple[dict[NodeId, NodeId], float]:
    """Exhaustively find the affiliation minimizing total analysis cost.

    Every node's traffic must be analyzed by its chosen candidate
    (a neighbor or itself), at that candidate's per-packet cost, so the
    objective charges c_target * budget for every node, self-served
    included.  The returned value is the scf_value of the minimizer, i.e.
    the same external-votes-only convention the protocol outcome is
    scored with.
    """
    nodes = sorted(g.nodes)
    if len(nodes) > 10:
        raise TooLarge(f"{len(nodes)} nodes; exhaustive search capped at 10")
    if not nodes:
        return {}, 0.0
    # Candidate lists sorted by (cost, id) so the first combination visited
    # is the per-node greedy choice; strict comparison keeps it on ties.
    choices = [sorted(neighbors(g, n) | {n},
                      key=lambda c: (costs[c].value, c)) for n in nodes]
    best_aff = None
    best_obj = None
    for combo in itertools.product(*choices):
        obj = sum(costs[t].value for t in combo) * budget_per_vote
        if best_obj is None or obj < best_obj - 1e-12:
            best_obj = obj
            best_aff = dict(zip(nodes, combo))
    return best_aff, scf_value(g, costs, best_aff, budget_per_vote)


@dataclass(frozen=True)
class DeviationCase:
    """A profitable unilateral misreport (a strategy-proofness violation)."""

    links: tuple[tuple[NodeId, NodeId], ...]
    truthful_costs: tuple[float, ...]
    node: NodeId
    misreport: float
    utility_truthful: float
    utility_deviant: float


def connected_graphs(n: int):
    """All connected labeled graphs on nodes 0..n-1."""
    nodes = list(range(n))
    all_links = list(itertools.combinations(nodes, 2))
    for mask in itertools.product((False, True), repeat=len(all_links)):
        links = tuple(l for l, keep in zip(all_links, mask) if keep)
        if _connected(nodes, links):
            yield build_graph(nodes, links)


def _connected(nodes, links) -> bool:
    if len(nodes) <= 1:
        return True
    adj = {n: set() for n in nodes}
    for a, b in links:
        adj[a].add(b)
        adj[b].add(a)
    seen = {nodes[0]}
    frontier = [nodes[0]]
    while frontier:
        cur = frontier.pop()
        for m in adj[cur]:
            if m not in seen:
                seen.add(m)
                frontier.append(m)
    return len(seen) == len(nodes)


def second_price_rule(reported: dict[NodeId, CostOfAnalysis]) -> PaymentRule:
    """The shipped rule: per-voter Vickrey terms, ignoring the winner's bid."""
    return pay.compute_payment


def first_price_rule(reported: dict[NodeId, CostOfAnalysis]) -> PaymentRule:
    """Deliberately broken rule for mutation tests: pays the winner its own
    reported cost per packet, which rewards over-reporting."""
    def rule(votes, budget_per_vote: float) -> pay.Payment:
        votes = list(votes)
        if not votes:
            return pay.Payment({})
        return pay.Payment({v.sender: reported[v.candidate].value * budget_per_vote
                            for v in votes})
    return rule


def _node_utility(g: Graph, reported: dict[NodeId, CostOfAnalysis],
                  true_cost: CostOfAnalysis, node: NodeId,
                  budget_per_vote: float,
                  rule_factory) -> float:
    outcome = run_election_round(g, reported, budget_per_vote,
                                 payment_rule=rule_factory(reported))
    votes = outcome.external_votes(node)
    elected = node in outcome.leaders and votes > 0
    payment = outcome.payments.get(node, pay.Payment({}))
    return pay.utility(elected, true_cost, payment, votes, budget_per_vote)


def check_truthfulness(max_n: int = 4, grid_levels: int = 4,
                       budget_per_vote: float = 25.0, delta_c: float = 0.1,
                       rule_factory=second_price_rule,
                       ) -> list[DeviationCase]:
    """Exhaustive dominant-strategy check; an empty result is a pass.

    For every connected labeled graph up to max_n nodes, every truthful
    cost assignment on the grid {delta_c, ..., grid_levels*delta_c}, every
    node, and every unilateral misreport on the same grid, the deviant
    utility must not exceed the truthful one.
    """
    if max_n > 5:
        raise TooLarge("max_n capped at 5")
    if grid_levels > 6:
        raise TooLarge("grid_levels capped at 6")
    grid = [CostOfAnalysis(round(delta_c * lvl, 12))
            for lvl in range(1, grid_levels + 1)]
    violations: list[DeviationCase] = []
    for n in range(1, max_n + 1):
        for g in connected_graphs(n):
            nodes = sorted(g.nodes)
            for assignment in itertools.product(grid, repeat=n):
                truthful = dict(zip(nodes, assignment))
                base_utils = {
                    i: _node_utility(g, truthful, truthful[i], i,
                                     budget_per_vote, rule_factory)
                    for i in nodes}
                for i in nodes:
                    for lie in grid:
                        if lie == truthful[i]:
                            continue
                        reported = dict(truthful)
                        reported[i] = lie
                        u_dev = _node_utility(g, reported, truthful[i], i,
                                              budget_per_vote, rule_factory)
                        if u_dev > base_utils[i] + 1e-9:
                            violations.append(DeviationCase(
                                links=tuple(sorted(g.links)),
                                truthful_costs=tuple(
                                    c.value for c in assignment),
                                node=i, misreport=lie.value,
                                utility_truthful=base_utils[i],
                                utility_deviant=u_dev))
    violations.sort(key=lambda d: (len(d.truthful_costs), d.links, d.node,
                                   d.misreport))
    return violations

"""Vickrey-style payments, reputation bookkeeping, and budget allocation.

A leader is paid, per served voter, the second-least cost of that voter's
candidate set, per packet of the voter's sampling budget.  Payments are
credited as reputation, which in turn weights each voter's share of its
leader's sampling budget.  Misbehaving leaders lose reputation and drop
out of cluster services below a threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .cost_model import CostOfAnalysis
from .errors import MixedCandidates, NoVoters, UnknownNode
from .topology import NodeId


@dataclass(frozen=True)
class Payment:
    """A leader's payment, decomposed into one Vickrey term per voter."""

    per_voter_terms: dict[NodeId, float] = field(default_factory=dict)

    @property
    def total(self) -> float:
        return sum(self.per_voter_terms.values())


@dataclass(frozen=True)
class BudgetAllocation:
    """Packets/sec of leader sampling assigned to each voter."""

    shares: dict[NodeId, float] = field(default_factory=dict)

    @property
    def total(self) -> float:
        return sum(self.shares.values())


@dataclass(frozen=True)
class ReputationTable:
    entries: dict[NodeId, float] = field(default_factory=dict)
    threshold: float = 0.0

    def get(self, k: NodeId) -> float:
        return self.entries.get(k, 0.0)


def compute_payment(votes, budget_per_vote: float) -> Payment:
    """Sum one second-price term per external vote.  No votes, no payment."""
    candidates = {v.candidate for v in votes}
    if len(candidates) > 1:
        raise MixedCandidates(f"votes name multiple candidates: {sorted(candidates)}")
    terms = {v.sender: v.second_cost.value * budget_per_vote for v in votes}
    return Payment(terms)


def utility(elected: bool, true_cost: CostOfAnalysis, payment: Payment,
            votes_count: int, budget_per_vote: float) -> float:
    """Net benefit: payment received minus true cost of the serviced budget.

    An unelected node (and one elected only by its own vote) nets zero.
    """
    if not elected:
        if payment.total:
            raise ValueError("unelected node cannot hold a payment")
        return 0.0
    return payment.total - true_cost.value * votes_count * budget_per_vote


def allocate_budget(leader: NodeId, voters: list[NodeId],
                    reputations: ReputationTable,
                    budget_per_vote: float) -> BudgetAllocation:
    """Split the leader's total budget among voters by reputation weight.

    Voters below the reputation threshold get zero and their mass goes to
    the rest; all-zero reputations split equally.
    """
    if not voters:
        raise NoVoters(f"leader {leader} has no voters to serve")
    total = budget_per_vote * len(voters)
    eligible = [v for v in voters if reputations.get(v) >= reputations.threshold]
    shares = {v: 0.0 for v in voters}
    if eligible:
        weights = {v: reputations.get(v) for v in eligible}
        weight_sum = sum(weights.values())
        if weight_sum == 0:
            for v in eligible:
                shares[v] = total / len(eligible)
        else:
            for v in eligible:
                shares[v] = total * weights[v] / weight_sum
    return BudgetAllocation(shares)


def credit_payment(table: ReputationTable, leader: NodeId,
                   payment: Payment) -> ReputationTable:
    if leader not in table.entries:
        raise UnknownNode(f"node {leader} not in reputation table")
    entries = dict(table.entries)
    entries[leader] += payment.total
    return replace(table, entries=entries)


def apply_punishment(table: ReputationTable, leader: NodeId,
                     promised: float, delivered: float,
                     penalty_rate: float) -> ReputationTable:
    """Dock reputation linearly in the sampling shortfall, floored at zero."""
    if leader not in table.entries:
        raise UnknownNode(f"node {leader} not in reputation table")
    if delivered > promised + 1e-12:
        raise ValueError("delivered cannot exceed promised")
    entries = dict(table.entries)
    entries[leader] = max(0.0, entries[leader] - penalty_rate * (promised - delivered))
    return replace(table, entries=entries)


def is_excluded(table: ReputationTable, k: NodeId) -> bool:
    """Excluded from cluster services when strictly below the threshold."""
    if k not in table.entries:
        raise UnknownNode(f"node {k} not in reputation table")
    return table.entries[k] < table.threshold

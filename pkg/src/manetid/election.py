"""Commit-reveal leader election: per-node FSM, timers, and round driver.

Each round runs four message waves.  Hello commits to a cost, Begin-Election
reveals it, Vote names the cheapest verified candidate (carrying the
second-least cost for the payment), and Acknowledge broadcasts the leader's
payment plus the votes so voters can audit it.

Timers T1/T2/T3 are logical barriers, not wall-clock values: the round
driver advances every node past a barrier once all deliverable messages of
the previous wave are in.  This keeps rounds fully deterministic.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from . import payments as pay
from .cost_model import CostOfAnalysis
from .errors import EmptyCandidates, ForeignVote
from .messages import (
    Acknowledge,
    BeginElection,
    ElectionMessage,
    Hello,
    Vote,
    commitment,
    make_hello,
    verify_commit,
)
from .topology import Graph, NodeId, neighbors

PaymentRule = Callable[[Iterable[Vote], float], pay.Payment]
TraceFn = Callable[[str, NodeId, str], None]


class Phase(enum.Enum):
    IDLE = "idle"
    AWAIT_HELLO = "await_hello"       # T1 running
    AWAIT_COSTS = "await_costs"       # T2 running
    SELF_CANDIDATE = "self_candidate"  # T3 running
    ORDINARY = "ordinary"
    LEADER = "leader"


# FSM events
@dataclass(frozen=True)
class RoundStart:
    pass


@dataclass(frozen=True)
class TimerExpiry:
    timer: str  # "T1" | "T2" | "T3"


@dataclass(frozen=True)
class Arrival:
    message: ElectionMessage


@dataclass(frozen=True)
class SelfCandidacy:
    """choose_vote result when the node itself is the cheapest candidate."""

    second_cost: Optional[CostOfAnalysis] = None
    alone: bool = False


@dataclass
class NodeRuntimeState:
    node: NodeId
    neighbors: frozenset[NodeId]
    cost: CostOfAnalysis                  # cost revealed in Begin-Election
    nonce: str
    budget_per_vote: float
    commit_cost: Optional[CostOfAnalysis] = None  # differs only for cheaters
    phase: Phase = Phase.IDLE
    commitments: dict[NodeId, str] = field(default_factory=dict)
    revealed: dict[NodeId, BeginElection] = field(default_factory=dict)
    excluded_local: set[NodeId] = field(default_factory=set)
    votes_received: list[Vote] = field(default_factory=list)
    voted_for: Optional[NodeId] = None
    leadernode: Optional[NodeId] = None
    leader: bool = False
    service_table: list[NodeId] = field(default_factory=list)
    reputation_table: dict[NodeId, float] = field(default_factory=dict)
    payment_mismatch: set[NodeId] = field(default_factory=set)
    violations: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.commit_cost is None:
            self.commit_cost = self.cost


def choose_vote(k: NodeId,
                candidates: dict[NodeId, CostOfAnalysis]) -> Vote | SelfCandidacy:
    """Pick the (cost, id)-minimal candidate among self and verified neighbors.

    Someone else minimal: emit a Vote carrying the second-least cost of the
    remaining candidates.  Self minimal: become a self-candidate (a self
    vote carries no payment).  Alone: run own IDS.
    """
    if not candidates or k not in candidates:
        raise EmptyCandidates(f"node {k} missing from its own candidate set")
    order = sorted(candidates, key=lambda n: (candidates[n].value, n))
    best = order[0]
    if best != k:
        return Vote(sender=k, candidate=best, second_cost=candidates[order[1]])
    if len(order) == 1:
        return SelfCandidacy(second_cost=None, alone=True)
    return SelfCandidacy(second_cost=candidates[order[1]])


def tally_and_acknowledge(i: NodeId, votes: list[Vote], budget_per_vote: float,
                          payment_rule: PaymentRule = pay.compute_payment,
                          ) -> tuple[Acknowledge, pay.Payment]:
    """Compute the leader's payment from its votes and build the Acknowledge."""
    for v in votes:
        if v.candidate != i:
            raise ForeignVote(f"vote from {v.sender} names {v.candidate}, not {i}")
    payment = payment_rule(votes, budget_per_vote)
    ack = Acknowledge(leader=i, payment_total=payment.total, votes=tuple(votes))
    return ack, payment


def step_node_fsm(state: NodeRuntimeState, event,
                  payment_rule: PaymentRule = pay.compute_payment,
                  authentic: Callable[[ElectionMessage], bool] = None,
                  ) -> tuple[NodeRuntimeState, list[ElectionMessage]]:
    """Advance one node's election FSM; returns the messages it emits.

    Out-of-phase messages are logged as violations and dropped; they never
    corrupt the state.
    """
    if authentic is None:
        authentic = lambda _msg: True
    out: list[ElectionMessage] = []

    if isinstance(event, RoundStart):
        if state.phase is not Phase.IDLE:
            state.violations.append("round start while not idle")
            return state, out
        hello = Hello(sender=state.node,
                      commit=commitment(state.commit_cost, state.nonce))
        state.phase = Phase.AWAIT_HELLO
        out.append(hello)
        return state, out

    if isinstance(event, TimerExpiry):
        return _on_timer(state, event.timer, payment_rule, out)

    if isinstance(event, Arrival):
        msg = event.message
        if not authentic(msg):
            state.violations.append(f"inauthentic {type(msg).__name__} dropped")
            return state, out
        return _on_message(state, msg, payment_rule, out)

    raise TypeError(f"unknown event {event!r}")


def _on_timer(state, timer, payment_rule, out):
    if timer == "T1" and state.phase is Phase.AWAIT_HELLO:
        # Neighbors whose Hello never arrived are out of this round.
        state.excluded_local |= state.neighbors - set(state.commitments)
        if not state.neighbors:
            # Alone in the network: launch own IDS.
            state.phase = Phase.SELF_CANDIDATE
            state.leadernode = state.node
            return state, out
        out.append(BeginElection(sender=state.node, cost=state.cost,
                                 nonce=state.nonce))
        state.phase = Phase.AWAIT_COSTS
        return state, out

    if timer == "T2" and state.phase is Phase.AWAIT_COSTS:
        for sender, reveal in sorted(state.revealed.items()):
            hello = Hello(sender=sender, commit=state.commitments[sender])
            if not verify_commit(hello, reveal):
                state.excluded_local.add(sender)
        candidates = {state.node: state.cost}
        for sender, reveal in state.revealed.items():
            if sender not in state.excluded_local:
                candidates[sender] = reveal.cost
        decision = choose_vote(state.node, candidates)
        if isinstance(decision, Vote):
            state.voted_for = decision.candidate
            state.leadernode = decision.candidate
            state.phase = Phase.ORDINARY
            out.append(decision)
        else:
            state.leadernode = state.node
            state.phase = Phase.SELF_CANDIDATE
        return state, out

    if timer == "T3" and (state.phase is Phase.SELF_CANDIDATE
                          or (state.phase in (Phase.ORDINARY, Phase.LEADER)
                              and state.votes_received)):
        ack, payment = tally_and_acknowledge(
            state.node, state.votes_received, state.budget_per_vote,
            payment_rule)
        state.leader = True
        state.service_table = sorted(v.sender for v in state.votes_received)
        state.reputation_table[state.node] = (
            state.reputation_table.get(state.node, 0.0) + payment.total)
        state.phase = Phase.LEADER
        out.append(ack)
        return state, out

    state.violations.append(f"timer {timer} in phase {state.phase.value}")
    return state, out


def _on_message(state, msg, payment_rule, out):
    if isinstance(msg, Hello):
        if state.phase is Phase.AWAIT_HELLO and msg.sender in state.neighbors:
            state.commitments[msg.sender] = msg.commit
        else:
            state.violations.append(f"stray hello from {msg.sender}")
        return state, out

    if isinstance(msg, BeginElection):
        if state.phase is Phase.AWAIT_COSTS and msg.sender in state.commitments:
            state.revealed[msg.sender] = msg
        else:
            state.violations.append(f"stray begin-election from {msg.sender}")
        return state, out

    if isinstance(msg, Vote):
        acceptable = state.phase in (Phase.ORDINARY, Phase.SELF_CANDIDATE,
                                     Phase.AWAIT_COSTS, Phase.LEADER)
        if (acceptable and msg.candidate == state.node
                and msg.sender not in state.excluded_local):
            state.votes_received.append(msg)
        else:
            state.violations.append(f"stray vote from {msg.sender}")
        return state, out

    if isinstance(msg, Acknowledge):
        if state.phase is Phase.ORDINARY and msg.leader == state.voted_for:
            # Audit the leader's payment against the broadcast votes.
            expected = payment_rule(list(msg.votes), state.budget_per_vote).total
            if abs(expected - msg.payment_total) > 1e-9:
                state.payment_mismatch.add(msg.leader)
            else:
                state.reputation_table[msg.leader] = (
                    state.reputation_table.get(msg.leader, 0.0)
                    + msg.payment_total)
            state.leadernode = msg.leader
        # Acknowledges from non-voted leaders are informational only.
        return state, out

    state.violations.append(f"unknown message {msg!r}")
    return state, out


@dataclass(frozen=True)
class ElectionOutcome:
    """Result of one election round (network-wide or merged per cluster)."""

    leaders: frozenset[NodeId]
    affiliation: dict[NodeId, NodeId]
    payments: dict[NodeId, pay.Payment]
    excluded: frozenset[NodeId]
    votes: dict[NodeId, tuple[Vote, ...]]
    message_counts: dict[str, int]
    messages_sent: dict[NodeId, int]
    payment_mismatches: frozenset[NodeId] = frozenset()

    def payment_total(self, k: NodeId) -> float:
        p = self.payments.get(k)
        return p.total if p else 0.0

    def external_votes(self, k: NodeId) -> int:
        return len(self.votes.get(k, ()))


def run_election_round(g: Graph, costs: dict[NodeId, CostOfAnalysis],
                       budget_per_vote: float,
                       cheaters: frozenset[NodeId] = frozenset(),
                       silent: frozenset[NodeId] = frozenset(),
                       payment_rule: PaymentRule = pay.compute_payment,
                       trace: Optional[TraceFn] = None,
                       ) -> ElectionOutcome:
    """Drive every node's FSM through one full election round.

    Cheaters commit to one cost and reveal another (their reveal fails
    verification everywhere).  Silent nodes never transmit.  Both are
    excluded from voting and candidacy for this round only.

    Pure function of its arguments: repeated runs give identical outcomes.
    """
    cheaters = frozenset(cheaters) & g.nodes
    silent = frozenset(silent) & g.nodes
    participants = sorted(g.nodes - silent)
    states: dict[NodeId, NodeRuntimeState] = {}
    counts = {"hello": 0, "begin_election": 0, "vote": 0, "acknowledge": 0}
    sent: dict[NodeId, int] = {k: 0 for k in sorted(g.nodes)}
    kind_names = {Hello: "hello", BeginElection: "begin_election",
                  Vote: "vote", Acknowledge: "acknowledge"}

    for k in participants:
        commit_cost = (CostOfAnalysis(costs[k].value + 1.0)
                       if k in cheaters else None)
        states[k] = NodeRuntimeState(
            node=k, neighbors=neighbors(g, k) - silent, cost=costs[k],
            nonce=f"nonce-{k}", budget_per_vote=budget_per_vote,
            commit_cost=commit_cost)

    def emit(sender: NodeId, msgs: list[ElectionMessage]) -> list:
        wave = []
        for m in msgs:
            kind = kind_names[type(m)]
            counts[kind] += 1
            sent[sender] += 1
            if trace is not None:
                trace("msg_" + kind, sender, _summary(m))
            wave.append((sender, m))
        return wave

    def deliver(wave) -> None:
        for sender, m in wave:
            if isinstance(m, Vote):
                targets = [m.candidate] if m.candidate in states else []
            else:
                targets = [n for n in sorted(neighbors(g, sender))
                           if n in states]
            for n in targets:
                step_node_fsm(states[n], Arrival(m), payment_rule)

    for barrier in (RoundStart(), TimerExpiry("T1"), TimerExpiry("T2")):
        wave = []
        for k in participants:
            _, msgs = step_node_fsm(states[k], barrier, payment_rule)
            wave += emit(k, msgs)
        deliver(wave)

    wave = []
    for k in participants:
        st = states[k]
        if st.phase is Phase.SELF_CANDIDATE or st.votes_received:
            _, msgs = step_node_fsm(st, TimerExpiry("T3"), payment_rule)
            wave += emit(k, msgs)
    deliver(wave)

    excluded = cheaters | silent
    affiliation: dict[NodeId, NodeId] = {}
    votes: dict[NodeId, tuple[Vote, ...]] = {}
    payments: dict[NodeId, pay.Payment] = {}
    mismatches: set[NodeId] = set()
    for k in participants:
        st = states[k]
        mismatches |= st.payment_mismatch
        if k in excluded:
            continue
        affiliation[k] = st.leadernode if st.leadernode is not None else k
    leaders = frozenset(affiliation.values())
    for k in sorted(leaders):
        st = states[k]
        vs = tuple(st.votes_received)
        votes[k] = vs
        payments[k] = payment_rule(list(vs), budget_per_vote)
    if trace is not None:
        for k in participants:
            trace("phase", k, states[k].phase.value)
    return ElectionOutcome(
        leaders=leaders, affiliation=affiliation, payments=payments,
        excluded=excluded, votes=votes, message_counts=counts,
        messages_sent=sent, payment_mismatches=frozenset(mismatches))


def _summary(m: ElectionMessage) -> str:
    if isinstance(m, Hello):
        return f"commit={m.commit[:8]}"
    if isinstance(m, BeginElection):
        return f"cost={m.cost.value!r}"
    if isinstance(m, Vote):
        return f"candidate={m.candidate} second={m.second_cost.value!r}"
    return f"leader={m.leader} payment={m.payment_total!r} votes={len(m.votes)}"

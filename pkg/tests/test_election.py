import pytest
from hypothesis import given, settings, strategies as st

from manetid.cost_model import CostOfAnalysis as C
from manetid.election import (
    Arrival,
    NodeRuntimeState,
    Phase,
    RoundStart,
    SelfCandidacy,
    TimerExpiry,
    choose_vote,
    run_election_round,
    step_node_fsm,
    tally_and_acknowledge,
)
from manetid.errors import EmptyCandidates, ForeignVote, SenderMismatch
from manetid.messages import (
    Acknowledge,
    BeginElection,
    Hello,
    Vote,
    commitment,
    make_hello,
    verify_commit,
)
from manetid.topology import build_graph, neighbors


class TestCommitReveal:
    def test_hello_is_deterministic(self):
        a = make_hello(1, C(0.3), "n1")
        b = make_hello(1, C(0.3), "n1")
        assert a.commit == b.commit

    def test_different_nonces_differ(self):
        assert (make_hello(1, C(0.3), "n1").commit
                != make_hello(1, C(0.3), "n2").commit)

    def test_verify_matching(self):
        hello = make_hello(1, C(0.3), "n1")
        assert verify_commit(hello, BeginElection(1, C(0.3), "n1"))

    def test_verify_tampered_cost(self):
        hello = make_hello(1, C(0.3), "n1")
        assert not verify_commit(hello, BeginElection(1, C(0.4), "n1"))

    def test_sender_mismatch(self):
        hello = make_hello(1, C(0.3), "n1")
        with pytest.raises(SenderMismatch):
            verify_commit(hello, BeginElection(2, C(0.3), "n1"))


class TestChooseVote:
    def test_votes_for_cheapest_neighbor(self):
        v = choose_vote(2, {1: C(0.3), 2: C(0.4), 3: C(0.5)})
        assert isinstance(v, Vote)
        assert v.candidate == 1 and v.second_cost == C(0.4)

    def test_tie_broken_by_lowest_id(self):
        v = choose_vote(2, {1: C(0.2), 2: C(0.2), 3: C(0.2)})
        assert v.candidate == 1 and v.second_cost == C(0.2)

    def test_isolated_node_self_candidate(self):
        d = choose_vote(5, {5: C(0.2)})
        assert isinstance(d, SelfCandidacy) and d.alone
        assert d.second_cost is None

    def test_self_cheapest(self):
        d = choose_vote(1, {1: C(0.1), 2: C(0.3)})
        assert isinstance(d, SelfCandidacy) and not d.alone
        assert d.second_cost == C(0.3)

    def test_empty_candidates(self):
        with pytest.raises(EmptyCandidates):
            choose_vote(1, {})


class TestTally:
    def test_no_votes_no_payment(self):
        ack, payment = tally_and_acknowledge(1, [], 25.0)
        assert ack.payment_total == 0 and payment.total == 0

    def test_single_vote(self):
        votes = [Vote(sender=2, candidate=1, second_cost=C(0.4))]
        ack, payment = tally_and_acknowledge(1, votes, 25.0)
        assert payment.total == pytest.approx(10.0)
        assert ack.votes == tuple(votes)

    def test_foreign_vote(self):
        with pytest.raises(ForeignVote):
            tally_and_acknowledge(1, [Vote(2, 3, C(0.4))], 25.0)


def fresh_state(node=1, nbrs=(2,), cost=0.3):
    return NodeRuntimeState(node=node, neighbors=frozenset(nbrs),
                            cost=C(cost), nonce=f"n{node}",
                            budget_per_vote=25.0)


class TestFsm:
    def test_round_start_broadcasts_hello(self):
        st_, msgs = step_node_fsm(fresh_state(), RoundStart())
        assert st_.phase is Phase.AWAIT_HELLO
        assert len(msgs) == 1 and isinstance(msgs[0], Hello)

    def test_t2_self_least_becomes_candidate(self):
        s = fresh_state(node=1, nbrs=(2,), cost=0.2)
        step_node_fsm(s, RoundStart())
        hello2 = Hello(sender=2, commit=commitment(C(0.5), "n2"))
        step_node_fsm(s, Arrival(hello2))
        step_node_fsm(s, TimerExpiry("T1"))
        step_node_fsm(s, Arrival(BeginElection(2, C(0.5), "n2")))
        s, msgs = step_node_fsm(s, TimerExpiry("T2"))
        assert s.phase is Phase.SELF_CANDIDATE and not msgs

    def test_stray_vote_logged_and_dropped(self):
        s = fresh_state()
        s.phase = Phase.ORDINARY
        before = len(s.votes_received)
        s, msgs = step_node_fsm(s, Arrival(Vote(sender=9, candidate=7,
                                                second_cost=C(0.2))))
        assert len(s.votes_received) == before and not msgs
        assert s.violations

    def test_mismatched_reveal_excluded_at_t2(self):
        s = fresh_state(node=1, nbrs=(2,), cost=0.5)
        step_node_fsm(s, RoundStart())
        step_node_fsm(s, Arrival(Hello(2, commitment(C(0.9), "n2"))))
        step_node_fsm(s, TimerExpiry("T1"))
        step_node_fsm(s, Arrival(BeginElection(2, C(0.1), "n2")))
        s, _ = step_node_fsm(s, TimerExpiry("T2"))
        # cheap neighbor's reveal fails verification -> self-candidate
        assert 2 in s.excluded_local
        assert s.phase is Phase.SELF_CANDIDATE

    def test_acknowledge_updates_reputation(self):
        s = fresh_state(node=2, nbrs=(1,), cost=0.4)
        s.phase = Phase.ORDINARY
        s.voted_for = 1
        vote = Vote(sender=2, candidate=1, second_cost=C(0.4))
        s, _ = step_node_fsm(
            s, Arrival(Acknowledge(leader=1, payment_total=10.0,
                                   votes=(vote,))))
        assert s.reputation_table[1] == pytest.approx(10.0)
        assert s.leadernode == 1

    def test_acknowledge_with_inflated_payment_flagged(self):
        s = fresh_state(node=2, nbrs=(1,), cost=0.4)
        s.phase = Phase.ORDINARY
        s.voted_for = 1
        vote = Vote(sender=2, candidate=1, second_cost=C(0.4))
        s, _ = step_node_fsm(
            s, Arrival(Acknowledge(leader=1, payment_total=99.0,
                                   votes=(vote,))))
        assert 1 in s.payment_mismatch
        assert 1 not in s.reputation_table


def path_graph():
    # a=0 (0.2) -- b=1 (0.3) -- c=2 (0.1)
    g = build_graph([0, 1, 2], [(0, 1), (1, 2)])
    costs = {0: C(0.2), 1: C(0.3), 2: C(0.1)}
    return g, costs


class TestRunElectionRound:
    def test_path_fixture(self):
        g, costs = path_graph()
        out = run_election_round(g, costs, 25.0)
        assert out.leaders == {0, 2}
        assert out.affiliation == {0: 0, 1: 2, 2: 2}
        assert out.payment_total(2) == pytest.approx(0.2 * 25)
        assert out.payment_total(0) == 0

    def test_single_node(self):
        g = build_graph([7], [])
        out = run_election_round(g, {7: C(0.5)}, 25.0)
        assert out.leaders == {7}
        assert out.affiliation == {7: 7}
        assert out.payment_total(7) == 0

    def test_cheater_excluded(self):
        g, costs = path_graph()
        out = run_election_round(g, costs, 25.0, cheaters=frozenset({1}))
        assert out.excluded == {1}
        assert out.affiliation == {0: 0, 2: 2}
        assert out.payment_total(1) == 0
        assert 1 not in out.votes

    def test_silent_node_excluded(self):
        g, costs = path_graph()
        out = run_election_round(g, costs, 25.0, silent=frozenset({2}))
        assert out.excluded == {2}
        # b falls back to a, the remaining cheapest candidate
        assert out.affiliation == {0: 0, 1: 0}

    def test_empty_graph(self):
        g = build_graph([], [])
        out = run_election_round(g, {}, 25.0)
        assert not out.leaders and not out.affiliation

    def test_determinism(self):
        g, costs = path_graph()
        a = run_election_round(g, costs, 25.0)
        b = run_election_round(g, costs, 25.0)
        assert a == b


@st.composite
def graphs_with_costs(draw):
    n = draw(st.integers(min_value=1, max_value=7))
    nodes = list(range(n))
    pairs = [(a, b) for a in nodes for b in nodes if a < b]
    links = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    levels = draw(st.lists(st.integers(min_value=1, max_value=6),
                           min_size=n, max_size=n))
    costs = {i: C(round(0.1 * lvl, 10)) for i, lvl in zip(nodes, levels)}
    return build_graph(nodes, links), costs


@given(graphs_with_costs())
@settings(max_examples=60, deadline=None)
def test_affiliation_is_cheapest_candidate(gc):
    g, costs = gc
    out = run_election_round(g, costs, 25.0)
    for k in g.nodes:
        cands = neighbors(g, k) | {k}
        best = min(cands, key=lambda c: (costs[c].value, c))
        assert out.affiliation[k] == best


@given(graphs_with_costs())
@settings(max_examples=60, deadline=None)
def test_second_cost_correctness(gc):
    g, costs = gc
    out = run_election_round(g, costs, 25.0)
    for leader, votes in out.votes.items():
        for v in votes:
            cands = (neighbors(g, v.sender) | {v.sender}) - {leader}
            expected = min(cands, key=lambda c: (costs[c].value, c))
            assert v.second_cost == costs[expected]
            assert v.second_cost.value >= costs[leader].value


@given(graphs_with_costs())
@settings(max_examples=60, deadline=None)
def test_message_budget(gc):
    g, costs = gc
    out = run_election_round(g, costs, 25.0)
    n = len(g.nodes)
    assert out.message_counts["hello"] == n
    assert out.message_counts["begin_election"] <= n
    assert out.message_counts["vote"] <= n
    assert out.message_counts["acknowledge"] <= n


@given(graphs_with_costs())
@settings(max_examples=40, deadline=None)
def test_cheater_never_paid_or_voted(gc):
    g, costs = gc
    cheater = min(g.nodes)
    out = run_election_round(g, costs, 25.0, cheaters=frozenset({cheater}))
    assert cheater in out.excluded
    assert out.payment_total(cheater) == 0
    for votes in out.votes.values():
        for v in votes:
            assert v.sender != cheater and v.candidate != cheater

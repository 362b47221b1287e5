import pytest
from hypothesis import given, settings, strategies as st

from manetid.cost_model import CostOfAnalysis as C
from manetid.election import run_election_round
from manetid.errors import MixedCandidates, NoVoters, UnknownNode
from manetid.messages import Vote
from manetid.payments import (
    Payment,
    ReputationTable,
    allocate_budget,
    apply_punishment,
    compute_payment,
    credit_payment,
    is_excluded,
    utility,
)
from manetid.topology import build_graph


class TestComputePayment:
    def test_two_votes(self):
        votes = [Vote(1, 0, C(0.4)), Vote(2, 0, C(0.5))]
        assert compute_payment(votes, 25.0).total == pytest.approx(22.5)

    def test_no_votes(self):
        assert compute_payment([], 25.0).total == 0

    def test_mixed_candidates(self):
        with pytest.raises(MixedCandidates):
            compute_payment([Vote(1, 0, C(0.4)), Vote(2, 3, C(0.5))], 25.0)

    def test_total_is_sum_of_terms(self):
        p = compute_payment([Vote(1, 0, C(0.4)), Vote(2, 0, C(0.5))], 10.0)
        assert p.total == pytest.approx(sum(p.per_voter_terms.values()))


class TestUtility:
    def test_not_elected_zero(self):
        assert utility(False, C(0.2), Payment({}), 0, 25.0) == 0

    def test_elected_with_margin(self):
        p = compute_payment([Vote(1, 0, C(0.4))], 25.0)
        assert utility(True, C(0.2), p, 1, 25.0) == pytest.approx(5.0)

    def test_self_vote_only(self):
        assert utility(True, C(0.2), Payment({}), 0, 25.0) == 0


class TestAllocateBudget:
    def test_total_is_budget_times_votes(self):
        t = ReputationTable(entries={1: 0, 2: 0, 3: 0})
        alloc = allocate_budget(0, [1, 2, 3], t, 25.0)
        assert alloc.total == pytest.approx(75.0)

    def test_equal_reputation_equal_shares(self):
        t = ReputationTable(entries={1: 5.0, 2: 5.0, 3: 5.0})
        alloc = allocate_budget(0, [1, 2, 3], t, 25.0)
        assert all(s == pytest.approx(25.0) for s in alloc.shares.values())

    def test_reputation_weighted(self):
        t = ReputationTable(entries={1: 30.0, 2: 10.0})
        alloc = allocate_budget(0, [1, 2], t, 25.0)
        assert alloc.shares[1] == pytest.approx(37.5)
        assert alloc.shares[2] == pytest.approx(12.5)

    def test_below_threshold_gets_zero(self):
        t = ReputationTable(entries={1: 10.0, 2: 1.0}, threshold=5.0)
        alloc = allocate_budget(0, [1, 2], t, 25.0)
        assert alloc.shares[2] == 0.0
        assert alloc.shares[1] == pytest.approx(50.0)

    def test_all_below_threshold(self):
        t = ReputationTable(entries={1: 1.0, 2: 1.0}, threshold=5.0)
        alloc = allocate_budget(0, [1, 2], t, 25.0)
        assert alloc.total == 0.0

    def test_no_voters(self):
        with pytest.raises(NoVoters):
            allocate_budget(0, [], ReputationTable(), 25.0)


class TestReputation:
    def test_credit(self):
        t = ReputationTable(entries={1: 5.0})
        t = credit_payment(t, 1, Payment({2: 10.0}))
        assert t.entries[1] == pytest.approx(15.0)

    def test_credit_zero_is_identity(self):
        t = ReputationTable(entries={1: 5.0})
        assert credit_payment(t, 1, Payment({})).entries == t.entries

    def test_credit_additive(self):
        t = ReputationTable(entries={1: 0.0})
        t = credit_payment(t, 1, Payment({2: 10.0}))
        t = credit_payment(t, 1, Payment({3: 12.5}))
        assert t.entries[1] == pytest.approx(22.5)

    def test_credit_unknown(self):
        with pytest.raises(UnknownNode):
            credit_payment(ReputationTable(), 9, Payment({}))

    def test_punishment_zero_shortfall(self):
        t = ReputationTable(entries={1: 10.0})
        assert apply_punishment(t, 1, 50.0, 50.0, 1.0).entries[1] == 10.0

    def test_punishment_floors_at_zero(self):
        t = ReputationTable(entries={1: 10.0})
        assert apply_punishment(t, 1, 20.0, 0.0, 1.0).entries[1] == 0.0

    def test_punishment_linear(self):
        t = ReputationTable(entries={1: 10.0})
        assert apply_punishment(t, 1, 4.0, 0.0, 0.5).entries[1] == pytest.approx(8.0)

    def test_exclusion_boundary_strict(self):
        t = ReputationTable(entries={1: 0.0}, threshold=0.0)
        assert not is_excluded(t, 1)

    def test_exclusion_below(self):
        t = ReputationTable(entries={1: 1.0}, threshold=2.0)
        assert is_excluded(t, 1)

    def test_punishment_flips_exclusion(self):
        t = ReputationTable(entries={1: 3.0}, threshold=2.0)
        assert not is_excluded(t, 1)
        t = apply_punishment(t, 1, 4.0, 2.0, 1.0)
        assert is_excluded(t, 1)


@st.composite
def graphs_with_costs(draw):
    n = draw(st.integers(min_value=1, max_value=8))
    nodes = list(range(n))
    pairs = [(a, b) for a in nodes for b in nodes if a < b]
    links = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    levels = draw(st.lists(st.integers(min_value=1, max_value=6),
                           min_size=n, max_size=n))
    costs = {i: C(round(0.1 * lvl, 10)) for i, lvl in zip(nodes, levels)}
    return build_graph(nodes, links), costs


@given(graphs_with_costs())
@settings(max_examples=80, deadline=None)
def test_individual_rationality(gc):
    g, costs = gc
    out = run_election_round(g, costs, 25.0)
    for leader in out.leaders:
        votes = out.external_votes(leader)
        u = utility(votes > 0, costs[leader], out.payments[leader], votes, 25.0)
        assert u >= -1e-9


@given(graphs_with_costs(), st.floats(min_value=0.1, max_value=10.0))
@settings(max_examples=40, deadline=None)
def test_scaling_costs_keeps_leaders(gc, lam):
    g, costs = gc
    out = run_election_round(g, costs, 25.0)
    scaled = {k: C(c.value * lam) for k, c in costs.items()}
    out2 = run_election_round(g, scaled, 25.0)
    assert out.leaders == out2.leaders
    assert out.affiliation == out2.affiliation
    for k in out.leaders:
        assert out2.payment_total(k) == pytest.approx(lam * out.payment_total(k))


@given(graphs_with_costs(),
       st.lists(st.floats(min_value=0.0, max_value=50.0), min_size=8,
                max_size=8))
@settings(max_examples=40, deadline=None)
def test_budget_conservation(gc, reps):
    g, costs = gc
    out = run_election_round(g, costs, 25.0)
    table = ReputationTable(entries={k: reps[k] for k in range(8)})
    for leader in out.leaders:
        voters = [v.sender for v in out.votes[leader]]
        if not voters:
            continue
        alloc = allocate_budget(leader, voters, table, 25.0)
        assert alloc.total == pytest.approx(25.0 * len(voters), abs=1e-9)

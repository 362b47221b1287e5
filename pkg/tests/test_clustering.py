import pytest
from hypothesis import given, settings, strategies as st

from manetid.clustering import elect_per_cluster, form_clusters
from manetid.cost_model import CostOfAnalysis as C
from manetid.errors import MissingCost
from manetid.topology import build_graph, neighbors


def path(*ids):
    return build_graph(ids, list(zip(ids, ids[1:])))


class TestFormClusters:
    def test_star_single_cluster(self):
        g = build_graph([1, 2, 3, 4], [(1, 2), (1, 3), (1, 4)])
        clusters = form_clusters(g)
        assert len(clusters) == 1
        assert clusters[0].head_seed == 1
        assert clusters[0].members == {1, 2, 3, 4}

    def test_path_five(self):
        clusters = form_clusters(path(1, 2, 3, 4, 5))
        assert [c.members for c in clusters] == [{1, 2, 3}, {4, 5}]

    def test_singleton(self):
        clusters = form_clusters(build_graph([9], []))
        assert len(clusters) == 1 and clusters[0].members == {9}

    def test_empty(self):
        assert form_clusters(build_graph([], [])) == []


class TestElectPerCluster:
    def test_cheapest_leads_and_payment(self):
        g = build_graph([1, 2, 3], [(1, 2), (2, 3), (1, 3)])
        clusters = form_clusters(g)
        costs = {1: C(0.3), 2: C(0.1), 3: C(0.2)}
        out = elect_per_cluster(clusters, costs, 10.0)
        assert out.leaders == {2}
        assert out.payment_total(2) == pytest.approx(4.0)

    def test_singleton_leader_no_payment(self):
        out = elect_per_cluster(form_clusters(build_graph([4], [])),
                                {4: C(0.5)}, 10.0)
        assert out.leaders == {4} and out.payment_total(4) == 0

    def test_tie_lowest_id(self):
        g = build_graph([5, 7], [(5, 7)])
        out = elect_per_cluster(form_clusters(g), {5: C(0.2), 7: C(0.2)}, 10.0)
        assert out.leaders == {5}

    def test_missing_cost(self):
        g = build_graph([1, 2], [(1, 2)])
        with pytest.raises(MissingCost):
            elect_per_cluster(form_clusters(g), {1: C(0.2)}, 10.0)


@st.composite
def graphs(draw):
    n = draw(st.integers(min_value=1, max_value=10))
    nodes = list(range(n))
    pairs = [(a, b) for a in nodes for b in nodes if a < b]
    links = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return build_graph(nodes, links)


@given(graphs())
@settings(max_examples=80, deadline=None)
def test_clusters_partition_nodes(g):
    clusters = form_clusters(g)
    seen = set()
    for c in clusters:
        assert not (c.members & seen)
        seen |= c.members
    assert seen == g.nodes


@given(graphs())
@settings(max_examples=80, deadline=None)
def test_one_hop_property(g):
    for c in form_clusters(g):
        for m in c.members:
            assert m == c.head_seed or m in neighbors(g, c.head_seed)


@given(graphs())
@settings(max_examples=60, deadline=None)
def test_one_leader_per_cluster(g):
    clusters = form_clusters(g)
    costs = {k: C(0.1 * (1 + k % 3)) for k in g.nodes}
    out = elect_per_cluster(clusters, costs, 25.0)
    assert len(out.leaders) == len(clusters)
    for c in clusters:
        leaders_in = out.leaders & c.members
        assert len(leaders_in) == 1
        leader = next(iter(leaders_in))
        for m in c.members:
            assert out.affiliation[m] == leader

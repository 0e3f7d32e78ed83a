from __future__ import annotations

import json
from pathlib import Path

import pytest

from keyfab.fabric import (
    DanglingLink,
    DuplicateNode,
    LinkSpec,
    NodeSpec,
    NotAPublisher,
    TimeInPast,
    TopologySpec,
    UnknownNode,
    create_network,
    load_topology,
)
from keyfab.fabric.network import MESH_DECL_BASE, ROUTED_DECL_BASE, SAMPLE_HEADER

from . import oracles

FIXTURES = Path(__file__).parent / "fixtures"


def two_peers(mode="routed", **link_kw) -> TopologySpec:
    return TopologySpec(
        nodes=(NodeSpec("n1"), NodeSpec("n2")),
        links=(LinkSpec("n1", "n2", **link_kw),),
        mode=mode,
    )


def star(n_peers: int, mode: str, **link_kw) -> TopologySpec:
    nodes = [NodeSpec("hub", "router")]
    links = []
    for i in range(n_peers):
        name = f"p{i:02d}"
        nodes.append(NodeSpec(name))
        links.append(LinkSpec(name, "hub", **link_kw))
    return TopologySpec(nodes=tuple(nodes), links=tuple(links), mode=mode)


def full_clique(n_peers: int, mode: str) -> TopologySpec:
    nodes = tuple(NodeSpec(f"p{i}") for i in range(n_peers))
    links = tuple(
        LinkSpec(f"p{i}", f"p{j}")
        for i in range(n_peers)
        for j in range(i + 1, n_peers)
    )
    return TopologySpec(nodes=nodes, links=links, mode=mode)


class TestCreateNetwork:
    def test_two_peers_one_up_link(self):
        net = create_network(two_peers())
        assert len(net.links) == 1
        assert all(link.up for link in net.links.values())
        assert net.now == 0.0

    def test_dangling_link(self):
        spec = TopologySpec(
            nodes=(NodeSpec("a"),), links=(LinkSpec("a", "ghost"),)
        )
        with pytest.raises(DanglingLink):
            create_network(spec)

    def test_duplicate_node(self):
        spec = TopologySpec(nodes=(NodeSpec("a"), NodeSpec("a")), links=())
        with pytest.raises(DuplicateNode):
            create_network(spec)

    def test_disconnected_routed_graph_is_warning(self):
        spec = TopologySpec(
            nodes=(NodeSpec("a"), NodeSpec("b")), links=(), mode="routed"
        )
        net = create_network(spec)
        assert any("DisconnectedRoutedGraph" in w for w in net.warnings)

    def test_base_fixture_has_two_disjoint_paths(self):
        spec = load_topology(FIXTURES / "bases_topology.json")
        net = create_network(spec)
        assert not net.warnings
        adjacency: dict[str, set[str]] = {n.name: set() for n in spec.nodes}
        for link in spec.links:
            adjacency[link.a].add(link.b)
            adjacency[link.b].add(link.a)
        routers = [n.name for n in spec.nodes if n.role == "router"]
        assert len(routers) == 3
        for i, a in enumerate(routers):
            for b in routers[i + 1:]:
                assert oracles.two_disjoint_paths(adjacency, a, b), (a, b)


class TestDeclare:
    def test_isolated_node_zero_bytes_routed(self):
        spec = TopologySpec(nodes=(NodeSpec("solo"),), links=(), mode="routed")
        net = create_network(spec)
        net.declare_endpoint("solo", "subscriber", "a/**")
        m = net.run_until(1000)
        assert m.global_.total_discovery_bytes == 0

    def test_full_mesh_declaration_fans_out(self):
        net = create_network(full_clique(4, "full_mesh"))
        net.declare_endpoint("p0", "subscriber", "a/b")
        m = net.run_until(1000)
        expected = 3 * (MESH_DECL_BASE + 8 + len("a/b"))
        assert m.global_.total_discovery_bytes == expected

    def test_routed_star_single_message(self):
        net = create_network(star(4, "routed"))
        net.declare_endpoint("p00", "subscriber", "a/b")
        m = net.run_until(1000)
        expected = ROUTED_DECL_BASE + 8 + len("a/b")
        assert m.global_.total_discovery_bytes == expected

    def test_unknown_node(self):
        net = create_network(two_peers())
        with pytest.raises(UnknownNode):
            net.declare_endpoint("ghost", "subscriber", "a")


class TestPublish:
    def test_no_matching_interest_emits_nothing(self):
        net = create_network(two_peers("routed"))
        pub = net.declare_endpoint("n1", "publisher", "a/b")
        net.run_until(100)
        net.publish(pub, b"payload")
        m = net.run_until(1000)
        assert m.global_.total_data_bytes == 0
        assert m.global_.delivered_count == 0

    def test_delivery_time_latency_plus_serialization(self):
        spec = two_peers("routed", latency_ms=5.0, bandwidth_kbps=1e9)
        net = create_network(spec)
        got = []
        net.declare_endpoint("n2", "subscriber", "a/b", on_sample=lambda s: got.append(net.now))
        pub = net.declare_endpoint("n1", "publisher", "a/b")
        net.run_until(100)
        net.publish(pub, b"x" * 100)
        net.run_until(1000)
        size = SAMPLE_HEADER + len("a/b") + 100
        assert got == [pytest.approx(100 + 5 + size * 8 / 1e9)]

    def test_router_fans_out_one_copy_per_branch(self):
        net = create_network(star(3, "routed"))
        net.declare_endpoint("p01", "subscriber", "a/b")
        net.declare_endpoint("p02", "subscriber", "a/b")
        pub = net.declare_endpoint("p00", "publisher", "a/b")
        net.run_until(100)
        net.publish(pub, b"z" * 50)
        m = net.run_until(1000)
        size = SAMPLE_HEADER + len("a/b") + 50
        # one copy up, one copy per subscriber branch
        assert net.links[("hub", "p00")].data_bytes == size
        assert net.links[("hub", "p01")].data_bytes == size
        assert net.links[("hub", "p02")].data_bytes == size
        assert m.global_.total_data_bytes == 3 * size
        assert m.global_.delivered_count == 2

    def test_not_a_publisher(self):
        net = create_network(two_peers())
        sub = net.declare_endpoint("n1", "subscriber", "a")
        with pytest.raises(NotAPublisher):
            net.publish(sub, b"")


class TestLinkEvents:
    def test_event_in_past(self):
        net = create_network(two_peers())
        net.run_until(500)
        with pytest.raises(TimeInPast):
            net.schedule_link_event(("n1", "n2"), 100, "down")

    def test_down_forever_counts_drops(self):
        net = create_network(two_peers("full_mesh"))
        net.declare_endpoint("n2", "subscriber", "a/b")
        pub = net.declare_endpoint("n1", "publisher", "a/b")
        net.run_until(100)
        net.schedule_link_event(("n1", "n2"), 200, "down")
        net.run_until(300)
        for _ in range(4):
            net.publish(pub, b"q")
        m = net.run_until(2000)
        assert m.per_link["n1|n2"].messages_dropped >= 4
        assert m.global_.delivered_count == 0

    def test_deliveries_resume_after_flap(self):
        for mode in ("full_mesh", "routed"):
            net = create_network(two_peers(mode))
            seen = []
            net.declare_endpoint("n2", "subscriber", "a/b", on_sample=lambda s: seen.append(s.sequence))
            pub = net.declare_endpoint("n1", "publisher", "a/b")
            net.run_until(100)
            net.schedule_link_event(("n1", "n2"), 200, "down")
            net.schedule_link_event(("n1", "n2"), 400, "up")
            net.run_until(300)
            net.publish(pub, b"lost")
            net.run_until(600)
            net.publish(pub, b"resumed")
            net.run_until(1000)
            assert seen, mode
            assert len(seen) == 1, mode

    def test_routed_reannounce_cheaper_than_mesh_rediscovery(self):
        costs = {}
        for mode in ("full_mesh", "routed"):
            net = create_network(star(4, mode))
            for i in range(4):
                node = f"p{i:02d}"
                net.declare_endpoint(node, "subscriber", f"{node}/cmd")
                net.declare_endpoint(node, "publisher", f"{node}/state")
            net.run_until(500)
            before = net.total_discovery_bytes
            net.schedule_link_event(("p00", "hub"), 600, "down")
            net.schedule_link_event(("p00", "hub"), 800, "up")
            net.run_until(3000)
            costs[mode] = net.total_discovery_bytes - before
        assert costs["routed"] < costs["full_mesh"]


class TestRunUntil:
    def test_fresh_network_all_zero(self):
        net = create_network(two_peers())
        m = net.run_until(0)
        assert m.global_.total_discovery_bytes == 0
        assert m.global_.total_data_bytes == 0
        assert m.global_.published_count == 0
        assert m.global_.delivered_count == 0
        assert all(v.bytes_transferred == 0 for v in m.per_link.values())
        assert all(v.startup_bytes == 0 for v in m.per_node.values())

    def test_identical_runs_identical_metrics(self):
        def run():
            spec = star(5, "routed")
            spec = TopologySpec(spec.nodes, spec.links, spec.mode, seed=42)
            net = create_network(spec)
            eps = []
            for i in range(5):
                node = f"p{i:02d}"
                net.declare_endpoint(node, "subscriber", "all/**")
                eps.append(net.declare_endpoint(node, "publisher", f"all/{node}"))
            for k, ep in enumerate(eps):
                net.schedule(100 + 10 * k, lambda e=ep: net.publish(e, b"tick"))
            return net.run_until(5000)

        m1, m2 = run(), run()
        assert m1 == m2
        assert m1.to_csv() == m2.to_csv()
        assert m1.to_json() == m2.to_json()

    def test_storm_bytes_ratio(self):
        totals = {}
        for mode in ("full_mesh", "routed"):
            net = create_network(star(7, mode, bandwidth_kbps=2000.0))
            for i in range(7):
                node = f"p{i:02d}"
                for e in range(3):
                    net.declare_endpoint(node, "subscriber", f"{node}/in/{e}")
                    net.declare_endpoint(node, "publisher", f"{node}/out/{e}")
            m = net.run_until(20_000)
            totals[mode] = m.global_.total_discovery_bytes
        assert totals["full_mesh"] >= 10 * totals["routed"]


class TestInvariantChecks:
    def test_conservation_and_audit(self):
        spec = star(4, "routed")
        net = create_network(spec, audit=True)
        subs = {}
        for i in range(4):
            node = f"p{i:02d}"
            subs[node] = net.declare_endpoint(node, "subscriber", "data/**")
        pubs = [
            net.declare_endpoint(f"p{i:02d}", "publisher", f"data/p{i:02d}")
            for i in range(4)
        ]
        net.run_until(200)
        for t in range(10):
            for ep in pubs:
                net.schedule(300 + t * 50, lambda e=ep: net.publish(e, b"v"))
        m = net.run_until(10_000)
        # loss 0 and stable links: every publish reaches every matching sub
        assert m.global_.delivered_count == net._expected_deliveries
        from keyfab.keyspace import intersects, parse_keyexpr

        for sub_key, sample_key in net.audit_log:
            assert intersects(parse_keyexpr(sub_key), parse_keyexpr(sample_key))

    def test_lossy_link_drops_some(self):
        spec = two_peers("routed", loss=0.5)
        spec = TopologySpec(spec.nodes, spec.links, spec.mode, seed=7)
        net = create_network(spec)
        net.declare_endpoint("n2", "subscriber", "a/**")
        pub = net.declare_endpoint("n1", "publisher", "a/b")
        net.run_until(100)
        for t in range(40):
            net.schedule(200 + t * 10, lambda: net.publish(pub, b"x"))
        m = net.run_until(5000)
        assert 0 < m.global_.delivered_count < 40
        assert m.per_link["n1|n2"].messages_dropped > 0

    def test_bandwidth_cap_per_window(self):
        spec = star(3, "routed", bandwidth_kbps=500.0)
        net = create_network(spec)
        net.declare_endpoint("p01", "subscriber", "big/**")
        pub = net.declare_endpoint("p00", "publisher", "big/blob")
        net.run_until(100)
        for t in range(30):
            net.schedule(200 + t, lambda: net.publish(pub, b"x" * 2000))
        net.run_until(60_000)
        for link in net.links.values():
            cap = link.spec.bandwidth_kbps * 12.5  # bytes per 100 ms window
            for w, b in link.bins.items():
                assert b <= cap + 1e-6, (link.key, w, b)

    def test_undeclare_removes_routing_state(self):
        net = create_network(star(3, "routed"))
        sub = net.declare_endpoint("p01", "subscriber", "x/**")
        net.run_until(100)
        assert net.routing_table("hub")
        net.undeclare_endpoint(sub)
        net.run_until(200)
        assert not net.routing_table("hub")
        assert net.routing_entries_for([sub]) == []

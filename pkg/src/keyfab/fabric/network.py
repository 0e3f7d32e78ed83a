"""Deterministic discrete-event simulation of the data transport.

Two discovery regimes share one link model:

* ``full_mesh`` — every non-router node is a participant that unicasts
  verbose endpoint declarations to every other participant, and data
  flows as one copy per matched destination node along static shortest
  paths. A link coming back up triggers a full re-discovery storm.
* ``routed`` — declarations travel one hop to adjacent nodes; routers
  keep per-interest tables built by state-based flooding, notify adjacent
  publishers about matching remote interest, and fan data out one copy
  per downstream branch. Publishers with no known matching interest emit
  nothing.

Time is simulated milliseconds. Links are half-duplex FIFO servers:
transmission time is ``payload_bits / bandwidth_kbps`` and per-hop loss
draws come from one seeded stream, so identical specs and seeds replay
identical event sequences.
"""

from __future__ import annotations

import heapq
import random
from ..keyspace import KeyExpr, Sample, SampleKind, includes, intersects, parse_keyexpr
from .spec import (
    FabricError,
    LinkSpec,
    NotAPublisher,
    TimeInPast,
    TopologySpec,
    UnknownEndpoint,
    UnknownLink,
    UnknownNode,
)

SUBSCRIBER = "subscriber"
PUBLISHER = "publisher"

# Wire-size model. Mesh-mode endpoint declarations carry the bulky QoS,
# locator and type description typical of peer-to-peer discovery; routed
# declarations and interest records are lean, and notices leaner still.
MESH_DECL_BASE = 512
ROUTED_DECL_BASE = 48
NOTICE_BASE = 40
SUMMARY_BASE = 48
ENTRY_OVERHEAD = 8
SAMPLE_HEADER = 48

WINDOW_MS = 100.0


class _Link:
    __slots__ = (
        "spec", "key", "up", "busy_until", "pending",
        "bytes_transferred", "data_bytes", "discovery_bytes",
        "messages_dropped", "bins",
    )

    def __init__(self, spec: LinkSpec):
        self.spec = spec
        self.key = spec.key
        self.up = True
        self.busy_until = 0.0
        self.pending: list[dict] = []
        self.bytes_transferred = 0.0
        self.data_bytes = 0.0
        self.discovery_bytes = 0.0
        self.messages_dropped = 0
        self.bins: dict[int, float] = {}

    def other(self, node: str) -> str:
        return self.spec.b if node == self.spec.a else self.spec.a


class _Endpoint:
    __slots__ = ("id", "node", "kind", "key", "on_sample", "live", "seq", "created")

    def __init__(self, eid, node, kind, key, on_sample, created):
        self.id = eid
        self.node = node
        self.kind = kind
        self.key = key
        self.on_sample = on_sample
        self.live = True
        self.seq = 0
        self.created = created


class _Node:
    __slots__ = (
        "name", "role", "links", "endpoints",
        "interests", "pub_neighbors", "noticed", "noticed_out", "mesh_remote",
        "first_declare", "first_delivery", "startup_bytes", "deliveries",
    )

    def __init__(self, name: str, role: str):
        self.name = name
        self.role = role
        self.links: dict[str, _Link] = {}  # neighbor name -> link
        self.endpoints: list[_Endpoint] = []
        # routed state: origin endpoint id -> (KeyExpr, next-hop neighbor)
        self.interests: dict[int, tuple[KeyExpr, str]] = {}
        # router-side: adjacent publisher endpoints, for targeted notices
        self.pub_neighbors: dict[int, tuple[KeyExpr, str]] = {}
        # publisher-side: remote interests learned from router notices
        self.noticed: dict[int, tuple[KeyExpr, str]] = {}
        # router-side: interests already told to each neighbor (aggregated)
        self.noticed_out: dict[str, dict[int, KeyExpr]] = {}
        # mesh state: remote endpoint id -> (node, kind, KeyExpr)
        self.mesh_remote: dict[int, tuple[str, str, KeyExpr]] = {}
        self.first_declare: float | None = None
        self.first_delivery: float | None = None
        self.startup_bytes = 0.0
        self.deliveries: list[tuple[float, float]] = []

    @property
    def is_router(self) -> bool:
        return self.role == "router"


class _Msg:
    """One in-flight message; mesh copies carry their whole path."""

    __slots__ = (
        "kind", "origin", "entries", "size", "path", "hop",
        "sample", "origin_ep", "links_crossed", "sent_at", "discovery",
    )

    def __init__(self, kind, origin, size, entries=(), path=None,
                 sample=None, origin_ep=None, sent_at=0.0, discovery=True):
        self.kind = kind
        self.origin = origin
        self.entries = entries
        self.size = size
        self.path = path
        self.hop = 0
        self.sample = sample
        self.origin_ep = origin_ep
        self.links_crossed: tuple = ()
        self.sent_at = sent_at
        self.discovery = discovery


def _entry_size(base: int, entries) -> int:
    return base + sum(ENTRY_OVERHEAD + len(str(key)) for _, _, _, key in entries)


class Network:
    """A simulated transport instance built from one TopologySpec."""

    def __init__(self, spec: TopologySpec, audit: bool = False):
        self.spec = spec
        self.mode = spec.mode
        self.warnings = spec.validate()
        self.now = 0.0
        self.audit = audit
        self.audit_log: list[tuple[str, str]] = []
        self._rng = random.Random(spec.seed)
        self._heap: list = []
        self._seq = 0
        self._next_ep = 1
        self.nodes: dict[str, _Node] = {}
        for n in spec.nodes:
            self.nodes[n.name] = _Node(n.name, n.role)
        self.links: dict[tuple[str, str], _Link] = {}
        for ls in spec.links:
            link = _Link(ls)
            self.links[link.key] = link
            self.nodes[ls.a].links[ls.b] = link
            self.nodes[ls.b].links[ls.a] = link
            for t, state in ls.schedule:
                self._schedule(t, lambda l=link, s=state: self._set_link_state(l, s))
        self.endpoints: dict[int, _Endpoint] = {}
        self._paths: dict[tuple[str, str], tuple[str, ...] | None] = {}
        self._delivered: set[tuple[int, int, int]] = set()
        # metrics accumulators
        self.total_discovery_bytes = 0.0
        self.total_data_bytes = 0.0
        self.published_count = 0
        self.delivered_count = 0
        self.undeliverable = 0
        self._lat_sum = 0.0
        self._lat_n = 0
        self.ep_published_bytes: dict[int, int] = {}
        self.ep_delivered_bytes: dict[int, int] = {}
        self._recoveries: list[dict] = []
        self._expected_deliveries = 0  # audit: matching live subs per publish

    # ------------------------------------------------------------------
    # event queue

    def _schedule(self, t: float, fn) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (t, self._seq, fn))

    def schedule(self, t: float, fn) -> None:
        """Schedule `fn` at absolute simulated time `t`."""
        if t < self.now:
            raise TimeInPast(f"cannot schedule at {t} (now {self.now})")
        self._schedule(t, fn)

    def run_until(self, t: float):
        if t < self.now:
            raise TimeInPast(f"cannot run to {t} (now {self.now})")
        heap = self._heap
        while heap and heap[0][0] <= t:
            when, _, fn = heapq.heappop(heap)
            self.now = when
            fn()
        self.now = t
        from .metrics import compute_metrics

        return compute_metrics(self)

    # ------------------------------------------------------------------
    # endpoints

    def declare_endpoint(self, node: str, kind: str, key, on_sample=None) -> int:
        if node not in self.nodes:
            raise UnknownNode(f"unknown node {node!r}")
        if kind not in (SUBSCRIBER, PUBLISHER):
            raise FabricError(f"endpoint kind must be subscriber|publisher: {kind!r}")
        kx = key if isinstance(key, KeyExpr) else parse_keyexpr(key)
        if kind == PUBLISHER and not kx.is_concrete:
            raise FabricError(f"publisher keys must be concrete: '{kx}'")
        n = self.nodes[node]
        ep = _Endpoint(self._next_ep, node, kind, kx, on_sample, self.now)
        self._next_ep += 1
        self.endpoints[ep.id] = ep
        n.endpoints.append(ep)
        if n.first_declare is None:
            n.first_declare = self.now
        self._announce(ep)
        return ep.id

    def undeclare_endpoint(self, ep_id: int) -> None:
        ep = self.endpoints.get(ep_id)
        if ep is None or not ep.live:
            raise UnknownEndpoint(f"unknown endpoint {ep_id}")
        ep.live = False
        entry = (ep.id, ep.node, ep.kind, ep.key)
        if self.mode == "full_mesh":
            for other in self._participants():
                if other.name != ep.node:
                    self._mesh_send("undeclare", ep.node, other.name, (entry,))
        else:
            node = self.nodes[ep.node]
            for neighbor in sorted(node.links):
                self._routed_send(node, neighbor, _Msg(
                    "undeclare", ep.node,
                    _entry_size(ROUTED_DECL_BASE, (entry,)), (entry,),
                    sent_at=self.now,
                ))

    def _participants(self):
        return [n for n in self.nodes.values() if not n.is_router]

    def _announce(self, ep: _Endpoint) -> None:
        entry = (ep.id, ep.node, ep.kind, ep.key)
        if self.mode == "full_mesh":
            for other in self._participants():
                if other.name != ep.node:
                    self._mesh_send("declare", ep.node, other.name, (entry,))
        else:
            node = self.nodes[ep.node]
            for neighbor in sorted(node.links):
                self._routed_send(node, neighbor, _Msg(
                    "declare", ep.node,
                    _entry_size(ROUTED_DECL_BASE, (entry,)), (entry,),
                    sent_at=self.now,
                ))

    # ------------------------------------------------------------------
    # publishing

    def publish(self, ep_id: int, payload: bytes, kind: SampleKind = SampleKind.PUT):
        ep = self.endpoints.get(ep_id)
        if ep is None:
            raise UnknownEndpoint(f"unknown endpoint {ep_id}")
        if ep.kind != PUBLISHER:
            raise NotAPublisher(f"endpoint {ep_id} is not a publisher")
        ep.seq += 1
        sample = Sample(ep.key, payload, kind, ep.node, ep.seq, self.now)
        self.published_count += 1
        self.ep_published_bytes[ep.id] = (
            self.ep_published_bytes.get(ep.id, 0) + len(payload)
        )
        if self.audit:
            self._expected_deliveries += sum(
                1
                for other in self.endpoints.values()
                if other.live and other.kind == SUBSCRIBER
                and intersects(other.key, ep.key)
            )
        node = self.nodes[ep.node]
        # local subscribers are served in-process, no link traffic
        for sub in node.endpoints:
            if sub.live and sub.kind == SUBSCRIBER and intersects(sub.key, ep.key):
                self._deliver(sub, sample, ep.id, 0.0, ())
        size = SAMPLE_HEADER + len(str(ep.key)) + len(payload)
        if self.mode == "full_mesh":
            dests = sorted(
                {
                    rnode
                    for rid, (rnode, rkind, rkey) in node.mesh_remote.items()
                    if rkind == SUBSCRIBER
                    and self.endpoints[rid].live
                    and intersects(rkey, ep.key)
                }
            )
            for dst in dests:
                self._mesh_send_data(ep, sample, dst, size)
        else:
            targets = {
                hop
                for _, (ikey, hop) in node.interests.items()
                if intersects(ikey, ep.key)
            }
            targets.update(
                router
                for _, (ikey, router) in node.noticed.items()
                if intersects(ikey, ep.key)
            )
            for neighbor in sorted(targets):
                msg = _Msg("data", ep.node, size, sample=sample,
                           origin_ep=ep.id, sent_at=self.now, discovery=False)
                self._routed_send(node, neighbor, msg)

    # ------------------------------------------------------------------
    # link model

    def _set_link_state(self, link: _Link, state: str) -> None:
        if state == "down" and link.up:
            link.up = False
            for token in link.pending:
                token["cancelled"] = True
                link.messages_dropped += 1
                start, end, size = token["start"], token["end"], token["size"]
                if end > self.now:
                    cut = max(self.now, start)
                    untransmitted = size * (end - cut) / (end - start)
                    self._attribute(link, cut, end, -untransmitted)
                    link.bytes_transferred -= untransmitted
            link.pending.clear()
            link.busy_until = self.now
            if self.mode == "routed":
                self._routed_purge(link)
        elif state == "up" and not link.up:
            link.up = True
            link.busy_until = self.now
            self._recoveries.append(
                {"link": link.key, "t_up": self.now, "recovered": None}
            )
            if self.mode == "full_mesh":
                self._mesh_rediscover()
            else:
                self._routed_reannounce(link)

    def schedule_link_event(self, link_key: tuple[str, str], t: float, state: str):
        key = tuple(sorted(link_key))
        if key not in self.links:
            raise UnknownLink(f"unknown link {link_key}")
        if t < self.now:
            raise TimeInPast(f"link event at {t} is in the past (now {self.now})")
        if state not in ("up", "down"):
            raise FabricError(f"unknown link state {state!r}")
        link = self.links[key]
        self._schedule(t, lambda: self._set_link_state(link, state))

    def _transmit(self, link: _Link, src: str, dst: str, msg: _Msg, arrive) -> None:
        if not link.up:
            link.messages_dropped += 1
            return
        tx = msg.size * 8.0 / link.spec.bandwidth_kbps
        start = max(self.now, link.busy_until)
        end = start + tx
        link.busy_until = end
        arrival = end + link.spec.latency_ms
        self._attribute(link, start, end, msg.size)
        link.bytes_transferred += msg.size
        if msg.discovery:
            self.total_discovery_bytes += msg.size
            link.discovery_bytes += msg.size
            origin = self.nodes.get(msg.origin)
            if origin is not None:
                origin.startup_bytes += msg.size
        else:
            self.total_data_bytes += msg.size
            link.data_bytes += msg.size
        # control traffic models a reliable channel; only data takes loss
        lost = (
            not msg.discovery
            and link.spec.loss > 0.0
            and self._rng.random() < link.spec.loss
        )
        token = {"cancelled": False, "start": start, "end": end, "size": msg.size}
        link.pending.append(token)

        def _arrive():
            if token["cancelled"]:
                return
            link.pending.remove(token)
            if lost:
                link.messages_dropped += 1
                return
            msg.links_crossed = msg.links_crossed + (link.key,)
            arrive()

        self._schedule(arrival, _arrive)

    def _attribute(self, link: _Link, start: float, end: float, size: float) -> None:
        if end <= start:
            link.bins[int(start // WINDOW_MS)] = (
                link.bins.get(int(start // WINDOW_MS), 0.0) + size
            )
            return
        rate = size / (end - start)
        w = int(start // WINDOW_MS)
        t = start
        while t < end:
            edge = min(end, (w + 1) * WINDOW_MS)
            link.bins[w] = link.bins.get(w, 0.0) + rate * (edge - t)
            t = edge
            w += 1

    # ------------------------------------------------------------------
    # full-mesh regime

    def _static_path(self, src: str, dst: str):
        key = (src, dst)
        if key in self._paths:
            return self._paths[key]
        # BFS over the declared graph, ignoring up/down state
        prev: dict[str, str] = {src: src}
        frontier = [src]
        while frontier and dst not in prev:
            nxt = []
            for name in frontier:
                for neighbor in sorted(self.nodes[name].links):
                    if neighbor not in prev:
                        prev[neighbor] = name
                        nxt.append(neighbor)
            frontier = nxt
        if dst not in prev:
            self._paths[key] = None
            return None
        path = [dst]
        while path[-1] != src:
            path.append(prev[path[-1]])
        path.reverse()
        self._paths[key] = tuple(path)
        return self._paths[key]

    def _mesh_send(self, kind: str, src: str, dst: str, entries) -> None:
        path = self._static_path(src, dst)
        if path is None:
            self.undeliverable += 1
            return
        msg = _Msg(kind, src, _entry_size(MESH_DECL_BASE, entries),
                   entries, path=path, sent_at=self.now)
        self._mesh_forward(msg)

    def _mesh_forward(self, msg: _Msg) -> None:
        u, v = msg.path[msg.hop], msg.path[msg.hop + 1]
        link = self.nodes[u].links[v]

        def _arrived():
            msg.hop += 1
            if msg.path[msg.hop] == msg.path[-1]:
                self._mesh_receive(self.nodes[msg.path[-1]], msg)
            else:
                self._mesh_forward(msg)

        self._transmit(link, u, v, msg, _arrived)

    def _mesh_receive(self, node: _Node, msg: _Msg) -> None:
        if msg.kind == "declare":
            for eid, enode, ekind, ekey in msg.entries:
                node.mesh_remote[eid] = (enode, ekind, ekey)
        elif msg.kind == "undeclare":
            for eid, *_ in msg.entries:
                node.mesh_remote.pop(eid, None)
        elif msg.kind == "data":
            self._receive_data_mesh(node, msg)

    def _mesh_send_data(self, ep: _Endpoint, sample: Sample, dst: str, size: int):
        path = self._static_path(ep.node, dst)
        if path is None:
            self.undeliverable += 1
            return
        msg = _Msg("data", ep.node, size, path=path, sample=sample,
                   origin_ep=ep.id, sent_at=self.now, discovery=False)
        self._mesh_forward(msg)

    def _receive_data_mesh(self, node: _Node, msg: _Msg) -> None:
        latency = self.now - msg.sent_at
        for sub in node.endpoints:
            if sub.live and sub.kind == SUBSCRIBER and intersects(sub.key, msg.sample.key):
                self._deliver(sub, msg.sample, msg.origin_ep, latency, msg.links_crossed)

    def _mesh_rediscover(self) -> None:
        for node in self._participants():
            entries = [
                (ep.id, ep.node, ep.kind, ep.key)
                for ep in node.endpoints
                if ep.live
            ]
            if not entries:
                continue
            for other in self._participants():
                if other.name != node.name:
                    self._mesh_send("declare", node.name, other.name, tuple(entries))

    # ------------------------------------------------------------------
    # routed regime

    def _routed_send(self, node: _Node, neighbor: str, msg: _Msg) -> None:
        link = node.links.get(neighbor)
        if link is None:
            self.undeliverable += 1
            return
        self._transmit(
            link, node.name, neighbor, msg,
            lambda: self._routed_receive(self.nodes[neighbor], node.name, msg),
        )

    def _routed_receive(self, node: _Node, via: str, msg: _Msg) -> None:
        handler = {
            "declare": self._r_declare,
            "undeclare": self._r_undeclare,
            "interest": self._r_interest,
            "interest_gone": self._r_interest_gone,
            "notice": self._r_notice,
            "notice_gone": self._r_notice_gone,
            "summary": self._r_summary,
            "data": self._r_data,
        }[msg.kind]
        handler(node, via, msg)

    def _sync_notices(self, node: _Node, neighbor: str, removed=()) -> None:
        """Reconcile one neighbor's knowledge of remote interest.

        Notices are aggregated: an interest already covered by a noticed
        one (key inclusion) is never re-sent, which keeps broad interests
        like ``health/**`` from multiplying control traffic.
        """
        sent = node.noticed_out.setdefault(neighbor, {})
        gone = [
            (eid, "", SUBSCRIBER, sent.pop(eid)) for eid in removed if eid in sent
        ]
        pub_keys = [
            pkey
            for _, (pkey, pneigh) in node.pub_neighbors.items()
            if pneigh == neighbor
        ]
        need = []
        if pub_keys:
            for eid, (ikey, hop) in node.interests.items():
                if eid in sent or hop == neighbor:
                    continue
                if not any(intersects(ikey, pk) for pk in pub_keys):
                    continue
                if any(includes(skey, ikey) for skey in sent.values()):
                    continue
                need.append((eid, "", SUBSCRIBER, ikey))
                sent[eid] = ikey
        if gone:
            self._routed_send(node, neighbor, _Msg(
                "notice_gone", node.name,
                _entry_size(NOTICE_BASE, gone), tuple(gone), sent_at=self.now,
            ))
        if need:
            self._routed_send(node, neighbor, _Msg(
                "notice", node.name,
                _entry_size(NOTICE_BASE, need), tuple(need), sent_at=self.now,
            ))

    def _leaf_neighbors(self, node: _Node) -> list[str]:
        return [n for n in sorted(node.links) if not self.nodes[n].is_router]

    def _add_interests(self, node: _Node, via: str, entries) -> list:
        added = []
        for entry in entries:
            eid, enode, ekind, ekey = entry
            if eid not in node.interests:
                node.interests[eid] = (ekey, via)
                added.append(entry)
        return added

    def _propagate_interests(self, node: _Node, via: str, entries) -> None:
        if not node.is_router or not entries:
            return
        for neighbor in sorted(node.links):
            if neighbor == via or not self.nodes[neighbor].is_router:
                continue
            self._routed_send(node, neighbor, _Msg(
                "interest", node.name,
                _entry_size(ROUTED_DECL_BASE, entries), tuple(entries),
                sent_at=self.now,
            ))
        for neighbor in self._leaf_neighbors(node):
            self._sync_notices(node, neighbor)

    def _r_declare(self, node: _Node, via: str, msg: _Msg) -> None:
        subs = [e for e in msg.entries if e[2] == SUBSCRIBER]
        pubs = [e for e in msg.entries if e[2] == PUBLISHER]
        added = self._add_interests(node, via, subs)
        self._propagate_interests(node, via, added)
        if node.is_router and pubs:
            for eid, enode, ekind, ekey in pubs:
                node.pub_neighbors[eid] = (ekey, via)
            self._sync_notices(node, via)

    def _r_undeclare(self, node: _Node, via: str, msg: _Msg) -> None:
        gone = []
        for eid, enode, ekind, ekey in msg.entries:
            if ekind == SUBSCRIBER and eid in node.interests:
                node.interests.pop(eid)
                gone.append((eid, enode, ekind, ekey))
            node.pub_neighbors.pop(eid, None)
        self._remove_interests(node, via, gone)

    def _remove_interests(self, node: _Node, via: str, gone) -> None:
        if not node.is_router or not gone:
            return
        gone_ids = [eid for eid, *_ in gone]
        for neighbor in sorted(node.links):
            if neighbor == via:
                continue
            if self.nodes[neighbor].is_router:
                self._routed_send(node, neighbor, _Msg(
                    "interest_gone", node.name,
                    _entry_size(ROUTED_DECL_BASE, gone), tuple(gone),
                    sent_at=self.now,
                ))
        for neighbor in self._leaf_neighbors(node):
            self._sync_notices(node, neighbor, removed=gone_ids)

    def _r_interest(self, node: _Node, via: str, msg: _Msg) -> None:
        added = self._add_interests(node, via, msg.entries)
        self._propagate_interests(node, via, added)

    def _r_interest_gone(self, node: _Node, via: str, msg: _Msg) -> None:
        gone = []
        advertise = []
        for entry in msg.entries:
            eid, enode, ekind, ekey = entry
            held = node.interests.get(eid)
            if held is None:
                continue
            if held[1] == via:
                node.interests.pop(eid)
                gone.append(entry)
            else:
                # we still hold a live route elsewhere; offer it back
                advertise.append(entry)
        self._remove_interests(node, via, gone)
        if advertise and node.is_router and self.nodes[via].is_router:
            self._routed_send(node, via, _Msg(
                "interest", node.name,
                _entry_size(ROUTED_DECL_BASE, advertise), tuple(advertise),
                sent_at=self.now,
            ))

    def _r_notice(self, node: _Node, via: str, msg: _Msg) -> None:
        for eid, enode, ekind, ekey in msg.entries:
            node.noticed[eid] = (ekey, via)

    def _r_notice_gone(self, node: _Node, via: str, msg: _Msg) -> None:
        for eid, *_ in msg.entries:
            held = node.noticed.get(eid)
            if held is not None and held[1] == via:
                node.noticed.pop(eid)

    def _r_summary(self, node: _Node, via: str, msg: _Msg) -> None:
        added = self._add_interests(node, via, msg.entries)
        self._propagate_interests(node, via, added)

    def _r_data(self, node: _Node, via: str, msg: _Msg) -> None:
        latency = self.now - msg.sent_at
        delivered = False
        for sub in node.endpoints:
            if sub.live and sub.kind == SUBSCRIBER and intersects(sub.key, msg.sample.key):
                self._deliver(sub, msg.sample, msg.origin_ep, latency, msg.links_crossed)
                delivered = True
        forwarded = False
        if node.is_router:
            targets = {
                hop
                for _, (ikey, hop) in node.interests.items()
                if hop != via and intersects(ikey, msg.sample.key)
            }
            for neighbor in sorted(targets):
                copy = _Msg("data", msg.origin, msg.size, sample=msg.sample,
                            origin_ep=msg.origin_ep, sent_at=msg.sent_at,
                            discovery=False)
                copy.links_crossed = msg.links_crossed
                self._routed_send(node, neighbor, copy)
                forwarded = True
        if not delivered and not forwarded:
            # dead end: interest vanished while the sample was in flight
            link = node.links.get(via)
            if link is not None:
                link.messages_dropped += 1

    def _routed_purge(self, link: _Link) -> None:
        for name in link.key:
            node = self.nodes[name]
            neighbor = link.other(name)
            gone = [
                (eid, "", SUBSCRIBER, ikey)
                for eid, (ikey, hop) in list(node.interests.items())
                if hop == neighbor
            ]
            for eid, *_ in gone:
                node.interests.pop(eid)
            for eid, (pkey, pneigh) in list(node.pub_neighbors.items()):
                if pneigh == neighbor:
                    node.pub_neighbors.pop(eid)
            for eid, (ikey, router) in list(node.noticed.items()):
                if router == neighbor:
                    node.noticed.pop(eid)
            node.noticed_out.pop(neighbor, None)
            self._remove_interests(node, neighbor, gone)

    def _routed_reannounce(self, link: _Link) -> None:
        for name in link.key:
            node = self.nodes[name]
            neighbor = link.other(name)
            if node.is_router:
                if self.nodes[neighbor].is_router:
                    entries = [
                        (eid, "", SUBSCRIBER, ikey)
                        for eid, (ikey, hop) in node.interests.items()
                        if hop != neighbor
                    ]
                    if entries:
                        self._routed_send(node, neighbor, _Msg(
                            "summary", node.name,
                            _entry_size(SUMMARY_BASE, entries), tuple(entries),
                            sent_at=self.now,
                        ))
                else:
                    self._sync_notices(node, neighbor)
            else:
                for ep in node.endpoints:
                    if ep.live:
                        entry = (ep.id, ep.node, ep.kind, ep.key)
                        self._routed_send(node, neighbor, _Msg(
                            "declare", node.name,
                            _entry_size(ROUTED_DECL_BASE, (entry,)), (entry,),
                            sent_at=self.now,
                        ))

    # ------------------------------------------------------------------
    # delivery

    def _deliver(self, sub: _Endpoint, sample: Sample, origin_ep: int,
                 latency: float, links_crossed) -> None:
        dedup = (sub.id, origin_ep, sample.sequence)
        if dedup in self._delivered:
            return
        self._delivered.add(dedup)
        self.delivered_count += 1
        self.ep_delivered_bytes[sub.id] = (
            self.ep_delivered_bytes.get(sub.id, 0) + len(sample.payload)
        )
        node = self.nodes[sub.node]
        if latency > 0.0:
            node.deliveries.append((self.now, latency))
            self._lat_sum += latency
            self._lat_n += 1
        if node.first_delivery is None:
            node.first_delivery = self.now
        src = self.nodes.get(sample.source)
        if src is not None and src.first_delivery is None:
            src.first_delivery = self.now
        if links_crossed:
            crossed = set(links_crossed)
            for rec in self._recoveries:
                if rec["recovered"] is None and rec["link"] in crossed:
                    rec["recovered"] = self.now
        if self.audit:
            self.audit_log.append((str(sub.key), str(sample.key)))
        if sub.on_sample is not None:
            sub.on_sample(sample)

    # ------------------------------------------------------------------
    # views

    def routing_table(self, node: str) -> dict[tuple[str, str], set[str]]:
        if node not in self.nodes:
            raise UnknownNode(f"unknown node {node!r}")
        n = self.nodes[node]
        table: dict[tuple[str, str], set[str]] = {}
        for _, (key, hop) in n.interests.items():
            table.setdefault((str(key), SUBSCRIBER), set()).add(hop)
        for _, (key, hop) in n.pub_neighbors.items():
            table.setdefault((str(key), PUBLISHER), set()).add(hop)
        return table

    def published_bytes_for_key(self, key: str) -> int:
        """Total payload bytes published by endpoints with exactly `key`."""
        total = 0
        for ep in self.endpoints.values():
            if ep.kind == PUBLISHER and str(ep.key) == key:
                total += self.ep_published_bytes.get(ep.id, 0)
        return total

    def routing_entries_for(self, ep_ids) -> list[tuple[str, int]]:
        """(node, endpoint) pairs anywhere in the fabric that reference `ep_ids`."""
        wanted = set(ep_ids)
        found = []
        for node in self.nodes.values():
            for store in (node.interests, node.pub_neighbors, node.noticed,
                          node.mesh_remote):
                for eid in store:
                    if eid in wanted:
                        found.append((node.name, eid))
        return found


def create_network(spec: TopologySpec, audit: bool = False) -> Network:
    """Build a Network at simulated time zero from a validated spec."""
    return Network(spec, audit=audit)

"""Topology descriptions for the simulated transport."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

ROLES = ("peer", "client", "router")
MODES = ("full_mesh", "routed")


class FabricError(Exception):
    """Base class for transport-layer failures."""


class DuplicateNode(FabricError):
    pass


class DanglingLink(FabricError):
    pass


class UnknownNode(FabricError):
    pass


class UnknownEndpoint(FabricError):
    pass


class NotAPublisher(FabricError):
    pass


class UnknownLink(FabricError):
    pass


class TimeInPast(FabricError):
    pass


@dataclass(frozen=True)
class NodeSpec:
    name: str
    role: str = "peer"

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise FabricError(f"unknown role {self.role!r} for node {self.name!r}")


@dataclass(frozen=True)
class LinkSpec:
    a: str
    b: str
    latency_ms: float = 1.0
    bandwidth_kbps: float = 100_000.0
    loss: float = 0.0
    schedule: tuple[tuple[float, str], ...] = ()

    def __post_init__(self) -> None:
        if self.a == self.b:
            raise FabricError(f"link endpoints must differ: {self.a!r}")
        if self.latency_ms < 0:
            raise FabricError("latency must be >= 0")
        if self.bandwidth_kbps <= 0:
            raise FabricError("bandwidth must be > 0")
        if not 0.0 <= self.loss <= 1.0:
            raise FabricError("loss must be within [0, 1]")
        times = [t for t, _ in self.schedule]
        if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
            raise FabricError("schedule times must be strictly increasing")
        for _, state in self.schedule:
            if state not in ("up", "down"):
                raise FabricError(f"unknown link state {state!r}")

    @property
    def key(self) -> tuple[str, str]:
        return (self.a, self.b) if self.a <= self.b else (self.b, self.a)


@dataclass(frozen=True)
class TopologySpec:
    nodes: tuple[NodeSpec, ...]
    links: tuple[LinkSpec, ...]
    mode: str = "routed"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise FabricError(f"unknown mode {self.mode!r}")

    def validate(self) -> list[str]:
        """Raise on hard errors; return warning strings for soft ones."""
        names = [n.name for n in self.nodes]
        seen = set()
        for name in names:
            if name in seen:
                raise DuplicateNode(f"duplicate node {name!r}")
            seen.add(name)
        link_keys = set()
        for link in self.links:
            for end in (link.a, link.b):
                if end not in seen:
                    raise DanglingLink(f"link references unknown node {end!r}")
            if link.key in link_keys:
                raise FabricError(f"duplicate link {link.key}")
            link_keys.add(link.key)
        warnings = []
        if self.mode == "routed" and len(names) > 1 and not self._connected():
            warnings.append(
                "DisconnectedRoutedGraph: declared links do not connect all nodes"
            )
        return warnings

    def _connected(self) -> bool:
        if not self.nodes:
            return True
        adj: dict[str, set[str]] = {n.name: set() for n in self.nodes}
        for link in self.links:
            adj[link.a].add(link.b)
            adj[link.b].add(link.a)
        start = self.nodes[0].name
        seen = {start}
        stack = [start]
        while stack:
            for nxt in adj[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return len(seen) == len(adj)

    @staticmethod
    def from_dict(doc: dict) -> "TopologySpec":
        nodes = tuple(
            NodeSpec(n["name"], n.get("role", "peer")) for n in doc.get("nodes", [])
        )
        links = tuple(
            LinkSpec(
                l["a"],
                l["b"],
                latency_ms=float(l.get("latency_ms", 1.0)),
                bandwidth_kbps=float(l.get("bandwidth_kbps", 100_000.0)),
                loss=float(l.get("loss", 0.0)),
                schedule=tuple((float(t), s) for t, s in l.get("schedule", [])),
            )
            for l in doc.get("links", [])
        )
        return TopologySpec(
            nodes=nodes,
            links=links,
            mode=doc.get("mode", "routed"),
            seed=int(doc.get("seed", 0)),
        )

    def to_dict(self) -> dict:
        return {
            "nodes": [{"name": n.name, "role": n.role} for n in self.nodes],
            "links": [
                {
                    "a": l.a,
                    "b": l.b,
                    "latency_ms": l.latency_ms,
                    "bandwidth_kbps": l.bandwidth_kbps,
                    "loss": l.loss,
                    "schedule": [[t, s] for t, s in l.schedule],
                }
                for l in self.links
            ],
            "mode": self.mode,
            "seed": self.seed,
        }


def load_topology(path: str | Path) -> TopologySpec:
    with open(path, "r", encoding="utf-8") as fh:
        return TopologySpec.from_dict(json.load(fh))

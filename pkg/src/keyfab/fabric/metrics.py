"""Measurement snapshots derived from a network's accumulated state."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

WINDOW_MS = 100.0
STUTTER_FACTOR = 10.0


@dataclass(frozen=True)
class NodeMetrics:
    startup_time_ms: float | None
    startup_bytes: float
    stutter_window_ms: float


@dataclass(frozen=True)
class LinkMetrics:
    bytes_transferred: float
    messages_dropped: int


@dataclass(frozen=True)
class GlobalMetrics:
    duration_ms: float
    mean_delivery_latency_ms: float
    peak_bandwidth_kbps: float
    total_discovery_bytes: float
    total_data_bytes: float
    published_count: int
    delivered_count: int
    undeliverable: int
    recovery_times: tuple[tuple[str, float, float | None], ...]


@dataclass(frozen=True)
class FabricMetrics:
    per_node: dict[str, NodeMetrics]
    per_link: dict[str, LinkMetrics]
    global_: GlobalMetrics

    def to_csv(self) -> str:
        lines = ["scope,name,startup_time_ms,startup_bytes,stutter_window_ms,"
                 "bytes_transferred,messages_dropped"]
        for name in sorted(self.per_node):
            m = self.per_node[name]
            st = "" if m.startup_time_ms is None else repr(m.startup_time_ms)
            lines.append(
                f"node,{name},{st},{m.startup_bytes!r},{m.stutter_window_ms!r},,"
            )
        for name in sorted(self.per_link):
            m = self.per_link[name]
            lines.append(
                f"link,{name},,,,{m.bytes_transferred!r},{m.messages_dropped}"
            )
        return "\n".join(lines) + "\n"

    def to_summary(self) -> dict:
        g = self.global_
        return {
            "duration_ms": g.duration_ms,
            "mean_delivery_latency_ms": g.mean_delivery_latency_ms,
            "peak_bandwidth_kbps": g.peak_bandwidth_kbps,
            "total_discovery_bytes": g.total_discovery_bytes,
            "total_data_bytes": g.total_data_bytes,
            "published_count": g.published_count,
            "delivered_count": g.delivered_count,
            "undeliverable": g.undeliverable,
            "recovery_times": [
                {"link": link, "t_up": t_up, "recovery_ms": rec}
                for link, t_up, rec in g.recovery_times
            ],
            "median_startup_time_ms": self.median_startup_time(),
            "median_stutter_window_ms": self.median_stutter_window(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_summary(), sort_keys=True, indent=2) + "\n"

    def median_startup_time(self) -> float | None:
        times = sorted(
            m.startup_time_ms
            for m in self.per_node.values()
            if m.startup_time_ms is not None
        )
        return _median(times)

    def median_stutter_window(self) -> float | None:
        spans = sorted(
            m.stutter_window_ms
            for m in self.per_node.values()
            if m.startup_time_ms is not None
        )
        return _median(spans)


def _median(values: list[float]) -> float | None:
    if not values:
        return None
    n = len(values)
    mid = n // 2
    if n % 2:
        return values[mid]
    return (values[mid - 1] + values[mid]) / 2.0


def _stutter_window(node, duration: float) -> float:
    """Span from first declaration to the last anomalous delivery.

    The steady-state latency is the median over the final third of the
    run; a delivery stutters when it exceeds ten times that.
    """
    if node.first_declare is None or not node.deliveries:
        return 0.0
    steady = sorted(
        lat for t, lat in node.deliveries if t >= duration * (2.0 / 3.0)
    )
    med = _median(steady)
    if med is None:
        # nothing arrived late in the run; judge against the overall median
        med = _median(sorted(lat for _, lat in node.deliveries))
    threshold = STUTTER_FACTOR * med
    last_bad = None
    for t, lat in node.deliveries:
        if lat > threshold:
            last_bad = t
    if last_bad is None:
        return 0.0
    return max(0.0, last_bad - node.first_declare)


def compute_metrics(network) -> FabricMetrics:
    duration = network.now
    per_node = {}
    for name in sorted(network.nodes):
        node = network.nodes[name]
        if node.first_declare is None:
            startup = None
        elif node.first_delivery is None:
            startup = None
        else:
            startup = node.first_delivery - node.first_declare
        per_node[name] = NodeMetrics(
            startup_time_ms=startup,
            startup_bytes=node.startup_bytes,
            stutter_window_ms=_stutter_window(node, duration),
        )
    per_link = {}
    window_totals: dict[int, float] = {}
    for key in sorted(network.links):
        link = network.links[key]
        per_link["|".join(key)] = LinkMetrics(
            bytes_transferred=link.bytes_transferred,
            messages_dropped=link.messages_dropped,
        )
        for w, b in link.bins.items():
            window_totals[w] = window_totals.get(w, 0.0) + b
    peak_kbps = 0.0
    if window_totals:
        peak_bytes = max(window_totals.values())
        peak_kbps = peak_bytes * 8.0 / (WINDOW_MS / 1000.0) / 1000.0
    mean_lat = network._lat_sum / network._lat_n if network._lat_n else 0.0
    global_ = GlobalMetrics(
        duration_ms=duration,
        mean_delivery_latency_ms=mean_lat,
        peak_bandwidth_kbps=peak_kbps,
        total_discovery_bytes=network.total_discovery_bytes,
        total_data_bytes=network.total_data_bytes,
        published_count=network.published_count,
        delivered_count=network.delivered_count,
        undeliverable=network.undeliverable,
        recovery_times=tuple(
            (
                "|".join(rec["link"]),
                rec["t_up"],
                None if rec["recovered"] is None else rec["recovered"] - rec["t_up"],
            )
            for rec in network._recoveries
        ),
    )
    return FabricMetrics(per_node=per_node, per_link=per_link, global_=global_)

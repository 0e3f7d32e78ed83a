"""Scenario model and runner: spawn rosters, script events, collect metrics."""

from __future__ import annotations

import dataclasses
import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .. import launcher
from ..assembly import AssemblySpec, Registry, load_assembly, load_registry
from ..fabric import FabricMetrics, Network, TopologySpec, create_network, load_topology
from ..runtime import ComponentSpec, default_registry


class ScenarioError(Exception):
    pass


@dataclass(frozen=True)
class ProbeSpec:
    """A bare measurement subscriber; never part of the component roster."""

    name: str
    node: str
    key: str
    record: bool = False


@dataclass
class ProbeResult:
    bytes: int = 0
    count: int = 0
    samples: list[tuple[float, float, str]] = field(default_factory=list)


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    topology: TopologySpec
    assemblies: tuple[AssemblySpec, ...]
    registry: dict
    services: tuple[launcher.ServiceAssignment, ...] = ()
    events: tuple[dict, ...] = ()
    duration_ms: float = 30_000.0
    jitter_ms: float = 0.0
    probes: tuple[ProbeSpec, ...] = ()
    param_overrides: dict = field(default_factory=dict)
    aggregate_tf: str | None = None
    thresholds: dict = field(default_factory=dict)
    metrics_of_interest: tuple[str, ...] = ()

    def with_topology(self, topology: TopologySpec) -> "ScenarioSpec":
        return dataclasses.replace(self, topology=topology)

    def validate(self) -> None:
        node_names = {n.name for n in self.topology.nodes}
        for probe in self.probes:
            if probe.node not in node_names:
                raise ScenarioError(f"probe {probe.name!r} on unknown node {probe.node!r}")
        for event in self.events:
            t = float(event.get("t", 0.0))
            if not 0.0 <= t <= self.duration_ms:
                raise ScenarioError(f"event at {t} outside scenario duration")
        for assembly in self.assemblies:
            for _, mid in assembly.instances:
                if mid not in self.registry:
                    raise ScenarioError(f"assembly references unknown module {mid!r}")


@dataclass
class ScenarioResult:
    metrics: FabricMetrics
    roster: tuple[str, ...]
    core_counts: dict[str, int]
    statuses: list[launcher.LaunchStatus]
    probes: dict[str, ProbeResult]
    network: Network

    def components(self) -> dict[str, object]:
        out: dict[str, object] = {}
        for status in self.statuses:
            out.update(status.components)
        return out


def _patched(spec: ComponentSpec, scenario: ScenarioSpec) -> ComponentSpec:
    patch = scenario.param_overrides.get(spec.name)
    if patch:
        spec = dataclasses.replace(spec, params={**spec.params, **patch})
    if scenario.aggregate_tf and spec.core == "location_publisher":
        spec = dataclasses.replace(
            spec, params={**spec.params, "aggregate_key": scenario.aggregate_tf}
        )
    return spec


def run_scenario(spec: ScenarioSpec, mode: str, seed: int) -> ScenarioResult:
    """Deterministic single run: same (spec, mode, seed) replays identically."""
    spec.validate()
    topology = dataclasses.replace(spec.topology, mode=mode, seed=seed)
    component_registry = default_registry()

    plans: list[launcher.LaunchPlan] = []
    for assembly in spec.assemblies:
        mods = {iid: spec.registry[mid] for iid, mid in assembly.instances}
        hosts = sorted({m.host for m in mods.values() if m.host})
        for host in hosts:
            plan = launcher.plan_launch(
                assembly, host, spec.registry, component_registry
            )
            plans.append(plan)
    by_host: dict[str, list[launcher.LaunchEntry]] = {}
    for svc in spec.services:
        by_host.setdefault(svc.host, []).append(
            launcher.LaunchEntry(spec=svc.spec, virtual_substitution=True)
        )
    for host in sorted(by_host):
        plans.append(launcher.LaunchPlan(host=host, entries=tuple(by_host[host])))
    plans = [
        launcher.LaunchPlan(
            host=plan.host,
            entries=tuple(
                dataclasses.replace(e, spec=_patched(e.spec, spec))
                for e in plan.entries
            ),
        )
        for plan in plans
    ]

    network = create_network(topology)
    statuses: list[launcher.LaunchStatus] = []
    rng = random.Random(seed ^ 0x5EED)
    for plan in plans:
        delay = rng.uniform(0.0, spec.jitter_ms) if spec.jitter_ms > 0 else 0.0
        network.schedule(
            delay,
            lambda p=plan: statuses.append(
                launcher.start(p, network, component_registry)
            ),
        )

    probe_results: dict[str, ProbeResult] = {}
    for probe in spec.probes:
        result = ProbeResult()
        probe_results[probe.name] = result

        def on_sample(sample, res=result, rec=probe.record):
            res.bytes += len(sample.payload)
            res.count += 1
            if rec:
                res.samples.append(
                    (sample.timestamp, network.now, str(sample.key))
                )

        network.declare_endpoint(probe.node, "subscriber", probe.key, on_sample)

    for event in spec.events:
        kind = event["kind"]
        t = float(event.get("t", 0.0))
        if kind in ("link_down", "link_up"):
            network.schedule_link_event(
                tuple(event["link"]), t, "down" if kind == "link_down" else "up"
            )
        elif kind == "publish":
            node, key = event["node"], event["key"]
            payload = event.get("text", "").encode()

            def do_publish(n=node, k=key, p=payload):
                ep = network.declare_endpoint(n, "publisher", k)
                network.publish(ep, p)

            network.schedule(t, do_publish)
        elif kind == "stop_component":
            name = event["name"]

            def do_stop(target=name):
                for status in statuses:
                    runner = status.runners.get(target)
                    if runner is not None:
                        runner.stop()

            network.schedule(t, do_stop)
        else:
            raise ScenarioError(f"unknown event kind {kind!r}")

    metrics = network.run_until(spec.duration_ms)
    for status in statuses:
        status.refresh()
    roster = tuple(
        sorted(name for status in statuses for name in status.components)
    )
    core_counts: dict[str, int] = {}
    for status in statuses:
        for comp in status.components.values():
            core_counts[comp.spec.core] = core_counts.get(comp.spec.core, 0) + 1
    return ScenarioResult(
        metrics=metrics,
        roster=roster,
        core_counts=dict(sorted(core_counts.items())),
        statuses=statuses,
        probes=probe_results,
        network=network,
    )


def load_scenario(path: str | Path) -> ScenarioSpec:
    """Load a scenario document; generator documents delegate to builders."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if "generator" in doc:
        from . import library

        builder = library.BUILDERS.get(doc["generator"])
        if builder is None:
            raise ScenarioError(f"unknown scenario generator {doc['generator']!r}")
        params = dict(doc.get("params", {}))
        return builder(**params)
    base = path.parent
    topology_doc = doc["topology"]
    if isinstance(topology_doc, str):
        topology = load_topology(base / topology_doc)
    else:
        topology = TopologySpec.from_dict(topology_doc)
    registry: Registry = {}
    if "modules" in doc:
        registry = load_registry(base / doc["modules"])
    assemblies = tuple(
        load_assembly(base / ref) for ref in doc.get("assemblies", [])
    )
    services = tuple(
        launcher.ServiceAssignment.from_dict(s) for s in doc.get("services", [])
    )
    return ScenarioSpec(
        name=doc.get("name", path.stem),
        topology=topology,
        assemblies=assemblies,
        registry=registry,
        services=services,
        events=tuple(doc.get("events", [])),
        duration_ms=float(doc.get("duration_ms", 30_000.0)),
        jitter_ms=float(doc.get("jitter_ms", 0.0)),
        probes=tuple(
            ProbeSpec(p["name"], p["node"], p["key"], p.get("record", False))
            for p in doc.get("probes", [])
        ),
        param_overrides=dict(doc.get("param_overrides", {})),
        aggregate_tf=doc.get("aggregate_tf"),
        thresholds=dict(doc.get("thresholds", {})),
        metrics_of_interest=tuple(doc.get("metrics_of_interest", [])),
    )

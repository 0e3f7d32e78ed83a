"""Canonical scenario builders.

* ``storm`` — N robots declare everything at nearly the same instant
  behind one router; with ground control attached this is the
  seven-robot startup measurement.
* ``flap`` — the storm topology with one ground-control link cycling
  down and up, for recovery-time comparison.
* ``dragon_x2`` — two four-module assemblies operated concurrently by
  ground control, 60 components in total, with scoped- and
  aggregate-transform probes.
* ``stable`` — beacon robots behind a capped trunk, the raw material
  for the max-stable-robot-count search.
"""

from __future__ import annotations

import dataclasses

from .. import launcher
from ..assembly import (
    AssemblySpec,
    Attachment,
    JointSpec,
    ModuleDescriptor,
    PortSpec,
    Registry,
)
from ..fabric import LinkSpec, NodeSpec, TopologySpec
from ..runtime import ComponentSpec
from ..runtime.cores import goal_key
from .scenario import ProbeSpec, ScenarioSpec


def _limb_module(mid: str, host: str | None) -> ModuleDescriptor:
    return ModuleDescriptor(
        id=mid, family="G-line", revision="V1", kind="limb", dof=3,
        joints=(
            JointSpec("j1", (0.0, 0.0, 1.0), (0.1, 0.0, 0.05)),
            JointSpec("j2", (0.0, 1.0, 0.0), (0.25, 0.0, 0.0)),
            JointSpec("j3", (0.0, 1.0, 0.0), (0.25, 0.0, 0.0)),
        ),
        host=host,
        ports=(PortSpec("mount", "base", (0.0, 0.0, 0.0)),),
        calibration={"motor_rate": 1.2, "max_step": 0.05},
    )


def _wheel_module(mid: str, host: str | None) -> ModuleDescriptor:
    return ModuleDescriptor(
        id=mid, family="H-line", revision="V1", kind="wheel", dof=1,
        joints=(JointSpec("w1", (0.0, 1.0, 0.0), (0.05, 0.0, -0.02)),),
        host=host,
        ports=(PortSpec("mount", "base", (0.0, 0.0, 0.0)),),
        calibration={"motor_rate": 2.0, "max_step": 0.1},
    )


def _frame_module(mid: str) -> ModuleDescriptor:
    return ModuleDescriptor(
        id=mid, family="frame", revision="V1", kind="base", dof=0, joints=(),
        host=None,
        ports=(
            PortSpec("fl", "base", (0.2, 0.15, 0.0)),
            PortSpec("fr", "base", (0.2, -0.15, 0.0)),
            PortSpec("rl", "base", (-0.2, 0.15, 0.0)),
            PortSpec("rr", "base", (-0.2, -0.15, 0.0)),
        ),
    )


def _operator(name: str, host: str, core: str, controls: dict[str, list[str]],
              period: float) -> launcher.ServiceAssignment:
    instances = sorted(controls)
    return launcher.ServiceAssignment(
        spec=ComponentSpec(
            name=name, core=core,
            bindings={"goal": tuple(goal_key(i) for i in instances)},
            executor=("periodic", period),
            params={"controls": controls},
        ),
        host=host,
    )


def _watcher(name: str, host: str, core: str, keys: tuple[str, ...]):
    return launcher.ServiceAssignment(
        spec=ComponentSpec(
            name=name, core=core, bindings={"watch": keys},
            executor=("event_driven",),
        ),
        host=host,
    )


def storm(robots: int = 7, gc: bool = True, bandwidth_kbps: float = 2000.0,
          duration_ms: float = 25_000.0, jitter_ms: float = 500.0) -> ScenarioSpec:
    registry: Registry = {}
    assemblies = []
    nodes = [NodeSpec("hub", "router")]
    links = []
    for k in range(robots):
        host = f"r{k:02d}"
        mid = f"{host}-arm"
        registry[mid] = _limb_module(mid, host)
        assemblies.append(
            AssemblySpec(
                name=f"robot{k:02d}",
                instances=((f"{host}m", mid),),
                attachments=(),
                root=f"{host}m",
            )
        )
        nodes.append(NodeSpec(host))
        links.append(
            LinkSpec(host, "hub", latency_ms=2.0, bandwidth_kbps=bandwidth_kbps)
        )
    services: list[launcher.ServiceAssignment] = []
    if gc:
        for gc_host, latency in (("gc-ops", 8.0), ("gc-mon", 8.0), ("gc-arch", 8.0)):
            nodes.append(NodeSpec(gc_host))
            links.append(
                LinkSpec(gc_host, "hub", latency_ms=latency,
                         bandwidth_kbps=bandwidth_kbps)
            )
        half = robots // 2
        services.append(_operator(
            "gc/human1", "gc-ops", "human_operator",
            {f"r{k:02d}m": [f"r{k:02d}m/j1", f"r{k:02d}m/j2", f"r{k:02d}m/j3"]
             for k in range(half)},
            period=2000.0,
        ))
        services.append(_operator(
            "gc/auto1", "gc-ops", "autonomous_operator",
            {f"r{k:02d}m": [f"r{k:02d}m/j1", f"r{k:02d}m/j2", f"r{k:02d}m/j3"]
             for k in range(half, robots)},
            period=1500.0,
        ))
        services.append(_watcher("gc/mon-joints", "gc-mon", "data_monitor",
                                 ("joints/**",)))
        services.append(_watcher("gc/mon-tf", "gc-mon", "data_monitor", ("tf/**",)))
        services.append(_watcher("gc/mon-health", "gc-mon", "data_monitor",
                                 ("health/**",)))
        services.append(_watcher("gc/archive", "gc-arch", "data_archiver", ("**",)))
    return ScenarioSpec(
        name=f"storm-{robots}" + ("" if gc else "-bare"),
        topology=TopologySpec(tuple(nodes), tuple(links), "routed", 0),
        assemblies=tuple(assemblies),
        registry=registry,
        services=tuple(services),
        duration_ms=duration_ms,
        jitter_ms=jitter_ms,
        thresholds={
            "startup_bytes_ratio_min": 10.0,
            "startup_time_ratio_min": 5.0,
            "stutter_ratio_min": 5.0,
        },
        metrics_of_interest=(
            "total_discovery_bytes", "median_startup_time_ms",
            "median_stutter_window_ms", "peak_bandwidth_kbps",
        ),
    )


def flap(robots: int = 7, bandwidth_kbps: float = 2000.0,
         down_ms: float = 12_000.0, up_ms: float = 16_000.0,
         duration_ms: float = 28_000.0) -> ScenarioSpec:
    base = storm(robots=robots, gc=True, bandwidth_kbps=bandwidth_kbps,
                 duration_ms=duration_ms, jitter_ms=400.0)
    return dataclasses.replace(
        base,
        name=f"flap-{robots}",
        events=(
            {"kind": "link_down", "t": down_ms, "link": ["gc-mon", "hub"]},
            {"kind": "link_up", "t": up_ms, "link": ["gc-mon", "hub"]},
        ),
        thresholds={"recovery_ordering": True},
        metrics_of_interest=("recovery_times",),
    )


def dragon_pair() -> tuple[Registry, tuple[AssemblySpec, AssemblySpec]]:
    registry: Registry = {}
    assemblies = []
    for prefix in ("dragon1", "dragon2"):
        frame_id = f"{prefix}-frame"
        registry[frame_id] = _frame_module(frame_id)
        parts = {
            "limbL": (_limb_module, "fl"),
            "limbR": (_limb_module, "fr"),
            "wheelL": (_wheel_module, "rl"),
            "wheelR": (_wheel_module, "rr"),
        }
        instances = [(f"{prefix}-frame", frame_id)]
        attachments = []
        for part, (factory, port) in parts.items():
            mid = f"{prefix}-{part}"
            registry[mid] = factory(mid, f"{prefix}-{part}-pc")
            instances.append((f"{prefix}-{part}", mid))
            attachments.append(
                Attachment(f"{prefix}-frame", port, f"{prefix}-{part}", "mount")
            )
        assemblies.append(
            AssemblySpec(
                name=prefix,
                instances=tuple(instances),
                attachments=tuple(attachments),
                root=f"{prefix}-frame",
            )
        )
    return registry, tuple(assemblies)


def dragon_x2(duration_ms: float = 30_250.0) -> ScenarioSpec:
    registry, assemblies = dragon_pair()
    nodes = [
        NodeSpec("r-dragon1", "router"),
        NodeSpec("r-dragon2", "router"),
        NodeSpec("r-gc", "router"),
        NodeSpec("gc-ops"),
        NodeSpec("gc-mon"),
        NodeSpec("gc-arch"),
        NodeSpec("earth"),
    ]
    links = [
        LinkSpec("r-dragon1", "r-gc", latency_ms=10.0, bandwidth_kbps=4000.0),
        LinkSpec("r-dragon2", "r-gc", latency_ms=10.0, bandwidth_kbps=4000.0),
        LinkSpec("r-dragon1", "r-dragon2", latency_ms=12.0, bandwidth_kbps=4000.0),
        LinkSpec("gc-ops", "r-gc", latency_ms=1.0, bandwidth_kbps=50_000.0),
        LinkSpec("gc-mon", "r-gc", latency_ms=1.0, bandwidth_kbps=50_000.0),
        LinkSpec("gc-arch", "r-gc", latency_ms=1.0, bandwidth_kbps=50_000.0),
        LinkSpec("earth", "r-gc", latency_ms=20.0, bandwidth_kbps=8000.0),
    ]
    for prefix in ("dragon1", "dragon2"):
        for part in ("limbL", "limbR", "wheelL", "wheelR"):
            host = f"{prefix}-{part}-pc"
            nodes.append(NodeSpec(host))
            links.append(LinkSpec(host, f"r-{prefix}", latency_ms=2.0,
                                  bandwidth_kbps=20_000.0))
        # redundant wired fallback inside each assembly
        links.append(LinkSpec(f"{prefix}-limbL-pc", f"{prefix}-limbR-pc",
                              latency_ms=0.2, bandwidth_kbps=100_000.0))

    def joints(prefix, part, n):
        names = ["j1", "j2", "j3"][:n] if n > 1 else ["w1"]
        return [f"{prefix}-{part}/{j}" for j in names]

    services = [
        _operator("gc/human1", "gc-ops", "human_operator",
                  {"dragon1-limbL": joints("dragon1", "limbL", 3),
                   "dragon1-wheelL": joints("dragon1", "wheelL", 1)}, 2000.0),
        _operator("gc/human2", "gc-ops", "human_operator",
                  {"dragon1-limbR": joints("dragon1", "limbR", 3),
                   "dragon1-wheelR": joints("dragon1", "wheelR", 1)}, 2000.0),
        _operator("gc/human3", "gc-ops", "human_operator",
                  {"dragon2-limbL": joints("dragon2", "limbL", 3),
                   "dragon2-wheelL": joints("dragon2", "wheelL", 1)}, 2000.0),
    ]
    auto_targets = [
        ("dragon2-limbR", 3), ("dragon2-wheelR", 1), ("dragon2-limbL", 3),
        ("dragon2-wheelL", 1), ("dragon1-limbL", 3), ("dragon1-limbR", 3),
    ]
    for k, (inst, dof) in enumerate(auto_targets, start=1):
        prefix, part = inst.split("-", 1)
        services.append(_operator(
            f"gc/auto{k}", "gc-ops", "autonomous_operator",
            {inst: joints(prefix, part, dof)}, 1500.0,
        ))
    services.extend([
        _watcher("gc/mon-joints", "gc-mon", "data_monitor", ("joints/**",)),
        _watcher("gc/mon-tf", "gc-mon", "data_monitor", ("tf/**",)),
        _watcher("gc/mon-health", "gc-mon", "data_monitor", ("health/**",)),
        _watcher("gc/mon-alerts", "gc-mon", "data_monitor",
                 ("alerts/**", "goals/**")),
        _watcher("gc/mon-wide", "gc-mon", "data_monitor",
                 ("joints/**", "tf/**")),
        _watcher("gc/archive1", "gc-arch", "data_archiver", ("**",)),
        _watcher("gc/archive2", "gc-arch", "data_archiver", ("**",)),
    ])
    return ScenarioSpec(
        name="dragon-x2",
        topology=TopologySpec(tuple(nodes), tuple(links), "routed", 0),
        assemblies=assemblies,
        registry=registry,
        services=tuple(services),
        duration_ms=duration_ms,
        jitter_ms=0.0,
        probes=(
            ProbeSpec("dragon1_base", "earth", "tf/world/dragon1/base"),
            ProbeSpec("aggregate", "earth", "tf_all"),
        ),
        param_overrides={
            "dragon1-limbL/location_publisher_a": {
                "frame": "dragon1/base", "parent": "world"},
            "dragon2-limbL/location_publisher_a": {
                "frame": "dragon2/base", "parent": "world"},
        },
        aggregate_tf="tf_all",
        metrics_of_interest=("delivered_count", "mean_delivery_latency_ms"),
    )


def stable(robots: int, trunk_kbps: float = 400.0,
           duration_ms: float = 45_000.0) -> ScenarioSpec:
    """Beacon robots behind one capped trunk, three broad GC listeners."""
    nodes = [NodeSpec("hub", "router"), NodeSpec("rgc", "router")]
    links = [LinkSpec("hub", "rgc", latency_ms=8.0, bandwidth_kbps=trunk_kbps)]
    services = []
    registry: Registry = {}
    for k in range(robots):
        host = f"r{k:02d}"
        nodes.append(NodeSpec(host))
        links.append(LinkSpec(host, "hub", latency_ms=2.0, bandwidth_kbps=20_000.0))
        services.append(launcher.ServiceAssignment(
            spec=ComponentSpec(
                name=f"{host}/beacon", core="beacon",
                bindings={"out": (f"telemetry/{host}/state",)},
                executor=("periodic", 50.0),
                params={"payload_bytes": 256},
            ),
            host=host,
        ))
    probes = [ProbeSpec("beats", "gc-a", "health/**", record=True)]
    for gc_host in ("gc-a", "gc-b", "gc-c"):
        nodes.append(NodeSpec(gc_host))
        links.append(LinkSpec(gc_host, "rgc", latency_ms=1.0,
                              bandwidth_kbps=20_000.0))
        probes.append(ProbeSpec(f"watch-{gc_host}", gc_host, "telemetry/**",
                                record=gc_host == "gc-a"))
    return ScenarioSpec(
        name=f"stable-{robots}",
        topology=TopologySpec(tuple(nodes), tuple(links), "routed", 0),
        assemblies=(),
        registry=registry,
        services=tuple(services),
        duration_ms=duration_ms,
        jitter_ms=0.0,
        probes=tuple(probes),
        metrics_of_interest=("mean_delivery_latency_ms", "peak_bandwidth_kbps"),
    )


BUILDERS = {
    "storm": storm,
    "flap": flap,
    "dragon_x2": dragon_x2,
    "stable": stable,
}

"""Composable software components bound to the fabric by keys.

A component is a core plus injections (appended handlers) plus overrides
(replaced handler slots), wired to subscriptions and publications through
its binding map. Components never reference each other; every interaction
travels as samples on keys.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..keyspace import KeyExpr, Sample, parse_keyexpr

HEARTBEAT_PERIOD_MS = 1000.0


class RuntimeError_(Exception):
    pass


class UnknownCore(RuntimeError_):
    pass


class UnknownInjection(RuntimeError_):
    pass


class UnknownOverride(RuntimeError_):
    pass


class OverrideConflict(RuntimeError_):
    pass


class UnboundPoint(RuntimeError_):
    pass


@dataclass(frozen=True)
class ComponentSpec:
    name: str
    core: str
    injections: tuple[str, ...] = ()
    overrides: tuple[str, ...] = ()
    bindings: dict[str, tuple[str, ...]] = field(default_factory=dict)
    executor: tuple = ("event_driven",)  # or ("periodic", period_ms)
    params: dict = field(default_factory=dict)
    heartbeat: bool = True

    def __post_init__(self) -> None:
        for point, keys in self.bindings.items():
            for key in keys:
                parse_keyexpr(key)  # raises on malformed bindings
        if self.executor[0] not in ("event_driven", "periodic"):
            raise RuntimeError_(f"unknown executor policy {self.executor!r}")

    @staticmethod
    def from_dict(doc: dict) -> "ComponentSpec":
        executor = doc.get("executor", "event_driven")
        if isinstance(executor, str):
            policy = (executor,) if executor == "event_driven" else ("periodic", 100.0)
        else:
            policy = (executor[0], float(executor[1]))
        return ComponentSpec(
            name=doc["name"],
            core=doc["core"],
            injections=tuple(doc.get("injections", [])),
            overrides=tuple(doc.get("overrides", [])),
            bindings={
                point: tuple([keys] if isinstance(keys, str) else keys)
                for point, keys in doc.get("bindings", {}).items()
            },
            executor=policy,
            params=dict(doc.get("params", {})),
            heartbeat=bool(doc.get("heartbeat", True)),
        )


class Core:
    """Base class for main-logic blocks. Subclasses fill the handler slots."""

    SUB_POINTS: tuple[str, ...] = ()
    PUB_POINTS: tuple[str, ...] = ()
    hardware_facing = False

    def __init__(self, spec: ComponentSpec):
        self.spec = spec

    def default_handlers(self) -> dict[str, list]:
        """Extension-point slots with the core's own handlers."""
        return {"init": [], "tick": [], "shutdown": []}


class Injection:
    """Extends a core: handlers appended after the existing slot content."""

    def handlers(self) -> dict[str, list]:
        return {}


class Override:
    """Alters a core: the targeted slots are replaced outright."""

    def handlers(self) -> dict[str, list]:
        return {}


@dataclass
class ComponentRegistry:
    cores: dict[str, type] = field(default_factory=dict)
    injections: dict[str, Injection] = field(default_factory=dict)
    overrides: dict[str, Override] = field(default_factory=dict)


@dataclass
class TraceEntry:
    time: float
    kind: str  # init | sample | tick | shutdown | panic
    point: str


@dataclass
class ComponentTrace:
    entries: list[TraceEntry] = field(default_factory=list)

    def add(self, time: float, kind: str, point: str = "") -> None:
        self.entries.append(TraceEntry(time, kind, point))

    def kinds(self) -> list[str]:
        return [e.kind for e in self.entries]

    def to_lines(self) -> list[str]:
        return [f"t={e.time!r} kind={e.kind} point={e.point}" for e in self.entries]


class ComposedComponent:
    """A core with its injections and overrides resolved into slots."""

    def __init__(self, spec: ComponentSpec, core: Core, slots: dict[str, list]):
        self.spec = spec
        self.name = spec.name
        self.core = core
        self.slots = slots
        self.state = "composed"
        self.trace = ComponentTrace()
        self.store: dict = {}

    @property
    def quarantined(self) -> bool:
        return self.state == "quarantined"


def compose(spec: ComponentSpec, registry: ComponentRegistry) -> ComposedComponent:
    """Resolve identifiers and build the slot table.

    Per extension point the slot holds the core defaults, then injections
    in declaration order; an override then replaces the whole slot. Two
    overrides claiming one point cannot compose.
    """
    core_cls = registry.cores.get(spec.core)
    if core_cls is None:
        raise UnknownCore(f"unknown core {spec.core!r}")
    core = core_cls(spec)
    slots: dict[str, list] = {}
    for point, handlers in core.default_handlers().items():
        slots[point] = list(handlers)
    for name in spec.injections:
        injection = registry.injections.get(name)
        if injection is None:
            raise UnknownInjection(f"unknown injection {name!r}")
        for point, handlers in injection.handlers().items():
            slots.setdefault(point, []).extend(handlers)
    claimed: dict[str, str] = {}
    for name in spec.overrides:
        override = registry.overrides.get(name)
        if override is None:
            raise UnknownOverride(f"unknown override {name!r}")
        for point, handlers in override.handlers().items():
            if point in claimed:
                raise OverrideConflict(
                    f"point {point!r} targeted by both {claimed[point]!r} and {name!r}"
                )
            claimed[point] = name
            slots[point] = list(handlers)
    return ComposedComponent(spec, core, slots)


class ComponentContext:
    """What a handler may touch: its own state, time, and publications."""

    def __init__(self, runner: "ComponentRunner"):
        self._runner = runner
        self.params = runner.component.spec.params
        self.state = runner.component.store
        self.name = runner.component.name

    @property
    def now(self) -> float:
        return self._runner.network.now

    def publish(self, point: str, payload: bytes, key: str | None = None) -> None:
        self._runner.publish(point, payload, key)

    def publish_on(self, key: str, payload: bytes) -> None:
        self._runner.publish_on(key, payload)

    def announce_on(self, key: str) -> None:
        self._runner.ensure_adhoc(key)

    def announce_transform(self, parent: str, frame: str) -> None:
        self._runner.ensure_transform(parent, frame)

    def publish_transform(self, tf) -> None:
        self._runner.publish_transform(tf)


class ComponentRunner:
    """Drives one composed component on one fabric node.

    Handlers of a single component never run concurrently; everything is
    serialized through the network's event queue. Heartbeats are emitted
    by the runner itself, not by handlers, at 1 Hz simulated.
    """

    def __init__(self, component: ComposedComponent, network, node: str):
        self.component = component
        self.network = network
        self.node = node
        self.ctx = ComponentContext(self)
        self._sub_eps: list[int] = []
        self._pub_eps: dict[tuple[str, str], int] = {}  # (point, key) -> endpoint
        self._hb_ep: int | None = None
        self._panic_ep: int | None = None
        self._tf_prefix: str | None = None

    # -- lifecycle -----------------------------------------------------

    def start(self) -> None:
        spec = self.component.spec
        core = self.component.core
        for point in core.SUB_POINTS:
            for key in spec.bindings.get(point, ()):
                ep = self.network.declare_endpoint(
                    self.node, "subscriber", key,
                    on_sample=lambda s, p=point: self._on_sample(p, s),
                )
                self._sub_eps.append(ep)
        for point in core.PUB_POINTS:
            if point == "transform":
                prefix = spec.bindings.get(point, ("tf",))[0]
                self._tf_prefix = prefix
                continue
            for key in spec.bindings.get(point, ()):
                self._pub_eps[(point, key)] = self.network.declare_endpoint(
                    self.node, "publisher", key
                )
        if spec.heartbeat:
            self._hb_ep = self.network.declare_endpoint(
                self.node, "publisher", f"health/{self.component.name}/alive"
            )
            self._panic_ep = self.network.declare_endpoint(
                self.node, "publisher", f"health/{self.component.name}/panic"
            )
            self.network.schedule(
                self.network.now + HEARTBEAT_PERIOD_MS, self._heartbeat
            )
        self.component.state = "running"
        self._fire("init", None)
        if spec.executor[0] == "periodic":
            period = float(spec.executor[1])
            self.network.schedule(self.network.now + period, self._tick)

    def stop(self) -> None:
        if self.component.state == "running":
            self._fire("shutdown", None)
        for ep in self._sub_eps:
            self.network.undeclare_endpoint(ep)
        for ep in self._pub_eps.values():
            self.network.undeclare_endpoint(ep)
        for ep in (self._hb_ep, self._panic_ep):
            if ep is not None:
                self.network.undeclare_endpoint(ep)
        self._sub_eps = []
        self._pub_eps = {}
        self._hb_ep = self._panic_ep = None
        if self.component.state != "quarantined":
            self.component.state = "stopped"

    def endpoint_ids(self) -> list[int]:
        ids = list(self._sub_eps) + list(self._pub_eps.values())
        ids += [ep for ep in (self._hb_ep, self._panic_ep) if ep is not None]
        return ids

    # -- dispatch ------------------------------------------------------

    def _fire(self, point: str, event) -> None:
        comp = self.component
        if comp.state != "running":
            return
        kind = {"init": "init", "tick": "tick", "shutdown": "shutdown"}.get(
            point, "sample"
        )
        comp.trace.add(self.network.now, kind, point)
        for handler in comp.slots.get(point, ()):
            try:
                handler(self.ctx, event)
            except Exception:  # noqa: BLE001 - quarantine, never unwind the engine
                comp.state = "quarantined"
                comp.trace.add(self.network.now, "panic", point)
                if self._panic_ep is not None:
                    self.network.publish(self._panic_ep, b"panic")
                return

    def _on_sample(self, point: str, sample: Sample) -> None:
        self._fire(point, sample)

    def _tick(self) -> None:
        if self.component.state != "running":
            return
        self._fire("tick", None)
        if self.component.state == "running":
            period = float(self.component.spec.executor[1])
            self.network.schedule(self.network.now + period, self._tick)

    def _heartbeat(self) -> None:
        if self.component.state != "running" or self._hb_ep is None:
            return
        self.network.publish(self._hb_ep, b"alive")
        self.network.schedule(self.network.now + HEARTBEAT_PERIOD_MS, self._heartbeat)

    # -- publications --------------------------------------------------

    def publish(self, point: str, payload: bytes, key: str | None = None) -> None:
        candidates = [k for (p, k) in self._pub_eps if p == point]
        if not candidates:
            raise UnboundPoint(f"{self.component.name}: no publication at {point!r}")
        if key is None:
            if len(candidates) > 1:
                raise UnboundPoint(
                    f"{self.component.name}: point {point!r} binds several keys"
                )
            key = candidates[0]
        ep = self._pub_eps.get((point, key))
        if ep is None:
            raise UnboundPoint(f"{self.component.name}: {point!r} not bound to {key!r}")
        self.network.publish(ep, payload)

    def ensure_adhoc(self, key: str) -> int:
        ep = self._pub_eps.get(("adhoc", key))
        if ep is None:
            ep = self.network.declare_endpoint(self.node, "publisher", key)
            self._pub_eps[("adhoc", key)] = ep
        return ep

    def publish_on(self, key: str, payload: bytes) -> None:
        """Publish on an ad-hoc key, declaring the endpoint on first use."""
        self.network.publish(self.ensure_adhoc(key), payload)

    def ensure_transform(self, parent: str, frame: str) -> int:
        if self._tf_prefix is None:
            raise UnboundPoint(
                f"{self.component.name}: no transform publication point"
            )
        key = f"{self._tf_prefix}/{parent}/{frame}"
        ep = self._pub_eps.get(("transform", key))
        if ep is None:
            ep = self.network.declare_endpoint(self.node, "publisher", key)
            self._pub_eps[("transform", key)] = ep
        return ep

    def publish_transform(self, tf) -> None:
        """Publish a pose on its scoped key, ``<prefix>/<parent>/<frame>``."""
        ep = self.ensure_transform(tf.parent, tf.frame)
        self.network.publish(ep, tf.encode())


def run_component(
    component: ComposedComponent, network, node: str, until: float
) -> ComponentTrace:
    """Start `component` on `node` and drive the fabric until `until`."""
    runner = ComponentRunner(component, network, node)
    runner.start()
    network.run_until(until)
    return component.trace

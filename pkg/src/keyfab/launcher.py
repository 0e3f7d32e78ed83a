"""Per-host launch planning and in-process component bring-up.

Given an assembly and a host identity, the planner picks exactly the
components of modules hosted there; on any other machine the
hardware-facing cores are swapped for their virtual counterparts. Ground
control services are assigned to hosts explicitly and planned the same
way. Start and stop run against the in-process fabric.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .assembly import (
    AssemblySpec,
    ModuleDescriptor,
    Registry,
    RobotDescription,
    component_roster,
    derive_host_configs,
    derive_kinematics,
)
from .runtime import (
    ComponentRegistry,
    ComponentSpec,
    ComponentRunner,
    compose,
    joint_state_key,
    joint_target_key,
)
from .runtime.cores import goal_key


class LaunchError(Exception):
    pass


class UnknownHost(LaunchError):
    pass


# hardware-facing cores and their simulation stand-ins
VIRTUAL_COUNTERPARTS = {"motor": "virtual_motor"}


@dataclass(frozen=True)
class ServiceAssignment:
    spec: ComponentSpec
    host: str

    @staticmethod
    def from_dict(doc: dict) -> "ServiceAssignment":
        return ServiceAssignment(
            spec=ComponentSpec.from_dict(doc), host=doc["host"]
        )


@dataclass(frozen=True)
class LaunchEntry:
    spec: ComponentSpec
    virtual_substitution: bool


@dataclass(frozen=True)
class LaunchPlan:
    host: str
    entries: tuple[LaunchEntry, ...]

    def component_names(self) -> list[str]:
        return [e.spec.name for e in self.entries]


@dataclass
class EntryStatus:
    name: str
    state: str  # pending | running | quarantined | stopped
    started_at: float | None = None
    stopped_at: float | None = None
    error: str | None = None


@dataclass
class LaunchStatus:
    host: str
    entries: list[EntryStatus] = field(default_factory=list)
    runners: dict[str, ComponentRunner] = field(default_factory=dict)
    components: dict[str, object] = field(default_factory=dict)

    def running(self) -> list[str]:
        return [e.name for e in self.entries if e.state == "running"]

    def endpoint_ids(self) -> list[int]:
        ids: list[int] = []
        for runner in self.runners.values():
            ids.extend(runner.endpoint_ids())
        return ids

    def refresh(self) -> None:
        """Pull quarantine transitions out of the live components."""
        for entry in self.entries:
            comp = self.components.get(entry.name)
            if comp is not None and comp.state == "quarantined":
                entry.state = "quarantined"


def _module_chain_params(description: RobotDescription, instance: str) -> list[dict]:
    prefix = f"{instance}/"
    return [
        {
            "link": n.link,
            "parent_joint": n.parent_joint,
            "parent_link": n.parent_link if n.parent_link and n.parent_link.startswith(prefix) else None,
            "axis": list(n.axis) if n.axis else None,
            "offset": list(n.offset),
            "revolute": n.revolute,
        }
        for n in description.nodes
        if n.link.startswith(prefix)
    ]


def build_module_components(
    instance: str,
    mod: ModuleDescriptor,
    description: RobotDescription,
) -> list[ComponentSpec]:
    """ComponentSpecs for one module instance, per its kind's roster."""
    joints = [j for j in description.joints if j.startswith(f"{instance}/")]
    state_keys = tuple(joint_state_key(j) for j in joints)
    target_keys = tuple(joint_target_key(j) for j in joints)
    cal = mod.calibration
    specs = []
    for role in component_roster(mod):
        name = f"{instance}/{role}"
        if role == "motor":
            specs.append(ComponentSpec(
                name=name, core="motor",
                injections=mod.injections, overrides=mod.overrides,
                bindings={"target": target_keys, "state": state_keys},
                executor=("periodic", 100.0),
                params={
                    "joints": joints,
                    "motor_rate": float(cal.get("motor_rate", 1.0)),
                    **{k: v for k, v in sorted(cal.items())},
                },
            ))
        elif role == "joint_manager":
            specs.append(ComponentSpec(
                name=name, core="joint_manager",
                bindings={
                    "goal": (goal_key(instance),),
                    "state": state_keys,
                    "target": target_keys,
                },
                executor=("periodic", 100.0),
                params={
                    "joints": joints,
                    "max_step": float(cal.get("max_step", 0.05)),
                },
            ))
        elif role == "kinematics_manager":
            specs.append(ComponentSpec(
                name=name, core="kinematics_manager",
                bindings={"state": state_keys, "transform": ("tf",)},
                executor=("periodic", 500.0),
                params={
                    "chain": _module_chain_params(description, instance),
                    "joints": joints,
                    "frame": f"{instance}/tip",
                    "parent": f"{instance}/base",
                },
            ))
        elif role == "health_monitor":
            specs.append(ComponentSpec(
                name=name, core="health_monitor",
                bindings={"beats": ("health/**",), "alerts": (f"alerts/{instance}",)},
                executor=("periodic", 1000.0),
            ))
        elif role.startswith("location_publisher"):
            flavour = "odom" if role.endswith("_a") else "fix"
            specs.append(ComponentSpec(
                name=name, core="location_publisher",
                bindings={"transform": ("tf",)},
                executor=("periodic", 500.0),
                params={"frame": f"{instance}/{flavour}", "parent": "world"},
            ))
    return specs


def _substitute_virtual(
    spec: ComponentSpec, registry: ComponentRegistry
) -> ComponentSpec:
    core_cls = registry.cores.get(spec.core)
    if core_cls is not None and getattr(core_cls, "hardware_facing", False):
        replacement = VIRTUAL_COUNTERPARTS.get(spec.core)
        if replacement is not None:
            return dataclasses.replace(spec, core=replacement)
    return spec


def plan_launch(
    assembly: AssemblySpec,
    host: str,
    registry: Registry,
    component_registry: ComponentRegistry,
    services: tuple[ServiceAssignment, ...] = (),
    sim: bool = False,
) -> LaunchPlan:
    """Everything `host` should run, hardware swapped out when off-robot."""
    description = derive_kinematics(assembly, registry)
    mods = {iid: registry[mid] for iid, mid in assembly.instances}
    robot_hosts = {m.host for m in mods.values() if m.host}
    service_hosts = {s.host for s in services}
    entries: list[LaunchEntry] = []

    def add(spec: ComponentSpec, virtual: bool) -> None:
        final = _substitute_virtual(spec, component_registry) if virtual else spec
        entries.append(LaunchEntry(spec=final, virtual_substitution=virtual))

    if sim:
        for iid, _ in assembly.instances:
            for spec in build_module_components(iid, mods[iid], description):
                add(spec, virtual=True)
        for svc in services:
            if svc.host == host:
                add(svc.spec, virtual=True)
        return LaunchPlan(host=host, entries=tuple(entries))

    if host not in robot_hosts and host not in service_hosts:
        raise UnknownHost(
            f"host {host!r} is neither a robot computer nor a service host"
        )
    is_robot = host in robot_hosts
    for iid, _ in sorted(assembly.instances):
        if mods[iid].host == host:
            for spec in build_module_components(iid, mods[iid], description):
                add(spec, virtual=not is_robot)
    for svc in services:
        if svc.host == host:
            add(svc.spec, virtual=not is_robot)
    return LaunchPlan(host=host, entries=tuple(entries))


def start(
    plan: LaunchPlan, network, component_registry: ComponentRegistry
) -> LaunchStatus:
    """Compose and start every entry; failures quarantine only themselves."""
    status = LaunchStatus(host=plan.host)
    for entry in plan.entries:
        record = EntryStatus(name=entry.spec.name, state="pending")
        status.entries.append(record)
        try:
            component = compose(entry.spec, component_registry)
        except Exception as exc:  # noqa: BLE001 - siblings keep launching
            record.state = "quarantined"
            record.error = str(exc)
            continue
        runner = ComponentRunner(component, network, plan.host)
        runner.start()
        status.components[entry.spec.name] = component
        status.runners[entry.spec.name] = runner
        record.state = "running"
        record.started_at = network.now
    return status


def stop(status: LaunchStatus, network) -> LaunchStatus:
    for entry in status.entries:
        runner = status.runners.get(entry.name)
        if runner is None:
            continue
        runner.stop()
        if entry.state == "running":
            entry.state = "stopped"
        entry.stopped_at = network.now
    return status

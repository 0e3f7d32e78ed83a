"""Compose heterogeneous module descriptors into one robot.

An assembly is a tree of module instances joined port-to-port. From it we
derive the kinematic description (links, revolute joints, fixed mounts)
and one configuration per host computer. Global joint names use the
``<instance>/<joint>`` form so they double as key chunks on the fabric.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

Vec3 = tuple[float, float, float]


class AssemblyError(Exception):
    pass


class InvalidAssembly(AssemblyError):
    pass


@dataclass(frozen=True)
class JointSpec:
    name: str
    axis: Vec3
    offset: Vec3


@dataclass(frozen=True)
class PortSpec:
    name: str
    parent: str  # "base" or "tip"
    offset: Vec3


@dataclass(frozen=True)
class ModuleDescriptor:
    id: str
    family: str
    revision: str
    kind: str  # limb | wheel | gripper | base | other
    dof: int
    joints: tuple[JointSpec, ...]
    host: str | None
    ports: tuple[PortSpec, ...]
    calibration: dict[str, object] = field(default_factory=dict)
    injections: tuple[str, ...] = ()
    overrides: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.dof != len(self.joints):
            raise AssemblyError(
                f"module {self.id!r}: dof {self.dof} != {len(self.joints)} joints"
            )
        names = [p.name for p in self.ports]
        if len(names) != len(set(names)):
            raise AssemblyError(f"module {self.id!r}: duplicate port names")

    def port(self, name: str) -> PortSpec | None:
        for p in self.ports:
            if p.name == name:
                return p
        return None

    @staticmethod
    def from_dict(doc: dict) -> "ModuleDescriptor":
        return ModuleDescriptor(
            id=doc["id"],
            family=doc.get("family", ""),
            revision=doc.get("revision", ""),
            kind=doc.get("kind", "other"),
            dof=int(doc.get("dof", len(doc.get("joints", [])))),
            joints=tuple(
                JointSpec(j["name"], tuple(j["axis"]), tuple(j["offset"]))
                for j in doc.get("joints", [])
            ),
            host=doc.get("host"),
            ports=tuple(
                PortSpec(p["name"], p.get("parent", "base"), tuple(p["offset"]))
                for p in doc.get("ports", [])
            ),
            calibration=dict(doc.get("calibration", {})),
            injections=tuple(doc.get("injections", [])),
            overrides=tuple(doc.get("overrides", [])),
        )


@dataclass(frozen=True)
class Attachment:
    instance_a: str
    port_a: str
    instance_b: str
    port_b: str

    @staticmethod
    def parse(edge: tuple[str, str] | list[str]) -> "Attachment":
        (ia, pa), (ib, pb) = (end.split(".", 1) for end in edge)
        return Attachment(ia, pa, ib, pb)


@dataclass(frozen=True)
class AssemblySpec:
    name: str
    instances: tuple[tuple[str, str], ...]  # (instance id, module id)
    attachments: tuple[Attachment, ...]
    root: str

    @staticmethod
    def from_dict(doc: dict) -> "AssemblySpec":
        return AssemblySpec(
            name=doc["name"],
            instances=tuple((i["id"], i["module"]) for i in doc["instances"]),
            attachments=tuple(Attachment.parse(e) for e in doc.get("attachments", [])),
            root=doc["root"],
        )

    def prefixed(self, prefix: str) -> "AssemblySpec":
        """A copy with every instance id prefixed (for multi-robot scenes)."""
        ren = {iid: f"{prefix}{iid}" for iid, _ in self.instances}
        return AssemblySpec(
            name=self.name,
            instances=tuple((ren[iid], mod) for iid, mod in self.instances),
            attachments=tuple(
                Attachment(ren[a.instance_a], a.port_a, ren[a.instance_b], a.port_b)
                for a in self.attachments
            ),
            root=ren[self.root],
        )


@dataclass(frozen=True)
class TreeNode:
    """One link of the robot description."""

    link: str
    parent_joint: str | None  # None only at the root
    parent_link: str | None
    axis: Vec3 | None  # None for fixed mounts
    offset: Vec3
    revolute: bool


@dataclass(frozen=True)
class RobotDescription:
    name: str
    nodes: tuple[TreeNode, ...]
    joints: tuple[str, ...]  # flat ordered list of revolute joints

    def node_by_link(self, link: str) -> TreeNode | None:
        for n in self.nodes:
            if n.link == link:
                return n
        return None

    @property
    def root_link(self) -> str:
        return self.nodes[0].link

    def children_of(self, link: str) -> list[TreeNode]:
        return [n for n in self.nodes if n.parent_link == link]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "links": [
                {
                    "link": n.link,
                    "parent_joint": n.parent_joint,
                    "parent_link": n.parent_link,
                    "axis": list(n.axis) if n.axis else None,
                    "offset": list(n.offset),
                    "revolute": n.revolute,
                }
                for n in self.nodes
            ],
            "joints": list(self.joints),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


@dataclass(frozen=True)
class HostConfig:
    host: str
    components: tuple[str, ...]
    joints_under_control: tuple[str, ...]
    parameters: dict[str, object]

    def to_dict(self) -> dict:
        return {
            "host": self.host,
            "components": list(self.components),
            "joints_under_control": list(self.joints_under_control),
            "parameters": self.parameters,
        }


@dataclass
class ValidationReport:
    problems: list[tuple[str, str]] = field(default_factory=list)

    def add(self, code: str, detail: str) -> None:
        self.problems.append((code, detail))

    @property
    def ok(self) -> bool:
        return not self.problems

    def codes(self) -> set[str]:
        return {c for c, _ in self.problems}


Registry = dict[str, ModuleDescriptor]


def load_registry(directory: str | Path) -> Registry:
    registry: Registry = {}
    for path in sorted(Path(directory).glob("*.json")):
        with open(path, "r", encoding="utf-8") as fh:
            mod = ModuleDescriptor.from_dict(json.load(fh))
        registry[mod.id] = mod
    return registry


def load_assembly(path: str | Path) -> AssemblySpec:
    with open(path, "r", encoding="utf-8") as fh:
        return AssemblySpec.from_dict(json.load(fh))


def validate_assembly(spec: AssemblySpec, registry: Registry) -> ValidationReport:
    report = ValidationReport()
    ids = [iid for iid, _ in spec.instances]
    if len(ids) != len(set(ids)):
        report.add("DuplicateInstance", "instance ids are not unique")
    instance_mod: dict[str, ModuleDescriptor] = {}
    for iid, mid in spec.instances:
        mod = registry.get(mid)
        if mod is None:
            report.add("UnknownModule", f"{iid} references module {mid!r}")
        else:
            instance_mod[iid] = mod
    if spec.root not in set(ids):
        report.add("UnknownRoot", f"root {spec.root!r} is not an instance")
    used_ports: set[tuple[str, str]] = set()
    adjacency: dict[str, list[str]] = {iid: [] for iid in ids}
    for att in spec.attachments:
        for iid, port in ((att.instance_a, att.port_a), (att.instance_b, att.port_b)):
            if iid not in adjacency:
                report.add("UnknownInstance", f"attachment references {iid!r}")
                continue
            mod = instance_mod.get(iid)
            if mod is not None and mod.port(port) is None:
                report.add("UnknownPort", f"{iid}.{port} does not exist")
            if (iid, port) in used_ports:
                report.add("PortReused", f"{iid}.{port} used twice")
            used_ports.add((iid, port))
        if att.instance_a in adjacency and att.instance_b in adjacency:
            adjacency[att.instance_a].append(att.instance_b)
            adjacency[att.instance_b].append(att.instance_a)
    if spec.root in adjacency:
        seen = {spec.root}
        stack = [spec.root]
        edges = 0
        while stack:
            cur = stack.pop()
            for nxt in adjacency[cur]:
                edges += 1
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        if len(seen) != len(ids):
            report.add("Disconnected", "attachment graph does not reach every instance")
        elif edges // 2 != len(ids) - 1 or len(spec.attachments) != len(ids) - 1:
            report.add("CycleDetected", "attachment graph is not a tree")
    return report


def _module_chain(iid: str, mod: ModuleDescriptor) -> list[TreeNode]:
    """A module's internal serial chain: base link, then one link per joint."""
    nodes = []
    prev = f"{iid}/base"
    for k, joint in enumerate(mod.joints):
        link = f"{iid}/link{k + 1}"
        nodes.append(
            TreeNode(
                link=link,
                parent_joint=f"{iid}/{joint.name}",
                parent_link=prev,
                axis=joint.axis,
                offset=joint.offset,
                revolute=True,
            )
        )
        prev = link
    return nodes


def _tip_link(iid: str, mod: ModuleDescriptor) -> str:
    return f"{iid}/link{mod.dof}" if mod.dof else f"{iid}/base"


def derive_kinematics(spec: AssemblySpec, registry: Registry) -> RobotDescription:
    report = validate_assembly(spec, registry)
    if not report.ok:
        raise InvalidAssembly(f"invalid assembly {spec.name!r}: {report.problems}")
    mods = {iid: registry[mid] for iid, mid in spec.instances}
    children: dict[str, list[Attachment]] = {iid: [] for iid in mods}
    for att in spec.attachments:
        children[att.instance_a].append(att)
        children[att.instance_b].append(att)

    nodes: list[TreeNode] = []
    joints: list[str] = []
    visited: set[str] = set()

    def emit(iid: str, parent_link: str | None, mount_offset: Vec3 | None) -> None:
        visited.add(iid)
        mod = mods[iid]
        base = f"{iid}/base"
        if parent_link is None:
            nodes.append(TreeNode(base, None, None, None, (0.0, 0.0, 0.0), False))
        else:
            nodes.append(
                TreeNode(base, f"{iid}/mount", parent_link, None, mount_offset, False)
            )
        nodes.extend(_module_chain(iid, mod))
        joints.extend(f"{iid}/{j.name}" for j in mod.joints)
        # descend deterministically: by child instance id
        outgoing = []
        for att in children[iid]:
            other, my_port, other_port = (
                (att.instance_b, att.port_a, att.port_b)
                if att.instance_a == iid
                else (att.instance_a, att.port_b, att.port_a)
            )
            if other not in visited:
                outgoing.append((other, my_port, other_port))
        for other, my_port, other_port in sorted(outgoing):
            my_spec = mod.port(my_port)
            other_spec = mods[other].port(other_port)
            parent = _tip_link(iid, mod) if my_spec.parent == "tip" else base
            offset = tuple(
                m - o for m, o in zip(my_spec.offset, other_spec.offset)
            )
            emit(other, parent, offset)

    emit(spec.root, None, None)
    return RobotDescription(name=spec.name, nodes=tuple(nodes), joints=tuple(joints))


def derive_host_configs(spec: AssemblySpec, registry: Registry) -> list[HostConfig]:
    description = derive_kinematics(spec, registry)
    mods = {iid: registry[mid] for iid, mid in spec.instances}
    by_host: dict[str, list[str]] = {}
    for iid, _ in spec.instances:
        host = mods[iid].host
        if host:
            by_host.setdefault(host, []).append(iid)
    configs = []
    for host in sorted(by_host):
        instances = sorted(by_host[host])
        joints = tuple(
            j for j in description.joints if j.split("/", 1)[0] in set(instances)
        )
        params: dict[str, object] = {}
        components: list[str] = []
        for iid in instances:
            mod = mods[iid]
            for key in sorted(mod.calibration):
                params[f"{iid}/{key}"] = mod.calibration[key]
            components.extend(f"{iid}/{role}" for role in component_roster(mod))
        configs.append(
            HostConfig(
                host=host,
                components=tuple(components),
                joints_under_control=joints,
                parameters=params,
            )
        )
    return configs


# Per-kind component rosters: every real module runs a motor interface,
# a joint manager, a health monitor and two location publishers; limbs
# add a kinematics manager. Structural frames run nothing.
ROSTER_BY_KIND = {
    "limb": ("motor", "joint_manager", "kinematics_manager", "health_monitor",
             "location_publisher_a", "location_publisher_b"),
    "wheel": ("motor", "joint_manager", "health_monitor",
              "location_publisher_a", "location_publisher_b"),
    "gripper": ("motor", "joint_manager", "health_monitor",
                "location_publisher_a", "location_publisher_b"),
    "base": (),
    "other": (),
}


def component_roster(mod: ModuleDescriptor) -> tuple[str, ...]:
    return ROSTER_BY_KIND.get(mod.kind, ())


def write_generated(
    spec: AssemblySpec, registry: Registry, out_dir: str | Path
) -> tuple[Path, Path]:
    """Emit the description and host configs under `out_dir`/<assembly>/."""
    target = Path(out_dir) / spec.name
    target.mkdir(parents=True, exist_ok=True)
    description = derive_kinematics(spec, registry)
    robot_path = target / "robot-description.json"
    robot_path.write_text(description.to_json(), encoding="utf-8")
    configs = derive_host_configs(spec, registry)
    hosts_path = target / "host-configs.json"
    hosts_path.write_text(
        json.dumps([c.to_dict() for c in configs], sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    return robot_path, hosts_path

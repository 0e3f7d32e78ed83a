from __future__ import annotations

import json
import random
from pathlib import Path

import pytest

from keyfab.assembly import (
    AssemblySpec,
    Attachment,
    InvalidAssembly,
    JointSpec,
    ModuleDescriptor,
    PortSpec,
    derive_host_configs,
    derive_kinematics,
    load_assembly,
    load_registry,
    validate_assembly,
)

ROOT = Path(__file__).parent.parent


@pytest.fixture(scope="module")
def registry():
    return load_registry(ROOT / "modules")


@pytest.fixture(scope="module")
def dragon():
    return load_assembly(ROOT / "assemblies" / "dragon.json")


@pytest.fixture(scope="module")
def tricycle():
    return load_assembly(ROOT / "assemblies" / "tricycle.json")


def simple_module(mid, dof=1, host="pc", kind="wheel", n_ports=4, cal=None):
    return ModuleDescriptor(
        id=mid,
        family="T",
        revision="V1",
        kind=kind,
        dof=dof,
        joints=tuple(
            JointSpec(f"j{k}", (0.0, 0.0, 1.0), (0.1, 0.0, 0.0)) for k in range(dof)
        ),
        host=host,
        ports=tuple(
            PortSpec(f"p{k}", "base", (0.05 * k, 0.0, 0.0)) for k in range(n_ports)
        ),
        calibration=cal or {},
    )


class TestValidate:
    def test_single_base_module_valid(self):
        reg = {"solo": simple_module("solo", dof=0, host=None, kind="base")}
        spec = AssemblySpec("one", (("s", "solo"),), (), "s")
        assert validate_assembly(spec, reg).ok

    def test_cycle_detected(self):
        reg = {"m": simple_module("m")}
        spec = AssemblySpec(
            "loop",
            (("a", "m"), ("b", "m")),
            (Attachment("a", "p0", "b", "p0"), Attachment("a", "p1", "b", "p1")),
            "a",
        )
        assert "CycleDetected" in validate_assembly(spec, reg).codes()

    def test_unknown_port(self):
        reg = {"m": simple_module("m")}
        spec = AssemblySpec(
            "bad", (("a", "m"), ("b", "m")),
            (Attachment("a", "nope", "b", "p0"),), "a",
        )
        assert "UnknownPort" in validate_assembly(spec, reg).codes()

    def test_unknown_module(self):
        spec = AssemblySpec("bad", (("a", "ghost"),), (), "a")
        assert "UnknownModule" in validate_assembly(spec, {}).codes()

    def test_port_reused(self):
        reg = {"m": simple_module("m")}
        spec = AssemblySpec(
            "bad", (("a", "m"), ("b", "m"), ("c", "m")),
            (Attachment("a", "p0", "b", "p0"), Attachment("a", "p0", "c", "p1")),
            "a",
        )
        assert "PortReused" in validate_assembly(spec, reg).codes()

    def test_dragon_fixture_valid(self, registry, dragon):
        assert validate_assembly(dragon, registry).ok


class TestKinematics:
    def test_dragon_eight_joints_four_branches(self, registry, dragon):
        desc = derive_kinematics(dragon, registry)
        assert len(desc.joints) == 8
        assert desc.root_link == "frame/base"
        branches = desc.children_of("frame/base")
        assert len(branches) == 4
        assert {n.link for n in branches} == {
            "limbL/base", "limbR/base", "wheelL/base", "wheelR/base"
        }

    def test_single_module_identity(self, registry):
        spec = AssemblySpec("solo", (("armA", "g-limb-l"),), (), "armA")
        desc = derive_kinematics(spec, registry)
        assert desc.joints == ("armA/j1", "armA/j2", "armA/j3")
        links = [n.link for n in desc.nodes]
        assert links == ["armA/base", "armA/link1", "armA/link2", "armA/link3"]

    def test_tricycle_six_times_dof(self, registry, tricycle):
        desc = derive_kinematics(tricycle, registry)
        dof = registry["h-unit-v1"].dof
        assert len(desc.joints) == 6 * dof
        mounts = [n for n in desc.children_of("u1/base") if not n.revolute]
        assert len(mounts) == 3

    def test_invalid_assembly_raises(self, registry):
        spec = AssemblySpec("bad", (("a", "ghost"),), (), "a")
        with pytest.raises(InvalidAssembly):
            derive_kinematics(spec, registry)

    def test_deterministic_serialization(self, registry, dragon):
        a = derive_kinematics(dragon, registry).to_json()
        b = derive_kinematics(dragon, registry).to_json()
        assert a == b


class TestHostConfigs:
    def test_one_config_per_host(self, registry, dragon):
        configs = derive_host_configs(dragon, registry)
        hosts = [c.host for c in configs]
        assert hosts == sorted(
            ["limb-l-pc", "limb-r-pc", "wheel-l-pc", "wheel-r-pc"]
        )
        by_host = {c.host: c for c in configs}
        assert by_host["limb-l-pc"].joints_under_control == (
            "limbL/j1", "limbL/j2", "limbL/j3"
        )
        assert by_host["wheel-r-pc"].joints_under_control == ("wheelR/w1",)

    def test_shared_host_merges(self, registry, tricycle):
        configs = derive_host_configs(tricycle, registry)
        assert len(configs) == 1
        assert len(configs[0].joints_under_control) == 6

    def test_partition_property(self, registry, dragon):
        desc = derive_kinematics(dragon, registry)
        configs = derive_host_configs(dragon, registry)
        seen: list[str] = []
        for c in configs:
            seen.extend(c.joints_under_control)
        assert sorted(seen) == sorted(desc.joints)
        assert len(seen) == len(set(seen))

    def test_calibration_instance_scoped(self, registry, dragon):
        configs = {c.host: c for c in derive_host_configs(dragon, registry)}
        assert configs["limb-l-pc"].parameters["limbL/motor_rate"] == 1.2

    def test_revision_swap_is_local(self, registry, dragon):
        before = {
            c.host: json.dumps(c.to_dict(), sort_keys=True)
            for c in derive_host_configs(dragon, registry)
        }
        swapped = AssemblySpec(
            name=dragon.name,
            instances=tuple(
                (iid, "h-wheel-r-v2" if mid == "h-wheel-r" else mid)
                for iid, mid in dragon.instances
            ),
            attachments=dragon.attachments,
            root=dragon.root,
        )
        after = {
            c.host: json.dumps(c.to_dict(), sort_keys=True)
            for c in derive_host_configs(swapped, registry)
        }
        assert set(before) == set(after)
        for host in before:
            if host == "wheel-r-pc":
                assert before[host] != after[host]
            else:
                assert before[host] == after[host]


def random_assembly(rng: random.Random, n: int):
    registry = {}
    instances = []
    attachments = []
    host_pool = [f"pc{k}" for k in range(max(1, n // 2))]
    for i in range(n):
        dof = rng.randint(0, 4)
        host = None if dof == 0 and rng.random() < 0.5 else rng.choice(host_pool)
        mid = f"mod{i}"
        registry[mid] = simple_module(mid, dof=dof, host=host, n_ports=n + 2)
        instances.append((f"inst{i}", mid))
    free_ports = {f"inst{i}": [f"p{k}" for k in range(n + 2)] for i in range(n)}
    for i in range(1, n):
        parent = f"inst{rng.randrange(i)}"
        child = f"inst{i}"
        attachments.append(
            Attachment(parent, free_ports[parent].pop(), child, free_ports[child].pop())
        )
    spec = AssemblySpec("rand", tuple(instances), tuple(attachments), "inst0")
    return spec, registry


class TestRandomAssemblies:
    def test_thousand_random_assemblies(self):
        rng = random.Random(2024)
        for _ in range(1000):
            n = rng.randint(1, 9)
            spec, registry = random_assembly(rng, n)
            assert validate_assembly(spec, registry).ok
            desc = derive_kinematics(spec, registry)
            total_dof = sum(registry[mid].dof for _, mid in spec.instances)
            assert len(desc.joints) == total_dof
            configs = derive_host_configs(spec, registry)
            controlled = [j for c in configs for j in c.joints_under_control]
            hosted = {
                iid for iid, mid in spec.instances if registry[mid].host
            }
            expected = [j for j in desc.joints if j.split("/", 1)[0] in hosted]
            assert sorted(controlled) == sorted(expected)
            assert len(controlled) == len(set(controlled))
            assert (
                derive_kinematics(spec, registry).to_json() == desc.to_json()
            )

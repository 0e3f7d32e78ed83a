"""Built-in cores, injections and overrides.

Key templates: ``joints/<joint>/state``, ``joints/<joint>/target``,
``goals/<instance>``, ``tf/<parent>/<frame>``, ``health/<component>/alive``.
Global joint names already carry their instance (``<instance>/<joint>``),
so scoping per robot falls out of the naming.
"""

from __future__ import annotations

import json
import math
import zlib

from .component import ComponentRegistry, ComponentSpec, Core, Injection, Override
from .motion import (
    JointState,
    JointTarget,
    Transform,
    forward_kinematics,
    quat_from_axis_angle,
    sync_targets,
)
from ..assembly import RobotDescription, TreeNode


def joint_state_key(joint: str) -> str:
    return f"joints/{joint}/state"


def joint_target_key(joint: str) -> str:
    return f"joints/{joint}/target"


def goal_key(instance: str) -> str:
    return f"goals/{instance}"


def heartbeat_key(component: str) -> str:
    return f"health/{component}/alive"


class MotorCore(Core):
    """Tracks joint targets with first-order dynamics, publishes states.

    The hardware-facing variant is byte-identical in simulation; the
    launcher swaps it for the virtual one whenever the host is not a
    robot computer.
    """

    SUB_POINTS = ("target",)
    PUB_POINTS = ("state",)
    hardware_facing = True

    def default_handlers(self):
        return {
            "init": [self._init],
            "target": [self._on_target],
            "tick": [self._tick],
            "shutdown": [],
        }

    def _init(self, ctx, _):
        ctx.state["positions"] = {j: 0.0 for j in ctx.params["joints"]}
        ctx.state["targets"] = {}

    def _on_target(self, ctx, sample):
        target = JointTarget.decode(sample.payload)
        if target.joint in ctx.state["positions"]:
            ctx.state["targets"][target.joint] = target.position

    def _tick(self, ctx, _):
        rate = float(ctx.params.get("motor_rate", 1.0))  # rad/s
        dt = float(self.spec.executor[1]) / 1000.0
        positions = ctx.state["positions"]
        for joint, pos in positions.items():
            goal = ctx.state["targets"].get(joint)
            if goal is not None:
                delta = goal - pos
                step = max(-rate * dt, min(rate * dt, delta))
                positions[joint] = pos + step
            ctx.publish(
                "state",
                JointState(joint, positions[joint], stamp=ctx.now).encode(),
                key=joint_state_key(joint),
            )


class VirtualMotorCore(MotorCore):
    """Drop-in stand-in for MotorCore on non-robot hosts."""

    hardware_facing = False


class JointManagerCore(Core):
    """Walks all joints toward an accepted goal with synchronized steps."""

    SUB_POINTS = ("goal", "state")
    PUB_POINTS = ("target",)

    def default_handlers(self):
        return {
            "init": [self._init],
            "goal": [self._on_goal],
            "state": [self._on_state],
            "tick": [self._tick],
            "shutdown": [],
        }

    def _init(self, ctx, _):
        ctx.state["states"] = {}
        ctx.state["goal"] = None

    def _on_goal(self, ctx, sample):
        doc = json.loads(sample.payload.decode())
        goal = {
            joint: float(pos)
            for joint, pos in doc.get("joints", {}).items()
            if joint in set(ctx.params["joints"])
        }
        if goal:
            ctx.state["goal"] = goal

    def _on_state(self, ctx, sample):
        state = JointState.decode(sample.payload)
        ctx.state["states"][state.joint] = state

    def _tick(self, ctx, _):
        goal = ctx.state["goal"]
        states = ctx.state["states"]
        if not goal or any(j not in states for j in goal):
            return
        max_step = float(ctx.params.get("max_step", 0.05))
        targets = [JointTarget(j, pos, stamp=ctx.now) for j, pos in sorted(goal.items())]
        commands = sync_targets(targets, states, max_step)
        for cmd in commands:
            ctx.publish("target", cmd.encode(), key=joint_target_key(cmd.joint))
        if all(abs(goal[j] - states[j].position) < 1e-6 for j in goal):
            ctx.state["goal"] = None


class KinematicsManagerCore(Core):
    """Publishes the pose of the module tip derived from joint states."""

    SUB_POINTS = ("state",)
    PUB_POINTS = ("transform",)

    def default_handlers(self):
        return {
            "init": [self._init],
            "state": [self._on_state],
            "tick": [self._tick],
            "shutdown": [],
        }

    def _init(self, ctx, _):
        ctx.state["states"] = {}
        ctx.state["description"] = RobotDescription(
            name=ctx.params["frame"],
            nodes=tuple(
                TreeNode(
                    link=n["link"],
                    parent_joint=n["parent_joint"],
                    parent_link=n["parent_link"],
                    axis=tuple(n["axis"]) if n["axis"] else None,
                    offset=tuple(n["offset"]),
                    revolute=n["revolute"],
                )
                for n in ctx.params["chain"]
            ),
            joints=tuple(ctx.params["joints"]),
        )
        ctx.announce_transform(
            ctx.params.get("parent", ctx.state["description"].root_link),
            ctx.params["frame"],
        )

    def _on_state(self, ctx, sample):
        state = JointState.decode(sample.payload)
        ctx.state["states"][state.joint] = state

    def _tick(self, ctx, _):
        states = ctx.state["states"]
        description = ctx.state["description"]
        if any(j not in states for j in description.joints):
            return
        tip = description.nodes[-1].link
        pose = forward_kinematics(description, states, tip)
        ctx.publish_transform(
            Transform(
                frame=ctx.params["frame"],
                parent=ctx.params.get("parent", description.root_link),
                translation=pose.translation,
                rotation=pose.rotation,
                stamp=ctx.now,
            )
        )


class HealthMonitorCore(Core):
    """Watches every heartbeat; reports silence and quarantines as dead.

    Three missed beats mark a component dead within the following period;
    a panic marks it dead at its next expected beat.
    """

    SUB_POINTS = ("beats",)
    PUB_POINTS = ("alerts",)
    MISS_LIMIT = 3

    def default_handlers(self):
        return {
            "init": [self._init],
            "beats": [self._on_beat],
            "tick": [self._tick],
            "shutdown": [],
        }

    def _init(self, ctx, _):
        ctx.state["last_beat"] = {}
        ctx.state["panicked"] = {}
        ctx.state["dead"] = set()

    @staticmethod
    def _component_of(sample) -> str:
        return "/".join(sample.key.chunks[1:-1])

    def _on_beat(self, ctx, sample):
        who = self._component_of(sample)
        if sample.key.chunks[-1] == "panic":
            ctx.state["panicked"][who] = ctx.now
            return
        ctx.state["last_beat"][who] = ctx.now
        if who in ctx.state["dead"]:
            ctx.state["dead"].discard(who)
            ctx.state["panicked"].pop(who, None)
            self._alert(ctx, who, "alive")

    def _tick(self, ctx, _):
        period = 1000.0
        for who, last in sorted(ctx.state["last_beat"].items()):
            if who in ctx.state["dead"]:
                continue
            if who in ctx.state["panicked"]:
                if ctx.now >= last + period:
                    ctx.state["dead"].add(who)
                    self._alert(ctx, who, "dead")
            elif ctx.now - last > (self.MISS_LIMIT + 0.5) * period:
                ctx.state["dead"].add(who)
                self._alert(ctx, who, "dead")

    def _alert(self, ctx, who: str, status: str):
        ctx.publish(
            "alerts",
            json.dumps(
                {"component": who, "status": status, "t": ctx.now}, sort_keys=True
            ).encode(),
        )


class LocationPublisherCore(Core):
    """Periodic pose source for one frame (odometry- or fix-flavoured)."""

    PUB_POINTS = ("transform",)

    def default_handlers(self):
        return {"init": [self._init], "tick": [self._tick], "shutdown": []}

    def _init(self, ctx, _):
        ctx.announce_transform(ctx.params.get("parent", "world"), ctx.params["frame"])
        if ctx.params.get("aggregate_key"):
            ctx.announce_on(ctx.params["aggregate_key"])

    def _tick(self, ctx, _):
        # deterministic synthetic drift, a stand-in for real estimation
        phase = (zlib.crc32(ctx.params["frame"].encode()) % 97) / 97.0 * math.tau
        t = ctx.now / 1000.0
        pose = Transform(
            frame=ctx.params["frame"],
            parent=ctx.params.get("parent", "world"),
            translation=(
                round(math.cos(phase + 0.1 * t), 6),
                round(math.sin(phase + 0.1 * t), 6),
                0.0,
            ),
            rotation=quat_from_axis_angle((0.0, 0.0, 1.0), 0.0),
            stamp=ctx.now,
        )
        ctx.publish_transform(pose)
        aggregate = ctx.params.get("aggregate_key")
        if aggregate:
            # comparison fixture only: the shared-topic anti-pattern
            ctx.publish_on(aggregate, pose.encode())


class OperatorCore(Core):
    """Scripted goal source, standing in for a human or autonomous pilot."""

    PUB_POINTS = ("goal",)

    def default_handlers(self):
        return {"init": [self._init], "tick": [self._tick], "shutdown": []}

    def _init(self, ctx, _):
        ctx.state["cycle"] = 0

    def _tick(self, ctx, _):
        cycle = ctx.state["cycle"]
        ctx.state["cycle"] = cycle + 1
        for instance, joints in sorted(ctx.params["controls"].items()):
            amplitude = 0.4 if cycle % 2 == 0 else -0.4
            goal = {j: round(amplitude * (1 + k * 0.1), 4) for k, j in enumerate(joints)}
            ctx.publish(
                "goal",
                json.dumps({"joints": goal}, sort_keys=True).encode(),
                key=goal_key(instance),
            )


class BeaconCore(Core):
    """Fixed-size periodic publisher; load generator for network studies."""

    PUB_POINTS = ("out",)

    def default_handlers(self):
        return {"init": [], "tick": [self._tick], "shutdown": []}

    def _tick(self, ctx, _):
        ctx.publish("out", b"x" * int(ctx.params.get("payload_bytes", 64)))


class DataMonitorCore(Core):
    """Counts samples on whatever it watches."""

    SUB_POINTS = ("watch",)

    def default_handlers(self):
        return {"init": [self._init], "watch": [self._count], "shutdown": []}

    def _init(self, ctx, _):
        ctx.state["samples"] = 0
        ctx.state["bytes"] = 0

    def _count(self, ctx, sample):
        ctx.state["samples"] += 1
        ctx.state["bytes"] += len(sample.payload)


class DataArchiverCore(DataMonitorCore):
    """Same counting behaviour, conventionally subscribed to everything."""


class TelemetryInjection(Injection):
    """Counts handled events into component state; extends, never alters."""

    def __init__(self, points: tuple[str, ...] = ("target",)):
        self.points = points

    def handlers(self):
        return {point: [self._count] for point in self.points}

    @staticmethod
    def _count(ctx, _event):
        ctx.state["telemetry_events"] = ctx.state.get("telemetry_events", 0) + 1


class BrokenJointOverride(Override):
    """Replaces target dispatch so one failed joint is never commanded."""

    def handlers(self):
        return {"target": [self._filtered]}

    @staticmethod
    def _filtered(ctx, sample):
        target = JointTarget.decode(sample.payload)
        if target.joint == ctx.params.get("broken_joint"):
            return
        if target.joint in ctx.state.get("positions", {}):
            ctx.state.setdefault("targets", {})[target.joint] = target.position


class NoopOverride(Override):
    """Silences target dispatch entirely (conflict-test fodder)."""

    def handlers(self):
        return {"target": [lambda ctx, event: None]}


def default_registry() -> ComponentRegistry:
    return ComponentRegistry(
        cores={
            "motor": MotorCore,
            "virtual_motor": VirtualMotorCore,
            "joint_manager": JointManagerCore,
            "kinematics_manager": KinematicsManagerCore,
            "health_monitor": HealthMonitorCore,
            "location_publisher": LocationPublisherCore,
            "human_operator": OperatorCore,
            "autonomous_operator": OperatorCore,
            "data_monitor": DataMonitorCore,
            "data_archiver": DataArchiverCore,
        },
        injections={
            "telemetry": TelemetryInjection(),
        },
        overrides={
            "broken_joint": BrokenJointOverride(),
            "mute_targets": NoopOverride(),
        },
    )

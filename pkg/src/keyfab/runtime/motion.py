"""Joint states, synchronized stepping, and forward kinematics.

Rotations are unit quaternions throughout; a joint rotates about its axis
at the parent link origin and the link offset carries the child out.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from ..assembly import RobotDescription

Vec3 = tuple[float, float, float]
Quat = tuple[float, float, float, float]  # (w, x, y, z)


class MotionError(Exception):
    pass


class UnknownJoint(MotionError):
    pass


class NonPositiveStep(MotionError):
    pass


class UnknownFrame(MotionError):
    pass


class MissingJointState(MotionError):
    pass


@dataclass(frozen=True)
class JointState:
    joint: str
    position: float
    velocity: float | None = None
    effort: float | None = None
    stamp: float = 0.0

    def encode(self) -> bytes:
        return json.dumps(
            {
                "joint": self.joint,
                "position": self.position,
                "velocity": self.velocity,
                "effort": self.effort,
                "stamp": self.stamp,
            },
            sort_keys=True,
        ).encode()

    @staticmethod
    def decode(payload: bytes) -> "JointState":
        doc = json.loads(payload.decode())
        return JointState(
            doc["joint"], doc["position"], doc.get("velocity"),
            doc.get("effort"), doc.get("stamp", 0.0),
        )


@dataclass(frozen=True)
class JointTarget:
    joint: str
    position: float
    velocity: float | None = None
    effort: float | None = None
    stamp: float = 0.0

    def encode(self) -> bytes:
        return json.dumps(
            {
                "joint": self.joint,
                "position": self.position,
                "velocity": self.velocity,
                "effort": self.effort,
                "stamp": self.stamp,
            },
            sort_keys=True,
        ).encode()

    @staticmethod
    def decode(payload: bytes) -> "JointTarget":
        doc = json.loads(payload.decode())
        return JointTarget(
            doc["joint"], doc["position"], doc.get("velocity"),
            doc.get("effort"), doc.get("stamp", 0.0),
        )


@dataclass(frozen=True)
class Transform:
    frame: str
    parent: str
    translation: Vec3
    rotation: Quat
    stamp: float = 0.0

    def __post_init__(self) -> None:
        norm = math.sqrt(sum(c * c for c in self.rotation))
        if abs(norm - 1.0) > 1e-9:
            raise MotionError(f"rotation quaternion norm {norm} is not 1")

    def encode(self) -> bytes:
        return json.dumps(
            {
                "frame": self.frame,
                "parent": self.parent,
                "translation": list(self.translation),
                "rotation": list(self.rotation),
                "stamp": self.stamp,
            },
            sort_keys=True,
        ).encode()

    @staticmethod
    def decode(payload: bytes) -> "Transform":
        doc = json.loads(payload.decode())
        return Transform(
            doc["frame"], doc["parent"],
            tuple(doc["translation"]), tuple(doc["rotation"]), doc.get("stamp", 0.0),
        )


# --- quaternion helpers --------------------------------------------------

QUAT_IDENTITY: Quat = (1.0, 0.0, 0.0, 0.0)


def quat_from_axis_angle(axis: Vec3, angle: float) -> Quat:
    x, y, z = axis
    norm = math.sqrt(x * x + y * y + z * z)
    if norm == 0.0:
        raise MotionError("rotation axis must be non-zero")
    half = angle / 2.0
    s = math.sin(half) / norm
    return (math.cos(half), x * s, y * s, z * s)


def quat_mul(a: Quat, b: Quat) -> Quat:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def quat_normalize(q: Quat) -> Quat:
    norm = math.sqrt(sum(c * c for c in q))
    return (q[0] / norm, q[1] / norm, q[2] / norm, q[3] / norm)


def quat_rotate(q: Quat, v: Vec3) -> Vec3:
    w, x, y, z = q
    vx, vy, vz = v
    # q * (0, v) * conj(q), expanded
    tx = 2.0 * (y * vz - z * vy)
    ty = 2.0 * (z * vx - x * vz)
    tz = 2.0 * (x * vy - y * vx)
    return (
        vx + w * tx + (y * tz - z * ty),
        vy + w * ty + (z * tx - x * tz),
        vz + w * tz + (x * ty - y * tx),
    )


# --- synchronized stepping -----------------------------------------------

def sync_targets(
    targets: list[JointTarget],
    states: dict[str, JointState],
    max_step: float,
) -> list[JointTarget]:
    """Per-joint commands whose steps scale so all joints arrive together.

    Every joint's step is ``remaining * s / D`` where D is the largest
    remaining distance and ``s = min(max_step, D)``; repeated application
    lands every joint on its goal on the same iteration.
    """
    if max_step <= 0.0:
        raise NonPositiveStep(f"max_step must be positive, got {max_step}")
    remaining = []
    for t in targets:
        state = states.get(t.joint)
        if state is None:
            raise UnknownJoint(f"no current state for joint {t.joint!r}")
        remaining.append(t.position - state.position)
    largest = max((abs(r) for r in remaining), default=0.0)
    if largest == 0.0:
        return [
            JointTarget(t.joint, states[t.joint].position, stamp=t.stamp)
            for t in targets
        ]
    scale = min(max_step, largest) / largest
    return [
        JointTarget(
            t.joint,
            states[t.joint].position + r * scale,
            stamp=t.stamp,
        )
        for t, r in zip(targets, remaining)
    ]


# --- forward kinematics ----------------------------------------------------

def forward_kinematics(
    description: RobotDescription,
    positions: dict[str, JointState],
    frame: str,
) -> Transform:
    """Pose of `frame` in the root frame: the ordered product of fixed
    offsets and revolute rotations along the root-to-frame path."""
    target = description.node_by_link(frame)
    if target is None:
        raise UnknownFrame(f"unknown link {frame!r}")
    path = []
    node = target
    while node is not None:
        path.append(node)
        node = (
            description.node_by_link(node.parent_link)
            if node.parent_link is not None
            else None
        )
    path.reverse()  # root first
    translation = (0.0, 0.0, 0.0)
    rotation = QUAT_IDENTITY
    for node in path:
        if node.parent_link is None:
            continue
        if node.revolute:
            state = positions.get(node.parent_joint)
            if state is None:
                raise MissingJointState(f"no state for joint {node.parent_joint!r}")
            rotation = quat_mul(
                rotation, quat_from_axis_angle(node.axis, state.position)
            )
        step = quat_rotate(rotation, node.offset)
        translation = (
            translation[0] + step[0],
            translation[1] + step[1],
            translation[2] + step[2],
        )
    return Transform(
        frame=frame,
        parent=description.root_link,
        translation=translation,
        rotation=quat_normalize(rotation),
    )

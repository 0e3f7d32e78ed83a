from .api import RobotApi
from .component import (
    ComponentRegistry,
    ComponentSpec,
    ComponentTrace,
    ComposedComponent,
    ComponentRunner,
    Core,
    Injection,
    Override,
    OverrideConflict,
    UnboundPoint,
    UnknownCore,
    UnknownInjection,
    UnknownOverride,
    compose,
    run_component,
)
from .cores import (
    default_registry,
    goal_key,
    heartbeat_key,
    joint_state_key,
    joint_target_key,
)
from .motion import (
    JointState,
    JointTarget,
    MissingJointState,
    MotionError,
    NonPositiveStep,
    Transform,
    UnknownFrame,
    UnknownJoint,
    forward_kinematics,
    sync_targets,
)

__all__ = [
    "RobotApi",
    "ComponentRegistry",
    "ComponentSpec",
    "ComponentTrace",
    "ComposedComponent",
    "ComponentRunner",
    "Core",
    "Injection",
    "Override",
    "OverrideConflict",
    "UnboundPoint",
    "UnknownCore",
    "UnknownInjection",
    "UnknownOverride",
    "compose",
    "run_component",
    "default_registry",
    "goal_key",
    "heartbeat_key",
    "joint_state_key",
    "joint_target_key",
    "JointState",
    "JointTarget",
    "Transform",
    "MotionError",
    "UnknownJoint",
    "NonPositiveStep",
    "UnknownFrame",
    "MissingJointState",
    "forward_kinematics",
    "sync_targets",
]

"""Beginner-friendly facade over bindings and synchronized stepping.

Nothing here adds semantics: goals go out as goal samples, states come
back as subscriptions, and waiting polls the simulated clock.
"""

from __future__ import annotations

import json

from .cores import goal_key, joint_state_key
from .motion import JointState


class RobotApi:
    """Drive one instance's joints without touching cores or keys."""

    def __init__(self, network, node: str, instance: str, joints: list[str]):
        self.instance = instance
        self.joints = list(joints)
        self._network = network
        self._states: dict[str, JointState] = {}
        self._goal_ep = network.declare_endpoint(
            node, "publisher", goal_key(instance)
        )
        self._sub_eps = [
            network.declare_endpoint(
                node, "subscriber", joint_state_key(j), on_sample=self._on_state
            )
            for j in self.joints
        ]

    def _on_state(self, sample) -> None:
        state = JointState.decode(sample.payload)
        self._states[state.joint] = state

    def positions(self) -> dict[str, float]:
        return {j: s.position for j, s in sorted(self._states.items())}

    def move_to(self, goals: dict[str, float]) -> None:
        """Ask the joint manager to walk all joints to `goals` together."""
        payload = json.dumps({"joints": goals}, sort_keys=True).encode()
        self._network.publish(self._goal_ep, payload)

    def wait_until(
        self, goals: dict[str, float], timeout_ms: float, tolerance: float = 1e-3
    ) -> bool:
        """Run the fabric until every goal is reached or time runs out."""
        deadline = self._network.now + timeout_ms
        step = 100.0
        while self._network.now < deadline:
            self._network.run_until(min(deadline, self._network.now + step))
            if all(
                j in self._states and abs(self._states[j].position - pos) <= tolerance
                for j, pos in goals.items()
            ):
                return True
        return False

    def close(self) -> None:
        self._network.undeclare_endpoint(self._goal_ep)
        for ep in self._sub_eps:
            self._network.undeclare_endpoint(ep)
        self._sub_eps = []

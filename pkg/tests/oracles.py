"""Independent brute-force oracles used to cross-check the real algorithms.

Everything here is deliberately naive: wildcard matching enumerates
alignments outright, set relations enumerate a bounded key universe, and
kinematics multiplies plain 4x4 matrices. None of it shares code with the
package under test.
"""

from __future__ import annotations

import itertools
import math


# --- key matching -------------------------------------------------------

def align_match(expr: tuple[str, ...], key: tuple[str, ...]) -> bool:
    """Match by enumerating how many chunks each '**' absorbs."""
    stars = [i for i, c in enumerate(expr) if c == "**"]
    fixed = len(expr) - len(stars)
    spare = len(key) - fixed
    if spare < 0:
        return False
    if not stars:
        if len(expr) != len(key):
            return False
        return all(e == "*" or e == k for e, k in zip(expr, key))
    # distribute `spare` chunks over the '**' positions in every way
    for split in itertools.product(range(spare + 1), repeat=len(stars)):
        if sum(split) != spare:
            continue
        expanded: list[str] = []
        si = 0
        for c in expr:
            if c == "**":
                expanded.extend("*" * split[si])
                si += 1
            else:
                expanded.append(c)
        if len(expanded) == len(key) and all(
            e == "*" or e == k for e, k in zip(expanded, key)
        ):
            return True
    return False


def key_universe(alphabet: tuple[str, ...], max_chunks: int) -> list[tuple[str, ...]]:
    keys: list[tuple[str, ...]] = []
    for n in range(1, max_chunks + 1):
        keys.extend(itertools.product(alphabet, repeat=n))
    return keys


def match_bits(expr: tuple[str, ...], universe: list[tuple[str, ...]]) -> int:
    """Bitset of universe keys matched by `expr`, via the alignment oracle."""
    bits = 0
    for i, key in enumerate(universe):
        if align_match(expr, key):
            bits |= 1 << i
    return bits


def brute_intersects(a, b, universe) -> bool:
    return any(align_match(a, k) and align_match(b, k) for k in universe)


def brute_includes(a, b, universe) -> bool:
    return all(align_match(a, k) for k in universe if align_match(b, k))


# --- graphs -------------------------------------------------------------

def is_topological(order: list[str], deps: dict[str, list[str]]) -> bool:
    """Independent constraint check: every dep precedes its dependent."""
    pos = {t: i for i, t in enumerate(order)}
    if len(pos) != len(deps) or set(pos) != set(deps):
        return False
    return all(pos[d] < pos[t] for t, ds in deps.items() for d in ds)


def all_topological_orders(deps: dict[str, list[str]]) -> list[list[str]]:
    nodes = sorted(deps)
    return [
        list(p)
        for p in itertools.permutations(nodes)
        if is_topological(list(p), deps)
    ]


def reverse_reachable(start: str, deps: dict[str, list[str]]) -> set[str]:
    """Tasks that transitively depend on `start`, including itself."""
    rdeps: dict[str, set[str]] = {t: set() for t in deps}
    for t, ds in deps.items():
        for d in ds:
            rdeps[d].add(t)
    seen = {start}
    stack = [start]
    while stack:
        for nxt in rdeps[stack.pop()]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def two_disjoint_paths(adjacency: dict[str, set[str]], a: str, b: str) -> bool:
    """Are there two internally node-disjoint paths between a and b?"""
    direct = b in adjacency[a]
    paths = []

    def dfs(node, target, banned, path):
        if node == target:
            paths.append(set(path) - {a, b})
            return
        for nxt in sorted(adjacency[node]):
            if nxt in banned or nxt in path:
                continue
            dfs(nxt, target, banned, path + [nxt])

    dfs(a, b, set(), [a])
    for p1, p2 in itertools.combinations(paths, 2):
        if not (p1 & p2):
            return True
    # a direct edge is internally disjoint from any other path
    return direct and len(paths) > 1


# --- kinematics ---------------------------------------------------------

def rot_matrix(axis, angle):
    """4x4 homogeneous rotation about `axis` (Rodrigues form)."""
    import numpy as np

    x, y, z = axis
    norm = math.sqrt(x * x + y * y + z * z)
    x, y, z = x / norm, y / norm, z / norm
    c, s = math.cos(angle), math.sin(angle)
    t = 1.0 - c
    m = np.eye(4)
    m[:3, :3] = [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ]
    return m


def trans_matrix(offset):
    import numpy as np

    m = np.eye(4)
    m[:3, 3] = offset
    return m


def quat_to_matrix(q):
    """Unit quaternion (w, x, y, z) to a 4x4 homogeneous matrix."""
    import numpy as np

    w, x, y, z = q
    m = np.eye(4)
    m[:3, :3] = [
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ]
    return m


def chain_pose(steps):
    """Multiply (axis, angle, offset) steps into one 4x4 pose.

    Each step applies rotation first, then the translation, matching the
    joint-at-parent-origin convention.
    """
    import numpy as np

    pose = np.eye(4)
    for axis, angle, offset in steps:
        if axis is not None:
            pose = pose @ rot_matrix(axis, angle)
        pose = pose @ trans_matrix(offset)
    return pose


def sync_iterations(distances, max_step) -> int:
    """Iterations until the farthest joint arrives, stepping max_step."""
    d = max(abs(x) for x in distances)
    if d == 0.0:
        return 0
    return math.ceil(d / max_step - 1e-12)

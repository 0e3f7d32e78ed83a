"""Manifest verification and the incremental, offline task graph.

A manifest pins component sources to content hashes; tasks form a DAG and
re-run only when an input fingerprint changed, an output is missing, or a
dependency ran. Content hashes (never mtimes) decide staleness so results
are stable across machines. Nothing here touches the network.
"""

from __future__ import annotations

import hashlib
import json
import shutil
from dataclasses import dataclass, field
from pathlib import Path


class BuildError(Exception):
    pass


class CycleDetected(BuildError):
    def __init__(self, members: list[str]):
        super().__init__(f"dependency cycle through: {', '.join(members)}")
        self.members = members


class UnknownDependency(BuildError):
    pass


class UnreadableWorkspace(BuildError):
    pass


@dataclass(frozen=True)
class Manifest:
    entries: dict[str, tuple[str, str]]  # name -> (source, hex digest)

    @staticmethod
    def from_dict(doc: dict) -> "Manifest":
        return Manifest(
            entries={
                name: (entry["source"], entry["sha256"])
                for name, entry in doc.get("entries", {}).items()
            }
        )


@dataclass(frozen=True)
class TaskSpec:
    id: str
    deps: tuple[str, ...] = ()
    inputs: tuple[str, ...] = ()
    outputs: tuple[str, ...] = ()
    action: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.id in self.deps:
            raise BuildError(f"task {self.id!r} depends on itself")

    @staticmethod
    def from_dict(doc: dict) -> "TaskSpec":
        return TaskSpec(
            id=doc["id"],
            deps=tuple(doc.get("deps", [])),
            inputs=tuple(doc.get("inputs", [])),
            outputs=tuple(doc.get("outputs", [])),
            action=dict(doc.get("action", {})),
        )


@dataclass(frozen=True)
class VerificationEntry:
    name: str
    status: str  # match | mismatch | missing
    expected: str
    actual: str | None


@dataclass(frozen=True)
class VerificationReport:
    entries: tuple[VerificationEntry, ...]

    @property
    def ok(self) -> bool:
        return all(e.status == "match" for e in self.entries)


@dataclass
class BuildReport:
    executed: list[str] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)
    failed: tuple[str, str] | None = None
    fingerprints: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "executed": self.executed,
            "skipped": self.skipped,
            "failed": list(self.failed) if self.failed else None,
            "fingerprints": self.fingerprints,
        }

    @staticmethod
    def from_dict(doc: dict) -> "BuildReport":
        failed = doc.get("failed")
        return BuildReport(
            executed=list(doc.get("executed", [])),
            skipped=list(doc.get("skipped", [])),
            failed=tuple(failed) if failed else None,
            fingerprints=dict(doc.get("fingerprints", {})),
        )


def hash_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def hash_tree(path: Path) -> str:
    """Stable digest of a directory: sorted relative paths and contents."""
    digest = hashlib.sha256()
    if path.is_file():
        return hash_file(path)
    for sub in sorted(path.rglob("*")):
        if sub.is_file():
            digest.update(str(sub.relative_to(path)).encode())
            digest.update(b"\0")
            with open(sub, "rb") as fh:
                digest.update(fh.read())
            digest.update(b"\0")
    return digest.hexdigest()


def verify_manifest(manifest: Manifest, workspace: str | Path) -> VerificationReport:
    root = Path(workspace)
    if not root.is_dir():
        raise UnreadableWorkspace(f"workspace {workspace} is not a readable directory")
    entries = []
    for name in sorted(manifest.entries):
        source, expected = manifest.entries[name]
        target = root / source
        if not target.exists():
            entries.append(VerificationEntry(name, "missing", expected, None))
            continue
        actual = hash_tree(target)
        status = "match" if actual == expected else "mismatch"
        entries.append(VerificationEntry(name, status, expected, actual))
    return VerificationReport(tuple(entries))


def resolve_order(tasks: list[TaskSpec]) -> list[str]:
    """Topological order with lexicographic tie-breaking (Kahn's scheme)."""
    import heapq

    by_id = {t.id: t for t in tasks}
    if len(by_id) != len(tasks):
        raise BuildError("task ids are not unique")
    indegree = {t.id: 0 for t in tasks}
    dependents: dict[str, list[str]] = {t.id: [] for t in tasks}
    for t in tasks:
        for dep in t.deps:
            if dep not in by_id:
                raise UnknownDependency(f"task {t.id!r} depends on unknown {dep!r}")
            indegree[t.id] += 1
            dependents[dep].append(t.id)
    ready = [tid for tid, deg in sorted(indegree.items()) if deg == 0]
    heapq.heapify(ready)
    order: list[str] = []
    while ready:
        tid = heapq.heappop(ready)
        order.append(tid)
        for nxt in dependents[tid]:
            indegree[nxt] -= 1
            if indegree[nxt] == 0:
                heapq.heappush(ready, nxt)
    if len(order) != len(tasks):
        raise CycleDetected(_find_cycle(by_id, set(order)))
    return order


def _find_cycle(by_id: dict[str, TaskSpec], resolved: set[str]) -> list[str]:
    remaining = sorted(set(by_id) - resolved)
    state: dict[str, int] = {}
    stack: list[str] = []

    def visit(tid: str) -> list[str] | None:
        state[tid] = 1
        stack.append(tid)
        for dep in by_id[tid].deps:
            if dep in resolved:
                continue
            if state.get(dep) == 1:
                return stack[stack.index(dep):]
            if dep not in state:
                found = visit(dep)
                if found:
                    return found
        state[tid] = 2
        stack.pop()
        return None

    for tid in remaining:
        if tid not in state:
            found = visit(tid)
            if found:
                return found
    return remaining  # unreachable for a true cycle, defensive


def run_action(task: TaskSpec, workspace: Path) -> None:
    """Execute one declarative action inside the workspace."""
    action = task.action
    op = action.get("op", "noop")
    if op == "noop":
        return
    if op == "write":
        target = workspace / action["path"]
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(action.get("text", ""), encoding="utf-8")
    elif op == "copy":
        target = workspace / action["dst"]
        target.parent.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(workspace / action["src"], target)
    elif op == "concat":
        target = workspace / action["dst"]
        target.parent.mkdir(parents=True, exist_ok=True)
        parts = [
            (workspace / src).read_text(encoding="utf-8") for src in action["srcs"]
        ]
        target.write_text("".join(parts), encoding="utf-8")
    elif op == "assemble":
        from . import assembly as asm

        registry = asm.load_registry(workspace / action.get("modules", "modules"))
        spec = asm.load_assembly(workspace / action["spec"])
        asm.write_generated(spec, registry, workspace / action.get("out", "generated"))
    elif op == "fail":
        raise BuildError(action.get("reason", "task failed"))
    else:
        raise BuildError(f"unknown action op {op!r}")


def execute(
    tasks: list[TaskSpec],
    prior: BuildReport | None,
    workspace: str | Path,
    runner=run_action,
) -> BuildReport:
    """Run stale tasks in topological order, stopping at the first failure."""
    root = Path(workspace)
    order = resolve_order(tasks)
    by_id = {t.id: t for t in tasks}
    old_prints = prior.fingerprints if prior else {}
    report = BuildReport()
    ran: set[str] = set()

    def fingerprint(rel: str) -> str | None:
        path = root / rel
        if not path.exists():
            return None
        return hash_tree(path)

    for tid in order:
        task = by_id[tid]
        reason = None
        if prior is None or tid not in set(prior.executed) | set(prior.skipped):
            reason = "new"
        elif any(dep in ran for dep in task.deps):
            reason = "dependency ran"
        else:
            for rel in task.inputs:
                if fingerprint(rel) != old_prints.get(rel):
                    reason = f"input changed: {rel}"
                    break
            else:
                for rel in task.outputs:
                    if fingerprint(rel) is None:
                        reason = f"output missing: {rel}"
                        break
        if reason is None:
            report.skipped.append(tid)
            continue
        try:
            runner(task, root)
        except Exception as exc:  # noqa: BLE001 - failures belong in the report
            report.failed = (tid, str(exc))
            break
        report.executed.append(tid)
        ran.add(tid)
    for task in tasks:
        for rel in (*task.inputs, *task.outputs):
            print_ = fingerprint(rel)
            if print_ is not None:
                report.fingerprints[rel] = print_
    report.fingerprints = dict(sorted(report.fingerprints.items()))
    return report


def load_manifest(path: str | Path) -> Manifest:
    with open(path, "r", encoding="utf-8") as fh:
        return Manifest.from_dict(json.load(fh))


def load_tasks(path: str | Path) -> list[TaskSpec]:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return [TaskSpec.from_dict(t) for t in doc.get("tasks", [])]


def save_report(report: BuildReport, path: str | Path) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(
        json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )

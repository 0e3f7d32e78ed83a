"""Operator command surface: update, build, assemble, launch, sim, bench.

Exit codes: 0 success, 1 validation failure, 2 runtime failure. The host
identity comes from ``--host``, falling back to ``KEYFAB_HOST`` and then
the machine hostname.
"""

from __future__ import annotations

import argparse
import json
import os
import socket
import sys
from pathlib import Path

from . import assembly as asm
from . import buildgraph as bg
from . import launcher
from .bench import compare, load_scenario, run_scenario, write_reports
from .fabric import NodeSpec, TopologySpec, create_network, load_topology
from .runtime import default_registry

HOST_ENV = "KEYFAB_HOST"

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


def _default_host(value: str | None) -> str:
    return value or os.environ.get(HOST_ENV) or socket.gethostname()


def cmd_update(args) -> int:
    workspace = Path(args.workspace)
    try:
        manifest = bg.load_manifest(workspace / args.manifest)
        report = bg.verify_manifest(manifest, workspace)
    except (OSError, bg.BuildError, json.JSONDecodeError) as exc:
        print(f"update: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for entry in report.entries:
        print(f"{entry.status:9s} {entry.name}")
    if not report.ok:
        print("update: manifest verification failed", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"update: {len(report.entries)} entries match")
    return EXIT_OK


def cmd_build(args) -> int:
    workspace = Path(args.workspace)
    try:
        tasks = bg.load_tasks(workspace / args.tasks)
        prior_path = workspace / "generated" / "build-report.json"
        prior = None
        if prior_path.exists():
            prior = bg.BuildReport.from_dict(
                json.loads(prior_path.read_text(encoding="utf-8"))
            )
        report = bg.execute(tasks, prior, workspace)
        bg.save_report(report, prior_path)
    except bg.BuildError as exc:
        print(f"build: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"build: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"executed: {', '.join(report.executed) or '(none)'}")
    print(f"skipped:  {', '.join(report.skipped) or '(none)'}")
    if report.failed:
        print(f"build: task {report.failed[0]} failed: {report.failed[1]}",
              file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_assemble(args) -> int:
    try:
        registry = asm.load_registry(args.modules)
        spec = asm.load_assembly(args.spec)
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"assemble: cannot load inputs: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    report = asm.validate_assembly(spec, registry)
    if not report.ok:
        for code, detail in report.problems:
            print(f"assemble: {code}: {detail}", file=sys.stderr)
        return EXIT_VALIDATION
    robot_path, hosts_path = asm.write_generated(spec, registry, args.out)
    description = asm.derive_kinematics(spec, registry)
    print(f"{spec.name}: {len(description.joints)} joints, "
          f"{len(spec.instances)} instances")
    print(f"wrote {robot_path}")
    print(f"wrote {hosts_path}")
    return EXIT_OK


def cmd_launch(args) -> int:
    host = _default_host(args.host)
    try:
        registry = asm.load_registry(args.modules)
        spec = asm.load_assembly(args.assembly)
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"launch: cannot load inputs: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    report = asm.validate_assembly(spec, registry)
    if not report.ok:
        for code, detail in report.problems:
            print(f"launch: {code}: {detail}", file=sys.stderr)
        return EXIT_VALIDATION
    component_registry = default_registry()
    try:
        plan = launcher.plan_launch(
            spec, host, registry, component_registry, sim=args.sim
        )
    except launcher.UnknownHost as exc:
        print(f"launch: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    network = create_network(
        TopologySpec(nodes=(NodeSpec(host),), links=(), mode="routed")
    )
    beats: set[str] = set()
    network.declare_endpoint(
        host, "subscriber", "health/**",
        on_sample=lambda s: beats.add("/".join(s.key.chunks[1:-1])),
    )
    status = launcher.start(plan, network, component_registry)
    network.run_until(args.duration)
    status.refresh()
    launcher.stop(status, network)
    expected = set(plan.component_names())
    alive = expected & beats
    for entry in status.entries:
        flag = "virtual" if _entry_virtual(plan, entry.name) else "native"
        print(f"{entry.state:11s} {flag:8s} {entry.name}")
    print(f"launch: {len(alive)}/{len(expected)} components heartbeating "
          f"after {args.duration:.0f} ms simulated")
    if any(e.state == "quarantined" for e in status.entries):
        return EXIT_RUNTIME
    if expected - alive:
        print(f"launch: silent components: {sorted(expected - alive)}",
              file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _entry_virtual(plan: launcher.LaunchPlan, name: str) -> bool:
    for entry in plan.entries:
        if entry.spec.name == name:
            return entry.virtual_substitution
    return False


def cmd_sim(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
        if args.topology:
            scenario = scenario.with_topology(load_topology(args.topology))
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"sim: cannot load inputs: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    result = run_scenario(scenario, mode=args.mode, seed=args.seed)
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.csv").write_text(result.metrics.to_csv(), encoding="utf-8")
        (out / "summary.json").write_text(result.metrics.to_json(), encoding="utf-8")
        print(f"sim: wrote {out / 'metrics.csv'}")
    summary = result.metrics.to_summary()
    print(f"scenario {scenario.name} [{args.mode}] seed {args.seed}:")
    print(f"  components spawned: {len(result.roster)}")
    for key in ("published_count", "delivered_count", "total_discovery_bytes",
                "mean_delivery_latency_ms"):
        print(f"  {key}: {summary[key]}")
    return EXIT_OK


def cmd_bench(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"bench: cannot load inputs: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    seeds = args.seeds or [1, 2, 3, 4, 5]
    report = compare(scenario, seeds=seeds)
    write_reports(report, args.out)
    for name, value in sorted(report.ratios.items()):
        print(f"ratio {name}: {value}")
    for name, ok in sorted(report.checks.items()):
        print(f"check {name}: {'pass' if ok else 'FAIL'}")
    print(f"bench: reports under {args.out}")
    return EXIT_OK if report.passed else EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="keyfab",
        description="Deploy and simulate modular robot assemblies on a "
                    "key-addressed data fabric.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("update", help="verify pinned component sources")
    p.add_argument("--manifest", default="manifest.json")
    p.add_argument("--workspace", default=".")
    p.set_defaults(fn=cmd_update)

    p = sub.add_parser("build", help="run the incremental task graph")
    p.add_argument("--tasks", default="tasks.json")
    p.add_argument("--workspace", default=".")
    p.set_defaults(fn=cmd_build)

    p = sub.add_parser("assemble", help="derive robot description and host configs")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", default="generated")
    p.add_argument("--modules", default="modules")
    p.set_defaults(fn=cmd_assemble)

    p = sub.add_parser("launch", help="plan and run this host's components")
    p.add_argument("--assembly", required=True)
    p.add_argument("--host", default=None)
    p.add_argument("--sim", action="store_true",
                   help="run the whole assembly virtually on this host")
    p.add_argument("--modules", default="modules")
    p.add_argument("--duration", type=float, default=10_000.0,
                   help="simulated milliseconds to run")
    p.set_defaults(fn=cmd_launch)

    p = sub.add_parser("sim", help="run one scenario once and dump metrics")
    p.add_argument("--topology", default=None)
    p.add_argument("--scenario", required=True)
    p.add_argument("--mode", default="routed", choices=["routed", "full_mesh"])
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_sim)

    p = sub.add_parser("bench", help="compare full-mesh vs routed on a scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seeds", type=int, nargs="*", default=None)
    p.set_defaults(fn=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())

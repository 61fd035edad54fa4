"""``robcons`` command line: analyze, simulate, sweep, verify, export-scenario.

Exit codes: 0 success / property holds, 1 analysis ran but the property
does not hold, 2 usage error, 3 runtime error.  Output files go to
``--out``/``--json`` when given, otherwise into ``$ROBCONS_OUTPUT_DIR``
(default: the current directory).
"""
from __future__ import annotations

import argparse
import itertools
import json
import math
import os
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InvalidArgument, IntegrationDiverged, ParseError, RobconsError, ScenarioError
from .networks import builtin_network
from .petri import PetriNet, check_robust_consensuability, minimal_siphons, parse_net
from .scenario import BUILTIN_SCENARIOS, builtin_scenario, load_scenario, save_scenario
from .verify import DEFAULT_SEED, SUITES, run_suite

OUTPUT_ENV = "ROBCONS_OUTPUT_DIR"
SWEEP_LIMIT = 100_000

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3


@dataclass
class CommandOutcome:
    exit_code: int
    artifacts: list[str] = field(default_factory=list)


def _output_path(explicit, default_name):
    if explicit:
        return Path(explicit)
    return Path(os.environ.get(OUTPUT_ENV, ".")) / default_name


def _write_json(path: Path, data) -> str:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2) + "\n")
    return str(path)


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", Path(text).stem if os.sep in text else text).strip("_")


def split_agents(text: str) -> list[str]:
    """``"(2,2),(3,3)"`` -> ``["(2,2)", "(3,3)"]``; ``"4,5"`` -> ``["4", "5"]``."""
    return re.findall(r"\([^)]*\)|[^,\s()]+", text or "")


def _load_target(target: str):
    """Return (name, PetriNet, default fault ids) for a file or generator name."""
    path = Path(target)
    if path.is_file():
        if path.suffix == ".json":
            sc = load_scenario(path)
            return sc.name, sc.dynamics.to_petri_net(), sorted(sc.fault_set)
        return path.stem, parse_net(path.read_text()), []
    return target, builtin_network(target).to_petri_net(), []


def _fmt(net: PetriNet, agents) -> str:
    return "{" + ", ".join(net.label_set(agents)) + "}"


def cmd_analyze(args) -> CommandOutcome:
    name, net, faults = _load_target(args.target)
    if args.faults is not None:
        faults = [net.agent_id(tok) for tok in split_agents(args.faults)]
    report = check_robust_consensuability(net, faults)
    siphons = minimal_siphons(net)

    print(f"net {name}: {net.n_agents} places, {len(net.transitions)} transitions")
    print(f"faults: {_fmt(net, faults)}")
    print(f"minimal siphons ({len(siphons)}):")
    for s in siphons:
        print(f"  {_fmt(net, s)}")
    print(f"controlled-siphon certificates ({len(report.certificates)}):")
    for c in report.certificates:
        print(f"  places {_fmt(net, c.places)} switch {_fmt(net, c.switch)}")
    print(f"healthy set is a siphon: {'yes' if report.healthy_is_siphon else 'no'}")
    verdict = "ROBUST" if report.verdict else "NOT-ROBUST"
    print(f"verdict: {verdict} ({report.reason})")
    if report.witness is not None:
        (a, b) = report.witness
        print(f"witness: {_fmt(net, a.places)} [switch {_fmt(net, a.switch)}] / "
              f"{_fmt(net, b.places)} [switch {_fmt(net, b.switch)}]")

    doc = {"network": name, "n_places": net.n_agents, "n_transitions": len(net.transitions),
           "minimal_siphons": [net.label_set(s) for s in siphons], **report.to_dict(net)}
    out = _write_json(_output_path(args.json, f"analyze-{_slug(name)}.json"), doc)
    return CommandOutcome(EXIT_OK if report.verdict else EXIT_NEGATIVE, [out])


def cmd_simulate(args) -> CommandOutcome:
    path = Path(args.scenario)
    sc = load_scenario(path) if path.is_file() else builtin_scenario(args.scenario)
    traj = sc.run()
    m = traj.monitors
    csv_path = _output_path(args.out, f"{_slug(sc.name)}.csv")
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    traj.to_csv(csv_path)
    monitor_path = _output_path(args.monitor_json, f"{_slug(sc.name)}-monitors.json")
    doc = {"scenario": sc.name, **m.to_dict(),
           "final_state": {sc.dynamics.labels[h]: float(v) for h, v in zip(traj.healthy, traj.states[-1])}}
    _write_json(monitor_path, doc)
    print(f"scenario {sc.name}: horizon {sc.horizon:g}, step {sc.step:g}")
    print(f"final spread: {m.final_spread:.6g}")
    print(f"final range: [{m.final_min:.6g}, {m.final_max:.6g}]")
    if m.consensus_reached:
        print(f"consensus reached at t = {m.consensus_time:g}")
    else:
        print("consensus not reached")
    return CommandOutcome(EXIT_OK, [str(csv_path), str(monitor_path)])


def cmd_sweep(args) -> CommandOutcome:
    name, net, _ = _load_target(args.target)
    k = args.fault_size
    if not 0 <= k < net.n_agents:
        raise InvalidArgument(f"fault size must lie in [0, {net.n_agents - 1}]")
    total = math.comb(net.n_agents, k)
    if total > SWEEP_LIMIT:
        raise InvalidArgument(f"{total} fault sets exceed the sweep limit of {SWEEP_LIMIT}")
    rows = []
    for faults in itertools.combinations(range(net.n_agents), k):
        rep = check_robust_consensuability(net, faults)
        row = {"faults": net.label_set(faults), "robust": rep.verdict, "reason": rep.reason}
        if rep.witness is not None:
            row["witness"] = [c.to_dict(net) for c in rep.witness]
        rows.append(row)
    robust = sum(r["robust"] for r in rows)
    width = max((len(",".join(r["faults"])) for r in rows), default=6)
    print(f"{'faults':<{width}}  verdict     reason")
    for r in rows:
        verdict = "ROBUST" if r["robust"] else "NOT-ROBUST"
        print(f"{','.join(r['faults']):<{width}}  {verdict:<10}  {r['reason']}")
    print(f"robust: {robust}/{total}")
    doc = {"network": name, "fault_size": k, "robust": robust, "total": total, "results": rows}
    out = _write_json(_output_path(args.json, f"sweep-{_slug(name)}-k{k}.json"), doc)
    return CommandOutcome(EXIT_OK if robust == total else EXIT_NEGATIVE, [out])


def cmd_verify(args) -> CommandOutcome:
    if args.suite != "all" and args.suite not in SUITES:
        raise InvalidArgument(f"unknown suite {args.suite!r}; known: all, {', '.join(SUITES)}")
    results = run_suite(args.suite, seed=args.seed)
    for r in results:
        print(f"{r['suite']}: {'PASS' if r['passed'] else 'FAIL'} ({r['cases']} cases, seed {r['seed']})")
    passed = all(r["passed"] for r in results)
    doc = {"suite": args.suite, "seed": args.seed, "passed": passed, "results": results}
    out = _write_json(_output_path(args.json, f"verify-{args.suite}.json"), doc)
    return CommandOutcome(EXIT_OK if passed else EXIT_NEGATIVE, [out])


def cmd_export_scenario(args) -> CommandOutcome:
    sc = builtin_scenario(args.name)
    path = _output_path(args.path, f"{args.name}.json")
    path.parent.mkdir(parents=True, exist_ok=True)
    save_scenario(sc, path)
    print(f"wrote {path}")
    return CommandOutcome(EXIT_OK, [str(path)])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robcons", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="structural robustness verdict for one fault set")
    p.add_argument("target", help="generator name (e.g. grid3x3, arcp:n=5,trim=1), scenario .json or net file")
    p.add_argument("--faults", help='fault agents by label, e.g. "(2,2),(3,3)" or "4,5"')
    p.add_argument("--json", help="report path")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="integrate a scenario and write CSV + monitor JSON")
    p.add_argument("scenario", help=f"scenario .json or built-in name ({', '.join(BUILTIN_SCENARIOS)})")
    p.add_argument("--out", help="trajectory CSV path")
    p.add_argument("--monitor-json", help="monitor summary path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="check every fault set of a given size")
    p.add_argument("target", help="generator name or net file")
    p.add_argument("--fault-size", type=int, required=True)
    p.add_argument("--json", help="report path")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run randomised invariant suites")
    p.add_argument("--suite", default="all", help=f"all, {', '.join(SUITES)}")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--json", help="result path")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("export-scenario", help="write a built-in scenario as an editable file")
    p.add_argument("name", choices=sorted(BUILTIN_SCENARIOS))
    p.add_argument("path", nargs="?")
    p.set_defaults(func=cmd_export_scenario)
    return parser


def run(argv=None) -> CommandOutcome:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return CommandOutcome(EXIT_USAGE if exc.code else EXIT_OK)
    try:
        return args.func(args)
    except (InvalidArgument, ScenarioError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CommandOutcome(EXIT_USAGE)
    except IntegrationDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CommandOutcome(EXIT_RUNTIME)
    except (RobconsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CommandOutcome(EXIT_RUNTIME)


def main(argv=None):
    sys.exit(run(argv).exit_code)


if __name__ == "__main__":
    main()

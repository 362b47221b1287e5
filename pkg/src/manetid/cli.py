"""Command-line front end: simulate, compare, elect, check-truthfulness.

Exit codes: 0 success, 1 config/usage error, 2 mechanism property
violated (so CI can tell engineering failures from scientific findings).
"""

from __future__ import annotations

import argparse
import sys

from . import oracles, sim
from .clustering import elect_per_cluster, form_clusters
from .config import SimConfig, build_topology, initial_energies, load_config
from .cost_model import EnergyState, cost_of_analysis
from .election import ElectionOutcome, run_election_round
from .errors import InvalidConfig, ManetidError
from .sim import compare_election_policies, run_simulation


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="manetid",
        description="Cost-efficient leader election for MANET intrusion "
                    "detection: deterministic simulator and mechanism checks.")
    sub = p.add_subparsers(dest="command", required=True)

    sim_p = sub.add_parser("simulate", help="run a full simulation")
    sim_p.add_argument("config", help="config file path")
    sim_p.add_argument("--seed", type=int, default=None, help="seed override")
    sim_p.add_argument("--mode", choices=["CILE", "CDLE"], default=None)
    sim_p.add_argument("--trace", default=None, help="trace file path")
    sim_p.add_argument("--report", default=None, help="report file path")
    sim_p.add_argument("--figures", default=None,
                       help="directory for rendered PNG figures")

    cmp_p = sub.add_parser("compare", help="compare election policies")
    cmp_p.add_argument("config")
    cmp_p.add_argument("--policies", default="mechanism,random,connectivity",
                       help="comma-separated subset of "
                            "mechanism,random,connectivity")
    cmp_p.add_argument("--seed", type=int, default=None)
    cmp_p.add_argument("--report", default=None)
    cmp_p.add_argument("--figures", default=None)

    el_p = sub.add_parser("elect", help="run a single election round")
    el_p.add_argument("config")
    el_p.add_argument("--seed", type=int, default=None)
    el_p.add_argument("--mode", choices=["CILE", "CDLE"], default=None)

    tr_p = sub.add_parser("check-truthfulness",
                          help="exhaustive strategy-proofness check")
    tr_p.add_argument("--max-nodes", type=int, default=4)
    tr_p.add_argument("--grid", type=int, default=4,
                      help="cost grid levels (multiples of delta-c)")
    tr_p.add_argument("--budget", type=float, default=25.0)
    tr_p.add_argument("--delta-c", type=float, default=0.1)
    tr_p.add_argument("--first-price", action="store_true",
                      help="use the deliberately broken first-price rule")
    return p


def _load(path, **overrides) -> SimConfig:
    cfg = load_config(path)
    return cfg.with_overrides(**overrides)


def _cmd_simulate(args) -> int:
    cfg = _load(args.config, seed=args.seed, mode=args.mode)
    report = run_simulation(cfg, trace_path=args.trace)
    text = sim.format_report(report)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.figures:
        from .plots import render_simulation_figures
        for path in render_simulation_figures(report, args.figures):
            print(f"figure written: {path}", file=sys.stderr)
    return 0


def _cmd_compare(args) -> int:
    cfg = _load(args.config, seed=args.seed)
    policies = tuple(p.strip() for p in args.policies.split(",") if p.strip())
    reports = compare_election_policies(cfg, policies)
    text = sim.format_comparison(reports)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.figures:
        from .plots import render_comparison_figures
        for path in render_comparison_figures(reports, args.figures):
            print(f"figure written: {path}", file=sys.stderr)
    return 0


def _format_outcome(outcome: ElectionOutcome) -> str:
    lines = []
    lines.append("leaders\t" + (",".join(map(str, sorted(outcome.leaders)))
                                or "-"))
    lines.append("affiliation\t" + (" ".join(
        f"{k}->{v}" for k, v in sorted(outcome.affiliation.items())) or "-"))
    lines.append("payments\t" + (" ".join(
        f"{k}={outcome.payments[k].total!r}"
        for k in sorted(outcome.payments)) or "-"))
    lines.append("excluded\t" + (",".join(map(str, sorted(outcome.excluded)))
                                 or "-"))
    msgs = " ".join(f"{k}={v}" for k, v in sorted(
        outcome.message_counts.items()))
    lines.append("messages\t" + msgs)
    return "\n".join(lines) + "\n"


def _cmd_elect(args) -> int:
    cfg = _load(args.config, seed=args.seed, mode=args.mode)
    graph = build_topology(cfg)
    energy = initial_energies(cfg, graph)
    costs = {k: cost_of_analysis(EnergyState(energy[k]), cfg.expected_slots,
                                 0.0, cfg.cost_params)
             for k in sorted(graph.nodes)}
    if cfg.mode == "CDLE":
        outcome = elect_per_cluster(form_clusters(graph), costs, cfg.budget)
    else:
        outcome = run_election_round(graph, costs, cfg.budget,
                                     cheaters=frozenset(cfg.cheaters))
    sys.stdout.write(_format_outcome(outcome))
    return 0


def _cmd_check_truthfulness(args) -> int:
    rule = (oracles.first_price_rule if args.first_price
            else oracles.second_price_rule)
    cases = oracles.check_truthfulness(
        max_n=args.max_nodes, grid_levels=args.grid,
        budget_per_vote=args.budget, delta_c=args.delta_c,
        rule_factory=rule)
    if not cases:
        print(f"PASS: no profitable unilateral misreport on connected graphs "
              f"up to n={args.max_nodes}, grid {args.grid} levels")
        return 0
    print(f"FAIL: {len(cases)} counterexample(s)")
    for c in cases:
        print(f"  links={c.links} costs={c.truthful_costs} node={c.node} "
              f"misreport={c.misreport!r} "
              f"u_truthful={c.utility_truthful!r} u_deviant={c.utility_deviant!r}")
    return 2


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "compare": _cmd_compare,
        "elect": _cmd_elect,
        "check-truthfulness": _cmd_check_truthfulness,
    }
    try:
        return handlers[args.command](args)
    except InvalidConfig as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except ManetidError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

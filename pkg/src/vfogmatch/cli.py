"""Command-line front end.

    vfogmatch generate --seed 3 --out inst.toml
    vfogmatch solve --instance inst.toml --solver exact --out assignment.csv
    vfogmatch evaluate --instance inst.toml --assignment assignment.csv
    vfogmatch sweep --k 0..10 --seeds 10 --out sweep.csv
    vfogmatch show-config --config my.toml --alpha 0.01

Values come from flags first, then the ``--config`` TOML file, then the
built-in defaults.  Exit codes: 0 success, 1 usage or size guard,
2 infeasible instance (or, for ``evaluate``, an infeasible assignment),
3 search budget ran out before optimality was proven.
"""
from __future__ import annotations

import argparse
import sys
from decimal import Decimal, InvalidOperation
from pathlib import Path

from . import config_io
from .errors import (
    ConfigurationError,
    InfeasibleInstanceError,
    ProblemSizeError,
    SearchBudgetError,
)
from .experiments import (
    SweepConfig,
    failures,
    rows_to_csv,
    run_sweep,
    summarize,
    summary_to_csv,
)
from .problem import Assignment, check_feasible, metrics
from .scenario import ScenarioConfig, build_instance
from .solvers import SOLVERS, solve

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_UNPROVEN = 3

DEFAULT_TIME_BUDGET = 60.0


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; here 2 means an infeasible instance."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class UsageError(Exception):
    pass


def _k_range(text: str) -> tuple[int, ...]:
    lo, sep, hi = text.partition("..")
    try:
        a = int(lo)
        b = int(hi) if sep else a
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'a..b' or a single integer, got {text!r}") from None
    if a < 0 or b < a:
        raise argparse.ArgumentTypeError(f"empty or negative range {text!r}")
    return tuple(range(a, b + 1))


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return value


def _nonneg_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {value}")
    return value


def _seed(text: str) -> int:
    value = _nonneg_int(text)
    if value >= 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return value


def _decimal(text: str) -> Decimal:
    try:
        value = Decimal(text)
    except InvalidOperation:
        raise argparse.ArgumentTypeError(f"not a decimal number: {text!r}") from None
    if not value.is_finite() or value <= 0:
        raise argparse.ArgumentTypeError(f"must be a positive number, got {text!r}")
    return value


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    scenario = _Parser(add_help=False)
    g = scenario.add_argument_group("scenario")
    g.add_argument("--config", type=Path, help="TOML configuration file")
    g.add_argument("--seed", type=_seed, help="random seed (u64)")
    g.add_argument("--packages-per-vehicle", type=_nonneg_int, metavar="K")
    g.add_argument("--requests", type=_nonneg_int, metavar="N", help="number of user requests")
    g.add_argument("--vehicles", type=_nonneg_int, metavar="N", help="number of parked vehicles")
    g.add_argument("--alpha", type=_decimal, metavar="MBPS_PER_MHZ",
                   help="data rate per MHz of demand")

    solver = _Parser(add_help=False)
    s = solver.add_argument_group("solver")
    s.add_argument("--solver", choices=SOLVERS)
    s.add_argument("--time-budget-s", type=_positive_float, metavar="SECONDS")
    s.add_argument("--node-budget", type=_positive_int, metavar="N")

    parser = _Parser(prog="vfogmatch", description="Energy-aware request matching for a parked-vehicle fog.")
    sub = parser.add_subparsers(dest="command", metavar="command", required=True)

    p = sub.add_parser("generate", parents=[scenario], help="write a generated instance as TOML")
    p.add_argument("--out", type=Path, help="output file (default: stdout)")

    p = sub.add_parser("solve", parents=[scenario, solver], help="solve an instance")
    p.add_argument("--instance", type=Path, help="instance TOML; otherwise one is generated")
    p.add_argument("--out", type=Path, help="write the assignment CSV here")

    p = sub.add_parser("evaluate", parents=[scenario], help="check and score an assignment")
    p.add_argument("--instance", type=Path, help="instance TOML; otherwise one is generated")
    p.add_argument("--assignment", type=Path, required=True, help="assignment CSV (request_id,target)")

    p = sub.add_parser("sweep", parents=[scenario, solver], help="packages-per-vehicle sweep")
    p.add_argument("--k", type=_k_range, metavar="A..B", help="package counts to sweep (default 0..10)")
    p.add_argument("--seeds", type=_positive_int, metavar="N",
                   help="number of seeds, counting up from --seed (default 10)")
    p.add_argument("--jobs", type=_positive_int, metavar="N", help="worker processes (default 1)")
    p.add_argument("--out", type=Path, help="per-cell CSV (default: stdout)")
    p.add_argument("--summary-out", type=Path,
                   help="per-k summary CSV (default: next to --out as <stem>.summary.csv)")

    sub.add_parser("show-config", parents=[scenario, solver], help="print the resolved configuration")
    return parser


# -- configuration resolution ----------------------------------------------

_SOLVER_KEYS = {"name", "time_budget_s", "node_budget"}
_SWEEP_KEYS = {"k", "seeds", "first_seed", "jobs"}


def _load_document(args) -> dict:
    if getattr(args, "config", None) is None:
        return {}
    if not args.config.is_file():
        raise UsageError(f"config file not found: {args.config}")
    return config_io.read_toml(args.config)


def resolve_scenario(args, doc: dict) -> ScenarioConfig:
    config = config_io.config_from_dict(doc)
    overrides = {}
    for flag, key in (
        ("seed", "seed"),
        ("packages_per_vehicle", "packages_per_vehicle"),
        ("requests", "request_count"),
        ("vehicles", "vehicle_count"),
        ("alpha", "alpha"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    return config.with_(**overrides).validate()


def resolve_solver(args, doc: dict) -> dict:
    section = doc.get("solver", {})
    extra = set(section) - _SOLVER_KEYS
    if extra:
        raise ConfigurationError(f"[solver]: unknown keys {sorted(extra)}")
    out = {
        "name": section.get("name", "exact"),
        "time_budget_s": section.get("time_budget_s", DEFAULT_TIME_BUDGET),
        "node_budget": section.get("node_budget"),
    }
    if getattr(args, "solver", None) is not None:
        out["name"] = args.solver
    if getattr(args, "time_budget_s", None) is not None:
        out["time_budget_s"] = args.time_budget_s
    if getattr(args, "node_budget", None) is not None:
        out["node_budget"] = args.node_budget
    if out["name"] not in SOLVERS:
        raise ConfigurationError(f"[solver] name {out['name']!r}; choose from {', '.join(SOLVERS)}")
    return out


def resolve_sweep(args, doc: dict, base: ScenarioConfig, solver: dict) -> SweepConfig:
    section = doc.get("sweep", {})
    extra = set(section) - _SWEEP_KEYS
    if extra:
        raise ConfigurationError(f"[sweep]: unknown keys {sorted(extra)}")
    k_values = args.k
    if k_values is None:
        k_values = _k_range(str(section["k"])) if "k" in section else tuple(range(11))
    count = args.seeds if args.seeds is not None else int(section.get("seeds", 10))
    first = args.seed if args.seed is not None else int(section.get("first_seed", base.seed))
    jobs = args.jobs if args.jobs is not None else int(section.get("jobs", 1))
    return SweepConfig(
        base=base,
        k_values=k_values,
        seeds=tuple(range(first, first + count)),
        solver=solver["name"],
        time_budget=solver["time_budget_s"],
        node_budget=solver["node_budget"],
        jobs=jobs,
    )


def _instance(args, doc):
    if getattr(args, "instance", None) is not None:
        if not args.instance.is_file():
            raise UsageError(f"instance file not found: {args.instance}")
        return config_io.load_instance(args.instance)
    return build_instance(resolve_scenario(args, doc))


def _emit(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def _report(m, out=sys.stdout) -> None:
    print(f"total_power_w      {m.total_power:.6f}", file=out)
    print(f"network_power_w    {m.network_power:.6f}", file=out)
    print(f"processing_power_w {m.processing_power:.6f}", file=out)
    print(f"cloud_workload_mhz {m.cloud_workload} ({m.cloud_request_count} requests)", file=out)
    print(f"fog_workload_mhz   {m.fog_workload} ({m.fog_request_count} requests)", file=out)


# -- commands --------------------------------------------------------------

def cmd_generate(args, doc) -> int:
    instance = build_instance(resolve_scenario(args, doc))
    _emit(config_io.dumps_instance(instance), args.out)
    return EXIT_OK


def cmd_solve(args, doc) -> int:
    instance = _instance(args, doc)
    opts = resolve_solver(args, doc)
    sol = solve(instance, opts["name"], opts["time_budget_s"], opts["node_budget"])
    text = "request_id,target\n" + sol.assignment.to_text()
    if args.out is not None:
        args.out.write_text(text)
    m = metrics(sol.assignment, instance)
    print(f"solver             {sol.solver}")
    print(f"objective_w        {sol.objective:.6f}")
    print(f"optimal            {'yes' if sol.optimal else 'no (budget exhausted)'}")
    print(f"nodes              {sol.nodes_explored}")
    print(f"runtime_s          {sol.runtime:.3f}")
    _report(m)
    if args.out is None:
        sys.stdout.write(text)
    if sol.solver == "exact" and not sol.optimal:
        return EXIT_UNPROVEN
    return EXIT_OK


def cmd_evaluate(args, doc) -> int:
    instance = _instance(args, doc)
    if not args.assignment.is_file():
        raise UsageError(f"assignment file not found: {args.assignment}")
    try:
        assignment = Assignment.from_text(args.assignment.read_text())
    except ValueError as exc:
        raise UsageError(f"{args.assignment}: {exc}") from None
    if len(assignment) != len(instance.requests):
        raise UsageError(
            f"assignment covers {len(assignment)} requests, instance has {len(instance.requests)}"
        )
    violations = check_feasible(assignment, instance)
    for v in violations:
        print(f"violation: {v.kind} on {v.subject}: load {v.load} exceeds {v.limit}", file=sys.stderr)
    _report(metrics(assignment, instance))
    print(f"feasible           {'yes' if not violations else 'no'}")
    return EXIT_INFEASIBLE if violations else EXIT_OK


def cmd_sweep(args, doc) -> int:
    base = resolve_scenario(args, doc)
    config = resolve_sweep(args, doc, base, resolve_solver(args, doc))
    rows = run_sweep(config)
    _emit(rows_to_csv(rows), args.out)
    summary_path = args.summary_out
    if summary_path is None and args.out is not None:
        summary_path = args.out.with_name(args.out.stem + ".summary.csv")
    if summary_path is not None:
        summary_path.write_text(summary_to_csv(summarize(rows)))
    bad = failures(rows)
    for row in bad:
        print(f"cell k={row.k} seed={row.seed} failed: {row.error}", file=sys.stderr)
    if any("Infeasible" in row.error for row in bad):
        return EXIT_INFEASIBLE
    if bad or (config.solver == "exact" and not all(r.optimal for r in rows)):
        return EXIT_UNPROVEN
    return EXIT_OK


def cmd_show_config(args, doc) -> int:
    config = resolve_scenario(args, doc)
    solver = resolve_solver(args, doc)
    extra = {"solver": {k: v for k, v in solver.items() if v is not None}}
    if "sweep" in doc:
        extra["sweep"] = doc["sweep"]
    sys.stdout.write(config_io.dump_config(config, extra))
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "solve": cmd_solve,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "show-config": cmd_show_config,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc = _load_document(args)
        return COMMANDS[args.command](args, doc)
    except (UsageError, ConfigurationError, ProblemSizeError) as exc:
        print(f"vfogmatch: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleInstanceError as exc:
        print(f"vfogmatch: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SearchBudgetError as exc:
        print(f"vfogmatch: {exc}", file=sys.stderr)
        return EXIT_UNPROVEN


if __name__ == "__main__":
    sys.exit(main())

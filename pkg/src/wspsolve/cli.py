"""Command line interface and benchmark harness.

Subcommands: solve, generate, enumerate, oracle, bench.  Exit codes
form a machine contract: 0 sat, 20 unsat, 21 timeout, 2 input error.

The bench harness mirrors the generator's experiment protocol: a suite
like ``k=30 d=10 c=1.0k,1.2k,1.4k seeds=0..9`` produces three instances
per (k, seed), each solved under a per-instance time limit (one hour by
default).  The CSV report has one row per instance, one per (k, seed)
set (a set fails if any of its three instances timed out), and one
success-rate row per k giving the fraction of sets that finished.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, Sequence

from .generator import GeneratorConfig, density_to_e, generate
from .model import (
    SAT,
    TIMEOUT,
    UNSAT,
    ParseError,
    WorkflowInstance,
    format_solution,
    parse_instance,
    preprocess,
    serialize_instance,
)
from .oracle import BudgetExceededError, oracle_solve
from .pattern import encode
from .solver import HeuristicParams, solve, solve_enumerating

EXIT_SAT = 0
EXIT_UNSAT = 20
EXIT_TIMEOUT = 21
EXIT_INPUT_ERROR = 2

_STATUS_EXIT = {SAT: EXIT_SAT, UNSAT: EXIT_UNSAT, TIMEOUT: EXIT_TIMEOUT}

_DURATION_UNITS = {"ms": 0.001, "s": 1.0, "m": 60.0, "h": 3600.0}


def parse_duration(text: str) -> float:
    """Seconds from '90', '500ms', '30s', '5m' or '1h'."""
    text = text.strip()
    for unit in ("ms", "s", "m", "h"):
        if text.endswith(unit):
            return float(text[: -len(unit)]) * _DURATION_UNITS[unit]
    return float(text)


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


@dataclass(frozen=True)
class SuiteSpec:
    """Parsed form of a ``k=.. d=.. c=.. seeds=..`` suite description."""

    step_counts: tuple[int, ...]
    density: float
    c_multipliers: tuple[float, ...]
    seeds: tuple[int, ...]

    def configs(self) -> list[GeneratorConfig]:
        out = []
        for k in self.step_counts:
            e = density_to_e(k, self.density)
            for seed in self.seeds:
                for mult in self.c_multipliers:
                    out.append(
                        GeneratorConfig(k, e, _round_half_up(mult * k), seed)
                    )
        return out


def parse_suite(text: str) -> SuiteSpec:
    """Parse a suite description, e.g. 'k=30 d=10 c=1.0k,1.2k,1.4k seeds=0..9'."""
    parts: dict[str, str] = {}
    for token in text.split():
        if "=" not in token:
            raise ValueError(f"suite token {token!r} is not key=value")
        key, value = token.split("=", 1)
        if key in parts:
            raise ValueError(f"duplicate suite key {key!r}")
        parts[key] = value
    missing = {"k", "d", "c", "seeds"} - parts.keys()
    if missing:
        raise ValueError(f"suite is missing {sorted(missing)}")
    ks = tuple(int(x) for x in parts["k"].split(","))
    density = float(parts["d"])
    mults = []
    for item in parts["c"].split(","):
        item = item.strip()
        if not item.endswith("k"):
            raise ValueError(f"suite c entry {item!r} must be a multiple of k, like 1.2k")
        mults.append(float(item[:-1]))
    seeds_text = parts["seeds"]
    if ".." in seeds_text:
        lo, hi = seeds_text.split("..", 1)
        seeds = tuple(range(int(lo), int(hi) + 1))
    else:
        seeds = tuple(int(x) for x in seeds_text.split(","))
    if not (ks and mults and seeds):
        raise ValueError("suite needs at least one k, c and seed")
    return SuiteSpec(ks, density, tuple(mults), seeds)


# --- bench records ----------------------------------------------------------

BENCH_COLUMNS = (
    "kind",
    "id",
    "k",
    "e",
    "c",
    "seed",
    "verdict",
    "wall_ms",
    "nodes",
    "matchings",
    "prunes",
    "success_rate",
)


@dataclass(frozen=True)
class BenchRecord:
    kind: str  # instance | set | rate
    id: str
    k: int
    e: int | None = None
    c: int | None = None
    seed: int | None = None
    verdict: str | None = None
    wall_ms: int | None = None
    nodes: int | None = None
    matchings: int | None = None
    prunes: int | None = None
    success_rate: float | None = None

    def to_row(self) -> dict[str, str]:
        row = {}
        for f in fields(self):
            v = getattr(self, f.name)
            row[f.name] = "" if v is None else str(v)
        return row

    @classmethod
    def from_row(cls, row: dict[str, str]) -> "BenchRecord":
        def opt(name: str, conv):
            v = row.get(name, "")
            return None if v == "" else conv(v)

        return cls(
            kind=row["kind"],
            id=row["id"],
            k=int(row["k"]),
            e=opt("e", int),
            c=opt("c", int),
            seed=opt("seed", int),
            verdict=opt("verdict", str),
            wall_ms=opt("wall_ms", int),
            nodes=opt("nodes", int),
            matchings=opt("matchings", int),
            prunes=opt("prunes", int),
            success_rate=opt("success_rate", float),
        )


def instance_id(config: GeneratorConfig, density: float) -> str:
    return f"k{config.step_count}-d{density:g}-c{config.counting}-s{config.seed}"


def _bench_one(args: tuple) -> BenchRecord:
    k, e, c, seed, density, time_limit, alpha, beta, gamma = args
    config = GeneratorConfig(k, e, c, seed)
    instance = generate(config)
    pre = preprocess(instance)
    outcome = solve(
        pre.instance,
        HeuristicParams(alpha, beta, gamma),
        time_limit=time_limit,
    )
    st = outcome.stats
    return BenchRecord(
        kind="instance",
        id=instance_id(config, density),
        k=k,
        e=e,
        c=c,
        seed=seed,
        verdict=outcome.status,
        wall_ms=int(st.wall_time * 1000),
        nodes=st.nodes,
        matchings=st.matchings,
        prunes=st.prunes,
    )


def run_bench(
    suite: SuiteSpec,
    time_limit: float,
    jobs: int = 1,
    params: HeuristicParams | None = None,
) -> list[BenchRecord]:
    """Generate and solve the suite; returns instance, set and rate rows."""
    params = params or HeuristicParams()
    tasks = []
    for k in suite.step_counts:
        e = density_to_e(k, suite.density)
        for seed in suite.seeds:
            for mult in suite.c_multipliers:
                c = _round_half_up(mult * k)
                tasks.append(
                    (k, e, c, seed, suite.density, time_limit, params.alpha, params.beta, params.gamma)
                )
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_bench_one, tasks))
    else:
        records = [_bench_one(t) for t in tasks]

    out = list(records)
    rate_by_k: dict[int, list[bool]] = {}
    i = 0
    for k in suite.step_counts:
        for seed in suite.seeds:
            members = records[i : i + len(suite.c_multipliers)]
            i += len(suite.c_multipliers)
            ok = all(r.verdict != TIMEOUT for r in members)
            rate_by_k.setdefault(k, []).append(ok)
            out.append(
                BenchRecord(
                    kind="set",
                    id=f"k{k}-s{seed}",
                    k=k,
                    seed=seed,
                    verdict="ok" if ok else "failed",
                    wall_ms=sum(r.wall_ms for r in members),
                    nodes=sum(r.nodes for r in members),
                    matchings=sum(r.matchings for r in members),
                    prunes=sum(r.prunes for r in members),
                )
            )
    for k in suite.step_counts:
        oks = rate_by_k[k]
        out.append(
            BenchRecord(
                kind="rate",
                id=f"k{k}",
                k=k,
                success_rate=sum(oks) / len(oks),
            )
        )
    return out


def write_bench_csv(records: Iterable[BenchRecord], stream) -> None:
    writer = csv.DictWriter(stream, fieldnames=BENCH_COLUMNS)
    writer.writeheader()
    for r in records:
        writer.writerow(r.to_row())


def read_bench_csv(stream) -> list[BenchRecord]:
    reader = csv.DictReader(stream)
    if reader.fieldnames is None or tuple(reader.fieldnames) != BENCH_COLUMNS:
        raise ValueError("unrecognised bench CSV header")
    return [BenchRecord.from_row(row) for row in reader]


def summarize_bench(records: Sequence[BenchRecord]) -> str:
    """Human summary; recomputes set success from instance rows as a check."""
    instances = [r for r in records if r.kind == "instance"]
    sets = [r for r in records if r.kind == "set"]
    rates = [r for r in records if r.kind == "rate"]
    lines = [
        f"instances: {len(instances)}"
        f" (sat {sum(1 for r in instances if r.verdict == SAT)},"
        f" unsat {sum(1 for r in instances if r.verdict == UNSAT)},"
        f" timeout {sum(1 for r in instances if r.verdict == TIMEOUT)})"
    ]
    by_set: dict[tuple[int, int], bool] = {}
    for r in instances:
        key = (r.k, r.seed)
        by_set[key] = by_set.get(key, True) and r.verdict != TIMEOUT
    for r in sets:
        recomputed = by_set.get((r.k, r.seed))
        if recomputed is not None and recomputed != (r.verdict == "ok"):
            raise ValueError(f"set row {r.id} disagrees with its instance rows")
    for r in rates:
        sets_k = [ok for (k, _), ok in sorted(by_set.items()) if k == r.k]
        lines.append(
            f"k={r.k}: success rate {r.success_rate:.3f}"
            f" over {len(sets_k)} sets"
        )
        if sets_k and abs(sum(sets_k) / len(sets_k) - r.success_rate) > 1e-9:
            raise ValueError(f"rate row {r.id} disagrees with its set rows")
    if instances:
        worst = max(instances, key=lambda r: r.wall_ms)
        lines.append(f"slowest instance: {worst.id} at {worst.wall_ms} ms")
    return "\n".join(lines)


# --- subcommands ------------------------------------------------------------


def _heuristic_params(args) -> HeuristicParams:
    return HeuristicParams(args.alpha, args.beta, args.gamma)


def _read_instance(path: str) -> WorkflowInstance:
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    return parse_instance(text)


def _emit_stats(outcome_stats, status: str) -> None:
    st = outcome_stats
    for key, value in (
        ("status", status),
        ("nodes", st.nodes),
        ("auth_prunes", st.auth_prunes),
        ("eligibility_prunes", st.eligibility_prunes),
        ("matchings", st.matchings),
        ("matchings_full", st.matchings_full),
        ("wall_ms", int(st.wall_time * 1000)),
    ):
        print(f"{key}={value}", file=sys.stderr)


def cmd_solve(args) -> int:
    instance = _read_instance(args.instance)
    pre = preprocess(instance)
    limit = None if args.time_limit is None else parse_duration(args.time_limit)
    outcome = solve(pre.instance, _heuristic_params(args), time_limit=limit)
    plan = pre.expand_plan(outcome.plan) if outcome.plan is not None else None
    text = format_solution(outcome.status, plan)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.stats:
        _emit_stats(outcome.stats, outcome.status)
    return _STATUS_EXIT[outcome.status]


def cmd_generate(args) -> int:
    if args.suite:
        suite = parse_suite(args.suite)
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for config in suite.configs():
            path = out_dir / f"{instance_id(config, suite.density)}.wsp"
            path.write_text(serialize_instance(generate(config)))
            print(path)
        return 0
    if args.steps is None:
        raise ValueError("generate needs --steps (or --suite)")
    if (args.not_equals is None) == (args.density is None):
        raise ValueError("give exactly one of --not-equals and --density")
    e = (
        args.not_equals
        if args.not_equals is not None
        else density_to_e(args.steps, args.density)
    )
    config = GeneratorConfig(args.steps, e, args.counting, args.seed, users=args.users)
    text = serialize_instance(generate(config))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_enumerate(args) -> int:
    instance = _read_instance(args.instance)
    pre = preprocess(instance)
    limit = None if args.time_limit is None else parse_duration(args.time_limit)
    result = solve_enumerating(pre.instance, _heuristic_params(args), time_limit=limit)
    if result.timed_out:
        print("timeout")
        return EXIT_TIMEOUT
    print(f"patterns {result.count}")
    for plan in result.plans:
        expanded = pre.expand_plan(plan)
        pat = encode(expanded, instance.step_count)
        print("pattern " + " ".join(str(x) for x in pat))
        for s in sorted(expanded):
            print(f"assign {s} {expanded[s]}")
    if args.stats:
        _emit_stats(result.stats, SAT if result.count else UNSAT)
    return EXIT_SAT if result.count else EXIT_UNSAT


def cmd_oracle(args) -> int:
    instance = _read_instance(args.instance)
    result = oracle_solve(instance, max_plans=args.budget)
    print(result.status)
    print(f"patterns {len(result.valid_patterns)}")
    if args.patterns:
        for pat in result.valid_patterns:
            print("pattern " + " ".join(str(x) for x in pat))
    return EXIT_SAT if result.is_sat else EXIT_UNSAT


def cmd_bench(args) -> int:
    if args.summarize:
        with open(args.summarize, newline="") as f:
            records = read_bench_csv(f)
        print(summarize_bench(records))
        return 0
    if not args.suite:
        raise ValueError("bench needs --suite (or --summarize FILE)")
    suite = parse_suite(args.suite)
    records = run_bench(
        suite,
        time_limit=parse_duration(args.time_limit),
        jobs=args.jobs,
        params=_heuristic_params(args),
    )
    if args.out:
        with open(args.out, "w", newline="") as f:
            write_bench_csv(records, f)
    else:
        write_bench_csv(records, sys.stdout)
    print(summarize_bench(records), file=sys.stderr)
    return 0


def _add_heuristic_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=100.0, help="weight of saturated at-most scopes")
    p.add_argument("--beta", type=float, default=2.0, help="weight of at-most scopes one user short")
    p.add_argument("--gamma", type=float, default=1.0, help="weight of at-most scopes two users short")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wspsolve",
        description="Workflow satisfiability: solve, generate and benchmark instances.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve an instance file")
    p.add_argument("instance", help="instance file, or - for stdin")
    p.add_argument("--time-limit", help="e.g. 60s, 500ms, 1h")
    p.add_argument("--out", help="write the solution here instead of stdout")
    p.add_argument("--stats", action="store_true", help="key=value counters on stderr")
    _add_heuristic_args(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("generate", help="generate random instances")
    p.add_argument("--steps", "-k", type=int)
    p.add_argument("--not-equals", "-e", type=int)
    p.add_argument("--density", "-d", type=float, help="percent of step pairs constrained")
    p.add_argument("--counting", "-c", type=int, default=0, help="number of at-most-3 and of at-least-3 constraints")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--users", type=int, help="override the default of 10 users per step")
    p.add_argument("--out", help="write the instance here instead of stdout")
    p.add_argument("--suite", help="e.g. 'k=30 d=10 c=1.0k,1.2k,1.4k seeds=0..9'")
    p.add_argument("--out-dir", default=".", help="directory for --suite files")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("enumerate", help="list every valid pattern with a witness plan")
    p.add_argument("instance")
    p.add_argument("--time-limit")
    p.add_argument("--stats", action="store_true")
    _add_heuristic_args(p)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("oracle", help="exhaustive ground-truth check (small instances)")
    p.add_argument("instance")
    p.add_argument("--budget", type=int, default=2_000_000, help="max complete plans to enumerate")
    p.add_argument("--patterns", action="store_true", help="also list the valid patterns")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bench", help="run a benchmark suite to CSV")
    p.add_argument("--suite", help="e.g. 'k=30 d=10 c=1.0k,1.2k,1.4k seeds=0..9'")
    p.add_argument("--time-limit", default="1h", help="per instance (default 1h)")
    p.add_argument("--jobs", type=int, default=1, help="solve this many instances in parallel")
    p.add_argument("--out", help="CSV path (default stdout)")
    p.add_argument("--summarize", metavar="FILE", help="summarise an existing CSV and exit")
    _add_heuristic_args(p)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, BudgetExceededError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())

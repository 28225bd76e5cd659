"""Command-line front end: solve, check, gen, oracle, bench.

Exit codes are the status channel: 0 = solvable / verified, 1 = unsolvable /
verification failed, 2 = budget exceeded, 3 = usage or input errors, 4 =
solver/oracle disagreement.  Standard output carries only tab-separated
report lines and file paths; diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .matrix import MatrixFormatError, build_extended, dump_matrix, load_matrix
from .oracle import (
    GenerationError,
    GeneratorParams,
    OracleBudgetError,
    count_conflicts,
    generate_instance,
    oracle_solve,
)
from .phylo import (
    TreeFormatError,
    build_perfect_phylogeny,
    parse_edgelist,
    to_persistent,
    verify_persistent,
    write_edgelist,
    write_newick,
)
from .redblack import TraceError, parse_trace, replay
from .search import SearchOptions, Status, decide_pp

EXIT_SAT = 0
EXIT_UNSAT = 1
EXIT_TIMEOUT = 2
EXIT_ERROR = 3
EXIT_DISAGREE = 4

REPORT_FIELDS = ("instance", "n", "m", "conflicts", "status", "nodes", "prunes",
                 "time_ms", "reduction", "outputs")
REPORT_HEADER = "\t".join(REPORT_FIELDS)


@dataclass
class RunReport:
    """One solver run as a single tab-separated record."""

    instance: str
    n: int
    m: int
    conflicts: int
    status: str
    nodes: int = 0
    prunes: int = 0
    time_ms: float = 0.0
    reduction: str = "-"
    outputs: str = "-"

    def to_line(self) -> str:
        return "\t".join([
            self.instance.replace("\t", " "),
            str(self.n),
            str(self.m),
            str(self.conflicts),
            self.status,
            str(self.nodes),
            str(self.prunes),
            f"{self.time_ms:.3f}",
            self.reduction or "-",
            self.outputs or "-",
        ])

    @classmethod
    def from_line(cls, line: str) -> "RunReport":
        parts = line.rstrip("\n").split("\t")
        if len(parts) != len(REPORT_FIELDS):
            raise ValueError(f"report line has {len(parts)} fields, expected {len(REPORT_FIELDS)}")
        return cls(
            instance=parts[0],
            n=int(parts[1]),
            m=int(parts[2]),
            conflicts=int(parts[3]),
            status=parts[4],
            nodes=int(parts[5]),
            prunes=int(parts[6]),
            time_ms=float(parts[7]),
            reduction=parts[8],
            outputs=parts[9],
        )


def _fail(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_ERROR


def _load(path: str, drop_zero_columns: bool):
    text = Path(path).read_text()
    return load_matrix(text, drop_zero_columns=drop_zero_columns)


def _search_options(args) -> SearchOptions:
    return SearchOptions(
        order=args.order,
        max_time=args.max_time,
        max_nodes=args.max_nodes,
        memo=args.memo,
        parallel=args.parallel,
    )


def _solve_one(path: str, args, budget: Optional[float] = None) -> tuple[RunReport, int]:
    matrix = _load(path, args.drop_zero_columns)
    me = build_extended(matrix)
    opts = _search_options(args)
    if budget is not None:
        opts.max_time = budget
    outcome = decide_pp(me, opts)
    n_input = sum(len(g) for g in matrix.species_groups)
    report = RunReport(
        instance=path,
        n=n_input,
        m=matrix.n_characters,
        conflicts=count_conflicts(matrix),
        status=str(outcome.status),
        nodes=outcome.nodes,
        prunes=outcome.prunes,
        time_ms=outcome.elapsed * 1000.0,
    )
    outputs = []
    if outcome.status == Status.SAT:
        report.reduction = ",".join(matrix.character_labels[c] for c in outcome.reduction)
        tree = to_persistent(build_perfect_phylogeny(outcome.completion))
        check = verify_persistent(tree, matrix)
        if not check.ok:
            raise AssertionError(f"constructed tree failed verification: {check.first()}")
        if getattr(args, "newick", None):
            Path(args.newick).write_text(write_newick(tree) + "\n")
            outputs.append(args.newick)
        if getattr(args, "edgelist", None):
            Path(args.edgelist).write_text(write_edgelist(tree))
            outputs.append(args.edgelist)
        if getattr(args, "trace", None):
            Path(args.trace).write_text(
                outcome.log.to_trace(matrix.character_labels, matrix.species_groups))
            outputs.append(args.trace)
    if outputs:
        report.outputs = ";".join(outputs)
    code = {Status.SAT: EXIT_SAT, Status.UNSAT: EXIT_UNSAT, Status.TIMEOUT: EXIT_TIMEOUT}[outcome.status]
    return report, code


def cmd_solve(args) -> int:
    try:
        report, code = _solve_one(args.matrix, args)
    except (OSError, MatrixFormatError, ValueError) as exc:
        return _fail(str(exc))
    print(report.to_line())
    return code


def cmd_check(args) -> int:
    try:
        matrix = _load(args.matrix, args.drop_zero_columns)
    except (OSError, MatrixFormatError) as exc:
        return _fail(str(exc))
    if bool(args.tree) == bool(args.trace):
        return _fail("check needs exactly one of --tree or --trace")

    if args.tree:
        try:
            tree = parse_edgelist(Path(args.tree).read_text(), matrix.character_labels)
        except (OSError, TreeFormatError) as exc:
            return _fail(str(exc))
        report = verify_persistent(tree, matrix)
        if not report.ok:
            first = report.first()
            print(f"property {first.prop} violated: {first.message}", file=sys.stderr)
            return EXIT_UNSAT
        print(f"{args.matrix}\ttree-ok\t{args.tree}")
        return EXIT_SAT

    try:
        events = parse_trace(Path(args.trace).read_text())
    except (OSError, TraceError) as exc:
        return _fail(str(exc))
    label_to_char = {lab: c for c, lab in enumerate(matrix.character_labels)}
    sequence = []
    seen = set()
    for verb, name in events:
        if verb != "realize":
            continue
        if name not in label_to_char:
            print(f"unknown character {name!r} in trace", file=sys.stderr)
            return EXIT_UNSAT
        c = label_to_char[name]
        if c in seen:
            print(f"duplicate realization of {name}", file=sys.stderr)
            return EXIT_UNSAT
        seen.add(c)
        sequence.append(c)
    if len(sequence) != matrix.n_characters:
        print(f"incomplete reduction: {len(sequence)} of {matrix.n_characters} characters realized",
              file=sys.stderr)
        return EXIT_UNSAT
    me = build_extended(matrix)
    result = replay(me, sequence)
    if not result.is_successful:
        print("reduction leaves edges in the graph", file=sys.stderr)
        return EXIT_UNSAT
    if any(verb != "realize" for verb, _ in events):
        regenerated = [
            tuple(line.split()) for line in
            result.log.to_trace(matrix.character_labels, matrix.species_groups).splitlines()
        ]
        if regenerated != [tuple(ev) for ev in events]:
            print("trace does not match the replayed reduction", file=sys.stderr)
            return EXIT_UNSAT
    tree = to_persistent(build_perfect_phylogeny(result.completion))
    report = verify_persistent(tree, matrix)
    if not report.ok:
        first = report.first()
        print(f"property {first.prop} violated: {first.message}", file=sys.stderr)
        return EXIT_UNSAT
    print(f"{args.matrix}\ttrace-ok\t{args.trace}")
    return EXIT_SAT


def cmd_gen(args) -> int:
    seed = args.seed
    if seed is None:
        env = os.environ.get("PERPHYLO_SEED")
        if env is None:
            return _fail("no --seed given and PERPHYLO_SEED is not set")
        seed = int(env)
    try:
        params = GeneratorParams(
            n_species=args.species,
            n_characters=args.chars,
            loss_probability=args.loss_prob,
            seed=seed,
            max_retries=args.max_retries,
            require_distinct_rows=not args.allow_duplicate_rows,
        )
        matrix, tree = generate_instance(params)
    except (ValueError, GenerationError) as exc:
        return _fail(str(exc))
    text = (
        f"# generated: species={args.species} chars={args.chars} "
        f"loss-prob={args.loss_prob} seed={seed}\n"
        + dump_matrix(matrix, expand_groups=True)
    )
    Path(args.out).write_text(text)
    print(args.out)
    if args.with_tree:
        Path(args.with_tree).write_text(write_edgelist(tree))
        print(args.with_tree)
    return 0


def cmd_oracle(args) -> int:
    try:
        matrix = _load(args.matrix, args.drop_zero_columns)
        me = build_extended(matrix)
        t0 = time.monotonic()
        completion = oracle_solve(me, max_unknowns=args.max_unknowns)
        elapsed = time.monotonic() - t0
    except (OSError, MatrixFormatError, OracleBudgetError) as exc:
        return _fail(str(exc))
    oracle_status = "SAT" if completion is not None else "UNSAT"
    report = RunReport(
        instance=args.matrix,
        n=sum(len(g) for g in matrix.species_groups),
        m=matrix.n_characters,
        conflicts=count_conflicts(matrix),
        status=oracle_status,
        time_ms=elapsed * 1000.0,
    )
    outcome = decide_pp(build_extended(matrix), SearchOptions())
    report.nodes = outcome.nodes
    report.prunes = outcome.prunes
    print(report.to_line())
    if str(outcome.status) != oracle_status:
        print(f"disagreement: solver says {outcome.status}, oracle says {oracle_status}",
              file=sys.stderr)
        return EXIT_DISAGREE
    return EXIT_SAT if oracle_status == "SAT" else EXIT_UNSAT


def _aggregate(reports: list[RunReport]) -> list[str]:
    groups: dict[tuple[int, int], list[RunReport]] = {}
    for rep in reports:
        groups.setdefault((rep.n, rep.m), []).append(rep)
    lines = ["# aggregate\tn\tm\tcount\tsolved\tunsat\ttimeout\ttotal_time_s\tavg_time_s"
             "\ttotal_conflicts\tavg_conflicts"]
    for (n, m), reps in sorted(groups.items()):
        solved = [r for r in reps if r.status in ("SAT", "UNSAT")]
        timeouts = sum(1 for r in reps if r.status == "TIMEOUT")
        unsat = sum(1 for r in reps if r.status == "UNSAT")
        total_time = sum(r.time_ms for r in solved) / 1000.0
        total_conf = sum(r.conflicts for r in solved)
        k = len(solved)
        lines.append("# aggregate\t%d\t%d\t%d\t%d\t%d\t%d\t%.3f\t%.3f\t%d\t%.2f" % (
            n, m, len(reps), k, unsat, timeouts, total_time,
            total_time / k if k else 0.0, total_conf,
            total_conf / k if k else 0.0,
        ))
    return lines


def cmd_bench(args) -> int:
    directory = Path(args.directory)
    if not directory.is_dir():
        return _fail(f"{args.directory} is not a directory")
    paths = sorted(str(p) for p in directory.glob(args.pattern))

    def run(path: str) -> RunReport:
        try:
            report, _ = _solve_one(path, args, budget=args.budget)
        except (OSError, MatrixFormatError, ValueError) as exc:
            print(f"{path}: {exc}", file=sys.stderr)
            return RunReport(instance=path, n=0, m=0, conflicts=0, status="ERROR")
        return report

    if args.jobs > 1 and len(paths) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=args.jobs) as pool:
            reports = list(pool.map(run, paths))
    else:
        reports = [run(p) for p in paths]
    reports.sort(key=lambda r: r.instance)

    lines = [REPORT_HEADER]
    lines.extend(r.to_line() for r in reports)
    lines.extend(_aggregate([r for r in reports if r.status != "ERROR"]))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(args.out)
    else:
        sys.stdout.write(text)
    return 0


def _add_search_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--order", choices=["lex", "component-degree"], default="lex",
                   help="candidate expansion order")
    p.add_argument("--max-time", type=float, default=None, metavar="SECS")
    p.add_argument("--max-nodes", type=int, default=None, metavar="N")
    p.add_argument("--memo", choices=["off", "unsafe"], default="off",
                   help="set-based memoization (unproven; off by default)")
    p.add_argument("--parallel", type=int, default=1, metavar="N",
                   help="explore top-level branches with N workers")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="perphylo",
        description="Persistent perfect phylogeny solver (gain once, lose at most once).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="decide an instance and emit its tree")
    p.add_argument("matrix")
    p.add_argument("--newick", metavar="FILE")
    p.add_argument("--edgelist", metavar="FILE")
    p.add_argument("--trace", metavar="FILE", help="write the winning reduction trace")
    p.add_argument("--drop-zero-columns", action="store_true")
    _add_search_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("check", help="re-verify a tree or a reduction trace")
    p.add_argument("matrix")
    p.add_argument("--tree", metavar="FILE", help="edge-list tree file")
    p.add_argument("--trace", metavar="FILE", help="reduction trace file")
    p.add_argument("--drop-zero-columns", action="store_true")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("gen", help="generate a solvable instance")
    p.add_argument("--species", type=int, required=True, metavar="N")
    p.add_argument("--chars", type=int, required=True, metavar="M")
    p.add_argument("--loss-prob", type=float, default=0.5, metavar="P")
    p.add_argument("--seed", type=int, default=None, metavar="S",
                   help="defaults to PERPHYLO_SEED")
    p.add_argument("--out", required=True, metavar="FILE")
    p.add_argument("--with-tree", metavar="FILE", help="also write the true tree")
    p.add_argument("--max-retries", type=int, default=200)
    p.add_argument("--allow-duplicate-rows", action="store_true",
                   help="emit raw leaf rows (needed once species exceed 2*chars+1)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("oracle", help="exhaustive ground truth, cross-checked against the solver")
    p.add_argument("matrix")
    p.add_argument("--max-unknowns", type=int, default=24)
    p.add_argument("--drop-zero-columns", action="store_true")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bench", help="solve a directory of instances and aggregate")
    p.add_argument("directory")
    p.add_argument("--pattern", default="*.matrix")
    p.add_argument("--budget", type=float, default=300.0, metavar="SECS",
                   help="per-instance wall-clock budget")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", metavar="FILE")
    p.add_argument("--drop-zero-columns", action="store_true")
    _add_search_flags(p)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``python -m optsched <command> ...``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import bench
from .generators import Structure, generate
from .parallel import DEFAULT_SYNC_THRESHOLD
from .search import DEFAULT_TIMEOUT
from .space import MODELS
from .taskgraph import serialize_task_graph

DEFAULT_GRID = (0.01, 0.1, 1.0, 10.0, 60.0, 120.0)


class _Parser(argparse.ArgumentParser):
    # bad flags are errors (1); 2 is reserved for timeouts
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(bench.EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _csv_list(kind):
    def parse(text: str):
        try:
            return [kind(x) for x in text.split(",") if x.strip()]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc

    return parse


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="optsched", description="Optimal task scheduling with communication delays.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="solve one task graph")
    s.add_argument("--graph", required=True, help=".tg file")
    s.add_argument("--model", required=True, choices=MODELS)
    s.add_argument("--algo", required=True, choices=bench.ALGOS)
    s.add_argument("--threads", type=_positive_int, default=1)
    s.add_argument("--procs", type=_positive_int, required=True)
    s.add_argument("--timeout", type=_positive_float, default=DEFAULT_TIMEOUT, help="seconds")
    s.add_argument("--seed", type=int, default=0, help="steal seed for parallel algorithms")
    s.add_argument("--sync-threshold", type=_positive_int, default=DEFAULT_SYNC_THRESHOLD)
    s.add_argument("--json", action="store_true", help="print the run record as a final JSON line")
    s.add_argument("--quiet", action="store_true", help="do not print the schedule")

    g = sub.add_parser("generate", help="generate one task graph")
    g.add_argument("--structure", required=True, type=Structure.parse)
    g.add_argument("--tasks", required=True, type=int)
    g.add_argument("--ccr", required=True, type=float)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", help="output file (default: stdout)")

    c = sub.add_parser("corpus", help="generate a corpus directory with a manifest")
    c.add_argument("--structures", type=_csv_list(Structure.parse), default=list(Structure))
    c.add_argument("--tasks", type=_csv_list(int), required=True)
    c.add_argument("--ccr", type=_csv_list(float), default=[0.1, 1.0, 10.0])
    c.add_argument("--seeds", type=_csv_list(int), default=[0])
    c.add_argument("--out", required=True)

    b = sub.add_parser("bench", help="run a batch over a corpus, one fresh process per run")
    b.add_argument("--corpus", required=True)
    b.add_argument("--out", required=True, help="results CSV")
    b.add_argument("--models", type=_csv_list(str), default=list(MODELS))
    b.add_argument("--algos", type=_csv_list(str), default=["astar", "dfbnb"])
    b.add_argument("--threads", type=_csv_list(int), default=[1])
    b.add_argument("--procs", type=_csv_list(int), default=[2])
    b.add_argument("--seeds", type=_csv_list(int), default=[0])
    b.add_argument("--timeout", type=_positive_float, default=DEFAULT_TIMEOUT)
    b.add_argument("--sync-threshold", type=_positive_int, default=DEFAULT_SYNC_THRESHOLD)
    b.add_argument("--jobs", type=_positive_int, default=1, help="concurrent runs (single-threaded algorithms)")

    r = sub.add_parser("report", help="derive a report from a results CSV")
    r.add_argument("kind", choices=("profile", "speedup", "sps"))
    r.add_argument("--in", dest="inp", required=True)
    r.add_argument("--out", help="report CSV (default: stdout)")
    r.add_argument("--grid", type=_csv_list(float), default=list(DEFAULT_GRID), help="times for profile/speedup")
    return p


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_solve(a) -> int:
    outcome = bench.run_instance(a.graph, a.model, a.algo, a.threads, a.procs, a.timeout, a.seed, a.sync_threshold)
    if outcome.schedule is not None and not a.quiet:
        from .taskgraph import read_task_graph

        sys.stdout.write(outcome.schedule.to_text(read_task_graph(a.graph)))
    if outcome.exit_code == bench.EXIT_TIMEOUT:
        print(f"timeout after {outcome.record.time:.3f}s", file=sys.stderr)
    if a.json:
        print(json.dumps(dataclasses.asdict(outcome.record)))
    return outcome.exit_code


def cmd_generate(a) -> int:
    _emit(serialize_task_graph(generate(a.structure, a.tasks, a.ccr, a.seed)), a.out)
    return 0


def cmd_corpus(a) -> int:
    entries = bench.generate_corpus(a.structures, a.tasks, a.ccr, a.seeds, a.out)
    ok = sum(e.status == "ok" for e in entries)
    print(f"{ok} graphs written, {len(entries) - ok} rejected; manifest at {Path(a.out) / 'manifest.csv'}")
    return 0


def cmd_bench(a) -> int:
    for m in a.models:
        if m not in MODELS:
            raise bench.BenchError(f"unknown model {m!r}")
    for al in a.algos:
        if al not in bench.ALGOS:
            raise bench.BenchError(f"unknown algorithm {al!r}")
    configs = []
    for m in a.models:
        for al in a.algos:
            threads = [1] if al in bench.SEQUENTIAL else a.threads
            seeds = [0] if al in bench.SEQUENTIAL else a.seeds
            for t in threads:
                for p in a.procs:
                    for s in seeds:
                        configs.append(bench.RunConfig(m, al, t, p, s))
    files = bench.corpus_files(a.corpus)
    if not files:
        raise bench.BenchError(f"no task graphs in {a.corpus}")

    def progress(rec: bench.RunRecord) -> None:
        state = f"M={rec.makespan}" if rec.solved else (rec.error or "timeout")
        print(f"{rec.instance} {rec.model} {rec.algo} t={rec.threads} P={rec.num_procs} {rec.time:.3f}s {state}",
              file=sys.stderr)

    records = bench.run_batch(files, configs, a.timeout, a.sync_threshold, a.jobs, progress)
    bench.write_records(records, a.out)
    return 0


def cmd_report(a) -> int:
    records = bench.read_records(a.inp)
    if a.kind == "profile":
        text = bench.rows_to_csv(bench.performance_profile(records, a.grid), bench.PROFILE_SCHEMA)
    elif a.kind == "speedup":
        text = bench.rows_to_csv(bench.speedup_report(records, a.grid), bench.SPEEDUP_SCHEMA)
    else:
        text = bench.rows_to_csv(bench.states_per_second_report(records), bench.SPS_SCHEMA)
    _emit(text, a.out)
    return 0


COMMANDS = {"solve": cmd_solve, "generate": cmd_generate, "corpus": cmd_corpus, "bench": cmd_bench, "report": cmd_report}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (OSError, ValueError) as exc:
        print(f"optsched: error: {exc}", file=sys.stderr)
        return bench.EXIT_ERROR

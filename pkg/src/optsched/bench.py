"""Benchmark harness: single runs, corpora, batches and the derived reports.

Every table is a CSV whose first column, ``schema``, carries a version tag,
so files written by an older harness are rejected instead of misread.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import os
import subprocess
import sys
import time
from collections import defaultdict
from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .generators import GeneratorError, Structure, generate
from .parallel import DEFAULT_SYNC_THRESHOLD, pastar, pdfs
from .schedule import Schedule, is_valid, makespan
from .search import Limits, SearchAborted, SearchResult, astar, dfbnb
from .space import MODELS, make_space
from .taskgraph import SystemSpec, read_task_graph, serialize_task_graph

RECORD_SCHEMA = "runrecord/1"
MANIFEST_SCHEMA = "manifest/1"
PROFILE_SCHEMA = "profile/1"
SPEEDUP_SCHEMA = "speedup/1"
SPS_SCHEMA = "sps/1"

ALGOS = ("astar", "dfbnb", "pastar", "pastar-dd", "pdfs")
SEQUENTIAL = frozenset({"astar", "dfbnb"})
# sequential counterpart each parallel algorithm is measured against
BASELINE = {"pastar": "astar", "pastar-dd": "astar", "pdfs": "dfbnb"}

EXIT_SOLVED = 0
EXIT_ERROR = 1
EXIT_TIMEOUT = 2

NOT_REACHED = None


class BenchError(ValueError):
    pass


class NoSequentialSolves(BenchError):
    """speedup is undefined when the sequential series solved nothing by ``x``."""


@dataclass
class RunRecord:
    instance: str
    model: str
    algo: str
    threads: int
    num_procs: int
    solved: bool
    time: float
    makespan: int | None
    states_expanded: int
    states_per_second: float
    timeout: float | None = None
    seed: int = 0
    error: str = ""

    @classmethod
    def fields(cls) -> list[str]:
        return [f.name for f in dataclasses.fields(cls)]

    def to_row(self) -> dict[str, str]:
        row = {"schema": RECORD_SCHEMA}
        for name in self.fields():
            v = getattr(self, name)
            row[name] = "" if v is None else str(v)
        return row

    @classmethod
    def from_row(cls, row: Mapping[str, str]) -> RunRecord:
        if row.get("schema") != RECORD_SCHEMA:
            raise BenchError(f"unsupported record schema {row.get('schema')!r}")
        opt_int = lambda s: int(s) if s else None  # noqa: E731
        return cls(
            instance=row["instance"],
            model=row["model"],
            algo=row["algo"],
            threads=int(row["threads"]),
            num_procs=int(row["num_procs"]),
            solved=row["solved"] == "True",
            time=float(row["time"]),
            makespan=opt_int(row["makespan"]),
            states_expanded=int(row["states_expanded"]),
            states_per_second=float(row["states_per_second"]),
            timeout=float(row["timeout"]) if row["timeout"] else None,
            seed=int(row["seed"]),
            error=row["error"],
        )

    @property
    def series(self) -> tuple[str, str, int]:
        return self.model, self.algo, self.threads


def _rate(expanded: int, elapsed: float) -> float:
    if elapsed > 0:
        return expanded / elapsed
    return math.inf if expanded else 0.0


def write_records(records: Iterable[RunRecord], path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, ["schema", *RunRecord.fields()])
        w.writeheader()
        for r in records:
            w.writerow(r.to_row())


def read_records(path: str | os.PathLike) -> list[RunRecord]:
    with open(path, newline="") as fh:
        return [RunRecord.from_row(row) for row in csv.DictReader(fh)]


# -- single runs -------------------------------------------------------------


def solve(
    space,
    algo: str,
    threads: int = 1,
    limits: Limits = Limits(),
    seed: int = 0,
    sync_threshold: int = DEFAULT_SYNC_THRESHOLD,
) -> SearchResult:
    if algo == "astar":
        return astar(space, limits)
    if algo == "dfbnb":
        return dfbnb(space, limits)
    if algo in ("pastar", "pastar-dd"):
        return pastar(space, threads, algo == "pastar-dd", limits, sync_threshold, seed)
    if algo == "pdfs":
        return pdfs(space, threads, limits, sync_threshold, seed)
    raise BenchError(f"unknown algorithm {algo!r}; expected one of {ALGOS}")


@dataclass
class RunOutcome:
    record: RunRecord
    schedule: Schedule | None
    exit_code: int


def run_instance(
    graph_file: str | os.PathLike,
    model: str,
    algo: str,
    threads: int,
    num_procs: int,
    timeout: float | None,
    seed: int = 0,
    sync_threshold: int = DEFAULT_SYNC_THRESHOLD,
) -> RunOutcome:
    """Solve one instance and describe the run.

    Sequential algorithms always run with one thread. Bad arguments or an
    unreadable file raise; a timeout yields an unsolved record carrying the
    counters reached so far. The clock starts after parsing.
    """
    if model not in MODELS:
        raise BenchError(f"unknown model {model!r}; expected one of {MODELS}")
    if algo not in ALGOS:
        raise BenchError(f"unknown algorithm {algo!r}; expected one of {ALGOS}")
    if threads < 1:
        raise BenchError("threads must be >= 1")
    if timeout is not None and timeout <= 0:
        raise BenchError("timeout must be positive")
    if algo in SEQUENTIAL:
        threads = 1
    g = read_task_graph(graph_file)
    system = SystemSpec(num_procs)
    instance = Path(graph_file).stem

    def record(solved: bool, elapsed: float, mk: int | None, expanded: int) -> RunRecord:
        return RunRecord(
            instance, model, algo, threads, num_procs, solved, elapsed, mk, expanded,
            _rate(expanded, elapsed), timeout, seed,
        )

    started = time.perf_counter()
    try:
        space = make_space(model, g, system)
        res = solve(space, algo, threads, Limits(timeout=timeout), seed, sync_threshold)
    except SearchAborted as exc:
        elapsed = time.perf_counter() - started
        return RunOutcome(record(False, elapsed, None, exc.stats.get("states_expanded", 0)), None, EXIT_TIMEOUT)
    elapsed = time.perf_counter() - started
    if timeout is not None and elapsed > timeout:
        # finished past the limit between two clock checks: counts as a timeout
        return RunOutcome(record(False, elapsed, None, res.states_expanded), None, EXIT_TIMEOUT)
    return RunOutcome(record(True, elapsed, res.makespan, res.states_expanded), res.schedule, EXIT_SOLVED)


# -- corpora -----------------------------------------------------------------


@dataclass
class ManifestEntry:
    instance: str
    file: str
    structure: str
    tasks: int
    ccr: float
    seed: int
    status: str
    error: str = ""


def instance_name(structure: Structure, tasks: int, ccr: float, seed: int) -> str:
    return f"{structure.value.lower()}-n{tasks}-ccr{ccr:g}-s{seed}"


def generate_corpus(
    structures: Iterable[Structure | str],
    sizes: Iterable[int],
    ccrs: Iterable[float],
    seeds: Iterable[int],
    out_dir: str | os.PathLike,
) -> list[ManifestEntry]:
    """Write one ``.tg`` file per valid combination plus ``manifest.csv``.

    Combinations the generator rejects (an edgeless shape with a positive
    CCR, too few tasks for the shape) get a manifest row with the error
    instead of a file. Output is a pure function of the arguments.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise BenchError(f"cannot create {out}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise BenchError(f"directory {out} is not writable")
    sizes, ccrs, seeds = list(sizes), list(ccrs), list(seeds)
    entries = []
    for s in structures:
        st = Structure.parse(s) if isinstance(s, str) else s
        for n in sizes:
            for c in ccrs:
                for seed in seeds:
                    name = instance_name(st, n, c, seed)
                    try:
                        g = generate(st, n, c, seed)
                    except GeneratorError as exc:
                        entries.append(ManifestEntry(name, "", st.value, n, c, seed, "error", str(exc)))
                        continue
                    fname = name + ".tg"
                    (out / fname).write_text(serialize_task_graph(g))
                    entries.append(ManifestEntry(name, fname, st.value, n, c, seed, "ok"))
    with open(out / "manifest.csv", "w", newline="") as fh:
        fields = [f.name for f in dataclasses.fields(ManifestEntry)]
        w = csv.DictWriter(fh, ["schema", *fields])
        w.writeheader()
        for e in entries:
            w.writerow({"schema": MANIFEST_SCHEMA, **dataclasses.asdict(e)})
    return entries


def corpus_files(corpus_dir: str | os.PathLike) -> list[Path]:
    """Graph files of a corpus: the manifest's ok rows, else every ``*.tg``."""
    root = Path(corpus_dir)
    manifest = root / "manifest.csv"
    if manifest.exists():
        with open(manifest, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if rows and rows[0].get("schema") != MANIFEST_SCHEMA:
            raise BenchError(f"unsupported manifest schema {rows[0].get('schema')!r}")
        return [root / r["file"] for r in rows if r["status"] == "ok"]
    return sorted(root.glob("*.tg"))


# -- batches -----------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    model: str
    algo: str
    threads: int
    num_procs: int
    seed: int = 0


def _subprocess_run(path: Path, cfg: RunConfig, timeout: float, sync_threshold: int) -> RunRecord:
    cmd = [
        sys.executable, "-m", "optsched", "solve",
        "--graph", str(path), "--model", cfg.model, "--algo", cfg.algo,
        "--threads", str(cfg.threads), "--procs", str(cfg.num_procs),
        "--timeout", repr(timeout), "--seed", str(cfg.seed),
        "--sync-threshold", str(sync_threshold), "--json", "--quiet",
    ]
    threads = 1 if cfg.algo in SEQUENTIAL else cfg.threads

    def failed(msg: str, elapsed: float) -> RunRecord:
        return RunRecord(path.stem, cfg.model, cfg.algo, threads, cfg.num_procs, False, elapsed, None, 0, 0.0,
                         timeout, cfg.seed, msg)

    started = time.perf_counter()
    try:
        # generous wall clock for interpreter start-up; the solver enforces the real limit
        proc = subprocess.run(cmd, capture_output=True, text=True, timeout=timeout * 2 + 30)
    except subprocess.TimeoutExpired:
        return failed("killed: no response", time.perf_counter() - started)
    lines = proc.stdout.strip().splitlines()
    if proc.returncode in (EXIT_SOLVED, EXIT_TIMEOUT) and lines:
        data = json.loads(lines[-1])
        return RunRecord(**data)
    err = proc.stderr.strip().splitlines()
    return failed(err[-1] if err else f"exit code {proc.returncode}", time.perf_counter() - started)


def run_batch(
    files: Sequence[Path],
    configs: Sequence[RunConfig],
    timeout: float,
    sync_threshold: int = DEFAULT_SYNC_THRESHOLD,
    jobs: int = 1,
    progress=None,
) -> list[RunRecord]:
    """Run every (file, config) pair, each in a fresh interpreter.

    Runs are sequential unless ``jobs`` > 1; concurrent runs are only
    sensible for single-threaded algorithms.
    """
    work = [(f, c) for f in files for c in configs]

    def one(item):
        rec = _subprocess_run(item[0], item[1], timeout, sync_threshold)
        if progress is not None:
            progress(rec)
        return rec

    if jobs <= 1:
        return [one(item) for item in work]
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(one, work))


# -- reports -----------------------------------------------------------------


def _instances(records: Sequence[RunRecord]) -> list[tuple[str, int]]:
    return sorted({(r.instance, r.num_procs) for r in records})


def _by_series(records: Iterable[RunRecord]) -> dict[tuple[str, str, int], list[RunRecord]]:
    out: dict[tuple[str, str, int], list[RunRecord]] = defaultdict(list)
    for r in records:
        out[r.series].append(r)
    return dict(sorted(out.items()))


@dataclass(frozen=True)
class ProfileRow:
    model: str
    algo: str
    threads: int
    time: float
    percent_solved: float


def performance_profile(records: Sequence[RunRecord], time_grid: Sequence[float]) -> list[ProfileRow]:
    """Percentage of the instance set each series solved within each grid time.

    An instance is an (instance id, processor count) pair; a series missing
    an instance counts it as unsolved.
    """
    if not records:
        raise BenchError("no records to profile")
    total = len(_instances(records))
    rows = []
    for (model, algo, threads), recs in _by_series(records).items():
        times = sorted(r.time for r in recs if r.solved)
        for t in sorted(time_grid):
            k = sum(1 for x in times if x <= t)
            rows.append(ProfileRow(model, algo, threads, t, 100.0 * k / total))
    return rows


def partime(times: Sequence[float], k: int) -> float | None:
    """Smallest ``t`` by which the series has ``k`` solves, or NOT_REACHED."""
    if k <= 0:
        return 0.0
    ordered = sorted(times)
    return ordered[k - 1] if len(ordered) >= k else NOT_REACHED


def speedup_at(
    seq: Sequence[RunRecord], par: Mapping[int, Sequence[RunRecord]], x: float
) -> dict[int, float | None]:
    """``x / partime_n(seqnum(x))`` for every thread count ``n`` in ``par``."""
    seqnum = sum(1 for r in seq if r.solved and r.time <= x)
    if seqnum == 0:
        raise NoSequentialSolves(f"no sequential solves within {x:g}s")
    out: dict[int, float | None] = {}
    for n, recs in sorted(par.items()):
        pt = partime([r.time for r in recs if r.solved], seqnum)
        if pt is NOT_REACHED:
            out[n] = NOT_REACHED
        else:
            out[n] = x / pt if pt > 0 else math.inf
    return out


@dataclass(frozen=True)
class SpeedupRow:
    model: str
    algo: str
    threads: int
    x: float
    speedup: float | None
    note: str = ""


def speedup_report(records: Sequence[RunRecord], xs: Sequence[float]) -> list[SpeedupRow]:
    """Speedup of every parallel series against its sequential counterpart."""
    series = _by_series(records)
    rows = []
    for model in sorted({r.model for r in records}):
        for algo, base in BASELINE.items():
            par = {t: recs for (m, a, t), recs in series.items() if m == model and a == algo}
            if not par:
                continue
            seq = series.get((model, base, 1), [])
            for x in xs:
                try:
                    vals = speedup_at(seq, par, x)
                except NoSequentialSolves:
                    rows.extend(SpeedupRow(model, algo, t, x, None, "no sequential solves") for t in par)
                    continue
                for t, v in vals.items():
                    rows.append(SpeedupRow(model, algo, t, x, v, "not reached" if v is NOT_REACHED else ""))
    return rows


@dataclass(frozen=True)
class SpsRow:
    model: str
    algo: str
    threads: int
    runs: int
    states_expanded: int
    time: float
    states_per_second: float


def states_per_second_report(records: Sequence[RunRecord]) -> list[SpsRow]:
    """Aggregate expansion rate per series: total states over total time."""
    rows = []
    for (model, algo, threads), recs in _by_series(records).items():
        total = sum(r.states_expanded for r in recs)
        elapsed = sum(r.time for r in recs)
        rows.append(SpsRow(model, algo, threads, len(recs), total, elapsed, _rate(total, elapsed)))
    return rows


def rows_to_csv(rows: Sequence, schema: str) -> str:
    """Render report rows (dataclasses) as CSV text with a schema column."""
    buf = io.StringIO()
    if not rows:
        return ""
    fields = [f.name for f in dataclasses.fields(rows[0])]
    w = csv.DictWriter(buf, ["schema", *fields], lineterminator="\n")
    w.writeheader()
    for r in rows:
        d = dataclasses.asdict(r)
        if "speedup" in d and d["speedup"] is None:
            d["speedup"] = ""
        w.writerow({"schema": schema, **d})
    return buf.getvalue()


def check_record(record: RunRecord, schedule: Schedule | None, graph_file: str | os.PathLike) -> None:
    """Raise if a solved record disagrees with its emitted schedule."""
    if not record.solved:
        return
    if schedule is None:
        raise BenchError("solved record without a schedule")
    g = read_task_graph(graph_file)
    try:
        ok = is_valid(schedule, g, SystemSpec(record.num_procs))
    except ValueError as exc:
        raise BenchError(str(exc)) from exc
    if not ok:
        raise BenchError("emitted schedule is invalid")
    if makespan(schedule, g) != record.makespan:
        raise BenchError("record makespan differs from its schedule")

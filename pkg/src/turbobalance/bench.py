"""Benchmark harness: run the solver portfolio over a corpus, with
repetitions, and reduce the per-run records to summary statistics.

Each scheduled (instance, solver, repetition) run gets its own seed derived
from the base seed and a stable hash of the triple, so any single run can be
reproduced in isolation. For every valid output the recorded imbalance is
re-evaluated on the full objective (blades plus bare disk), which keeps the
numbers comparable across solvers that do or do not look at the disk.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .datasets import InstanceFormatError, load_instance, load_manifest
from .decompose import DecompositionConfig, decompose_solve
from .model import imbalance
from .solvers import SOLVERS

logger = logging.getLogger(__name__)

#: industrial acceptance threshold on the total imbalance, in dataset units
IMBALANCE_THRESHOLD = 3.0

RECORD_FIELDS = (
    "instance",
    "solver",
    "repetition",
    "seed",
    "valid",
    "imbalance",
    "wall_time_ms",
    "meets_threshold",
)

SUMMARY_FIELDS = (
    "instance",
    "solver",
    "valid_count",
    "mean_imbalance",
    "std_imbalance",
    "min_imbalance",
    "max_imbalance",
    "mean_wall_time_ms",
)


@dataclass(frozen=True)
class RunRecord:
    instance: str
    solver: str
    repetition: int
    seed: int
    valid: bool
    imbalance: float | None
    wall_time_ms: float
    meets_threshold: bool


@dataclass(frozen=True)
class SummaryRow:
    instance: str
    solver: str
    valid_count: int
    mean_imbalance: float | None
    std_imbalance: float | None
    min_imbalance: float | None
    max_imbalance: float | None
    mean_wall_time_ms: float


def _run_decompose(blades, disk, seed, max_subproblem=5, sub_solver="qubo-sa",
                   merge_solver="qubo-sa", sub_solver_params=None,
                   merge_solver_params=None, **_):
    config = DecompositionConfig(
        max_subproblem=max_subproblem,
        sub_solver=sub_solver,
        merge_solver=merge_solver,
        sub_solver_params=sub_solver_params or {},
        merge_solver_params=merge_solver_params or {},
    )
    report, _trace = decompose_solve(blades, disk, config, seed)
    return report


#: everything the harness can run: the atomic solvers plus the pipeline
BENCH_SOLVERS = {**SOLVERS, "decompose": _run_decompose}


def run_seed(base_seed: int, instance: str, solver: str, repetition: int) -> int:
    """Per-run seed: base_seed XOR a stable 63-bit hash of the run triple."""
    key = f"{instance}\x1f{solver}\x1f{repetition}".encode()
    digest = int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "big") >> 1
    return (int(base_seed) ^ digest) & (2 ** 63 - 1)


def load_corpus(manifest_path):
    """Manifest -> [(name, BladeSet, DiskImbalance)]; unreadable instances are
    skipped with a logged error."""
    loaded = []
    for path in load_manifest(manifest_path):
        try:
            instance = load_instance(path)
        except InstanceFormatError as err:
            logger.error("skipping instance %s: %s", path, err)
            continue
        loaded.append((instance.name, instance.blade_set(), instance.disk()))
    return loaded


def _execute_run(task):
    name, blades, disk, solver, params, seed, repetition = task
    fn = BENCH_SOLVERS[solver]
    t0 = time.perf_counter()
    try:
        report = fn(blades, disk, seed, **params)
    except Exception as err:  # a crashed run still yields its record
        logger.error("%s/%s rep %d failed: %s", name, solver, repetition, err)
        return RunRecord(name, solver, repetition, seed, False, None,
                         (time.perf_counter() - t0) * 1e3, False)
    wall_ms = (time.perf_counter() - t0) * 1e3
    if report.valid:
        d = imbalance(blades, disk, report.assignment).d
        return RunRecord(name, solver, repetition, seed, True, d, wall_ms,
                         d <= IMBALANCE_THRESHOLD)
    return RunRecord(name, solver, repetition, seed, False, None, wall_ms, False)


def iter_benchmark(instances, solvers, repetitions: int = 10, base_seed: int = 0,
                   solver_params=None, jobs: int = 1):
    """Yield one RunRecord per scheduled run, in schedule order.

    ``instances`` is a list of (name, BladeSet, DiskImbalance). Unknown
    solver names are rejected before anything runs. With ``jobs`` > 1 the
    runs execute in a process pool; the record order stays deterministic.
    """
    solvers = list(solvers)
    for solver in solvers:
        if solver not in BENCH_SOLVERS:
            raise ValueError(f"unknown solver {solver!r}; available: {sorted(BENCH_SOLVERS)}")
    params = solver_params or {}
    tasks = [
        (name, blades, disk, solver, params.get(solver, {}),
         run_seed(base_seed, name, solver, repetition), repetition)
        for name, blades, disk in instances
        for solver in solvers
        for repetition in range(repetitions)
    ]
    return _iter_tasks(tasks, jobs)


def _iter_tasks(tasks, jobs):
    if jobs <= 1:
        for task in tasks:
            yield _execute_run(task)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            yield from pool.map(_execute_run, tasks)


def run_benchmark(instances, solvers, repetitions: int = 10, base_seed: int = 0,
                  solver_params=None, jobs: int = 1) -> list:
    return list(iter_benchmark(instances, solvers, repetitions, base_seed,
                               solver_params, jobs))


def summarize(records) -> list:
    """Per (instance, solver) statistics over the valid runs.

    Imbalance statistics cover valid runs only (absent when there are none;
    std absent below two valid runs); the wall-time mean covers every run of
    the cell. Pure function of the records, so rerunning it on a saved CSV
    reproduces the same rows.
    """
    records = list(records)
    if not records:
        raise ValueError("cannot summarize an empty record set")
    order = []
    groups = {}
    for record in records:
        key = (record.instance, record.solver)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(record)

    rows = []
    for key in order:
        cell = groups[key]
        values = [r.imbalance for r in cell if r.valid]
        wall = sum(r.wall_time_ms for r in cell) / len(cell)
        if values:
            arr = np.asarray(values)
            row = SummaryRow(
                instance=key[0],
                solver=key[1],
                valid_count=len(values),
                mean_imbalance=float(arr.mean()),
                std_imbalance=float(arr.std(ddof=1)) if len(values) >= 2 else None,
                min_imbalance=float(arr.min()),
                max_imbalance=float(arr.max()),
                mean_wall_time_ms=wall,
            )
        else:
            row = SummaryRow(key[0], key[1], 0, None, None, None, None, wall)
        rows.append(row)
    return rows


def _format_field(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_records_csv(records, file) -> None:
    """Stream records to ``file`` as CSV ('.' decimals, empty field = absent)."""
    writer = csv.writer(file, lineterminator="\n")
    writer.writerow(RECORD_FIELDS)
    for record in records:
        writer.writerow([_format_field(getattr(record, name)) for name in RECORD_FIELDS])


def read_records_csv(path) -> list:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        records = []
        for row in reader:
            records.append(RunRecord(
                instance=row["instance"],
                solver=row["solver"],
                repetition=int(row["repetition"]),
                seed=int(row["seed"]),
                valid=row["valid"] == "true",
                imbalance=float(row["imbalance"]) if row["imbalance"] else None,
                wall_time_ms=float(row["wall_time_ms"]),
                meets_threshold=row["meets_threshold"] == "true",
            ))
    return records


def write_summary_csv(rows, file) -> None:
    writer = csv.writer(file, lineterminator="\n")
    writer.writerow(SUMMARY_FIELDS)
    for row in rows:
        writer.writerow([_format_field(getattr(row, name)) for name in SUMMARY_FIELDS])


def records_to_json(records) -> str:
    payload = [{name: getattr(r, name) for name in RECORD_FIELDS} for r in records]
    return json.dumps(payload, indent=2) + "\n"


def summary_to_json(rows) -> str:
    payload = [{name: getattr(r, name) for name in SUMMARY_FIELDS} for r in rows]
    return json.dumps(payload, indent=2) + "\n"

"""Command-line interface.

Subcommands: ``generate`` (instance files and the standard corpus),
``solve`` (one instance, one solver), ``bench`` (run a manifest), ``summarize``
(records CSV -> summary) and ``export-qubo``. Exit codes: 0 success, 1 usage
error, 2 data error. The default corpus directory is ``./corpus`` unless the
``TURBOBALANCE_CORPUS`` environment variable overrides it.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import bench as bench_mod
from . import datasets
from .datasets import InstanceFormatError, load_instance
from .decompose import DecompositionConfig, decompose_solve
from .qubo import build_qubo, export_qubo

ENV_CORPUS = "TURBOBALANCE_CORPUS"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _corpus_dir() -> Path:
    return Path(os.environ.get(ENV_CORPUS, "corpus"))


def _build_parser() -> _Parser:
    parser = _Parser(prog="turbobalance", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("generate", help="generate instance files")
    gen.add_argument("--out-dir", type=Path, default=None,
                     help="target directory (default: the corpus directory)")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--standard-corpus", action="store_true",
                     help="emit the full nine-instance corpus plus manifest")
    gen.add_argument("--with-imbalance", action="store_true",
                     help="give corpus instances a bare-disk imbalance (m0=500)")
    gen.add_argument("--family", choices=sorted(datasets.FAMILIES))
    gen.add_argument("--n", type=int, default=None)
    gen.add_argument("--serial", type=int, default=0)
    gen.add_argument("--m0", type=float, default=0.0)
    gen.add_argument("--phi0", type=float, default=0.0)

    solve = sub.add_parser("solve", help="run one solver on one instance")
    solve.add_argument("instance", type=Path)
    solve.add_argument("--solver", required=True, choices=sorted(bench_mod.BENCH_SOLVERS))
    solve.add_argument("--seed", type=int, default=0)
    solve.add_argument("--sweeps", type=int, default=None,
                       help="annealing sweeps (imbalance-sa / qubo-sa)")
    solve.add_argument("--penalty-factor", type=float, default=None)
    solve.add_argument("--tenure", type=int, default=None)
    solve.add_argument("--max-iterations", type=int, default=None)
    solve.add_argument("--max-subproblem", type=int, default=5)
    solve.add_argument("--sub-solver", default="qubo-sa", choices=sorted(bench_mod.SOLVERS))
    solve.add_argument("--merge-solver", default="qubo-sa", choices=sorted(bench_mod.SOLVERS))
    solve.add_argument("--trace", type=Path, default=None,
                       help="write the decomposition trace JSON here")
    solve.add_argument("--output", type=Path, default=None, help="report file (default: stdout)")

    run = sub.add_parser("bench", help="run solvers over a corpus manifest")
    run.add_argument("--manifest", type=Path, default=None,
                     help="corpus manifest (default: <corpus dir>/manifest.json)")
    run.add_argument("--solvers", default="heuristic,imbalance-sa",
                     help="comma-separated solver names")
    run.add_argument("--repetitions", type=int, default=10)
    run.add_argument("--base-seed", type=int, default=0)
    run.add_argument("--jobs", type=int, default=1)
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.add_argument("--out", type=Path, default=None, help="records file (default: stdout)")
    run.add_argument("--summary", type=Path, default=None, help="also write summary here")
    run.add_argument("--sa-sweeps", type=int, default=None)
    run.add_argument("--qubo-sweeps", type=int, default=None)
    run.add_argument("--penalty-factor", type=float, default=None)
    run.add_argument("--tenure", type=int, default=None)
    run.add_argument("--max-iterations", type=int, default=None)
    run.add_argument("--max-subproblem", type=int, default=5)
    run.add_argument("--sub-solver", default="qubo-sa", choices=sorted(bench_mod.SOLVERS))
    run.add_argument("--merge-solver", default="qubo-sa", choices=sorted(bench_mod.SOLVERS))

    summ = sub.add_parser("summarize", help="summarize a records CSV")
    summ.add_argument("records", type=Path)
    summ.add_argument("--format", choices=("csv", "json"), default="csv")
    summ.add_argument("--out", type=Path, default=None)

    export = sub.add_parser("export-qubo", help="write an instance's QUBO in sparse text form")
    export.add_argument("instance", type=Path)
    export.add_argument("--penalty-factor", type=float, default=10.0)
    export.add_argument("--out", type=Path, default=None, help="target file (default: stdout)")

    return parser


def _solver_params(args) -> dict:
    sweeps = getattr(args, "sweeps", None)
    sa_sweeps = getattr(args, "sa_sweeps", None)
    qubo_sweeps = getattr(args, "qubo_sweeps", None)

    def drop_none(d):
        return {k: v for k, v in d.items() if v is not None}

    return {
        "imbalance-sa": drop_none({"sweeps": sa_sweeps if sa_sweeps is not None else sweeps}),
        "qubo-sa": drop_none({
            "sweeps": qubo_sweeps if qubo_sweeps is not None else sweeps,
            "penalty_factor": getattr(args, "penalty_factor", None),
        }),
        "tabu": drop_none({
            "tenure": getattr(args, "tenure", None),
            "max_iterations": getattr(args, "max_iterations", None),
            "penalty_factor": getattr(args, "penalty_factor", None),
        }),
        "decompose": {
            "max_subproblem": getattr(args, "max_subproblem", 5),
            "sub_solver": getattr(args, "sub_solver", "qubo-sa"),
            "merge_solver": getattr(args, "merge_solver", "qubo-sa"),
        },
        "heuristic": {},
        "brute-force": {},
    }


def _write_text(path: Path | None, text: str):
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text, encoding="utf-8")


def _cmd_generate(args) -> int:
    out_dir = args.out_dir if args.out_dir is not None else _corpus_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.standard_corpus:
        manifest, instances = datasets.standard_corpus(
            out_dir, base_seed=args.seed, with_imbalance=args.with_imbalance
        )
        for instance in instances:
            print(out_dir / f"{instance.name}.json")
        print(manifest)
        return EXIT_OK
    if args.family is None:
        raise InstanceFormatError("either --standard-corpus or --family is required")
    instance = datasets.generate(
        args.family, args.n, seed=args.seed, m0=args.m0, phi0=args.phi0, serial=args.serial
    )
    print(instance.save(out_dir))
    return EXIT_OK


def _report_dict(name: str, report) -> dict:
    return {
        "instance": name,
        "solver": report.solver_name,
        "seed": report.seed,
        "valid": report.valid,
        "imbalance": report.imbalance,
        "assignment": report.assignment.sigma.tolist() if report.valid else None,
        "iterations": report.iterations,
        "wall_time_ms": report.wall_time * 1e3,
    }


def _cmd_solve(args) -> int:
    instance = load_instance(args.instance)
    blades, disk = instance.blade_set(), instance.disk()
    params = _solver_params(args)[args.solver]
    if args.solver == "decompose":
        config = DecompositionConfig(
            max_subproblem=args.max_subproblem,
            sub_solver=args.sub_solver,
            merge_solver=args.merge_solver,
        )
        report, trace = decompose_solve(blades, disk, config, args.seed)
        if args.trace is not None:
            trace.to_json(args.trace)
    else:
        report = bench_mod.BENCH_SOLVERS[args.solver](blades, disk, args.seed, **params)
    _write_text(args.output, json.dumps(_report_dict(instance.name, report), indent=2) + "\n")
    return EXIT_OK


def _cmd_bench(args) -> int:
    manifest = args.manifest if args.manifest is not None else _corpus_dir() / datasets.MANIFEST_NAME
    instances = bench_mod.load_corpus(manifest)
    solvers = [name.strip() for name in args.solvers.split(",") if name.strip()]
    records_iter = bench_mod.iter_benchmark(
        instances,
        solvers,
        repetitions=args.repetitions,
        base_seed=args.base_seed,
        solver_params=_solver_params(args),
        jobs=args.jobs,
    )
    if args.format == "csv":
        # stream records as they complete
        if args.out is None:
            records = []
            bench_mod.write_records_csv(_tee(records_iter, records), sys.stdout)
        else:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                records = []
                bench_mod.write_records_csv(_tee(records_iter, records), fh)
    else:
        records = list(records_iter)
        _write_text(args.out, bench_mod.records_to_json(records))
    if args.summary is not None:
        rows = bench_mod.summarize(records)
        if args.format == "csv":
            with open(args.summary, "w", encoding="utf-8", newline="") as fh:
                bench_mod.write_summary_csv(rows, fh)
        else:
            args.summary.write_text(bench_mod.summary_to_json(rows), encoding="utf-8")
    return EXIT_OK


def _tee(iterator, sink):
    for item in iterator:
        sink.append(item)
        yield item


def _cmd_summarize(args) -> int:
    records = bench_mod.read_records_csv(args.records)
    rows = bench_mod.summarize(records)
    if args.format == "csv":
        if args.out is None:
            bench_mod.write_summary_csv(rows, sys.stdout)
        else:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                bench_mod.write_summary_csv(rows, fh)
    else:
        _write_text(args.out, bench_mod.summary_to_json(rows))
    return EXIT_OK


def _cmd_export_qubo(args) -> int:
    instance = load_instance(args.instance)
    problem = build_qubo(instance.blade_set(), instance.disk(), penalty_factor=args.penalty_factor)
    if args.out is None:
        export_qubo(problem, sys.stdout)
    else:
        export_qubo(problem, args.out)
    return EXIT_OK


_COMMANDS = {
    "generate": _cmd_generate,
    "solve": _cmd_solve,
    "bench": _cmd_bench,
    "summarize": _cmd_summarize,
    "export-qubo": _cmd_export_qubo,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (InstanceFormatError, ValueError, OSError) as err:
        print(f"turbobalance: error: {err}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

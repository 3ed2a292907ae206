"""Command-line entry point: ``hybridsolve <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import expr as ex
from .autodiff import differentiate
from .domains import DEFAULT_COUNTS, DomainId, generate_dataset, read_dataset, write_dataset
from .harness import (
    BackendConfig,
    EchoAnswerer,
    HttpBackend,
    MockFormulator,
    load_manifest,
    load_records,
    run_assisted,
    run_direct,
)
from .metrics import build_report, format_csv, format_text
from .solver import SolverConfig, newton_raphson


def _parse_counts(text: str) -> dict:
    counts = {d: 0 for d in DomainId}
    for item in text.split(","):
        if not item.strip():
            continue
        name, _, n = item.partition("=")
        counts[DomainId(name.strip())] = int(n)
    return counts


def cmd_gen_dataset(args) -> int:
    counts = _parse_counts(args.counts) if args.counts else DEFAULT_COUNTS
    problems = generate_dataset(args.seed, counts)
    write_dataset(problems, args.out)
    print(f"wrote {len(problems)} problems to {args.out}", file=sys.stderr)
    return 0


def cmd_solve(args) -> int:
    f = ex.parse(args.equation)
    config = SolverConfig(mode=args.mode, tolerance=args.tol, max_iterations=args.max_iter,
                          rounding_digits=args.digits)
    outcome = newton_raphson(f, differentiate(f), args.x0, config, args.gt)
    print(json.dumps({
        "status": outcome.status,
        "root": outcome.root,
        "iterations": outcome.iterations,
        "final_residual": outcome.final_residual if outcome.final_residual == outcome.final_residual else None,
        "unrounded": outcome.unrounded,
    }))
    return 0 if outcome.converged else 1


def cmd_diff(args) -> int:
    print(ex.render(differentiate(ex.parse(args.equation))))
    return 0


def _load_config(path) -> dict:
    if not path:
        return {}
    return json.loads(Path(path).read_text())


def cmd_run(args) -> int:
    dataset = read_dataset(args.dataset)
    config = _load_config(args.config)
    solver = SolverConfig(**config.get("solver", {}))
    if args.backend == "mock":
        mock = config.get("mock", {})
        if args.paradigm == "direct":
            backend = EchoAnswerer(dataset, scale=mock.get("scale", 1.0))
        else:
            backend = MockFormulator(dataset, mock.get("perturbation"))
    else:
        if not args.config:
            raise SystemExit("--backend http needs --config with a 'backend' section")
        backend = HttpBackend(BackendConfig.from_file(args.config))
    if args.paradigm == "direct":
        result = run_direct(dataset, backend)
    else:
        result = run_assisted(dataset, backend, solver)
    result.save(args.out)
    print(f"run {result.run_id}: {len(result.records)} records -> {args.out}", file=sys.stderr)
    return 0


def cmd_report(args) -> int:
    records = []
    models: dict = {}
    for path in args.runs:
        recs = load_records(path)
        label = load_manifest(path).get("backend", {}).get("model", Path(path).stem)
        models.setdefault(label, []).extend(recs)
        records.extend(recs)
    if args.format == "csv":
        sys.stdout.write(format_csv(records))
        return 0
    report = build_report(records, models if len(models) > 1 else None)
    if args.format == "json":
        print(report.to_json())
    else:
        sys.stdout.write(format_text(report))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybridsolve", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-dataset", help="generate a seeded problem set as JSON Lines")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--counts", help="e.g. fluid_mechanics=4,electronics=2 (others 0)")
    p.set_defaults(func=cmd_gen_dataset)

    p = sub.add_parser("solve", help="Newton-Raphson on one expression")
    p.add_argument("--equation", required=True)
    p.add_argument("--x0", type=float, required=True)
    p.add_argument("--mode", choices=["residual", "replication"], default="residual")
    p.add_argument("--gt", type=float, help="ground truth (replication mode)")
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--digits", type=int, default=3)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("diff", help="print the simplified derivative")
    p.add_argument("--equation", required=True)
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("run", help="run one paradigm over a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--paradigm", choices=["direct", "assisted"], required=True)
    p.add_argument("--backend", choices=["mock", "http"], default="mock")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="aggregate run files into metrics")
    p.add_argument("--runs", nargs="+", required=True)
    p.add_argument("--format", choices=["text", "json", "csv"], default="text")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except ex.ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``tvgraph {synth,baseline,real,scaling,solve,oracle}``.

Exit codes: 0 success, 1 oracle mismatch, 2 configuration error,
3 data error, 4 solver failure during ``solve``.
"""
import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from .admm import SolverConfig, run
from .errors import ConfigError, DataError, NumericalFailure, UnobservedColumnError
from .fusion import build_fusion_matrix, read_fusion_csv
from .graphs import write_matrix_csv
from .harness import (
    ExperimentConfig,
    RealDatasetSpec,
    report_json,
    run_decoupled_baseline,
    run_real,
    run_scaling_study,
    run_synthetic,
    write_report,
)
from .signals import read_observation_csv

EXIT_OK, EXIT_ORACLE, EXIT_CONFIG, EXIT_DATA, EXIT_SOLVER = 0, 1, 2, 3, 4


def _load_config(args):
    cfg = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = replace(cfg, base_seed=args.seed)
    if args.trace:
        cfg = replace(cfg, trace_dir=args.trace)
    return cfg


def _experiment(args):
    cfg = _load_config(args)
    if args.command == "synth":
        rep = run_synthetic(cfg, workers=args.workers)
    elif args.command == "baseline":
        rep = run_decoupled_baseline(cfg, workers=args.workers)
    elif args.command == "real":
        spec = cfg.real
        if args.data:
            spec = replace(spec, path=args.data) if spec else RealDatasetSpec(args.data)
        if spec is None:
            raise ConfigError("real needs a 'real' section in --config or --data")
        rep = run_real(spec.validate(), cfg, workers=args.workers)
    else:
        rep = run_scaling_study(cfg, workers=args.workers)
    write_report(rep, args.out)
    failures = sum(c["failures"] for c in rep["cells"])
    print(f"wrote {os.path.join(args.out, 'report.json')} ({len(rep['cells'])} cells, {failures} failed runs)")
    return EXIT_OK


def _solve(args):
    if len(args.signal) != len(args.mask):
        raise ConfigError(f"{len(args.signal)} signal files but {len(args.mask)} mask files")
    obs = [read_observation_csv(y, m, args.noise_std) for y, m in zip(args.signal, args.mask)]
    K = len(obs)
    if args.fusion_csv:
        spec = read_fusion_csv(args.fusion_csv, loading=args.fusion_loading or 0.0)
    else:
        spec = build_fusion_matrix(args.fusion, K, loading=args.fusion_loading)
    cfg = SolverConfig()
    if args.config:
        try:
            with open(args.config) as fh:
                block = json.load(fh).get("solver", {})
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read solver config {args.config}: {exc}") from None
        try:
            cfg = replace(cfg, **block)
        except TypeError as exc:
            raise ConfigError(f"bad solver key: {exc}") from None
    overrides = {k: getattr(args, k) for k in ("alpha", "beta", "rho", "max_iter", "column_ridge")
                 if getattr(args, k) is not None}
    cfg = replace(cfg, trace_path=args.trace, workers=args.workers, **overrides)
    try:
        res = run(obs, spec, cfg)
    except NumericalFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    os.makedirs(args.out, exist_ok=True)
    for k in range(K):
        write_matrix_csv(os.path.join(args.out, f"laplacian_{k}.csv"), res.laplacians[k])
        write_matrix_csv(os.path.join(args.out, f"signals_{k}.csv"), res.signals[k])
    last = res.residual_trace[-1] if len(res.residual_trace) else [float("nan")] * 3
    summary = {
        "status": res.status.value,
        "iterations": res.iterations,
        "objective": res.objective_trace[-1] if len(res.objective_trace) else None,
        "residuals": {"primal_G": last[0], "primal_C": last[1], "dual": last[2]},
        "clamp_distance": res.clamp_distance.tolist(),
        "consensus_gap": res.consensus_gap.tolist(),
        "solver": {k: v for k, v in vars(cfg).items() if k != "trace_path"},
        "fusion": {"kind": spec.kind, "matrix": np.asarray(spec.matrix).tolist()},
    }
    with open(os.path.join(args.out, "report.json"), "w") as fh:
        fh.write(report_json(summary))
    print(f"{res.status.value} after {res.iterations} iterations; outputs in {args.out}")
    return EXIT_OK


def _oracle(args):
    from .oracles import run_suite
    passed, _ = run_suite(args.instances, seed=args.seed or 0, tol=args.tol, stream=sys.stdout)
    return EXIT_OK if passed else EXIT_ORACLE


def build_parser():
    p = argparse.ArgumentParser(prog="tvgraph", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("--config", help="JSON experiment config")
        sp.add_argument("--seed", type=int, help="override base seed")
        sp.add_argument("--workers", type=int, default=1, help="parallel jobs")
        sp.add_argument("--trace", help="directory for per-run iteration traces")
        if out:
            sp.add_argument("--out", default="out", help="output directory")

    for name, text in [("synth", "synthetic Monte-Carlo sweep"),
                       ("baseline", "joint method vs mean-impute-then-learn baseline"),
                       ("real", "signal recovery on a user dataset"),
                       ("scaling", "RelErr trends in sample count and sampling rate")]:
        sp = sub.add_parser(name, help=text)
        common(sp)
        if name == "real":
            sp.add_argument("--data", help="N x T CSV, overrides real.path")

    sp = sub.add_parser("solve", help="single solve from CSV inputs")
    sp.add_argument("--signal", action="append", required=True, help="N x n_k observed values (repeat per graph)")
    sp.add_argument("--mask", action="append", required=True, help="N x n_k 0/1 mask (repeat per graph)")
    sp.add_argument("--noise-std", type=float, default=0.1)
    sp.add_argument("--fusion", default="temporal", choices=["temporal", "group", "star"])
    sp.add_argument("--fusion-csv", help="square fusion matrix (custom kind)")
    sp.add_argument("--fusion-loading", type=float)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--rho", type=float)
    sp.add_argument("--max-iter", type=int)
    sp.add_argument("--column-ridge", type=float)
    sp.add_argument("--config", help="JSON file whose 'solver' block sets defaults")
    sp.add_argument("--workers", type=int, default=1, help="threads for per-graph updates")
    sp.add_argument("--trace", help="iteration trace CSV path")
    sp.add_argument("--out", default="out")

    sp = sub.add_parser("oracle", help="check block updates against numeric minimisers")
    sp.add_argument("--instances", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--tol", type=float, default=1e-6)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "solve":
            return _solve(args)
        if args.command == "oracle":
            return _oracle(args)
        return _experiment(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, UnobservedColumnError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: train, predict, evaluate, bench.

All commands are batch-oriented and exit with 0 on success, 2 on I/O
errors, 3 on validation errors (bad data, labels, or hyperparameters),
and 4 on solver failures.  Results go to stdout as TSV or key=value
lines; progress messages go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import ExitStack

import numpy as np

from .bench import query_latency, random_model, scale_run
from .core import HyperParams
from .errors import ModelIOError, SolverError, ValidationError
from .evaluate import dataset_digest, evaluate_split, make_split, run_ablation, sweep
from .ingest import LevelMap, load_model, parse_edge_list, save_model
from .predict import objective_scores, predict_batch
from .solver import train

EXIT_OK = 0
EXIT_IO = 2
EXIT_VALIDATION = 3
EXIT_SOLVER = 4


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _add_hyperparam_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("hyperparameters")
    group.add_argument("--lambda", dest="regularization", type=float, default=1.0,
                       help="ridge regularization strength")
    group.add_argument("--r", dest="factors", type=int, default=10,
                       help="latent factor count")
    group.add_argument("--m1", dest="max_outer_iters", type=int, default=10,
                       help="max outer alternation rounds")
    group.add_argument("--m2", dest="max_inner_iters", type=int, default=100,
                       help="max factor sweeps per outer round")
    group.add_argument("--xi1", dest="outer_tol", type=float, default=1e-6,
                       help="outer convergence threshold")
    group.add_argument("--xi2", dest="inner_tol", type=float, default=1e-6,
                       help="inner convergence threshold")
    group.add_argument("--no-bias", action="store_true",
                       help="train the plain factorization without bias terms")
    group.add_argument("--freeze-coefficients", action="store_true",
                       help="pin the three bias coefficients at 1 instead of learning them")
    group.add_argument("--seed", dest="rng_seed", type=int, default=0,
                       help="seed for all randomized choices")
    group.add_argument("--random-init", action="store_true",
                       help="start factors uniformly at random instead of the perturbed flat start")
    group.add_argument("--threads", type=int, default=1,
                       help="worker threads for the per-row solves")


def _hyperparams(args: argparse.Namespace) -> HyperParams:
    return HyperParams(
        regularization=args.regularization,
        factors=args.factors,
        max_outer_iters=args.max_outer_iters,
        max_inner_iters=args.max_inner_iters,
        outer_tol=args.outer_tol,
        inner_tol=args.inner_tol,
        use_bias=not args.no_bias,
        freeze_coefficients=args.freeze_coefficients,
        rng_seed=args.rng_seed,
        random_init=args.random_init,
        threads=args.threads,
    )


def _level_map(args: argparse.Namespace) -> LevelMap | None:
    return LevelMap.parse(args.levels) if args.levels else None


def _read_edges(path: str, level_map: LevelMap | None):
    with open(path, "r", encoding="utf-8") as handle:
        return parse_edge_list(handle, level_map)


def _parse_sweep_spec(spec: str) -> tuple[str, list]:
    name, sep, rest = spec.partition("=")
    name = name.strip()
    if not sep or name not in ("r", "lambda"):
        raise ValidationError(f"sweep spec must be r=... or lambda=..., got {spec!r}")
    rest = rest.strip()
    if ".." in rest:
        parts = rest.split("..")
        if len(parts) not in (2, 3):
            raise ValidationError(f"range spec must be start..stop[..step], got {rest!r}")
        try:
            start, stop = float(parts[0]), float(parts[1])
            step = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError:
            raise ValidationError(f"non-numeric range bounds in {rest!r}") from None
        if step <= 0 or stop < start:
            raise ValidationError(f"empty or descending range {rest!r}")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        values = [start + k * step for k in range(count)]
    else:
        try:
            values = [float(v) for v in rest.split(",") if v.strip()]
        except ValueError:
            raise ValidationError(f"non-numeric sweep values in {rest!r}") from None
    if not values:
        raise ValidationError(f"sweep spec {spec!r} produced no values")
    if name == "r":
        values = [int(round(v)) for v in values]
    return name, values


def cmd_train(args: argparse.Namespace) -> int:
    hp = _hyperparams(args)
    matrix = _read_edges(args.input, _level_map(args))
    _log(f"training on {matrix.n_users} users / {matrix.n_observations} observations")
    model, trace = train(matrix, hp)
    with open(args.output, "wb") as sink:
        save_model(model, sink)
    trace_path = args.trace or args.output + ".trace.jsonl"
    with open(trace_path, "w", encoding="utf-8") as sink:
        sink.write(json.dumps({"record": "config", "dataset": dataset_digest(matrix),
                               "users": matrix.n_users,
                               "observations": matrix.n_observations,
                               "hyperparams": vars(hp)}) + "\n")
        for step in trace.steps:
            sink.write(json.dumps({"record": "step", "label": step.label,
                                   "objective": step.objective}) + "\n")
        for rec in trace.outer:
            sink.write(json.dumps({"record": "outer", "iteration": rec.iteration,
                                   "objective": rec.objective,
                                   "coefficients": list(rec.coefficients),
                                   "delta": rec.delta,
                                   "coefficient_fallback": rec.coefficient_fallback}) + "\n")
    print(f"users={model.n_users}")
    print(f"observations={matrix.n_observations}")
    print(f"outer_iterations={len(trace.outer)}")
    print(f"final_objective={trace.steps[-1].objective:.10g}")
    print(f"model={args.output}")
    print(f"trace={trace_path}")
    return EXIT_OK


def _resolve_user(model, token: str, line_no: int) -> int:
    from .errors import ParseError

    if model.labels is not None:
        try:
            return model.index_of(token)
        except ValidationError:
            raise ParseError(line_no, f"unknown user label {token!r}") from None
    try:
        return int(token)
    except ValueError:
        raise ParseError(line_no, f"model has no labels; expected a user index, got {token!r}") from None


def cmd_predict(args: argparse.Namespace) -> int:
    from .errors import ParseError

    with open(args.model, "rb") as source:
        model = load_model(source)

    with ExitStack() as stack:
        sink = (
            stack.enter_context(open(args.output, "w", encoding="utf-8"))
            if args.output
            else sys.stdout
        )
        if args.objective:
            scores = objective_scores(model)
            labels = model.labels or [str(k) for k in range(model.n_users)]
            for label, value in zip(labels, scores):
                sink.write(f"{label}\t{value:.10g}\n")
            return EXIT_OK

        if not args.pairs:
            raise ValidationError("predict needs --pairs FILE or --objective")
        pairs = []
        tokens = []
        with open(args.pairs, "r", encoding="utf-8") as handle:
            for line_no, raw in enumerate(handle, start=1):
                line = raw.rstrip()
                stripped = line.strip()
                if not stripped or stripped.startswith("#"):
                    continue
                parts = [p.strip() for p in line.split("\t")]
                if len(parts) != 2 or not all(parts):
                    raise ParseError(line_no, f"expected 2 tab-separated fields, got {len(parts)}")
                u = _resolve_user(model, parts[0], line_no)
                v = _resolve_user(model, parts[1], line_no)
                if u == v:
                    raise ParseError(line_no, f"self-pair {parts[0]!r} -> {parts[1]!r}")
                pairs.append((u, v))
                tokens.append((parts[0], parts[1]))
        scores = predict_batch(model, pairs, clamp=args.clamp)
        for (u_tok, v_tok), value in zip(tokens, scores):
            sink.write(f"{u_tok}\t{v_tok}\t{value:.10g}\n")
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    hp = _hyperparams(args)
    matrix = _read_edges(args.input, _level_map(args))
    _log(f"evaluating on {matrix.n_users} users / {matrix.n_observations} observations")

    records = []
    if args.ablation:
        modes = [m.strip() for m in args.ablation.split(",") if m.strip()]
        reports = run_ablation(matrix, hp, modes, holdout_size=args.holdout,
                               seed=args.rng_seed, clamp=args.clamp)
        for mode, report in reports.items():
            print(f"mode={mode} rmse={report.rmse:.6f} mae={report.mae:.6f} "
                  f"config_hash={report.config_hash()}")
            records.append(report.record())
    elif args.sweep:
        param, values = _parse_sweep_spec(args.sweep)
        results = sweep(matrix, hp, param, values, holdout_size=args.holdout,
                        seed=args.rng_seed, clamp=args.clamp)
        for value, report in results:
            print(f"param={param} value={value} rmse={report.rmse:.6f} "
                  f"mae={report.mae:.6f} config_hash={report.config_hash()}")
            records.append(report.record())
    else:
        split = make_split(matrix, args.holdout, args.rng_seed)
        report = evaluate_split(split, hp, clamp=args.clamp)
        print(f"users={matrix.n_users}")
        print(f"observations={matrix.n_observations}")
        print(f"holdout={args.holdout}")
        print(f"seed={args.rng_seed}")
        print(f"rmse={report.rmse:.6f}")
        print(f"mae={report.mae:.6f}")
        print(f"config_hash={report.config_hash()}")
        records.append(report.record())

    if args.report:
        with open(args.report, "w", encoding="utf-8") as sink:
            for record in records:
                sink.write(json.dumps(record) + "\n")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    if args.bench_mode == "scale":
        hp = _hyperparams(args)
        sizes = []
        n, k = args.base_users, args.base_obs
        for step in range(args.doublings + 1):
            sizes.append((int(round(n)), int(round(k))))
            if args.grow == "obs":
                k *= 2
            elif args.grow == "users":
                n *= 2
            else:  # both: double the pair count, keep density fixed
                n *= np.sqrt(2.0)
                k *= 2
        points = scale_run(sizes, hp, seed=args.rng_seed, repeats=args.repeats,
                           measure_memory=args.memory)
        print("users\tobservations\tseconds\tpeak_bytes")
        for p in points:
            peak = p.peak_bytes if p.peak_bytes is not None else ""
            print(f"{p.n_users}\t{p.n_observations}\t{p.seconds:.6f}\t{peak}")
        return EXIT_OK

    model = random_model(args.users, args.r, seed=args.rng_seed)
    stats = query_latency(model, args.trials, seed=args.rng_seed, clamp=args.clamp)
    print(f"users={args.users}")
    print(f"trials={stats.trials}")
    print(f"first_call_ns={stats.first_call_ns}")
    print(f"median_ns={stats.median_ns:.1f}")
    print(f"mean_ns={stats.mean_ns:.1f}")
    print(f"p90_ns={stats.p90_ns:.1f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trustfactor",
        description="Trust inference over partially observed trust networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    formatter = argparse.ArgumentDefaultsHelpFormatter

    p_train = sub.add_parser("train", formatter_class=formatter,
                             help="fit a model from a TSV edge list")
    p_train.add_argument("--input", required=True, help="edge-list TSV path")
    p_train.add_argument("--output", required=True, help="model container path")
    p_train.add_argument("--trace", help="training-trace JSONL path (default: <output>.trace.jsonl)")
    p_train.add_argument("--levels", help="level override, e.g. observer=0.1,apprentice=0.4")
    _add_hyperparam_args(p_train)
    p_train.set_defaults(func=cmd_train)

    p_pred = sub.add_parser("predict", formatter_class=formatter,
                            help="score trustor/trustee pairs with a trained model")
    p_pred.add_argument("--model", required=True, help="model container path")
    p_pred.add_argument("--pairs", help="TSV of trustor<TAB>trustee pairs")
    p_pred.add_argument("--objective", action="store_true",
                        help="emit one community-wide score per trustee instead of pair scores")
    p_pred.add_argument("--output", help="write scores here instead of stdout")
    p_pred.add_argument("--clamp", action="store_true", help="clip scores into [0, 1]")
    p_pred.set_defaults(func=cmd_predict)

    p_eval = sub.add_parser("evaluate", formatter_class=formatter,
                            help="holdout evaluation: split, train, score")
    p_eval.add_argument("--input", required=True, help="edge-list TSV path")
    p_eval.add_argument("--holdout", type=int, default=500, help="hidden test pairs")
    p_eval.add_argument("--ablation", help="comma list of modes: full,no_bias,frozen_coefficients")
    p_eval.add_argument("--sweep", help="parameter sweep, e.g. r=2..20 or lambda=0.1,0.5,1.0")
    p_eval.add_argument("--report", help="write one JSON record per mode/value here")
    p_eval.add_argument("--clamp", action="store_true", help="clip predictions into [0, 1]")
    p_eval.add_argument("--levels", help="level override, e.g. observer=0.1,apprentice=0.4")
    _add_hyperparam_args(p_eval)
    p_eval.set_defaults(func=cmd_evaluate)

    p_bench = sub.add_parser("bench", formatter_class=formatter,
                             help="scalability and latency harnesses")
    bench_sub = p_bench.add_subparsers(dest="bench_mode", required=True)
    p_scale = bench_sub.add_parser("scale", formatter_class=formatter,
                                   help="time training over doubling synthetic sizes")
    p_scale.add_argument("--base-users", type=int, default=1000)
    p_scale.add_argument("--base-obs", type=int, default=8000)
    p_scale.add_argument("--doublings", type=int, default=3)
    p_scale.add_argument("--grow", choices=("obs", "users", "both"), default="both")
    p_scale.add_argument("--repeats", type=int, default=1)
    p_scale.add_argument("--memory", action="store_true", help="also record allocation peaks")
    _add_hyperparam_args(p_scale)
    p_scale.set_defaults(func=cmd_bench)
    p_lat = bench_sub.add_parser("latency", formatter_class=formatter,
                                 help="per-call latency of pair prediction")
    p_lat.add_argument("--users", type=int, default=5000)
    p_lat.add_argument("--r", type=int, default=10)
    p_lat.add_argument("--trials", type=int, default=10000)
    p_lat.add_argument("--seed", dest="rng_seed", type=int, default=0)
    p_lat.add_argument("--clamp", action="store_true")
    p_lat.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ModelIOError as exc:
        _log(f"error: {exc}")
        return EXIT_IO
    except ValidationError as exc:
        _log(f"error: {exc}")
        return EXIT_VALIDATION
    except (SolverError, np.linalg.LinAlgError) as exc:
        _log(f"error: {exc}")
        return EXIT_SOLVER
    except OSError as exc:
        _log(f"error: {exc}")
        return EXIT_IO


def run() -> None:
    sys.exit(main())

"""Command-line interface.

Subcommands: ``simulate``, ``fit``, ``eval``, ``negfrac`` and ``bench``. Each
prints a JSON report (``{command, seed, params, metrics, partition_reports}``)
to stdout and optionally to ``--report``. Errors print one line
``error: <category>: <message>`` to stderr.

Exit codes: 0 success, 2 argument error, 3 parse error, 4 solver
non-convergence (only with ``--strict``), 5 I/O error.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from . import _accel
from .exceptions import ArgumentError, MixmomError, ParseError
from .io import FileError, load_dataset_csv, load_model_json, save_dataset_csv, save_model_json
from .moments import block_tensor, negative_fraction
from .partition import MATCHERS, build_partition_plan, fit_partitioned
from .pqp import FactorizeOptions
from .simulate import SimConfig, contaminate, rmse_aligned, sample_model, simulate_dataset

EXIT_OK = 0
EXIT_ARGUMENT = 2
EXIT_PARSE = 3
EXIT_NONCONVERGED = 4
EXIT_IO = 5


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _index_sets(text):
    """``"0,1;2;3-5"`` -> ``[[0, 1], [2], [3, 4, 5]]``."""
    sets = []
    try:
        for chunk in text.split(";"):
            s = []
            for tok in chunk.split(","):
                tok = tok.strip()
                if "-" in tok:
                    lo, hi = tok.split("-")
                    s.extend(range(int(lo), int(hi) + 1))
                elif tok:
                    s.append(int(tok))
            sets.append(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad index sets {text!r}") from None
    if len(sets) != 3:
        raise argparse.ArgumentTypeError("expected three ';'-separated index sets")
    return sets


def _add_common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", help="also write the JSON report here")
    p.add_argument("--config", help="JSON file of option defaults (same keys as the flags)")
    p.add_argument("--backend", choices=("numba", "numpy"), help="kernel backend")


def _add_fit_options(p):
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--alpha0", type=float, required=True)
    p.add_argument("--anchors", type=_index_sets, help="e.g. '0;1;2' or '0,1;2,3;4,5'")
    p.add_argument("--partitions", type=int, help="partition count r")
    p.add_argument("--max-iters", type=int, default=FactorizeOptions.max_iters)
    p.add_argument("--rel-tol", type=float, default=FactorizeOptions.rel_tol)
    p.add_argument("--epsilon", type=float, default=FactorizeOptions.epsilon)
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("--matcher", choices=sorted(MATCHERS), default="procrustes")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)


def build_parser():
    parser = argparse.ArgumentParser(prog="mixmom", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample a model and a dataset")
    _add_common(p)
    p.add_argument("--p", type=int, default=25)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--alpha-h", type=float, default=0.1)
    p.add_argument("--theta-prior", type=_float_list)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--contamination", choices=("cells", "rows"), default="cells")
    p.add_argument("--data-out", required=True)
    p.add_argument("--model-out", required=True)

    p = sub.add_parser("fit", help="estimate parameters from a dataset")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--truth", help="optional true model for an RMSE metric")
    p.add_argument("--strict", action="store_true", help="exit 4 if any factorization did not converge")
    _add_fit_options(p)

    p = sub.add_parser("eval", help="aligned RMSE of an estimate against the truth")
    _add_common(p)
    p.add_argument("--estimate", required=True)
    p.add_argument("--truth", required=True)

    p = sub.add_parser("negfrac", help="negative-entry fraction of a block estimator")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--alpha0", type=float, required=True)
    p.add_argument("--sets", type=_index_sets, help="three disjoint index sets; default splits all variables in thirds")

    p = sub.add_parser("bench", help="runtime against partition count")
    _add_common(p)
    p.add_argument("--p", type=int, default=120)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--alpha-h", type=float, default=0.1)
    p.add_argument("--partitions", type=_int_list, default=[4, 8, 16])
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--max-iters", type=int, default=FactorizeOptions.max_iters)
    p.add_argument("--rel-tol", type=float, default=FactorizeOptions.rel_tol)
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("--workers", type=int, default=1)
    return parser


def _report(command, seed, params, metrics=None, partition_reports=None):
    return {
        "command": command,
        "seed": seed,
        "params": params,
        "metrics": metrics or {},
        "partition_reports": partition_reports or [],
    }


def _jsonable(args):
    skip = {"config", "report", "command"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def cmd_simulate(args):
    cfg = SimConfig(p=args.p, k=args.k, d=args.d, alpha_h=args.alpha_h,
                    theta_prior=args.theta_prior, n=args.n, delta=args.delta, seed=args.seed)
    truth = sample_model(cfg)
    data = simulate_dataset(truth, cfg)
    if cfg.delta > 0:
        data = contaminate(data, cfg.delta, cfg.seed, mode=args.contamination)
    save_dataset_csv(data, args.data_out)
    save_model_json(truth, args.model_out)
    return EXIT_OK, _report("simulate", args.seed, _jsonable(args), {"n": data.n, "p": data.p})


def cmd_fit(args):
    data = load_dataset_csv(args.data)
    plan = build_partition_plan(data.p, args.k, data.categories, args.anchors,
                                args.partitions, args.seed)
    opts = FactorizeOptions(args.max_iters, args.rel_tol, args.epsilon, args.seed)
    fit = fit_partitioned(data, args.k, args.alpha0, plan, opts, matcher=args.matcher,
                          restarts=args.restarts, workers=args.workers)
    save_model_json(fit, args.out)
    parts = []
    for i, part in enumerate(plan.partitions):
        rep = fit.reports[i]
        parts.append({
            "partition": i,
            "variables": [list(s) for s in part],
            "permutation": rep.permutation.tolist(),
            "valid": rep.valid,
            "repaired": rep.repaired,
            "score": rep.score,
            "converged": fit.converged[i],
            "objective": fit.objectives[i],
            "bound_holds": fit.bound_checks[i],
        })
    metrics = {"partitions": plan.r}
    if args.truth:
        metrics["rmse"] = rmse_aligned(fit.params, load_model_json(args.truth))
    code = EXIT_OK
    if args.strict and not all(fit.converged):
        code = EXIT_NONCONVERGED
    return code, _report("fit", args.seed, _jsonable(args), metrics, parts)


def cmd_eval(args):
    rmse = rmse_aligned(load_model_json(args.estimate), load_model_json(args.truth))
    print(f"rmse {rmse!r}", file=sys.stderr)
    return EXIT_OK, _report("eval", args.seed, _jsonable(args), {"rmse": rmse})


def cmd_negfrac(args):
    data = load_dataset_csv(args.data)
    sets = args.sets
    if sets is None:
        idx = np.array_split(np.arange(data.p), 3)
        sets = [s.tolist() for s in idx]
    T = block_tensor(data, *sets, args.alpha0)
    frac = negative_fraction(T)
    return EXIT_OK, _report("negfrac", args.seed, _jsonable(args),
                            {"negative_fraction": frac, "shape": list(T.shape)})


def cmd_bench(args):
    cfg = SimConfig(p=args.p, k=args.k, d=args.d, alpha_h=args.alpha_h, n=args.n, seed=args.seed)
    truth = sample_model(cfg)
    data = simulate_dataset(truth, cfg)
    opts = FactorizeOptions(max_iters=args.max_iters, rel_tol=args.rel_tol, seed=args.seed)
    rows = run_partition_bench(data, truth, args.k, args.partitions, opts,
                               repeats=args.repeats, restarts=args.restarts,
                               workers=args.workers, seed=args.seed)
    return EXIT_OK, _report("bench", args.seed, _jsonable(args),
                            {"runtimes": rows, "backend": _accel.backend()})


def run_partition_bench(data, truth, k, partition_counts, opts, repeats=3, restarts=3,
                        workers=1, seed=0):
    """Median wall time of the full fit for each partition count."""
    # warm-up so that JIT compilation is not charged to the first row
    warm = build_partition_plan(data.p, k, data.categories, r=max(partition_counts), seed=seed)
    fit_partitioned(data, k, truth.alpha0, warm, FactorizeOptions(max_iters=2), restarts=1, workers=1)
    rows = []
    for r in partition_counts:
        plan = build_partition_plan(data.p, k, data.categories, r=r, seed=seed)
        times = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            fit = fit_partitioned(data, k, truth.alpha0, plan, opts,
                                  restarts=restarts, workers=workers)
            times.append(time.perf_counter() - t0)
        rows.append({
            "partitions": r,
            "seconds": float(np.median(times)),
            "all_seconds": times,
            "rmse": rmse_aligned(fit.params, truth),
        })
    return rows


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "eval": cmd_eval,
    "negfrac": cmd_negfrac,
    "bench": cmd_bench,
}


def _load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise FileError(f"{path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc.msg})", exc.lineno) from None
    if not isinstance(obj, dict):
        raise ParseError(f"{path}: config must be a JSON object")
    return {k.replace("-", "_"): v for k, v in obj.items()}


def _parse(parser, argv):
    """Parse ``argv``; values from ``--config`` act as defaults for the flags."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    sub = parser._subparsers._group_actions[0].choices.get(known.command)
    if known.config and sub is not None:
        defaults = _load_config(known.config)
        dests = {a.dest: a for a in sub._actions}
        unknown = sorted(set(defaults) - set(dests))
        if unknown:
            raise ArgumentError(f"unknown config keys: {', '.join(unknown)}")
        for key, val in defaults.items():
            action = dests[key]
            if isinstance(val, str) and action.type is not None:
                val = action.type(val)
            action.default = val
            action.required = False
    return parser.parse_args(argv)


def main(argv=None):
    parser = build_parser()
    try:
        args = _parse(parser, argv)
        if args.backend:
            _accel.set_backend(args.backend)
        print(f"seed {args.seed}", file=sys.stderr)
        code, report = COMMANDS[args.command](args)
        text = json.dumps(report, indent=1, default=str)
        if args.report:
            try:
                with open(args.report, "w", encoding="utf-8") as fh:
                    fh.write(text + "\n")
            except OSError as exc:
                raise FileError(f"{args.report}: {exc.strerror or exc}") from exc
        print(text)
        if code == EXIT_NONCONVERGED:
            print("error: solver: factorization did not converge", file=sys.stderr)
        return code
    except FileError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return EXIT_IO
    except ParseError as exc:
        print(f"error: parse: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except MixmomError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return EXIT_ARGUMENT


if __name__ == "__main__":
    sys.exit(main())

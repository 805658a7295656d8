"""Command-line interface: ``rkhm <command> [options]``.

Commands
--------
gen       synthetic dataset (JSONL)
train     fit a model on a dataset
predict   write predictions for one split
eval      mean error of a model (or a predictions file) on one split
bound     generalization bound from constants or from a fitted model
bench     flop-count benchmark of the three solvers
selftest  numerical property suite
table1    cross-validated comparison of the synthetic-experiment methods

Exit codes: 0 success, 1 property failure, 2 numerical failure
(singular system, no convergence), 3 usage, contract or I/O error.
"""
import argparse
import json
import logging
import os
import sys

import numpy as np

from . import bounds, experiments, io, selftest
from .algebra import AlgebraValue
from .exceptions import (ContractError, ConvergenceError, DomainError, PreconditionError,
                         SingularSystemError, SpecValidationError)
from .presets import METHODS, build_kernel, parse_preset
from .solver import assemble_gram, fit, model_norm_B, predict

EXIT_OK, EXIT_PROPERTY, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2, 3

log = logging.getLogger("rkhm")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _emit(obj, out=None):
    text = json.dumps(obj, indent=2, sort_keys=True)
    print(text)
    if out:
        digest = io.atomic_write_text(out, text + "\n")
        print(f"wrote {out} sha256={digest}", file=sys.stderr)


# -- kernel and data plumbing -----------------------------------------------------------

def _resolve_kernel(text, p, c=None):
    """``--kernel`` is either a path to a JSON spec or a preset string."""
    if text and os.path.exists(text):
        from .estimator import _adapter_for
        spec = io.read_kernel(text)
        return spec, _adapter_for(spec), "custom"
    preset, params = parse_preset(text)
    return build_kernel(preset, p, c=c, **params), preset, preset.name


def _dimension(ds):
    x = ds.train_x[0] if ds.train_x else ds.test_x[0]
    return x.p if isinstance(x, AlgebraValue) else len(x)


def _embed(ds, split, adapter):
    xs, ys = ds.split(split)
    if ds.vector_valued:
        return [adapter.embed_input(x) for x in xs], [adapter.embed_target(y) for y in ys]
    return list(xs), list(ys)


def _check_model_dataset(model, ds):
    p_model = model.coeffs[0].p
    x = ds.train_x[0] if ds.train_x else ds.test_x[0]
    if ds.vector_valued:
        if len(x) != p_model:
            raise ContractError(f"model has p={p_model} but dataset vectors have length {len(x)}")
    elif getattr(x, "p", p_model) != p_model:
        raise ContractError(f"model has p={p_model} but dataset values have p={x.p}")


def _error(pred, y, adapter, vector):
    if vector:
        return float(np.linalg.norm(adapter.decode(pred) - np.asarray(y, dtype=float)))
    return float(np.linalg.norm(pred.matrix() - y.matrix()))


# -- commands ---------------------------------------------------------------------------

def cmd_gen(args):
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    if args.n_test < 0:
        raise UsageError("--n-test must be >= 0")
    ds = experiments.gen_synthetic(args.n, args.seed, n_test=args.n_test)
    digest = io.write_dataset(args.out, ds)
    print(f"gen n={args.n} n_test={args.n_test} seed={args.seed} out={args.out} sha256={digest}")
    return EXIT_OK


def cmd_train(args):
    ds = io.read_dataset(args.input)
    if not ds.train_x:
        raise ContractError("dataset has no training records")
    spec, adapter, name = _resolve_kernel(args.kernel, _dimension(ds), args.c)
    xs, ys = _embed(ds, "train", adapter)
    model = fit(spec, xs, ys, args.lam, args.solver, args.tol, args.max_iter)
    digest = io.write_model(args.out, model, adapter, name)
    c = model.counter
    iters = f" iterations={model.iterations}" if model.iterations is not None else ""
    print(f"train n={model.n} solver={model.solver_used} residual={model.residual:.3e} "
          f"flops={c.complex_mul_adds} fft_calls={c.fft_calls}{iters} out={args.out} sha256={digest}")
    return EXIT_OK


def _load_model(path):
    model, adapter = io.read_model(path)
    if adapter is None:
        from .estimator import _adapter_for
        adapter = _adapter_for(model.spec)
    return model, adapter


def cmd_predict(args):
    model, adapter = _load_model(args.model)
    ds = io.read_dataset(args.input)
    _check_model_dataset(model, ds)
    xs, _ = _embed(ds, args.split, adapter)
    lines = []
    for i, x in enumerate(xs):
        pred = predict(model, x)
        rec = {"index": i, "split": args.split, "prediction": io.encode_value(pred)}
        if ds.vector_valued:
            rec["decoded"] = [float(v) for v in adapter.decode(pred)]
        lines.append(io.dumps(rec) + "\n")
    digest = io.atomic_write_text(args.out, "".join(lines))
    print(f"predict split={args.split} count={len(lines)} out={args.out} sha256={digest}")
    return EXIT_OK


def cmd_eval(args):
    ds = io.read_dataset(args.input)
    xs_raw, ys_raw = ds.split(args.split)
    if not xs_raw:
        raise ContractError(f"dataset has no {args.split} records")
    if args.predictions:
        recs = [json.loads(line) for line in open(args.predictions, encoding="utf-8") if line.strip()]
        if len(recs) != len(ys_raw):
            raise ContractError(f"{len(recs)} predictions for {len(ys_raw)} records")
        errs = []
        for rec, y in zip(recs, ys_raw):
            if ds.vector_valued and "decoded" in rec:
                errs.append(float(np.linalg.norm(np.asarray(rec["decoded"]) - np.asarray(y, dtype=float))))
            else:
                errs.append(float(np.linalg.norm(io.decode_value(rec["prediction"]).matrix() - y.matrix())))
    else:
        if not args.model:
            raise UsageError("eval needs --model or --predictions")
        model, adapter = _load_model(args.model)
        _check_model_dataset(model, ds)
        xs, _ = _embed(ds, args.split, adapter)
        errs = []
        for x, y in zip(xs, ys_raw):
            errs.append(_error(predict(model, x), y, adapter, ds.vector_valued))
    value = float(np.mean(errs))
    print(f"mean_test_error={value:.10g} split={args.split} count={len(errs)}")
    if args.out:
        io.write_json(args.out, {"mean_test_error": value, "split": args.split, "count": len(errs)})
    return EXIT_OK


def cmd_bound(args):
    if args.model:
        if not args.input:
            raise UsageError("bound with --model also needs --in")
        model, adapter = _load_model(args.model)
        ds = io.read_dataset(args.input)
        _check_model_dataset(model, ds)
        gram = assemble_gram(model.spec, model.inputs)
        B = model_norm_B(model, gram)
        p = gram.p
        diag = [model.spec(x, x).norm() for x in model.inputs]
        xs = model.inputs + _embed(ds, "test", adapter)[0]
        D = max(model.spec(x, x).norm() for x in xs)
        ys = _embed(ds, "train", adapter)[1] + _embed(ds, "test", adapter)[1]
        E = max(y.norm() for y in ys)
        C = args.C if args.C is not None else bounds.second_moment(p, seed=args.seed)
        n = model.n
        family = bounds.ball_candidates(model, args.candidates, seed=args.seed, gram=gram)
        est = bounds.empirical_rademacher_mc(family, model.inputs, num_draws=args.draws, seed=args.seed)
        rb = bounds.rademacher_bound(B, C, diag, n)
        estimate_trace = float(est.trace().real)
    else:
        missing = [k for k in ("B", "D", "E", "p", "n") if getattr(args, k) is None]
        if missing:
            raise UsageError("bound needs --model/--in or all of --B --D --E --p --n "
                             f"(missing {', '.join('--' + m for m in missing)})")
        B, D, E, p, n = args.B, args.D, args.E, args.p, args.n
        C = args.C if args.C is not None else 1.0
        rb = bounds.rademacher_bound(B, C, [D] * n, n) if n >= 1 else None
        estimate_trace = None
    inputs = bounds.BoundInputs(B, C, D, E, p, n, args.delta)
    report = {"B": B, "C": C, "D": D, "E": E, "p": p, "n": n, "delta": args.delta,
              "rademacher_bound": rb, "L": bounds.lipschitz_constant(B, D, E),
              "generalization_bound": bounds.generalization_bound(inputs),
              "empirical_estimate_trace": estimate_trace}
    _emit(report, args.out)
    return EXIT_OK


def cmd_bench(args):
    ns = args.n or [2, 4, 8]
    ps = args.p or [4, 8, 16]
    if min(ns) < 1 or min(ps) < 1:
        raise UsageError("--n and --p entries must be >= 1")
    solvers = args.solver or ["dense", "circulant", "cg"]
    report = experiments.run_benchmark(ns, ps, solvers, seed=args.seed, lam=args.lam, tol=args.tol,
                                       max_iter=args.max_iter)
    for r in report["instances"]:
        row = " ".join(f"{s}={r[s + '_flops']}" for s in solvers)
        print(f"bench n={r['n']} p={r['p']} {row} disagreement={r['max_relative_disagreement']:.2e}",
              file=sys.stderr)
    _emit(report, args.out)
    return EXIT_OK


def cmd_selftest(args):
    names = args.only or None
    known = [n for n, _, _ in selftest.CHECKS]
    unknown = [n for n in names or [] if n not in known]
    if unknown:
        raise UsageError(f"unknown checks {unknown}; known: {', '.join(known)}")
    results = selftest.run_all(include_slow=args.all, names=names)
    families = {}
    for r in results:
        print(r.line())
        fam = families.setdefault(r.family, [0, 0])
        fam[0] += r.count
        fam[1] += int(not r.passed)
    for fam, (count, failed) in sorted(families.items()):
        print(f"family {fam}: {count} cases, {failed} failing checks")
    failed = [r for r in results if not r.passed]
    if args.out:
        io.write_json(args.out, [{"name": r.name, "family": r.family, "passed": r.passed,
                                  "count": r.count, "detail": r.detail, "seconds": r.seconds}
                                 for r in results])
    if failed:
        print("failing: " + ", ".join(r.name for r in failed))
        return EXIT_PROPERTY
    return EXIT_OK


def cmd_table1(args):
    methods = args.methods or list(METHODS)
    seeds = args.seeds if args.seeds is not None else [0, 1, 2, 3, 4]
    if args.n < 2 or args.folds < 2 or args.folds > args.n:
        raise UsageError("need n >= 2 and 2 <= folds <= n")
    reports = experiments.run_table1(methods, args.n, seeds, tuple(args.c_grid), tuple(args.lambda_grid),
                                     args.folds)
    for r in reports:
        print(f"{r.method:22s} {r.mean_test_error:.4f} ± {r.std_over_seeds:.4f}", file=sys.stderr)
    if args.csv:
        io.write_csv(args.csv, ["method", "n", "mean_test_error", "std_over_seeds"],
                     [[r.method, r.n, f"{r.mean_test_error:.10g}", f"{r.std_over_seeds:.10g}"] for r in reports])
    _emit([r.to_dict() for r in reports], args.out)
    return EXIT_OK


# -- parser -----------------------------------------------------------------------------

def _solver_flags(sp, choices=("auto", "dense", "circulant", "cg")):
    sp.add_argument("--solver", default="auto", choices=choices)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--max-iter", dest="max_iter", type=int, default=1000)


def build_parser():
    ap = _Parser(prog="rkhm", description="Regression with C*-algebra-valued kernels.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("gen", help="generate the synthetic dataset")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--n-test", dest="n_test", type=int, default=experiments.N_TEST)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("train", help="fit a model")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--kernel", default="qr-poly", help="preset name[:k=v,...] or kernel JSON path")
    sp.add_argument("--c", type=float, default=None, help="preset kernel parameter")
    sp.add_argument("--lambda", dest="lam", type=float, default=0.1)
    _solver_flags(sp)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("predict", help="predict one split of a dataset")
    sp.add_argument("--model", required=True)
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--split", choices=("train", "test"), default="test")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("eval", help="mean error on one split")
    sp.add_argument("--model")
    sp.add_argument("--predictions")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--split", choices=("train", "test"), default="test")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("bound", help="generalization bound")
    sp.add_argument("--model")
    sp.add_argument("--in", dest="input")
    for k in ("B", "C", "D", "E"):
        sp.add_argument(f"--{k}", type=float)
    sp.add_argument("--p", type=int)
    sp.add_argument("--n", type=int)
    sp.add_argument("--delta", type=float, default=0.1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--candidates", type=int, default=5)
    sp.add_argument("--draws", type=int, default=200)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_bound)

    sp = sub.add_parser("bench", help="solver flop-count benchmark")
    sp.add_argument("--n", type=_int_list, help="comma-separated sample counts")
    sp.add_argument("--p", type=_int_list, help="comma-separated matrix sizes")
    sp.add_argument("--solver", action="append", choices=("dense", "circulant", "cg"))
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--lambda", dest="lam", type=float, default=0.1)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--max-iter", dest="max_iter", type=int, default=10000)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("selftest", help="run the numerical property suite")
    sp.add_argument("--all", action="store_true", help="include the slow experiment checks")
    sp.add_argument("--only", action="append", help="run only this check (repeatable)")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_selftest)

    sp = sub.add_parser("table1", help="cross-validated method comparison on synthetic data")
    sp.add_argument("--methods", type=lambda s: [m for m in s.split(",") if m])
    sp.add_argument("--n", type=int, default=30)
    sp.add_argument("--seeds", type=_int_list)
    sp.add_argument("--folds", type=int, default=experiments.DEFAULT_FOLDS)
    sp.add_argument("--c-grid", dest="c_grid", type=_float_list, default=list(experiments.DEFAULT_C_GRID))
    sp.add_argument("--lambda-grid", dest="lambda_grid", type=_float_list,
                    default=list(experiments.DEFAULT_LAMBDA_GRID))
    sp.add_argument("--out")
    sp.add_argument("--csv")
    sp.set_defaults(func=cmd_table1)
    return ap


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:                 # --help
        return exc.code if isinstance(exc.code, int) else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except SingularSystemError as exc:
        freq = f" frequency={exc.frequency}" if exc.frequency is not None else ""
        print(f"error: singular system: {exc} (pivot={exc.pivot:.3e} step={exc.index}{freq})", file=sys.stderr)
        return EXIT_NUMERIC
    except ConvergenceError as exc:
        print(f"error: no convergence: {exc} (residual={exc.residual:.3e} iterations={exc.iterations})",
              file=sys.stderr)
        return EXIT_NUMERIC
    except PreconditionError as exc:
        print(f"error: solver precondition: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, ContractError, SpecValidationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError, TypeError) as exc:
        print(f"error: malformed input: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

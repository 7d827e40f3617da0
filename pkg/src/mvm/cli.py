"""Command-line interface: train, predict, eval, gradcheck, synth.

Every failure path prints exactly one diagnostic line to stderr and exits
nonzero (2 for usage problems, 1 for runtime errors).
"""

import argparse
import sys
from dataclasses import replace

from .baselines import (
    baseline_train,
    linear_predict_dataset,
    mvfm_predict_dataset,
)
from .data import load_dataset, load_model, save_dataset, save_model, synth_generate
from .errors import MvmError, SchemaError
from .metrics import accuracy, auc, mean_logloss, rmse
from .model import ViewSchema, predict_dataset
from .objectives import LOSSES, REGS
from .training import TrainConfig, grad_check, select_lambda, train

GRADCHECK_GATE = 1e-5


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # one diagnostic line instead of argparse's usage dump
    def error(self, message):
        raise _UsageError(message)


def _add_schema_flags(parser):
    parser.add_argument("--m", type=int, default=3,
                        help="number of views (each of size 4) when --dims is omitted")
    parser.add_argument("--dims", type=str, default=None,
                        help="comma-separated per-view sizes, e.g. '4,3,5'")
    parser.add_argument("--k", type=int, default=2)
    parser.add_argument("--seed", type=int, default=42)


def build_parser():
    parser = _Parser(prog="mvm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="fit a model and report the objective trace")
    p_train.add_argument("--data", required=True)
    p_train.add_argument("--model-out", default=None)
    p_train.add_argument("--k", type=int, default=8)
    p_train.add_argument("--loss", choices=LOSSES, default="logit")
    p_train.add_argument("--reg", choices=REGS, default="l2")
    p_train.add_argument("--epsilon", type=float, default=1e-6)
    p_train.add_argument("--lambda", dest="lam", type=float, default=1e-4)
    p_train.add_argument("--eta", type=float, default=0.05)
    p_train.add_argument("--sigma", type=float, default=0.01)
    p_train.add_argument("--epochs", type=int, default=20)
    p_train.add_argument("--seed", type=int, default=42)
    p_train.add_argument("--tol", type=float, default=1e-6)
    p_train.add_argument("--decay", type=float, default=0.0)
    p_train.add_argument("--no-augment", action="store_true")
    p_train.add_argument("--no-shuffle", action="store_true")
    p_train.add_argument("--no-reg-bias", action="store_true",
                         help="exclude bias-factor rows from the regularizer")
    p_train.add_argument("--baseline", choices=("linear", "mvfm"), default=None)
    p_train.add_argument("--valid", default=None,
                         help="held-out dataset for --lambda-grid selection")
    p_train.add_argument("--lambda-grid", default=None,
                         help="comma-separated lambda candidates, e.g. '0,1e-4,1e-2'")
    p_train.set_defaults(func=_cmd_train)

    p_predict = sub.add_parser("predict", help="score a dataset with a model file")
    p_predict.add_argument("--model", required=True)
    p_predict.add_argument("--data", required=True)
    p_predict.add_argument("--out", default=None, help="score file (default: stdout)")
    p_predict.set_defaults(func=_cmd_predict)

    p_eval = sub.add_parser("eval", help="score a dataset and print metrics")
    p_eval.add_argument("--model", required=True)
    p_eval.add_argument("--data", required=True)
    p_eval.add_argument("--metrics", default="acc",
                        help="comma-separated subset of acc,auc,logloss,rmse")
    p_eval.set_defaults(func=_cmd_eval)

    p_grad = sub.add_parser("gradcheck",
                            help="compare analytic gradients with finite differences")
    _add_schema_flags(p_grad)
    p_grad.add_argument("--trials", type=int, default=50,
                        help="coordinates checked per loss/reg combination")
    p_grad.set_defaults(func=_cmd_gradcheck)

    p_synth = sub.add_parser("synth",
                             help="generate a dataset labeled by a planted teacher")
    _add_schema_flags(p_synth)
    p_synth.add_argument("--n", type=int, default=1000)
    p_synth.add_argument("--density", type=float, default=0.3)
    p_synth.add_argument("--noise", type=float, default=0.0)
    p_synth.add_argument("--out", required=True)
    p_synth.add_argument("--teacher-out", default=None)
    p_synth.set_defaults(func=_cmd_synth)

    return parser


def _schema_from(args):
    if args.dims is not None:
        try:
            dims = tuple(int(t) for t in args.dims.split(",") if t.strip())
            return ViewSchema(dims)
        except ValueError:
            raise _UsageError(f"invalid --dims {args.dims!r}") from None
    if args.m < 1:
        raise _UsageError("--m must be >= 1")
    return ViewSchema((4,) * args.m)


def _scores_for(model, dataset):
    if dataset.schema != model.schema:
        raise SchemaError(
            f"model schema {model.schema.dims} does not match "
            f"data schema {dataset.schema.dims}"
        )
    if model.family == "mvm":
        return predict_dataset(model, dataset)
    if model.family == "linear":
        return linear_predict_dataset(model, dataset)
    return mvfm_predict_dataset(model, dataset)


def _cmd_train(args):
    dataset = load_dataset(args.data)
    config = TrainConfig(
        k=args.k, loss=args.loss, reg=args.reg, lam=args.lam, eta=args.eta,
        sigma=args.sigma, epochs=args.epochs, seed=args.seed,
        augment=not args.no_augment, shuffle=not args.no_shuffle,
        tol=args.tol, epsilon=args.epsilon, decay=args.decay,
        reg_bias=not args.no_reg_bias,
    )
    if (args.lambda_grid is None) != (args.valid is None):
        raise _UsageError("--lambda-grid and --valid must be used together")
    if args.lambda_grid is not None:
        if args.baseline:
            raise _UsageError("--lambda-grid is only supported for the mvm model")
        try:
            grid = [float(t) for t in args.lambda_grid.split(",") if t.strip()]
        except ValueError:
            raise _UsageError(f"invalid --lambda-grid {args.lambda_grid!r}") from None
        valid = load_dataset(args.valid)
        best, results = select_lambda(dataset, valid, config, grid)
        for lam, score in results:
            print(f"lambda {lam!r} validation_loss {score!r}")
        print(f"selected_lambda {best!r}")
        config = replace(config, lam=best)
    if args.baseline:
        model, report = baseline_train(args.baseline, dataset, config)
    else:
        model, report = train(dataset, config)
    for epoch, value in enumerate(report.objective_trace, start=1):
        print(f"epoch {epoch} objective {value!r}")
    print(f"epochs_run {report.epochs_run}")
    print(f"final_objective {report.final_objective!r}")
    print(f"converged {int(report.converged)}")
    if args.model_out:
        save_model(args.model_out, model)
    return 0


def _cmd_predict(args):
    model = load_model(args.model)
    dataset = load_dataset(args.data)
    scores = _scores_for(model, dataset)
    text = "".join(f"{float(x)!r}\n" for x in scores)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
    return 0


_METRICS = {"acc": accuracy, "auc": auc, "logloss": mean_logloss, "rmse": rmse}


def _cmd_eval(args):
    model = load_model(args.model)
    dataset = load_dataset(args.data)
    names = [t for t in args.metrics.split(",") if t.strip()]
    if not names:
        raise _UsageError("--metrics needs at least one metric")
    unknown = [t for t in names if t not in _METRICS]
    if unknown:
        raise _UsageError(
            f"unknown metric {unknown[0]!r}, expected subset of {sorted(_METRICS)}"
        )
    scores = _scores_for(model, dataset)
    labels = dataset.labels
    pairs = []
    for name in names:
        pairs.append(name)
        pairs.append(repr(float(_METRICS[name](scores, labels))))
    print("\t".join(pairs))
    return 0


def _cmd_gradcheck(args):
    schema = _schema_from(args)
    if args.trials < 1:
        raise _UsageError("--trials must be >= 1")
    worst = 0.0
    combo = 0
    for loss in LOSSES:
        for reg in REGS:
            for lam in (0.0, 1e-2):
                config = TrainConfig(
                    k=args.k, loss=loss, reg=reg, lam=lam, seed=args.seed + combo
                )
                worst = max(worst, grad_check(schema, config, trials=args.trials))
                combo += 1
    print(f"max_rel_error {worst!r}")
    return 0 if worst <= GRADCHECK_GATE else 1


def _cmd_synth(args):
    schema = _schema_from(args)
    dataset, teacher = synth_generate(
        schema, args.k, args.n, args.density, args.noise, args.seed
    )
    save_dataset(args.out, dataset)
    if args.teacher_out:
        save_model(args.teacher_out, teacher)
    return 0


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"mvm: {exc}", file=sys.stderr)
        return 2
    except (MvmError, OSError, ValueError) as exc:
        print(f"mvm: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

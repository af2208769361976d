"""Command-line driver: extract / train / eval / sweep / report.

Exit codes: 0 success, 1 data error, 2 config error, 3 training did not
converge (only with --strict).
"""

import argparse
import json
import sys
from pathlib import Path

from .data import SplitSpec, load_houses_dataset, split as split_indices
from .errors import ConfigError, CurbpriceError, DataError
from .fusion import denormalize_target, fit_normalizer, normalize
from .metrics import evaluate
from .mlp import MlpModel, forward
from .pipeline import NN_SPLIT, SVR_SPLIT, Settings, SweepConfig, extract_features, \
    prepare_inputs, run_sweep, run_train_eval, write_report
from .svr import SvrModel, predict_svr

EXIT_OK = 0
EXIT_DATA = 1
EXIT_CONFIG = 2
EXIT_NONCONVERGED = 3

_SWEEP_KEYS = ("n_values", "estimators", "seeds")


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path} must hold a flat JSON object")
    return doc


def _split_config(doc: dict) -> tuple[Settings, dict]:
    sweep_doc = {k: doc.pop(k) for k in _SWEEP_KEYS if k in doc}
    return Settings.from_dict(doc), sweep_doc


def _write_run_outputs(out_dir, result):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "model.json").write_text(result.model.to_json())
    (out_dir / "manifest.json").write_text(json.dumps(result.manifest, indent=2, sort_keys=True))
    (out_dir / "report.json").write_text(result.reports_json())
    if result.history is not None:
        result.history.to_csv(out_dir / "history.csv")


def _summary_line(result) -> str:
    rep = result.report_norm
    r = "undefined" if rep.r_value is None else f"{rep.r_value:.5f}"
    return (f"{result.estimator} n={result.n} seed={result.seed}: "
            f"test MSE {rep.mse:.6g} (normalized), R {r}, "
            f"{'converged' if result.converged else 'NOT converged'}")


def cmd_extract(args) -> int:
    settings, _ = _split_config(_load_config(args.config))
    records = load_houses_dataset(args.dataset)
    _, stats = extract_features(records, settings.surf_params(), args.cache,
                                settings.max_features)
    print(f"{len(records)} houses, {4 * len(records)} images: "
          f"{stats.computed} computed, {stats.hits} cache hits")
    return EXIT_OK


def cmd_train(args) -> int:
    settings, _ = _split_config(_load_config(args.config))
    result = run_train_eval(args.dataset, args.estimator, args.n_features,
                            args.seed, settings, args.cache)
    if args.out:
        _write_run_outputs(args.out, result)
    print(_summary_line(result))
    if args.strict and not result.converged:
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_eval(args) -> int:
    """Evaluate a saved model on the test part of the dataset's seeded split.

    The split and the normalizer are rebuilt from the dataset + seed, exactly
    as during training, so the saved model is scored on the identical test
    rows it never saw.
    """
    settings, _ = _split_config(_load_config(args.config))
    text = Path(args.model).read_text()
    fmt = json.loads(text).get("format", "")
    if fmt.startswith("svr-model"):
        model = SvrModel.from_json(text)
        predict = lambda X: predict_svr(model, X)  # noqa: E731
    elif fmt.startswith("mlp-model"):
        model = MlpModel.from_json(text)
        predict = lambda X: forward(model, X)  # noqa: E731
    else:
        raise DataError(f"unrecognized model document {args.model}: {fmt!r}")

    X, y, _ = prepare_inputs(args.dataset, args.n_features, settings, args.cache)
    fractions = SVR_SPLIT if args.estimator == "svr" else NN_SPLIT
    parts = split_indices(y.size, SplitSpec(fractions, seed=args.seed))
    train_idx, test_idx = parts[0], parts[-1]
    feat_nrm = fit_normalizer(X[train_idx])
    tgt_nrm = fit_normalizer(y[train_idx][:, None])
    pred = predict(normalize(feat_nrm, X[test_idx]))
    yn_test = normalize(tgt_nrm, y[test_idx][:, None]).ravel()
    rep_norm = evaluate(pred, yn_test, scale="normalized")
    rep_usd = evaluate(denormalize_target(tgt_nrm, pred), y[test_idx], scale="usd")

    r = "undefined" if rep_norm.r_value is None else f"{rep_norm.r_value:.5f}"
    print(f"eval {args.estimator} n={args.n_features} seed={args.seed}: "
          f"test MSE {rep_norm.mse:.6g} (normalized), R {r}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        doc = {"estimator": args.estimator, "n": args.n_features, "seed": args.seed,
               "normalized": json.loads(rep_norm.to_json()),
               "usd": json.loads(rep_usd.to_json())}
        (out / "report.json").write_text(json.dumps(doc, sort_keys=True))
    return EXIT_OK


def cmd_sweep(args) -> int:
    settings, sweep_doc = _split_config(_load_config(args.config))
    cfg = SweepConfig(**sweep_doc)
    rows = run_sweep(args.dataset, cfg, args.out, args.cache, settings,
                     strict=args.strict)
    bad = [r for r in rows if not r["converged"]]
    print(f"{len(rows)} sweep rows -> {Path(args.out) / 'sweep.csv'}"
          + (f" ({len(bad)} not converged)" if bad else ""))
    if args.strict and bad:
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_report(args) -> int:
    path = write_report(args.out)
    print(f"report written to {path.parent}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="curbprice",
        description="Estimate house prices from four photos plus listing attributes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, dataset=True, cache=True, out=False):
        if dataset:
            p.add_argument("--dataset", required=True,
                           help="houses directory or numeric CSV file")
        if cache:
            p.add_argument("--cache", default=None, help="descriptor cache directory")
        p.add_argument("--config", default=None, help="JSON file overriding defaults")
        if out:
            p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--strict", action="store_true",
                       help="exit 3 when training does not converge")

    p = sub.add_parser("extract", help="populate the descriptor cache")
    common(p)
    p.set_defaults(fn=cmd_extract)

    p = sub.add_parser("train", help="train one estimator and evaluate it")
    common(p, out=True)
    p.add_argument("--estimator", choices=("svr", "nn"), required=True)
    p.add_argument("--n-features", type=int, default=0,
                   help="visual features per image (0..15)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved model on a dataset split")
    common(p, out=True)
    p.add_argument("--model", required=True, help="model.json from a train run")
    p.add_argument("--estimator", choices=("svr", "nn"), required=True)
    p.add_argument("--n-features", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("sweep", help="feature-count sweep over both estimators")
    common(p, out=True)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("report", help="re-render plots and summary from sweep.csv")
    p.add_argument("--out", required=True, help="directory holding sweep.csv")
    p.add_argument("--strict", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(fn=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "command", None) == "sweep" and not args.out:
        print("sweep requires --out", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CurbpriceError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

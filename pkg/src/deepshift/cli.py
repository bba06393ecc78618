"""Command-line entry point: ``deepshift <command> [options]``.

Exit codes: 0 success, 1 verification failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import bench as benchmod
from .cae import Mode, TrainConfig, TrainingDivergedError, encode_features, init_model, train
from .classifier import HoldOut, InvalidSplitError, KFold, train_classifier
from .complexity import RECONCILE_COLUMNS, CostParams, reconcile
from .conv_core import InvalidInputError, forward_available
from .datasets import DatasetError, read_dataset_csv, synth_dataset, write_dataset_csv
from .io import CSVOut, ModelFileError, provenance, read_model
from .shift_engine import ShiftEngine


class UsageError(Exception):
    pass


@contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _range(text: str) -> range:
    """``"3"`` or ``"1:4"`` (inclusive)."""
    try:
        if ":" in text:
            lo, hi = (int(v) for v in text.split(":", 1))
        else:
            lo = hi = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or LO:HI, got {text!r}") from None
    if lo < 1 or hi < lo:
        raise argparse.ArgumentTypeError(f"empty or non-positive range {text!r}")
    return range(lo, hi + 1)


def _split(text: str):
    kind, _, arg = text.partition(":")
    try:
        if kind == "holdout":
            return HoldOut(float(arg or 0.6))
        if kind == "kfold":
            return KFold(int(arg or 10))
    except (ValueError, InvalidSplitError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    raise argparse.ArgumentTypeError(f"split must be holdout[:FRAC] or kfold[:K], got {text!r}")


# -- verify ---------------------------------------------------------------

def verify_model(net, steps: int, seed: int, retained: int | None = None) -> dict:
    """Stream seeded frames through the engine and compare every buffered
    activation with a naive pass over the whole prefix, after each push."""
    stream = np.random.default_rng(seed).standard_normal((steps, net.c_in))
    engine = ShiftEngine(net, retained or max(net.windows))
    checked = 0
    for step in range(steps):
        engine.push(stream[step])
        naive = forward_available(net, stream[:step + 1])
        for layer, cached in enumerate(engine.snapshot()):
            full = naive[layer] if layer < len(naive) else np.zeros((0, cached.shape[1]))
            expect = full[len(full) - len(cached):]
            if cached.shape != expect.shape or not np.array_equal(cached, expect):
                return {"verified": False, "first_divergence_step": step + 1,
                        "first_divergence_layer": layer, "checked": checked}
            checked += len(cached)
    return {"verified": True, "first_divergence_step": None,
            "first_divergence_layer": None, "checked": checked}


def cmd_verify(args) -> int:
    net, _ = read_model(args.model)
    result = verify_model(net, args.steps, args.seed)
    with _output(args.out) as out:
        csv_out = CSVOut(out, ["steps", "layers", "frames_checked", "verified",
                               "first_divergence_step", "first_divergence_layer"],
                         args.seed, args.cmdline)
        csv_out.row(steps=args.steps, layers=len(net), frames_checked=result["checked"],
                    verified=result["verified"],
                    first_divergence_step=result["first_divergence_step"],
                    first_divergence_layer=result["first_divergence_layer"])
    if not result["verified"]:
        print(f"divergence at step {result['first_divergence_step']}, "
              f"layer {result['first_divergence_layer']}", file=sys.stderr)
        return 1
    return 0


# -- bench ----------------------------------------------------------------

def cmd_bench(args) -> int:
    doc = {}
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read bench config: {exc}") from None
    if args.seed is not None:
        doc["seed"] = args.seed
    try:
        config = benchmod.BenchConfig.from_dict(doc)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    records = benchmod.run_sweep(config)
    cross = benchmod.crossovers(records)
    with _output(args.out) as out:
        csv_out = CSVOut(out, benchmod.BENCH_COLUMNS, config.seed, args.cmdline)
        for rec in records:
            pt = rec.point
            csv_out.row(mode=pt.mode, n_layers=pt.n_layers, window=pt.window,
                        context=pt.context, frames=pt.frames, steps=rec.steps, runs=rec.runs,
                        mean_ns=rec.mean_ns, std_ns=rec.std_ns, ops_per_step=rec.ops_per_step,
                        crossover_frames=cross.get((pt.n_layers, pt.window, pt.context)),
                        skipped=rec.skipped or None)
    return 0


# -- count ----------------------------------------------------------------

def cmd_count(args) -> int:
    with _output(args.out) as out:
        csv_out = CSVOut(out, RECONCILE_COLUMNS, None, args.cmdline)
        for n in args.n:
            for t in args.t:
                for w in args.w:
                    csv_out.row(**reconcile(CostParams(n, t, w)))
    return 0


# -- train / classify -----------------------------------------------------

def _config(args) -> dict:
    cfg = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}") from None
    for key, value in vars(args).items():
        if value is not None and key not in _NOT_CONFIG:
            cfg[key] = value
    return cfg


_NOT_CONFIG = {"func", "config", "out", "dataset", "synth", "command", "cmdline"}
_DEFAULTS = dict(classes=10, samples_per_class=50, context=4, length=20, noise=0.3,
                 hidden=8, window=6, epochs=100, lr=1e-4, seed=0, mlp_hidden=30,
                 split="holdout:0.6")


def _load_dataset(args, cfg):
    if args.dataset:
        try:
            ds = read_dataset_csv(args.dataset, args.length)
        except OSError as exc:
            raise UsageError(str(exc)) from None
    else:
        ds = synth_dataset(cfg["classes"], cfg["samples_per_class"], cfg["context"],
                           cfg["length"], cfg["seed"], cfg["noise"])
    if ds.n_classes < 2:
        raise DatasetError("dataset needs at least two classes")
    if ds.length < cfg["window"]:
        raise DatasetError(f"sequences of {ds.length} frames are shorter than window "
                           f"{cfg['window']}")
    return ds


def _train_both(ds, cfg):
    results = {}
    for mode in Mode:
        model = init_model(ds.context, cfg["hidden"], cfg["window"], cfg["seed"])
        config = TrainConfig(cfg["epochs"], cfg["lr"], cfg["seed"], mode)
        results[mode] = train(model, ds.x, config)
    return results


def cmd_train(args) -> int:
    cfg = {**_DEFAULTS, **_config(args)}
    ds = _load_dataset(args, cfg)
    results = _train_both(ds, cfg)
    with _output(args.out) as out:
        csv_out = CSVOut(out, ["mode", "epoch", "loss"], cfg["seed"], args.cmdline)
        for mode, res in results.items():
            csv_out.row(mode=mode.value, epoch=0, loss=res.initial_loss)
            for epoch, loss in enumerate(res.losses, start=1):
                csv_out.row(mode=mode.value, epoch=epoch, loss=loss)
    return 0


def cmd_classify(args) -> int:
    cfg = {**_DEFAULTS, **_config(args)}
    split = cfg["split"]
    if isinstance(split, str):
        split = _split(split)
    split = type(split)(**{**split.__dict__, "seed": cfg["seed"]})
    ds = _load_dataset(args, cfg)
    results = _train_both(ds, cfg)
    with _output(args.out) as out:
        csv_out = CSVOut(out, ["mode", "fold", "error", "initial_loss", "final_loss"],
                         cfg["seed"], args.cmdline)
        for mode, res in results.items():
            feats = encode_features(res.model, ds.x)
            outcome = train_classifier(feats, ds.labels, split, ds.n_classes,
                                       hidden=cfg["mlp_hidden"], seed=cfg["seed"])
            for fold, err in enumerate(outcome.fold_errors):
                csv_out.row(mode=mode.value, fold=fold, error=err)
            csv_out.row(mode=mode.value, fold="mean", error=outcome.error,
                        initial_loss=res.initial_loss, final_loss=res.losses[-1])
    return 0


# -- gen-data -------------------------------------------------------------

def cmd_gen_data(args) -> int:
    cfg = {**_DEFAULTS, **_config(args)}
    ds = synth_dataset(cfg["classes"], cfg["samples_per_class"], cfg["context"],
                       cfg["length"], cfg["seed"], cfg["noise"])
    with _output(args.out) as out:
        out.write(provenance(cfg["seed"], args.cmdline))
        write_dataset_csv(ds, out)
    return 0


# -- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deepshift",
        description="Streaming temporal convolution with cached activations.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed_default=None):
        p.add_argument("--seed", type=int, default=seed_default)
        p.add_argument("--out", help="output CSV path (default: stdout)")

    p = sub.add_parser("verify", help="check streaming against naive evaluation")
    p.add_argument("--model", required=True)
    p.add_argument("--steps", type=int, default=200)
    common(p, 0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="time naive vs. streaming evaluation")
    p.add_argument("--config", help="JSON sweep description")
    common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("count", help="operation-count reconciliation report")
    p.add_argument("--n", type=_range, default=_range("1:4"))
    p.add_argument("--t", type=_range, default=_range("1:8"))
    p.add_argument("--w", type=_range, default=_range("1:4"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_count)

    def data_opts(p):
        p.add_argument("--config", help="JSON file with option defaults")
        p.add_argument("--dataset", help="dataset CSV (default: synthetic data)")
        p.add_argument("--synth", action="store_true", help="use the synthetic generator")
        p.add_argument("--classes", type=int)
        p.add_argument("--samples-per-class", type=int)
        p.add_argument("--context", type=int)
        p.add_argument("--length", type=int)
        p.add_argument("--noise", type=float)
        common(p)

    def model_opts(p):
        p.add_argument("--hidden", type=int, help="hidden channels of the encoder")
        p.add_argument("--window", type=int)
        p.add_argument("--epochs", type=int)
        p.add_argument("--lr", type=float)

    p = sub.add_parser("train", help="train auto-encoders in both modes, emit loss traces")
    data_opts(p)
    model_opts(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", help="train auto-encoders and an MLP, emit error rates")
    data_opts(p)
    model_opts(p)
    p.add_argument("--split", type=_split, help="holdout[:FRAC] or kfold[:K]")
    p.add_argument("--mlp-hidden", type=int)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("gen-data", help="write a synthetic dataset CSV")
    data_opts(p)
    p.set_defaults(func=cmd_gen_data)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(argv)
    args.cmdline = ["deepshift", *argv]
    if getattr(args, "synth", False) and getattr(args, "dataset", None):
        parser.error("--synth and --dataset are mutually exclusive")
    try:
        return args.func(args)
    except (UsageError, ModelFileError, DatasetError, InvalidSplitError,
            InvalidInputError) as exc:
        print(f"deepshift {args.command}: {exc}", file=sys.stderr)
        return 2
    except TrainingDivergedError as exc:
        print(f"deepshift {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

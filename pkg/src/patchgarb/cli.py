"""Command-line entry point: ``patchgarb <subcommand> [flags]``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import kernels
from .data import SplitSpec, scan_dataset, split, synth_dataset
from .errors import DataError, NumericError, PatchGarbError
from .harness import (REFERENCE_MATRIX, TEST_VARIANTS, TRAIN_VARIANTS, ExperimentConfig, Manifest,
                      build_eval_variant, cross_eval, emit_report, evaluate, load_config,
                      replay_manifest, run_cross_evaluation, run_experiment)
from .harness.evaluation import variant_transform
from .image import AugmentParams, affine_augment, encode_png, resize_bilinear
from .nn import ArchConfig, build_model, build_table1_model, checkpoint_load
from .nn.gradcheck import run_suite
from .nn.table1 import compare_to_table1
from .rng import derive_seed

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("patchgarb")

PREPROCESS_OPS = {
    "shuffle4": "shuffled_4",
    "shuffle32": "shuffled_32",
    "flip": "flipped",
    "scale": "scaled",
    "augment": "augmented",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


class _ErrorCounter(logging.Handler):
    def __init__(self):
        super().__init__(logging.ERROR)
        self.count = 0

    def emit(self, record):
        self.count += 1


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(",") if t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _name_list(choices):
    def parse(text: str) -> list[str]:
        names = [t for t in text.split(",") if t]
        bad = [n for n in names if n not in choices]
        if bad:
            raise argparse.ArgumentTypeError(f"unknown names {bad}; choose from {list(choices)}")
        return names
    return parse


def _add_experiment_flags(p: argparse.ArgumentParser):
    d = ExperimentConfig()
    g = p.add_argument_group("experiment (override config file values)")
    g.add_argument("--config", type=Path, help="INI config file (default: built-in defaults)")
    g.add_argument("--experiment", help="section name in --config to use (default: first)")
    g.add_argument("--data", dest="dataset_root", help=f"dataset root (default: {d.dataset_root})")
    g.add_argument("--out", dest="out_dir", help=f"output directory (default: {d.out_dir})")
    g.add_argument("--epochs", type=int, help=f"training epochs (default: {d.epochs})")
    g.add_argument("--batch-size", type=int, help=f"batch size (default: {d.batch_size})")
    g.add_argument("--optimizer", choices=["adam", "sgd_momentum"],
                   help=f"optimizer (default: {d.optimizer})")
    g.add_argument("--lr", dest="learning_rate", type=float,
                   help=f"learning rate (default: {d.learning_rate})")
    g.add_argument("--init-seed", type=int, help=f"weight init seed (default: {d.init_seed})")
    g.add_argument("--data-seed", type=int,
                   help=f"split and batch-order seed (default: {d.data_seed})")
    g.add_argument("--transform-seed", type=int,
                   help=f"training transform seed (default: {d.transform_seed})")
    g.add_argument("--val-fraction", type=float,
                   help=f"validation fraction (default: {d.val_fraction})")
    g.add_argument("--no-stratify", dest="stratified", action="store_const", const=False,
                   help="plain instead of per-class split (default: stratified)")
    g.add_argument("--hw", dest="input_hw", type=int,
                   help=f"input height/width in pixels (default: {d.input_hw})")
    g.add_argument("--conv-widths", type=_int_list,
                   help="conv stage widths, comma separated (default: 32,32,64,64,128,128)")
    g.add_argument("--dense-widths", type=_int_list,
                   help="hidden dense widths, comma separated (default: 128,32)")
    g.add_argument("--no-cache", dest="cache_images", action="store_const", const=False,
                   help="decode images every epoch instead of caching (default: cache)")


def _experiment_config(args, **extra) -> ExperimentConfig:
    base = ExperimentConfig()
    if args.config is not None:
        configs = load_config(args.config)
        if args.experiment:
            matches = [c for c in configs if c.train_variant == args.experiment]
            if not matches:
                raise UsageError(f"no experiment {args.experiment!r} in {args.config}")
            base = matches[0]
        else:
            base = configs[0]
    names = {f.name for f in fields(ExperimentConfig)}
    overrides = {k: v for k, v in vars(args).items() if k in names}
    overrides.update(extra)
    return base.with_overrides(**overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="patchgarb", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("preprocess", help="materialise a transformed copy of an image tree")
    p.add_argument("--in", dest="input", type=Path, required=True, help="input dataset root")
    p.add_argument("--out", type=Path, required=True, help="output root")
    p.add_argument("--op", choices=sorted(PREPROCESS_OPS), required=True, help="transform")
    p.add_argument("--seed", type=int, default=0, help="per-image seed base (default: 0)")
    p.add_argument("--hw", type=int, default=224, help="resize target (default: 224)")

    p = sub.add_parser("train", help="train one variant (Experiment A, B or C)")
    p.add_argument("--variant", dest="train_variant", choices=TRAIN_VARIANTS,
                   help="training variant (default: original)")
    _add_experiment_flags(p)

    p = sub.add_parser("eval", help="accuracy of one checkpoint on one test variant")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--data", type=Path, required=True, help="dataset root")
    p.add_argument("--variant", choices=TEST_VARIANTS, default="original",
                   help="test variant (default: original)")
    p.add_argument("--variant-seed", type=int, default=0, help="(default: 0)")
    p.add_argument("--val-only", action="store_true",
                   help="evaluate the validation split only (default: every image)")
    p.add_argument("--val-fraction", type=float, default=0.1, help="(default: 0.1)")
    p.add_argument("--data-seed", type=int, default=0, help="(default: 0)")

    p = sub.add_parser("cross-eval", help="train-variant x test-variant accuracy matrix")
    p.add_argument("--checkpoints", help="name=path pairs, comma separated; "
                   "omit to train every --train-variants model first")
    p.add_argument("--replay", type=Path, help="re-run a manifest.txt")
    p.add_argument("--train-variants", type=_name_list(TRAIN_VARIANTS),
                   default=list(TRAIN_VARIANTS), help="(default: all four)")
    p.add_argument("--test-variants", type=_name_list(TEST_VARIANTS),
                   default=list(TEST_VARIANTS), help="(default: all five)")
    p.add_argument("--variant-seed", type=int, default=0, help="(default: 0)")
    p.add_argument("--flip-axis", choices=["horizontal", "vertical"], default="horizontal",
                   help="axis of the flipped test variant (default: horizontal)")
    p.add_argument("--show-reference", action="store_true",
                   help="also print the published reference matrix")
    _add_experiment_flags(p)

    p = sub.add_parser("param-check", help="verify parameter counts against the layer table")
    p.add_argument("--toy", action="store_true", help="print counts for a toy build (no oracle)")
    p.add_argument("--hw", type=int, default=32, help="toy input size (default: 32)")
    p.add_argument("--classes", type=int, default=3, help="toy class count (default: 3)")
    p.add_argument("--corrupt-layer", metavar="NAME",
                   help="test hook: add one spurious bias entry to layer NAME")

    p = sub.add_parser("grad-check", help="finite-difference check of every backward pass")
    p.add_argument("--seed", type=int, default=0, help="(default: 0)")
    p.add_argument("--tolerance", type=float, default=2e-2,
                   help="max relative error (default: 0.02)")
    p.add_argument("--corrupt-conv", action="store_true",
                   help="test hook: perturb one conv weight gradient")

    p = sub.add_parser("synth", help="write a synthetic class-separable dataset")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, default=1, help="(default: 1)")
    p.add_argument("--per-class", type=int, default=20, help="(default: 20)")
    p.add_argument("--hw", type=int, default=32, help="(default: 32)")
    p.add_argument("--classes", type=int, default=3, help="(default: 3)")
    return parser


# -- subcommands --------------------------------------------------------------

def cmd_preprocess(args) -> int:
    index = scan_dataset(args.input)
    variant = PREPROCESS_OPS[args.op]
    params = AugmentParams()
    for i in range(len(index)):
        sample = resize_bilinear(index.load(i), args.hw, args.hw)
        if variant == "augmented":
            sample = affine_augment(sample, params, derive_seed(args.seed, variant,
                                                                sample.source_id))
        else:
            sample = variant_transform(sample, variant, args.seed)
        rel = Path(index.entries[i][0])
        encode_png(sample, args.out / rel.parent / f"{rel.stem}.png")
    print(f"wrote {len(index)} images to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _experiment_config(args)
    report = run_experiment(cfg)
    out = Path(cfg.out_dir)
    (out / f"metrics_{cfg.train_variant}.csv").write_text(report.metrics_csv())
    manifest = Manifest([cfg], [], 0)
    (out / cfg.train_variant / "manifest.txt").write_text(manifest.to_text())
    last = report.epochs[-1]
    print(f"{cfg.train_variant}: {len(report.epochs)} epochs, {report.steps} steps, "
          f"final train acc {last.train_accuracy:.4f}, best val acc "
          f"{report.best_val_accuracy:.4f} (epoch {report.best_epoch})")
    print(f"best checkpoint: {report.best_checkpoint}")
    return EXIT_OK


def cmd_eval(args) -> int:
    model = checkpoint_load(args.checkpoint)
    index = scan_dataset(args.data)
    if args.val_only:
        _, index = split(index, SplitSpec(args.val_fraction, args.data_seed))
    es = build_eval_variant(index, args.variant, args.variant_seed, model.arch.input_hw)
    result = evaluate(model, es)
    print(f"{result.accuracy:.4f}")
    for name, acc in zip(index.classes, result.per_class):
        print(f"  {name}: {acc:.4f}")
    print("confusion (rows true, cols predicted):")
    print(np.array2string(result.confusion))
    return EXIT_OK


def _parse_checkpoints(text: str) -> dict[str, Path]:
    out = {}
    for item in filter(None, text.split(",")):
        name, sep, path = item.partition("=")
        if not sep:
            raise UsageError(f"--checkpoints entry {item!r} is not name=path")
        out[name] = Path(path)
    return out


def cmd_cross_eval(args) -> int:
    if args.replay:
        matrix, _, _ = replay_manifest(args.replay, out_dir=getattr(args, "out_dir", None))
    elif args.checkpoints:
        cfg = _experiment_config(args)
        ckpts = _parse_checkpoints(args.checkpoints)
        index = scan_dataset(cfg.dataset_root)
        _, val = split(index, SplitSpec(cfg.val_fraction, cfg.data_seed, cfg.stratified))
        hw = None
        for path in ckpts.values():
            if path.exists():
                hw = checkpoint_load(path).arch.input_hw
                break
        eval_sets = {v: build_eval_variant(val, v, args.variant_seed, hw or cfg.input_hw,
                                           flip_axis=args.flip_axis)
                     for v in args.test_variants}
        matrix = cross_eval(ckpts, eval_sets)
        emit_report(matrix, [], cfg.out_dir)
    else:
        cfg = _experiment_config(args)
        matrix, _, _ = run_cross_evaluation(cfg, args.train_variants, args.test_variants,
                                            args.variant_seed, args.flip_axis)
    print(matrix.format_table())
    if args.show_reference:
        print("\nreference (full corpus, 200 epochs):")
        print(REFERENCE_MATRIX.format_table())
    if matrix.gaps:
        log.error("missing checkpoints for rows: %s", ", ".join(matrix.gaps))
    return EXIT_OK


def cmd_param_check(args) -> int:
    if args.toy:
        model = build_model(ArchConfig.toy(args.classes, args.hw), seed=0)
    else:
        model = build_table1_model(6, 224)
    if args.corrupt_layer:
        try:
            layer = model.layer(args.corrupt_layer)
        except KeyError:
            raise UsageError(f"no layer named {args.corrupt_layer!r}") from None
        key = "bias" if "bias" in layer.params else next(iter(layer.params), None)
        if key is None:
            layer.params["bias"] = np.zeros(1, np.float32)
            layer.trainable = ("bias",)
        else:
            layer.params[key] = np.zeros(layer.params[key].size + 1, np.float32)

    print(f"{'Layer (type)':<45}{'Output Shape':<24}{'Param #':>10}")
    print("=" * 79)
    for row in model.summary():
        print(f"{row.display:<45}{str(row.output_shape):<24}{row.params:>10,}")
    print("=" * 79)
    total, trainable, non_trainable = model.param_counts()
    print(f"Total params: {total:,}")
    print(f"Trainable params: {trainable:,}")
    print(f"Non-trainable params: {non_trainable:,}")
    if args.toy:
        return EXIT_OK
    problems = compare_to_table1(model)
    if problems:
        for p in problems:
            print(f"MISMATCH: {p}")
        return EXIT_NUMERIC
    print("all counts match the reference table")
    return EXIT_OK


def cmd_grad_check(args) -> int:
    results = run_suite(args.seed, corrupt_conv=args.corrupt_conv)
    worst = max(results, key=lambda r: r.max_rel_error)
    for r in results:
        status = "ok" if r.passed(args.tolerance) else "FAIL"
        print(f"{r.name:<12} max rel err {r.max_rel_error:.3e} over {r.coords} coords  {status}")
    if not worst.passed(args.tolerance):
        print(f"tolerance {args.tolerance:g} exceeded; worst coordinate: {worst.name} {worst.worst}")
        return EXIT_NUMERIC
    print(f"all checks below {args.tolerance:g}")
    return EXIT_OK


def cmd_synth(args) -> int:
    index = synth_dataset(args.out, args.seed, args.per_class, args.hw, args.classes)
    print(f"wrote {len(index)} images in {len(index.classes)} classes to {args.out}")
    return EXIT_OK


COMMANDS = {
    "preprocess": cmd_preprocess,
    "train": cmd_train,
    "eval": cmd_eval,
    "cross-eval": cmd_cross_eval,
    "param-check": cmd_param_check,
    "grad-check": cmd_grad_check,
    "synth": cmd_synth,
}


def main(argv: list[str] | None = None) -> int:
    counter = _ErrorCounter()
    root = logging.getLogger()
    root.addHandler(counter)
    try:
        try:
            args = build_parser().parse_args(argv)
        except UsageError as exc:
            print(exc, file=sys.stderr)
            return EXIT_USAGE
        except SystemExit as exc:  # --help
            return int(exc.code or 0)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        log.info("kernel backend: %s", kernels.BACKEND)
        try:
            code = COMMANDS[args.command](args)
        except UsageError as exc:
            print(f"usage error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        except NumericError as exc:
            print(f"numeric failure: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        except (DataError, OSError) as exc:
            print(f"data error: {exc}", file=sys.stderr)
            return EXIT_DATA
        except PatchGarbError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_DATA
        except ValueError as exc:
            print(f"usage error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        if code == EXIT_OK and counter.count:
            return EXIT_DATA
        return code
    finally:
        root.removeHandler(counter)


if __name__ == "__main__":
    sys.exit(main())

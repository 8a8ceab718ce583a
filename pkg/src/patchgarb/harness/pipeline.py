"""Full cross-evaluation runs, report files and manifest replay."""
from __future__ import annotations

import io
import logging
from dataclasses import dataclass, replace
from pathlib import Path

from .. import kernels
from ..data import dataset_fingerprint
from .config import TEST_VARIANTS, TRAIN_VARIANTS, ExperimentConfig, _parser, load_config
from .evaluation import EvalMatrix, build_eval_variant, cross_eval
from .training import TrainReport, prepare_split, run_experiment

log = logging.getLogger(__name__)


@dataclass
class Manifest:
    """Everything needed to replay a cross-evaluation bit for bit."""

    configs: list[ExperimentConfig]
    test_variants: list[str]
    variant_seed: int
    fingerprint: str = ""
    flip_axis: str = "horizontal"

    def to_text(self) -> str:
        parser = _parser()
        parser["run"] = {"dataset_fingerprint": self.fingerprint,
                         "kernel_backend": kernels.BACKEND}
        parser["eval"] = {"test_variants": ",".join(self.test_variants),
                          "variant_seed": str(self.variant_seed),
                          "flip_axis": self.flip_axis}
        for cfg in self.configs:
            parser[f"experiment.{cfg.train_variant}"] = cfg.to_section()
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    @classmethod
    def read(cls, path) -> "Manifest":
        parser = _parser()
        if not parser.read(Path(path), encoding="utf-8"):
            raise FileNotFoundError(path)
        try:
            ev = parser["eval"]
            fingerprint = parser["run"].get("dataset_fingerprint", "")
        except KeyError as exc:
            raise ValueError(f"manifest {path} lacks section {exc}") from exc
        return cls(load_config(path), [v for v in ev["test_variants"].split(",") if v],
                   int(ev["variant_seed"]), fingerprint, ev.get("flip_axis", "horizontal"))


def emit_report(matrix: EvalMatrix, reports: list[TrainReport], out_dir,
                manifest: Manifest | None = None) -> dict[str, Path]:
    """Write matrix.csv, metrics_<variant>.csv and manifest.txt."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = {"matrix": out_dir / "matrix.csv"}
    written["matrix"].write_text(matrix.to_csv(), encoding="utf-8", newline="\n")
    for report in reports:
        path = out_dir / f"metrics_{report.variant}.csv"
        path.write_text(report.metrics_csv(), encoding="utf-8", newline="\n")
        written[f"metrics_{report.variant}"] = path
    if manifest is not None:
        written["manifest"] = out_dir / "manifest.txt"
        written["manifest"].write_text(manifest.to_text(), encoding="utf-8", newline="\n")
    return written


def run_cross_evaluation(base: ExperimentConfig,
                         train_variants=TRAIN_VARIANTS,
                         test_variants=TEST_VARIANTS,
                         variant_seed: int = 0,
                         flip_axis: str = "horizontal",
                         configs: list[ExperimentConfig] | None = None,
                         ) -> tuple[EvalMatrix, list[TrainReport], Manifest]:
    """Train every requested variant, then evaluate all of them on every test variant.

    All runs share one train/validation split (from ``base``); evaluation
    variants are built once from validation entries only.
    """
    if configs is None:
        configs = [replace(base, train_variant=v) for v in train_variants]
    configs = [replace(c, dataset_root=str(Path(c.dataset_root).resolve())) for c in configs]
    train_index, val_index = prepare_split(configs[0])
    fingerprint = dataset_fingerprint(train_index) + ":" + dataset_fingerprint(val_index)
    cache: dict | None = {} if configs[0].cache_images else None

    reports = [run_experiment(cfg, train_index, val_index, cache=cache) for cfg in configs]
    eval_sets = {v: build_eval_variant(val_index, v, variant_seed, configs[0].input_hw, cache,
                                       flip_axis)
                 for v in test_variants}
    out_dir = Path(configs[0].out_dir)
    for es in eval_sets.values():
        es.save(out_dir / "eval")
    matrix = cross_eval({r.variant: r.best_checkpoint for r in reports}, eval_sets)
    matrix.metadata.update(fingerprint=fingerprint, variant_seed=str(variant_seed),
                           epochs=",".join(str(c.epochs) for c in configs))
    manifest = Manifest(configs, list(test_variants), variant_seed, fingerprint, flip_axis)
    emit_report(matrix, reports, out_dir, manifest)
    return matrix, reports, manifest


def replay_manifest(path, out_dir=None) -> tuple[EvalMatrix, list[TrainReport], Manifest]:
    """Re-run the cross-evaluation recorded in a manifest.

    ``out_dir`` redirects outputs so the original run is not overwritten.
    """
    manifest = Manifest.read(path)
    configs = manifest.configs
    if out_dir is not None:
        configs = [replace(c, out_dir=str(out_dir)) for c in configs]
    matrix, reports, new_manifest = run_cross_evaluation(
        configs[0], test_variants=manifest.test_variants, variant_seed=manifest.variant_seed,
        flip_axis=manifest.flip_axis, configs=configs)
    if manifest.fingerprint and new_manifest.fingerprint != manifest.fingerprint:
        log.warning("dataset fingerprint differs from the manifest; results may not match")
    return matrix, reports, new_manifest

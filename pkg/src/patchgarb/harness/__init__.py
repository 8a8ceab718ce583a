from .config import TEST_VARIANTS, TRAIN_VARIANTS, ExperimentConfig, load_config
from .evaluation import (REFERENCE_MATRIX, EvalMatrix, EvalResult, EvalSet, build_eval_variant,
                         cross_eval, evaluate)
from .pipeline import Manifest, emit_report, replay_manifest, run_cross_evaluation
from .training import TrainingAborted, TrainReport, run_experiment

__all__ = [
    "REFERENCE_MATRIX", "TEST_VARIANTS", "TRAIN_VARIANTS", "EvalMatrix", "EvalResult", "EvalSet",
    "ExperimentConfig", "Manifest", "TrainReport", "TrainingAborted", "build_eval_variant",
    "cross_eval", "emit_report", "evaluate", "load_config", "replay_manifest",
    "run_cross_evaluation", "run_experiment",
]

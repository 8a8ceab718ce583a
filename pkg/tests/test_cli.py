import subprocess
import sys

import numpy as np
import pytest

from harness_util import constant_model
from patchgarb.cli import build_parser, main
from patchgarb.data import scan_dataset, synth_dataset
from patchgarb.harness import EvalMatrix
from patchgarb.nn import checkpoint_save


def run(capsys, *argv):
    code = main(list(map(str, argv)))
    out = capsys.readouterr()
    return code, out.out, out.err


def tree_bytes(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*.png"))}


class TestExitCodes:
    def test_no_command(self, capsys):
        assert run(capsys)[0] == 1

    def test_unknown_flag(self, capsys):
        assert run(capsys, "param-check", "--bogus")[0] == 1

    def test_bad_choice(self, capsys):
        assert run(capsys, "train", "--variant", "rotated")[0] == 1

    def test_missing_data(self, capsys, tmp_path):
        code, _, err = run(capsys, "preprocess", "--in", tmp_path / "none", "--out", tmp_path / "o",
                           "--op", "flip")
        assert code == 2 and "data error" in err

    def test_invalid_config_value(self, capsys, tmp_path):
        assert run(capsys, "train", "--data", tmp_path, "--epochs", "0")[0] == 1

    @pytest.mark.parametrize("command", ["preprocess", "train", "eval", "cross-eval",
                                         "param-check", "grad-check", "synth"])
    def test_help_lists_defaults(self, capsys, command):
        code, out, _ = run(capsys, command, "--help")
        assert code == 0 and "usage:" in out
        sub = build_parser()._subparsers._group_actions[0].choices[command]
        for action in sub._actions:
            for flag in action.option_strings:
                assert flag in out
            if action.default not in (None, False, "==SUPPRESS==") and action.option_strings \
                    and action.dest != "help":
                assert "default" in (action.help or "")


class TestParamCheck:
    def test_default_build(self, capsys):
        code, out, _ = run(capsys, "param-check")
        assert code == 0
        assert "Total params: 440,966" in out
        assert "Trainable params: 439,942" in out
        assert "Non-trainable params: 1,024" in out
        assert "dense_2 (Dense)" in out

    def test_corrupted_bias(self, capsys):
        code, out, _ = run(capsys, "param-check", "--corrupt-layer", "conv2d_3")
        assert code == 3
        first = [l for l in out.splitlines() if l.startswith("MISMATCH")][0]
        assert "conv2d_3" in first and "36929" in first

    def test_unknown_layer(self, capsys):
        assert run(capsys, "param-check", "--corrupt-layer", "nope")[0] == 1

    def test_toy(self, capsys):
        code, out, _ = run(capsys, "param-check", "--toy", "--hw", "16")
        assert code == 0 and "Total params" in out


class TestGradCheck:
    def test_default(self, capsys):
        code, out, _ = run(capsys, "grad-check")
        assert code == 0 and "toy_model" in out

    def test_tiny_tolerance(self, capsys):
        code, out, _ = run(capsys, "grad-check", "--tolerance", "1e-9")
        assert code == 3 and "worst coordinate" in out

    def test_corrupt_conv(self, capsys):
        code, out, _ = run(capsys, "grad-check", "--corrupt-conv")
        assert code == 3 and "conv2d" in out.splitlines()[-1]


@pytest.fixture(scope="module")
def src(tmp_path_factory):
    root = tmp_path_factory.mktemp("src")
    synth_dataset(root, seed=2, per_class=3, hw=32, classes=2)
    return root


class TestPreprocess:
    def test_shuffle_deterministic(self, capsys, src, tmp_path):
        for name in ("a", "b"):
            assert run(capsys, "preprocess", "--in", src, "--out", tmp_path / name,
                       "--op", "shuffle4", "--seed", 7, "--hw", 32)[0] == 0
        a, b = tree_bytes(tmp_path / "a"), tree_bytes(tmp_path / "b")
        assert a == b and len(a) == 6

    def test_flip_twice(self, capsys, src, tmp_path):
        run(capsys, "preprocess", "--in", src, "--out", tmp_path / "f1", "--op", "flip", "--hw", 32)
        run(capsys, "preprocess", "--in", tmp_path / "f1", "--out", tmp_path / "f2", "--op", "flip",
            "--hw", 32)
        assert tree_bytes(tmp_path / "f2") == tree_bytes(src)

    def test_shuffle32_histograms(self, capsys, src, tmp_path):
        run(capsys, "preprocess", "--in", src, "--out", tmp_path / "s", "--op", "shuffle32",
            "--hw", 64)
        run(capsys, "preprocess", "--in", src, "--out", tmp_path / "r", "--op", "flip", "--hw", 64)
        shuffled, flipped = scan_dataset(tmp_path / "s"), scan_dataset(tmp_path / "r")
        for i in range(len(shuffled)):
            a, b = shuffled.load(i).pixels, flipped.load(i).pixels
            np.testing.assert_array_equal(np.sort(a.ravel()), np.sort(b.ravel()))

    @pytest.mark.parametrize("op", ["scale", "augment"])
    def test_other_ops(self, capsys, src, tmp_path, op):
        assert run(capsys, "preprocess", "--in", src, "--out", tmp_path / op, "--op", op,
                   "--hw", 32)[0] == 0
        assert len(tree_bytes(tmp_path / op)) == 6


TOY = ["--hw", 32, "--conv-widths", "8,16", "--dense-widths", "32,16", "--val-fraction", 0.2,
       "--batch-size", 8]


class TestTrainEval:
    def test_train_epochs(self, capsys, synth_root, tmp_path):
        code, out, _ = run(capsys, "train", "--variant", "shuffled_4", "--epochs", 2,
                           "--data", synth_root, "--out", tmp_path, *TOY)
        assert code == 0 and "2 epochs" in out
        rows = (tmp_path / "metrics_shuffled_4.csv").read_text().splitlines()
        assert len(rows) == 3
        assert (tmp_path / "shuffled_4" / "best.pgck").exists()
        assert (tmp_path / "shuffled_4" / "manifest.txt").exists()

    def test_eval_constant_model(self, capsys, tmp_path):
        data = tmp_path / "six"
        synth_dataset(data, seed=5, per_class=2, hw=16, classes=6)
        ckpt = checkpoint_save(constant_model(6, hw=16), tmp_path / "c0.pgck")
        code, out, _ = run(capsys, "eval", "--checkpoint", ckpt, "--data", data)
        assert code == 0 and out.splitlines()[0] == "0.1667"

    def test_eval_corrupt_checkpoint(self, capsys, synth_root, tmp_path):
        bad = tmp_path / "bad.pgck"
        bad.write_bytes(b"PGCK\x01")
        assert run(capsys, "eval", "--checkpoint", bad, "--data", synth_root)[0] == 2

    def test_cross_eval_from_checkpoints(self, capsys, synth_root, tmp_path):
        run(capsys, "train", "--variant", "original", "--epochs", 1, "--data", synth_root,
            "--out", tmp_path, *TOY)
        ckpt = tmp_path / "original" / "best.pgck"
        pairs = ",".join(f"{v}={ckpt}" for v in ("original", "augmented", "shuffled_4",
                                                 "shuffled_32"))
        code, out, _ = run(capsys, "cross-eval", "--checkpoints", pairs, "--data", synth_root,
                           "--out", tmp_path / "x", "--show-reference", *TOY)
        assert code == 0 and "0.7600" in out
        matrix = EvalMatrix.from_csv((tmp_path / "x" / "matrix.csv").read_text())
        assert len(matrix.rows) == 4 and len(matrix.cols) == 5

    def test_cross_eval_gap_is_error_exit(self, capsys, synth_root, tmp_path):
        run(capsys, "train", "--variant", "original", "--epochs", 1, "--data", synth_root,
            "--out", tmp_path, *TOY)
        pairs = f"original={tmp_path / 'original' / 'best.pgck'},augmented={tmp_path / 'none.pgck'}"
        code, _, _ = run(capsys, "cross-eval", "--checkpoints", pairs, "--data", synth_root,
                         "--out", tmp_path / "x", "--test-variants", "original", *TOY)
        assert code == 2
        assert "NA" in (tmp_path / "x" / "matrix.csv").read_text()

    def test_bad_checkpoint_pairs(self, capsys, synth_root):
        assert run(capsys, "cross-eval", "--checkpoints", "nopath", "--data", synth_root)[0] == 1


def test_synth(capsys, tmp_path):
    code, out, _ = run(capsys, "synth", "--out", tmp_path, "--per-class", 2, "--hw", 8)
    assert code == 0 and len(list(tmp_path.rglob("*.png"))) == 6


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "patchgarb.cli", "param-check"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "440,966" in proc.stdout

"""
Tests for the baselines, split evaluation, feature export and commands
"""
import json
import os
import tempfile
from io import StringIO

import numpy as np
import pandas as pd
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, tag

from core.models import ImageSample
from core.synthesis import synth_toy_dataset
from evaluation.baselines import (
    baseline_predict,
    largest_component,
    otsu_threshold,
    region_grow,
    threshold_segment,
)
from evaluation.metrics import dsc
from evaluation.runner import MODEL_METHOD, evaluate_split, export_features
from otfa.tests.test_experiment import tiny_model
from segmenter.checkpoint import save_checkpoint
from training.tests.test_loop import SMALL_MODEL, toy_triplets


def toy_slice(shape="disk", seed=0):
    record = synth_toy_dataset(1, [shape], 64, seed,
                               slices_per_scan=1).records[0]
    return record.image.pixels, record.mask.binary(1)


class BaselineTests(SimpleTestCase):
    """Test the classical prompt-mode baselines."""

    def test_otsu_separates_two_levels(self):
        """Test Otsu separates two intensity levels."""
        values = np.concatenate([np.full(100, 0.2), np.full(50, 0.8)])

        threshold = otsu_threshold(values)

        self.assertGreater(threshold, 0.2)
        self.assertLess(threshold, 0.8)

    def test_largest_component(self):
        """Test only the largest component is kept."""
        binary = np.zeros((6, 6), np.uint8)
        binary[0, 0] = 1
        binary[3:6, 3:6] = 1

        kept = largest_component(binary)

        self.assertEqual(kept.sum(), 9)
        self.assertEqual(kept[0, 0], 0)

    def test_threshold_finds_a_bright_shape(self):
        """Test threshold finds a bright shape."""
        pixels, gt = toy_slice()

        self.assertGreater(dsc(threshold_segment(pixels), gt), 0.9)

    def test_region_grows_from_a_foreground_point(self):
        """Test region grows from a foreground point."""
        pixels, gt = toy_slice(seed=3)
        point = tuple(np.argwhere(gt)[0])

        grown = region_grow(pixels, point)

        self.assertEqual(grown[point], 1)
        self.assertGreater(dsc(grown, gt), 0.8)

    def test_every_mode_predicts_a_mask(self):
        """Test every mode predicts a mask."""
        pixels, gt = toy_slice("ring", seed=1)
        for mode in ("none", "point", "tight_box", "loose_box"):
            prediction = baseline_predict(pixels, gt, mode, seed=2)
            self.assertEqual(prediction.shape, gt.shape)
            self.assertTrue(set(np.unique(prediction)) <= {0, 1})

    def test_unknown_mode_raises(self):
        """Test that unknown mode raises."""
        pixels, gt = toy_slice()
        with self.assertRaises(ValueError):
            baseline_predict(pixels, gt, "scribble")


class EvaluateSplitTests(SimpleTestCase):
    """Test evaluate_split with an untrained model."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.triplets = toy_triplets(self.tmp.name, split="validation")

    def tearDown(self):
        self.tmp.cleanup()

    def test_records_per_method(self):
        """Test one record per method and image."""
        methods = evaluate_split(tiny_model(), self.triplets,
                                 prompt_modes=["none", "tight_box"])

        self.assertEqual(list(methods), [MODEL_METHOD, "baseline (none)",
                                         "baseline (tight_box)"])
        for records in methods.values():
            self.assertEqual(len(records), 3)
            for record in records:
                self.assertGreaterEqual(record.dsc, 0.0)
                self.assertLessEqual(record.dsc, 1.0)
        self.assertEqual(methods["baseline (none)"][0].prompt_mode, "none")
        self.assertEqual([r.task for r in methods[MODEL_METHOD]],
                         ["disk", "ring", "disk"])

    def test_empty_split_raises(self):
        """Test that empty split raises."""
        with self.assertRaises(ValueError):
            evaluate_split(tiny_model(), self.triplets, split="tune")


class ExportFeaturesTests(SimpleTestCase):
    """Test export_features."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmp.name, "features.csv")
        rng = np.random.default_rng(0)
        self.images = [
            ImageSample(f"s{i}", "scan", "CT", rng.random((32, 32)))
            for i in range(3)
        ]

    def tearDown(self):
        self.tmp.cleanup()

    def test_one_row_per_image_in_order(self):
        """Test one row per image in order."""
        frame = export_features(tiny_model(), self.images, self.path)

        written = pd.read_csv(self.path)
        self.assertEqual(list(written.sample_id), ["s0", "s1", "s2"])
        self.assertEqual(list(written.columns[1:]),
                         [f"f{i}" for i in range(16)])
        self.assertEqual(len(frame), 3)

    def test_identical_images_give_identical_rows(self):
        """Test that identical images give identical rows."""
        twin = ImageSample("twin", "scan", "CT", self.images[0].pixels)

        frame = export_features(tiny_model(), [self.images[0], twin],
                                self.path)

        np.testing.assert_array_equal(frame.iloc[0, 1:].to_numpy(float),
                                      frame.iloc[1, 1:].to_numpy(float))

    def test_row_is_mean_pooled_grid(self):
        """Test each row is the mean-pooled grid."""
        model = tiny_model()

        frame = export_features(model, self.images[:1], self.path)

        expected = model.encode_image(self.images[0]).tokens.mean(dim=0)
        np.testing.assert_allclose(frame.iloc[0, 1:].to_numpy(float),
                                   expected.numpy(), rtol=1e-6)


class EvaluationCommandTests(SimpleTestCase):
    """Test the evaluate, export_features and config_reference commands."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.triplets = toy_triplets(self.tmp.name, split="validation")
        self.checkpoint = os.path.join(self.tmp.name, "model.ckpt")
        save_checkpoint(tiny_model(), self.checkpoint)
        self.config = os.path.join(self.tmp.name, "config.json")
        with open(self.config, "w") as handle:
            json.dump({"model": SMALL_MODEL,
                       "paths": {"work_dir": self.tmp.name}}, handle)

    def tearDown(self):
        self.tmp.cleanup()

    def test_evaluate_writes_report(self):
        """Test evaluate writes a report."""
        stdout = StringIO()

        call_command("evaluate", "--config", self.config, "--checkpoint",
                     self.checkpoint, "--triplets", self.triplets,
                     "--prompt-modes", "point", stdout=stdout)

        self.assertIn(f"{MODEL_METHOD}: mean DSC", stdout.getvalue())
        self.assertIn("baseline (point): mean DSC", stdout.getvalue())
        for name in ("records.csv", "report.csv", "summary.csv",
                     "report.txt"):
            self.assertTrue(os.path.exists(
                os.path.join(self.tmp.name, "eval", name)), name)

    def test_evaluate_without_checkpoint_exit_code(self):
        """Test evaluate without a checkpoint exits with code 3."""
        with self.assertRaises(CommandError) as raised:
            call_command("evaluate", "--config", self.config,
                         "--triplets", self.triplets, stdout=StringIO())

        self.assertEqual(raised.exception.returncode, 3)

    def test_export_features_from_triplets(self):
        """Test exporting features from a triplet file."""
        out = os.path.join(self.tmp.name, "features.csv")

        call_command("export_features", "--config", self.config,
                     "--checkpoint", self.checkpoint, "--triplets",
                     self.triplets, "--out", out, stdout=StringIO())

        self.assertEqual(len(pd.read_csv(out)), 3)

    def test_config_reference_lists_commands_and_keys(self):
        """Test config reference lists commands and keys."""
        out = os.path.join(self.tmp.name, "REFERENCE.md")

        call_command("config_reference", "--out", out, stdout=StringIO())

        with open(out) as handle:
            text = handle.read()
        for command in ("dataset_synth", "crd_build", "train", "infer",
                        "adapt", "evaluate", "report", "export_features",
                        "otfa_experiment", "config_reference"):
            self.assertIn(f"### {command}", text)
        self.assertIn("--vlm-endpoint", text)
        self.assertIn("| `train.learning_rate` | number | `0.001` |", text)
        self.assertIn("`describer.retries`", text)


@tag('slow')
class EndToEndTests(SimpleTestCase):
    """Toy pipeline from synthesis to report through the commands."""

    def test_toy_pipeline_reaches_high_dice(self):
        """Test best and last checkpoints both reach 0.90 validation DSC."""
        with tempfile.TemporaryDirectory() as work:
            config = os.path.join(work, "config.json")
            with open(config, "w") as handle:
                json.dump({"paths": {"work_dir": work},
                           "model": {"modalities": ["CT"]}}, handle)

            def run(*args):
                stdout = StringIO()
                call_command(*args, "--config", config, stdout=stdout)
                return stdout.getvalue()

            run("dataset_synth", "--scans", "20", "--classes", "disk",
                "ring")
            run("crd_build")
            run("train", "--epochs", "10")
            image = os.path.join(work, "dataset", "images",
                                 "scan_0000_s00.png")
            inferred = run("infer", "--image", image, "--class", "disk",
                           "--out", os.path.join(work, "mask.png"))
            run("evaluate", "--prompt-modes")
            reported = run("report", "--quiet")

            records = pd.read_csv(os.path.join(work, "eval", "records.csv"))
            model_dsc = records[records.method == MODEL_METHOD].dsc
            run("evaluate", "--checkpoint",
                os.path.join(work, "checkpoints", "last.ckpt"),
                "--out", os.path.join(work, "eval_last"))
            last = pd.read_csv(os.path.join(work, "eval_last",
                                            "records.csv"))
            last_dsc = last[last.method == MODEL_METHOD].dsc

        self.assertIn("foreground pixels:", inferred)
        self.assertIn(f"{MODEL_METHOD}: overall", reported)
        self.assertGreaterEqual(float(model_dsc.mean()), 0.90)
        self.assertGreaterEqual(float(last_dsc.mean()), 0.90)

"""
Tests for the toy dataset generator
"""
import os
import tempfile

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import UnknownShapeError
from core.io import load_record, read_manifest
from core.synthesis import render_shape, synth_toy_dataset


class SynthToyDatasetTests(SimpleTestCase):
    """Test synth_toy_dataset."""

    def test_single_disk_scan(self):
        """Test a single disk scan."""
        manifest = synth_toy_dataset(1, ["disk"], 32, seed=7)
        self.assertEqual(len(manifest.scan_ids()), 1)
        for record in manifest.records:
            self.assertEqual(record.shape["class"], "disk")
            foreground = np.argwhere(record.mask.labels == 1)
            self.assertGreater(len(foreground), 0)
            radius = record.shape["radius"] * record.shape["scale"]
            r0, c0 = record.shape["center"]
            distances = np.hypot(foreground[:, 0] - r0, foreground[:, 1] - c0)
            self.assertTrue(np.all(distances <= radius + 1e-9))

    def test_generation_is_deterministic(self):
        """Test that generation is deterministic."""
        first = synth_toy_dataset(3, ["disk", "crescent"], 32, seed=4)
        second = synth_toy_dataset(3, ["disk", "crescent"], 32, seed=4)
        for a, b in zip(first.records, second.records):
            np.testing.assert_array_equal(a.image.pixels, b.image.pixels)
            np.testing.assert_array_equal(a.mask.labels, b.mask.labels)

    def test_stored_parameters_reproduce_masks(self):
        """Regenerating each shape analytically gives the stored mask."""
        manifest = synth_toy_dataset(20, ["disk", "ring"], 64, seed=3)
        for record in manifest.records:
            label = record.mask.present_labels()[0]
            self.assertEqual(record.mask.categories[label],
                             record.shape["class"])
            expected = render_shape(record.shape, 64)
            np.testing.assert_array_equal(record.mask.labels == label,
                                          expected)

    def test_every_shape_class_draws_foreground(self):
        """Test every shape class draws foreground."""
        classes = ["disk", "rectangle", "ring", "crescent"]
        manifest = synth_toy_dataset(8, classes, 16, seed=0)
        for record in manifest.records:
            self.assertTrue(record.mask.labels.any(), record.sample_id)

    def test_slices_drift_in_size(self):
        """Test slices drift in size."""
        manifest = synth_toy_dataset(1, ["rectangle"], 64, seed=1,
                                     slices_per_scan=5)
        areas = [int(r.mask.labels.astype(bool).sum())
                 for r in manifest.records]
        self.assertEqual(areas, sorted(areas))
        self.assertEqual(len({r.scan_id for r in manifest.records}), 1)

    def test_intensities_brighter_inside(self):
        """Test intensities are brighter inside the shape."""
        manifest = synth_toy_dataset(2, ["disk"], 32, seed=9)
        for record in manifest.records:
            inside = record.mask.labels > 0
            pixels = record.image.pixels
            self.assertGreater(pixels[inside].mean(), pixels[~inside].mean())

    def test_unknown_shape_raises(self):
        """Test that unknown shape raises."""
        with self.assertRaises(UnknownShapeError):
            synth_toy_dataset(1, ["hexagon"], 32, seed=0)

    def test_invalid_sizes_raise(self):
        """Test that invalid sizes raise."""
        with self.assertRaises(ValueError):
            synth_toy_dataset(0, ["disk"], 32, seed=0)
        with self.assertRaises(ValueError):
            synth_toy_dataset(1, ["disk"], 8, seed=0)

    def test_written_dataset_reads_back(self):
        """Test that written dataset reads back."""
        with tempfile.TemporaryDirectory() as tmp:
            generated = synth_toy_dataset(2, ["ring"], 32, seed=2, out_dir=tmp)
            manifest = read_manifest(os.path.join(tmp, "manifest.jsonl"))

            self.assertEqual(len(manifest.records), len(generated.records))
            for original, record in zip(generated.records, manifest.records):
                image, mask = load_record(manifest, record)
                np.testing.assert_array_equal(mask.labels,
                                              original.mask.labels)
                self.assertEqual(image.scan_id, original.scan_id)

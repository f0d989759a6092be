"""
Tests for scan-level splitting
"""
import random

from django.test import SimpleTestCase, tag

from core.exceptions import SplitError
from core.models import SPLITS, DatasetManifest, SamplePair
from core.splitting import apportion, grouped_split


def create_manifest(n_scans, slices_per_scan=1, prefix="scan"):
    """Create and return a manifest with several slices per scan."""
    records = [
        SamplePair(
            sample_id=f"{prefix}{scan}_{s}",
            scan_id=f"{prefix}{scan}",
            modality="CT",
            image_ref="i.png",
            mask_ref="m.png",
        )
        for scan in range(n_scans)
        for s in range(slices_per_scan)
    ]
    return DatasetManifest(records=records)


def splits_by_scan(manifest):
    seen = {}
    for record in manifest.records:
        seen.setdefault(record.scan_id, set()).add(record.split)
    return seen


class ApportionTests(SimpleTestCase):
    """Test largest-remainder apportionment."""

    def test_exact_shares(self):
        """Test shares that divide exactly."""
        self.assertEqual(apportion(10, (0.8, 0.1, 0.1)), [8, 1, 1])

    def test_remainders_go_to_largest_fraction(self):
        """Test remainders go to the largest fraction."""
        self.assertEqual(apportion(7, (0.5, 0.3, 0.2)), [4, 2, 1])

    def test_counts_always_sum_to_total(self):
        """Test that counts always sum to total."""
        for total in range(1, 40):
            self.assertEqual(sum(apportion(total, (0.7, 0.2, 0.1))), total)

    def test_minimum_tops_up_empty_buckets(self):
        """Test buckets floored to zero borrow from the largest bucket."""
        self.assertEqual(apportion(3, (0.8, 0.1, 0.1), minimum=1),
                         [1, 1, 1])
        self.assertEqual(apportion(5, (0.8, 0.1, 0.1), minimum=1),
                         [3, 1, 1])

    def test_minimum_larger_than_total_raises(self):
        """Test a minimum the total cannot cover is rejected."""
        with self.assertRaises(ValueError):
            apportion(2, (0.8, 0.1, 0.1), minimum=1)


class GroupedSplitTests(SimpleTestCase):
    """Test grouped_split."""

    def test_ten_scans_split_eight_one_one(self):
        """Test ten scans split 8/1/1."""
        result = grouped_split(create_manifest(10), (0.8, 0.1, 0.1), seed=3)
        counts = [len(result.scan_ids(split)) for split in SPLITS]
        self.assertEqual(counts, [8, 1, 1])

    def test_same_seed_gives_identical_assignment(self):
        """Test that same seed gives identical assignment."""
        manifest = create_manifest(12, 3)
        first = grouped_split(manifest, (0.8, 0.1, 0.1), seed=11)
        second = grouped_split(manifest, (0.8, 0.1, 0.1), seed=11)
        self.assertEqual(
            [r.split for r in first.records],
            [r.split for r in second.records],
        )

    def test_assignment_ignores_record_order(self):
        """The split depends on sorted scan ids, not record order."""
        manifest = create_manifest(9, 2)
        shuffled = DatasetManifest(list(reversed(manifest.records)))
        first = grouped_split(manifest, (0.6, 0.2, 0.2), seed=1)
        second = grouped_split(shuffled, (0.6, 0.2, 0.2), seed=1)
        self.assertEqual(
            {r.sample_id: r.split for r in first.records},
            {r.sample_id: r.split for r in second.records},
        )

    def test_slices_of_a_scan_share_a_split(self):
        """Test that slices of a scan share a split."""
        result = grouped_split(create_manifest(5, 4), (0.6, 0.2, 0.2), seed=0)
        for scan_id, splits in splits_by_scan(result).items():
            self.assertEqual(len(splits), 1, scan_id)

    def test_record_order_is_preserved(self):
        """Test that record order is preserved."""
        manifest = create_manifest(6, 2)
        result = grouped_split(manifest, (0.5, 0.25, 0.25), seed=2)
        self.assertEqual(
            [r.sample_id for r in result.records],
            [r.sample_id for r in manifest.records],
        )

    def test_three_scans_fill_every_split(self):
        """Test three scans give one scan to each split."""
        result = grouped_split(create_manifest(3, 2), (0.8, 0.1, 0.1),
                               seed=0)
        counts = [len(result.scan_ids(split)) for split in SPLITS]
        self.assertEqual(counts, [1, 1, 1])

    def test_too_few_scans_raise(self):
        """Test that too few scans raise."""
        with self.assertRaises(SplitError):
            grouped_split(create_manifest(2, 5), (0.8, 0.1, 0.1), seed=0)

    def test_ratios_must_sum_to_one(self):
        """Test that ratios must sum to one."""
        with self.assertRaises(ValueError):
            grouped_split(create_manifest(10), (0.8, 0.1, 0.2), seed=0)

    def test_ratios_must_be_positive(self):
        """Test that ratios must be positive."""
        with self.assertRaises(ValueError):
            grouped_split(create_manifest(10), (1.0, 0.0, 0.0), seed=0)

    @tag("slow")
    def test_no_scan_leaks_across_splits(self):
        """Randomized manifests and seeds never share a scan across splits."""
        rng = random.Random(2024)
        for trial in range(10000):
            n_scans = rng.randint(3, 30)
            manifest = create_manifest(n_scans, rng.randint(1, 4),
                                       prefix=f"t{trial}_")
            result = grouped_split(manifest, (0.8, 0.1, 0.1),
                                   seed=rng.randint(0, 10 ** 6))
            scans = [set(result.scan_ids(split)) for split in SPLITS]
            self.assertFalse(scans[0] & scans[1])
            self.assertFalse(scans[0] & scans[2])
            self.assertFalse(scans[1] & scans[2])
            self.assertTrue(all(scans))

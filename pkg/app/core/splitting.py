"""
Scan-level train/tune/validation splitting.
"""
import logging
import math
from dataclasses import replace

import numpy as np

from core.exceptions import SplitError
from core.models import SPLITS, DatasetManifest


logger = logging.getLogger(__name__)


def apportion(total, ratios, minimum=0):
    """Floor each share, then hand leftovers out by largest remainder.

    Ties go to the earlier bucket. Buckets below ``minimum`` are then
    topped up one at a time from the currently largest bucket.
    """
    if total < minimum * len(ratios):
        raise ValueError(
            f"{total} items cannot give {len(ratios)} buckets "
            f"{minimum} each"
        )
    shares = [total * ratio for ratio in ratios]
    counts = [math.floor(share) for share in shares]
    leftover = total - sum(counts)
    order = sorted(
        range(len(ratios)),
        key=lambda i: (-(shares[i] - counts[i]), i),
    )
    for i in order[:leftover]:
        counts[i] += 1
    for i in range(len(counts)):
        while counts[i] < minimum:
            donor = max(range(len(counts)), key=lambda j: (counts[j], -j))
            counts[donor] -= 1
            counts[i] += 1
    return counts


def _check_ratios(ratios):
    if len(ratios) != len(SPLITS):
        raise ValueError(f"expected {len(SPLITS)} ratios, got {len(ratios)}")
    if any(ratio <= 0 for ratio in ratios):
        raise ValueError("split ratios must be positive")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"split ratios sum to {sum(ratios)}, not 1")


def grouped_split(manifest, ratios=(0.8, 0.1, 0.1), seed=0):
    """Assign every record a split so that no scan spans two splits.

    Every split gets at least one scan. The assignment depends only on
    the sorted scan ids, the ratios and the seed. Record order is
    preserved.
    """
    _check_ratios(ratios)
    scan_ids = manifest.scan_ids()
    buckets = sum(1 for ratio in ratios if ratio > 0)
    if len(scan_ids) < buckets:
        raise SplitError(
            f"{len(scan_ids)} scans cannot fill {buckets} split buckets"
        )
    rng = np.random.default_rng(seed)
    shuffled = [scan_ids[i] for i in rng.permutation(len(scan_ids))]
    counts = apportion(len(scan_ids), ratios, minimum=1)

    assignment, start = {}, 0
    for split, count in zip(SPLITS, counts):
        for scan_id in shuffled[start:start + count]:
            assignment[scan_id] = split
        start += count

    records = [
        replace(record, split=assignment[record.scan_id])
        for record in manifest.records
    ]
    logger.info(
        "split %d scans into %s",
        len(scan_ids),
        dict(zip(SPLITS, counts)),
    )
    return DatasetManifest(records=records, seed=seed, root=manifest.root)

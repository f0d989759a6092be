"""
Overlap metric, prompt simulators and the paired t-test.
"""
import math
from typing import NamedTuple

import numpy as np
from scipy import stats

from core.exceptions import DataError, DimensionMismatchError


def _binary(mask, name):
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise DataError(f"{name} must be a 2D mask")
    if not np.isin(mask, (0, 1)).all():
        raise DataError(f"{name} must be binary")
    return mask.astype(bool)


def dsc(pred, gt, both_empty=1.0):
    """2TP / (2TP + FP + FN); ``both_empty`` when neither has foreground."""
    pred = _binary(pred, "prediction")
    gt = _binary(gt, "ground truth")
    if pred.shape != gt.shape:
        raise DimensionMismatchError(
            f"prediction {pred.shape} and ground truth {gt.shape} differ"
        )
    tp = int(np.count_nonzero(pred & gt))
    fp = int(np.count_nonzero(pred & ~gt))
    fn = int(np.count_nonzero(~pred & gt))
    if tp + fp + fn == 0:
        return float(both_empty)
    return 2 * tp / (2 * tp + fp + fn)


class BoxPrompt(NamedTuple):
    """Inclusive pixel rectangle."""
    row0: int
    col0: int
    row1: int
    col1: int

    def contains(self, row, col):
        return self.row0 <= row <= self.row1 and self.col0 <= col <= self.col1

    def slices(self):
        return slice(self.row0, self.row1 + 1), slice(self.col0, self.col1 + 1)


def tight_box(gt):
    """Smallest box holding every foreground pixel."""
    rows, cols = np.nonzero(_binary(gt, "ground truth"))
    if rows.size == 0:
        raise DataError("cannot box an empty mask")
    return BoxPrompt(int(rows.min()), int(cols.min()),
                     int(rows.max()), int(cols.max()))


def loose_box(box, height, width, max_shift=0.15, seed=0):
    """Shift each edge by up to ``max_shift`` of the box extent.

    Edges move independently, then get clamped to the image and
    re-ordered.
    """
    if max_shift < 0:
        raise ValueError("max_shift must be non-negative")
    rng = np.random.default_rng(seed)
    span_rows = (box.row1 - box.row0 + 1) * max_shift
    span_cols = (box.col1 - box.col0 + 1) * max_shift
    shifts = rng.uniform(-1.0, 1.0, 4) * [span_rows, span_cols,
                                          span_rows, span_cols]
    # truncation keeps every displacement inside the bound
    row0, col0, row1, col1 = (
        int(np.clip(edge + np.trunc(shift), 0, limit - 1))
        for edge, shift, limit in zip(
            box, shifts, (height, width, height, width)
        )
    )
    return BoxPrompt(min(row0, row1), min(col0, col1),
                     max(row0, row1), max(col0, col1))


def point_prompt(gt, seed=0):
    """A foreground pixel drawn uniformly at random."""
    rows, cols = np.nonzero(_binary(gt, "ground truth"))
    if rows.size == 0:
        raise DataError("cannot place a point on an empty mask")
    index = int(np.random.default_rng(seed).integers(rows.size))
    return int(rows[index]), int(cols[index])


class TTestResult(NamedTuple):
    t: float
    p: float
    degenerate: bool = False


def paired_ttest(a, b):
    """Two-sided paired t-test on a - b.

    Zero-variance differences are degenerate: a zero mean gives t = 0 and
    p = 1, any other mean gives an infinite t and p = 0.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be equal-length 1D sequences")
    if a.size < 2:
        raise ValueError("a paired t-test needs at least two pairs")
    diff = a - b
    mean = float(diff.mean())
    if float(diff.std(ddof=1)) == 0.0:
        if mean == 0.0:
            return TTestResult(0.0, 1.0, True)
        return TTestResult(math.copysign(math.inf, mean), 0.0, True)
    t, p = stats.ttest_rel(a, b)
    return TTestResult(float(t), float(p))

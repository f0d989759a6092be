"""
Classical interactive reference predictors for each prompt mode.
"""
import numpy as np
from scipy import ndimage

from evaluation.metrics import loose_box, point_prompt, tight_box


BASELINE_MODES = ("none", "point", "tight_box", "loose_box")


def otsu_threshold(values, bins=256):
    """Threshold maximizing between-class variance over [0, 1] values."""
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        raise ValueError("no values to threshold")
    counts, edges = np.histogram(values, bins=bins, range=(0.0, 1.0))
    centers = (edges[:-1] + edges[1:]) / 2
    weight = np.cumsum(counts)
    total = weight[-1]
    mass = np.cumsum(counts * centers)
    below = weight[:-1]
    above = total - below
    valid = (below > 0) & (above > 0)
    if not valid.any():
        return float(values.mean())
    mean_below = mass[:-1] / np.where(below > 0, below, 1)
    mean_above = (mass[-1] - mass[:-1]) / np.where(above > 0, above, 1)
    between = np.where(valid,
                       below * above * (mean_below - mean_above) ** 2, -1.0)
    return float(edges[1:][int(np.argmax(between))])


def largest_component(binary):
    """Largest 4-connected component; the lowest label wins ties."""
    labels, count = ndimage.label(binary)
    if count == 0:
        return np.zeros_like(binary, dtype=np.uint8)
    sizes = np.bincount(labels.ravel())[1:]
    return (labels == int(np.argmax(sizes)) + 1).astype(np.uint8)


def threshold_segment(pixels, box=None):
    """Otsu foreground, inside ``box`` when given, largest component."""
    pixels = np.asarray(pixels, dtype=np.float64)
    region = np.zeros(pixels.shape, bool)
    if box is None:
        region[:] = True
    else:
        region[box.slices()] = True
    threshold = otsu_threshold(pixels[region])
    return largest_component(region & (pixels > threshold))


def region_grow(pixels, point):
    """Pixels on the seed's side of the Otsu threshold connected to it."""
    pixels = np.asarray(pixels, dtype=np.float64)
    threshold = otsu_threshold(pixels)
    bright = pixels > threshold
    same_side = bright if bright[point] else ~bright
    labels, _ = ndimage.label(same_side)
    return (labels == labels[point]).astype(np.uint8)


def baseline_predict(pixels, gt, mode, seed=0, max_shift=0.15):
    """Prediction of the reference method for one prompt mode.

    Prompts are simulated from ``gt``; ``none`` uses the image alone.
    """
    if mode == "none":
        return threshold_segment(pixels)
    if mode == "point":
        return region_grow(pixels, point_prompt(gt, seed))
    if mode == "tight_box":
        return threshold_segment(pixels, tight_box(gt))
    if mode == "loose_box":
        height, width = np.shape(gt)
        box = loose_box(tight_box(gt), height, width, max_shift, seed)
        return threshold_segment(pixels, box)
    raise ValueError(f"unknown prompt mode {mode!r}")

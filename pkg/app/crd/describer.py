"""
Deterministic region describer: shape and position sentences per label.
"""
from dataclasses import dataclass
from itertools import combinations
from typing import Tuple

import numpy as np
from scipy import ndimage

from crd.palette import DEFAULT_COLORS, color_name, default_palette


EMPTY_DESCRIPTION = "The image contains no highlighted regions."

ROW_NAMES = ("top", "middle", "bottom")
COL_NAMES = ("left", "center", "right")


@dataclass(frozen=True)
class DescriberThresholds:
    blocky_compactness: float = 0.75
    elongated_ratio: float = 3.0


@dataclass(frozen=True)
class RegionDescriptor:
    label: int
    name: str
    area_fraction: float
    centroid: Tuple[float, float]
    centroid_cell: str
    bbox: Tuple[int, int, int, int]
    elongation: float
    compactness: float
    component_count: int


def grid_cell(row, col, height, width):
    """Name of the 3x3 cell holding the point (row, col)."""
    r = min(int(3 * (row + 0.5) / height), 2)
    c = min(int(3 * (col + 0.5) / width), 2)
    vertical, horizontal = ROW_NAMES[r], COL_NAMES[c]
    if vertical == "middle" and horizontal == "center":
        return "center"
    if vertical == "middle":
        return horizontal
    if horizontal == "center":
        return vertical
    return f"{vertical}-{horizontal}"


def describe_label(labels, label, name):
    """Compute the descriptor of one label; the label must be present."""
    height, width = labels.shape
    region = labels == label
    coords = np.argwhere(region)
    area = len(coords)
    row, col = coords.mean(axis=0)
    r0, c0 = coords.min(axis=0)
    r1, c1 = coords.max(axis=0)
    box_h, box_w = r1 - r0 + 1, c1 - c0 + 1
    _, components = ndimage.label(region)
    return RegionDescriptor(
        label=int(label),
        name=name,
        area_fraction=area / float(height * width),
        centroid=(float(row), float(col)),
        centroid_cell=grid_cell(row, col, height, width),
        bbox=(int(r0), int(c0), int(r1), int(c1)),
        elongation=max(box_h, box_w) / float(min(box_h, box_w)),
        compactness=area / float(box_h * box_w),
        component_count=int(components),
    )


def shape_adjective(descriptor, thresholds):
    if descriptor.compactness >= thresholds.blocky_compactness:
        return "blocky"
    if descriptor.elongation >= thresholds.elongated_ratio:
        return "elongated"
    return "irregular"


def relation(first, second):
    """Where ``first`` lies relative to ``second``, on the dominant axis."""
    d_row = first.centroid[0] - second.centroid[0]
    d_col = first.centroid[1] - second.centroid[1]
    if d_row == 0 and d_col == 0:
        return "centered on"
    if abs(d_row) >= abs(d_col):
        return "above" if d_row < 0 else "below"
    return "left of" if d_col < 0 else "right of"


def describe_regions(mask, palette=None, thresholds=None):
    """Describe every colored region of ``mask`` with fixed templates.

    Returns the description and the per-label descriptors, ascending by
    label.
    """
    thresholds = thresholds or DescriberThresholds()
    present = mask.present_labels()
    if not present:
        return EMPTY_DESCRIPTION, []
    if palette is None:
        fits = present[-1] <= len(DEFAULT_COLORS)
        palette = default_palette(None if fits else present)

    descriptors = [
        describe_label(mask.labels, label, mask.categories[label])
        for label in present
    ]
    colors = {d.label: color_name(palette.color_for(d.label))
              for d in descriptors}
    sentences = []
    for d in descriptors:
        adjective = shape_adjective(d, thresholds)
        article = "an" if adjective[0] in "aeiou" else "a"
        sentence = (
            f"The {colors[d.label]} region marks the {d.name}: "
            f"{article} {adjective} shape in the "
            f"{d.centroid_cell} of the image, covering "
            f"{100 * d.area_fraction:.1f}% of the area"
        )
        if d.component_count > 1:
            sentence += f" in {d.component_count} separate parts"
        sentences.append(sentence + ".")
    for first, second in combinations(descriptors, 2):
        sentences.append(
            f"The {colors[first.label]} region is "
            f"{relation(first, second)} the {colors[second.label]} region."
        )
    return " ".join(sentences), descriptors

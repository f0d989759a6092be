"""
Color palettes and mask colorization.
"""
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from core.exceptions import PaletteError


# Twenty widely separated colors, assigned to labels in ascending order.
DEFAULT_COLORS = (
    ("red", (230, 25, 75)),
    ("green", (60, 180, 75)),
    ("yellow", (255, 225, 25)),
    ("blue", (0, 130, 200)),
    ("orange", (245, 130, 48)),
    ("purple", (145, 30, 180)),
    ("cyan", (70, 240, 240)),
    ("magenta", (240, 50, 230)),
    ("lime", (210, 245, 60)),
    ("pink", (250, 190, 212)),
    ("teal", (0, 128, 128)),
    ("lavender", (220, 190, 255)),
    ("brown", (170, 110, 40)),
    ("beige", (255, 250, 200)),
    ("maroon", (128, 0, 0)),
    ("mint", (170, 255, 195)),
    ("olive", (128, 128, 0)),
    ("apricot", (255, 215, 180)),
    ("navy", (0, 0, 128)),
    ("grey", (128, 128, 128)),
)

COLOR_NAMES = {rgb: name for name, rgb in DEFAULT_COLORS}


def color_name(rgb):
    rgb = tuple(int(v) for v in rgb)
    return COLOR_NAMES.get(rgb, "rgb({}, {}, {})".format(*rgb))


@dataclass
class ColorPalette:
    background: Tuple[int, int, int] = (0, 0, 0)
    entries: Dict[int, Tuple[int, int, int]] = field(default_factory=dict)

    def __post_init__(self):
        self.background = tuple(int(v) for v in self.background)
        self.entries = {
            int(label): tuple(int(v) for v in rgb)
            for label, rgb in sorted(self.entries.items())
        }
        if any(label <= 0 for label in self.entries):
            raise PaletteError("palette labels must be positive")
        colors = [self.background] + list(self.entries.values())
        if len(set(colors)) != len(colors):
            raise PaletteError("palette colors must be pairwise distinct")

    def color_for(self, label):
        try:
            return self.entries[label]
        except KeyError:
            raise PaletteError(f"label {label} has no palette color")


def default_palette(labels=None, colors=None, background=(0, 0, 0)):
    """Assign ``colors`` (default: the fixed twenty) to ascending labels.

    Without ``labels`` the palette covers labels 1..len(colors).
    """
    colors = [tuple(c) for c in colors] if colors else [
        rgb for _, rgb in DEFAULT_COLORS
    ]
    labels = sorted(labels) if labels is not None else list(
        range(1, len(colors) + 1)
    )
    if len(labels) > len(colors):
        raise PaletteError(
            f"{len(labels)} labels but only {len(colors)} palette colors"
        )
    return ColorPalette(background, dict(zip(labels, colors)))


def colorize_mask(mask, palette):
    """Render every label in its palette color over the background."""
    labels = mask.labels
    present = mask.present_labels()
    for label in present:
        palette.color_for(label)
    top = max([0] + present)
    lookup = np.zeros((top + 1, 3), dtype=np.uint8)
    lookup[0] = palette.background
    for label in present:
        lookup[label] = palette.entries[label]
    return lookup[labels]


def decolorize(rgb, palette):
    """Recover the label array from a colorized mask."""
    rgb = np.asarray(rgb, dtype=np.uint8)
    labels = np.zeros(rgb.shape[:2], dtype=np.int64)
    matched = np.all(rgb == np.array(palette.background, np.uint8), axis=-1)
    for label, color in palette.entries.items():
        hit = np.all(rgb == np.array(color, np.uint8), axis=-1)
        labels[hit] = label
        matched |= hit
    if not matched.all():
        raise PaletteError("image holds colors outside the palette")
    return labels

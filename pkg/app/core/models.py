"""
Domain types.

None of these are database models; the app keeps the conventional module
name so the types sit where the rest of the project looks for them.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from core.exceptions import DataError, DimensionMismatchError


SPLITS = ("train", "tune", "validation")

PROVENANCES = ("deterministic", "remote", "fallback")


@dataclass
class ImageSample:
    """A 2D slice with intensities normalized to [0, 1]."""
    sample_id: str
    scan_id: str
    modality: str
    pixels: np.ndarray

    def __post_init__(self):
        if not self.sample_id:
            raise DataError("ImageSample needs a sample_id")
        if not self.scan_id:
            raise DataError(f"{self.sample_id}: scan_id must be non-empty")
        self.pixels = np.asarray(self.pixels, dtype=np.float32)
        if self.pixels.ndim != 2 or 0 in self.pixels.shape:
            raise DataError(
                f"{self.sample_id}: pixels must be a non-empty 2D array"
            )
        if self.pixels.min() < 0.0 or self.pixels.max() > 1.0:
            raise DataError(f"{self.sample_id}: intensities outside [0, 1]")

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]


@dataclass
class SegMask:
    """Integer-labeled mask; 0 is background."""
    labels: np.ndarray
    categories: Dict[int, str]

    def __post_init__(self):
        self.labels = np.asarray(self.labels)
        if self.labels.ndim != 2:
            raise DataError("mask labels must be a 2D array")
        if not np.issubdtype(self.labels.dtype, np.integer):
            raise DataError("mask labels must be integers")
        if self.labels.size and self.labels.min() < 0:
            raise DataError("mask labels must be non-negative")
        self.labels = self.labels.astype(np.int64)
        self.categories = {int(k): str(v) for k, v in self.categories.items()}
        missing = set(self.present_labels()) - set(self.categories)
        if missing:
            raise DataError(
                f"mask labels {sorted(missing)} have no category name"
            )

    @property
    def height(self):
        return self.labels.shape[0]

    @property
    def width(self):
        return self.labels.shape[1]

    def present_labels(self):
        """Nonzero labels that occur in the mask, ascending."""
        return [int(v) for v in np.unique(self.labels) if v != 0]

    def binary(self, label):
        """Binary mask of one label as uint8."""
        return (self.labels == label).astype(np.uint8)

    def label_for(self, class_name):
        for label, name in sorted(self.categories.items()):
            if name == class_name:
                return label
        raise DataError(f"category {class_name!r} not in mask")

    def check_pairs_with(self, image):
        if (self.height, self.width) != (image.height, image.width):
            raise DimensionMismatchError(
                f"mask {self.height}x{self.width} does not match image "
                f"{image.height}x{image.width}"
            )


@dataclass
class CategoryEntry:
    label: int
    name: str
    color: Tuple[int, int, int]

    def to_record(self):
        return {"label": self.label, "name": self.name,
                "color": list(self.color)}


@dataclass
class Triplet:
    """One image-mask-description record of the CRD dataset."""
    image_ref: str
    mask_ref: str
    modality: str
    category_entries: List[CategoryEntry]
    description: str
    split: str
    scan_id: str
    sample_id: str = ""
    provenance: str = "deterministic"

    def __post_init__(self):
        if not self.description:
            raise DataError("triplet description must be non-empty")
        if self.split not in SPLITS:
            raise DataError(f"unknown split {self.split!r}")
        colors = [tuple(entry.color) for entry in self.category_entries]
        if len(set(colors)) != len(colors):
            raise DataError("category colors must be pairwise distinct")

    def to_record(self):
        return {
            "image_ref": self.image_ref,
            "mask_ref": self.mask_ref,
            "modality": self.modality,
            "category_entries": [
                entry.to_record() for entry in self.category_entries
            ],
            "description": self.description,
            "split": self.split,
            "scan_id": self.scan_id,
            "sample_id": self.sample_id,
            "provenance": self.provenance,
        }


@dataclass
class SamplePair:
    """A pre-description manifest record: image/mask files of one slice."""
    sample_id: str
    scan_id: str
    modality: str
    image_ref: str
    mask_ref: str
    categories: Dict[int, str] = field(default_factory=dict)
    split: Optional[str] = None
    shape: Optional[dict] = None
    # in-memory payload from the generator; never persisted
    image: Optional[ImageSample] = field(
        default=None, repr=False, compare=False
    )
    mask: Optional[SegMask] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.scan_id:
            self.scan_id = self.sample_id
        self.categories = {int(k): str(v) for k, v in self.categories.items()}

    def to_record(self, seed):
        record = {
            "sample_id": self.sample_id,
            "scan_id": self.scan_id,
            "modality": self.modality,
            "image_ref": self.image_ref,
            "mask_ref": self.mask_ref,
            "categories": {
                str(k): v for k, v in sorted(self.categories.items())
            },
            "split": self.split,
            "seed": seed,
        }
        if self.shape is not None:
            record["shape"] = self.shape
        return record


@dataclass
class DatasetManifest:
    records: List[SamplePair]
    seed: int = 0
    root: str = "."

    def __post_init__(self):
        ids = [record.sample_id for record in self.records]
        if len(set(ids)) != len(ids):
            raise DataError("sample_id values must be unique in a manifest")

    @property
    def counts(self):
        """Records per split; unassigned records count under None."""
        counts = {split: 0 for split in SPLITS}
        for record in self.records:
            counts[record.split] = counts.get(record.split, 0) + 1
        return counts

    def scan_ids(self, split=None):
        return sorted({
            record.scan_id for record in self.records
            if split is None or record.split == split
        })

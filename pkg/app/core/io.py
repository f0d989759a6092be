"""
Raster and manifest input/output.
"""
import json
import logging
import os

import numpy as np
from PIL import Image, UnidentifiedImageError

from core.exceptions import (
    DataError,
    DimensionMismatchError,
    MissingArtifactError,
    UnsupportedFormatError,
)
from core.models import DatasetManifest, ImageSample, SamplePair, SegMask


logger = logging.getLogger(__name__)

IMAGE_MODES = ("L", "I;16", "I;16B", "I")
MASK_MODES = ("L", "P")


def _open_png(path, modes):
    if not os.path.exists(path):
        raise MissingArtifactError(f"{path} does not exist")
    try:
        with Image.open(path) as img:
            img.load()
            if img.format != "PNG":
                raise UnsupportedFormatError(
                    f"{path}: expected PNG, got {img.format}"
                )
            if img.mode not in modes:
                raise UnsupportedFormatError(
                    f"{path}: unsupported PNG mode {img.mode}"
                )
            return np.array(img)
    except UnidentifiedImageError as exc:
        raise UnsupportedFormatError(f"{path}: not a readable image") from exc


def normalize_intensities(raw):
    """Per-slice min-max rescale to [0, 1]; constant slices map to zeros."""
    raw = np.asarray(raw, dtype=np.float64)
    low, high = raw.min(), raw.max()
    if high <= low:
        return np.zeros(raw.shape, dtype=np.float32)
    return ((raw - low) / (high - low)).astype(np.float32)


def load_image(path, sample_id=None, scan_id=None, modality="CT"):
    """Read a grayscale PNG into a normalized ImageSample."""
    raw = _open_png(path, IMAGE_MODES)
    if sample_id is None:
        sample_id = os.path.splitext(os.path.basename(path))[0]
    return ImageSample(
        sample_id=sample_id,
        scan_id=scan_id or sample_id,
        modality=modality,
        pixels=normalize_intensities(raw),
    )


def load_pair(image_path, mask_path, categories=None, sample_id=None,
              scan_id=None, modality="CT"):
    """Read an image PNG and its label PNG into (ImageSample, SegMask)."""
    for path in (image_path, mask_path):
        if not os.path.exists(path):
            raise MissingArtifactError(f"{path} does not exist")
    image = load_image(image_path, sample_id, scan_id, modality)
    labels = _open_png(mask_path, MASK_MODES).astype(np.int64)
    if image.pixels.shape != labels.shape:
        raise DimensionMismatchError(
            f"image {image.pixels.shape} and mask {labels.shape} differ: "
            f"{image_path}, {mask_path}"
        )
    if categories is None:
        categories = {
            int(v): f"label_{int(v)}" for v in np.unique(labels) if v != 0
        }
    return image, SegMask(labels=labels, categories=categories)


def save_image_png(pixels, path, bits=8):
    """Write intensities in [0, 1] as an 8- or 16-bit grayscale PNG."""
    pixels = np.clip(np.asarray(pixels, dtype=np.float64), 0.0, 1.0)
    if bits == 8:
        img = Image.fromarray(np.round(pixels * 255).astype(np.uint8), "L")
    elif bits == 16:
        data = np.round(pixels * 65535).astype(np.uint16)
        img = Image.fromarray(data, "I;16")
    else:
        raise ValueError("bits must be 8 or 16")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    img.save(path, format="PNG")


def save_mask_png(labels, path):
    """Write a label array as an 8-bit PNG with labels as pixel values."""
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() > 255):
        raise DataError("8-bit masks hold labels 0..255 only")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    Image.fromarray(labels.astype(np.uint8), "L").save(path, format="PNG")


def resolve_ref(root, ref):
    return ref if os.path.isabs(ref) else os.path.join(root, ref)


def write_manifest(manifest, path):
    """Persist a manifest as JSONL, one sample pair per line."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as writer:
        for record in manifest.records:
            writer.write(
                json.dumps(record.to_record(manifest.seed),
                           ensure_ascii=False) + "\n"
            )
    logger.info("wrote %d manifest records to %s",
                len(manifest.records), path)
    return path


def read_manifest(path):
    if not os.path.exists(path):
        raise MissingArtifactError(f"manifest {path} does not exist")
    records, seed = [], 0
    with open(path, encoding="utf-8") as reader:
        for number, line in enumerate(reader, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
                seed = int(data.get("seed", seed))
                records.append(SamplePair(
                    sample_id=data["sample_id"],
                    scan_id=data.get("scan_id") or data["sample_id"],
                    modality=data["modality"],
                    image_ref=data["image_ref"],
                    mask_ref=data["mask_ref"],
                    categories=data.get("categories", {}),
                    split=data.get("split"),
                    shape=data.get("shape"),
                ))
            except (KeyError, TypeError, ValueError) as exc:
                raise DataError(
                    f"{path}:{number}: bad record ({exc})"
                ) from exc
    root = os.path.dirname(os.path.abspath(path))
    return DatasetManifest(records=records, seed=seed, root=root)


def load_record(manifest, record):
    """Load the image and mask of one manifest record."""
    if record.image is not None and record.mask is not None:
        return record.image, record.mask
    return load_pair(
        resolve_ref(manifest.root, record.image_ref),
        resolve_ref(manifest.root, record.mask_ref),
        categories=record.categories or None,
        sample_id=record.sample_id,
        scan_id=record.scan_id,
        modality=record.modality,
    )

"""
Synthetic toy corpus: analytic shapes with exact masks.
"""
import logging
import os

import numpy as np

from core.exceptions import UnknownShapeError
from core.io import save_image_png, save_mask_png, write_manifest
from core.models import DatasetManifest, ImageSample, SamplePair, SegMask


logger = logging.getLogger(__name__)

SHAPE_CLASSES = ("disk", "rectangle", "ring", "crescent")

SIZE_DRIFT = 0.06
BACKGROUND_LEVEL = 0.15
NOISE_SIGMA = 0.04


def _draw_params(shape_class, image_size, rng):
    size = float(image_size)
    params = {
        "class": shape_class,
        "center": [float(rng.uniform(0.3, 0.7) * size),
                    float(rng.uniform(0.3, 0.7) * size)],
    }
    if shape_class == "disk":
        params["radius"] = float(rng.uniform(0.12, 0.22) * size)
    elif shape_class == "rectangle":
        params["half_height"] = float(rng.uniform(0.08, 0.22) * size)
        params["half_width"] = float(rng.uniform(0.08, 0.22) * size)
    elif shape_class == "ring":
        outer = float(rng.uniform(0.16, 0.24) * size)
        params["outer_radius"] = outer
        params["inner_radius"] = float(outer * rng.uniform(0.45, 0.6))
    elif shape_class == "crescent":
        radius = float(rng.uniform(0.15, 0.22) * size)
        angle = float(rng.uniform(0.0, 2 * np.pi))
        params["radius"] = radius
        params["cut_offset"] = [float(0.5 * radius * np.sin(angle)),
                                float(0.5 * radius * np.cos(angle))]
        params["cut_radius"] = 0.9 * radius
    else:
        raise UnknownShapeError(f"unknown shape class {shape_class!r}")
    return params


def render_shape(params, image_size):
    """Rasterize stored shape parameters into a boolean mask.

    Pixel (i, j) is inside when its index coordinates satisfy the shape's
    inequality after scaling every length by ``params['scale']``.
    """
    rows, cols = np.mgrid[0:image_size, 0:image_size].astype(np.float64)
    scale = params.get("scale", 1.0)
    r0, c0 = params["center"]
    dist2 = (rows - r0) ** 2 + (cols - c0) ** 2
    shape_class = params["class"]
    if shape_class == "disk":
        return dist2 <= (params["radius"] * scale) ** 2
    if shape_class == "rectangle":
        return ((np.abs(rows - r0) <= params["half_height"] * scale)
                & (np.abs(cols - c0) <= params["half_width"] * scale))
    if shape_class == "ring":
        return ((dist2 <= (params["outer_radius"] * scale) ** 2)
                & (dist2 >= (params["inner_radius"] * scale) ** 2))
    if shape_class == "crescent":
        dr, dc = params["cut_offset"]
        cut2 = (rows - r0 - dr * scale) ** 2 + (cols - c0 - dc * scale) ** 2
        return ((dist2 <= (params["radius"] * scale) ** 2)
                & (cut2 > (params["cut_radius"] * scale) ** 2))
    raise UnknownShapeError(f"unknown shape class {shape_class!r}")


def synth_toy_dataset(n_scans, classes, image_size, seed,
                      slices_per_scan=4, modality="CT", out_dir=None):
    """Generate a manifest of toy scans, one shape instance per scan.

    Scans cycle through ``classes``; slices of a scan share the shape and
    drift smoothly in size. With ``out_dir`` the PNGs and
    ``manifest.jsonl`` are written there as well.
    """
    if n_scans < 1:
        raise ValueError("n_scans must be at least 1")
    if image_size < 16:
        raise ValueError("image_size must be at least 16")
    if slices_per_scan < 1:
        raise ValueError("slices_per_scan must be at least 1")
    if not classes:
        raise ValueError("at least one shape class is required")
    unknown = [name for name in classes if name not in SHAPE_CLASSES]
    if unknown:
        raise UnknownShapeError(f"unknown shape classes {unknown}")

    rng = np.random.default_rng(seed)
    records = []
    for scan_index in range(n_scans):
        shape_class = classes[scan_index % len(classes)]
        label = list(classes).index(shape_class) + 1
        base = _draw_params(shape_class, image_size, rng)
        brightness = float(rng.uniform(0.6, 0.85))
        scan_id = f"scan_{scan_index:04d}"
        middle = (slices_per_scan - 1) / 2.0
        for slice_index in range(slices_per_scan):
            scale = 1.0 + SIZE_DRIFT * (slice_index - middle)
            params = dict(base, scale=scale)
            inside = render_shape(params, image_size)
            noise = rng.normal(0.0, NOISE_SIGMA, (image_size, image_size))
            pixels = np.clip(
                BACKGROUND_LEVEL + inside * (brightness - BACKGROUND_LEVEL)
                + noise,
                0.0, 1.0,
            )
            sample_id = f"{scan_id}_s{slice_index:02d}"
            categories = {label: shape_class}
            records.append(SamplePair(
                sample_id=sample_id,
                scan_id=scan_id,
                modality=modality,
                image_ref=os.path.join("images", f"{sample_id}.png"),
                mask_ref=os.path.join("masks", f"{sample_id}.png"),
                categories=categories,
                shape=params,
                image=ImageSample(sample_id, scan_id, modality, pixels),
                mask=SegMask(inside.astype(np.int64) * label, categories),
            ))

    root = os.path.abspath(out_dir) if out_dir else "."
    manifest = DatasetManifest(records=records, seed=seed, root=root)
    if out_dir:
        write_toy_dataset(manifest)
    logger.info("generated %d scans, %d slices", n_scans, len(records))
    return manifest


def write_toy_dataset(manifest, path=None):
    """Write the in-memory rasters of a generated manifest plus its JSONL."""
    for record in manifest.records:
        save_image_png(record.image.pixels,
                       os.path.join(manifest.root, record.image_ref))
        save_mask_png(record.mask.labels,
                      os.path.join(manifest.root, record.mask_ref))
    return write_manifest(
        manifest, path or os.path.join(manifest.root, "manifest.jsonl")
    )

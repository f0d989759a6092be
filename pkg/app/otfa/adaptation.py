"""
One-shot training-free adaptation to an unseen class.

Registration stores the exemplar's masked patch features and a Gaussian
location prior. Adapted inference attends from the query features to the
stored ones and reweights the query features by the prior.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import torch

from core.exceptions import DataError, NumericError
from segmenter.checkpoint import read_archive, write_archive


logger = logging.getLogger(__name__)

SIGMA_FLOOR = 0.5
PRIOR_MODES = ("multiplicative", "additive")


@dataclass(frozen=True)
class AdaptOptions:
    scale_logits: bool = False
    foreground_keys_only: bool = False
    prior_mode: str = "multiplicative"

    def __post_init__(self):
        if self.prior_mode not in PRIOR_MODES:
            raise ValueError(f"unknown prior_mode {self.prior_mode!r}")


@dataclass
class AdapterMemory:
    """Masked exemplar features plus the location prior parameters."""
    masked_embedding: np.ndarray
    center: Tuple[float, float]
    sigma: Tuple[float, float]
    class_name: str
    grid_h: int
    grid_w: int
    modality: str = "CT"
    cell_mask: Optional[np.ndarray] = None

    def __post_init__(self):
        self.masked_embedding = np.asarray(self.masked_embedding,
                                           dtype=np.float32)
        if self.masked_embedding.shape[0] != self.grid_h * self.grid_w:
            raise DataError("masked embedding does not match the grid")
        if min(self.sigma) <= 0:
            raise DataError("location prior sigmas must be positive")
        row, col = self.center
        if not (0 <= row <= self.grid_h - 1 and 0 <= col <= self.grid_w - 1):
            raise DataError(f"prior center {self.center} is off the grid")
        if not self.class_name:
            raise DataError("memory needs a class name")
        if self.cell_mask is None:
            self.cell_mask = np.any(self.masked_embedding != 0, axis=1)
        self.cell_mask = np.asarray(self.cell_mask, dtype=bool).reshape(-1)


@dataclass
class LocationPriorMap:
    values: np.ndarray

    @property
    def peak(self):
        return tuple(int(i) for i in np.unravel_index(
            np.argmax(self.values), self.values.shape))


def downsample_mask(binary, grid_h, grid_w):
    """Cells whose foreground area fraction is at least one half.

    When no cell reaches a half, the best-covered cell is kept so that a
    non-empty mask never vanishes on the grid.
    """
    binary = np.asarray(binary, dtype=np.float64)
    height, width = binary.shape
    if height % grid_h or width % grid_w:
        raise DataError(f"{height}x{width} mask does not tile a "
                        f"{grid_h}x{grid_w} grid")
    coverage = binary.reshape(
        grid_h, height // grid_h, grid_w, width // grid_w
    ).mean(axis=(1, 3))
    cells = coverage >= 0.5
    if not cells.any() and coverage.max() > 0:
        cells.flat[np.argmax(coverage)] = True
    return cells


def fit_location(cells):
    """Center and per-axis sigma of the foreground cells."""
    coords = np.argwhere(cells)
    if not len(coords):
        raise DataError("no foreground cells to fit a location prior")
    center = coords.mean(axis=0)
    spread = np.maximum(coords.std(axis=0), SIGMA_FLOOR)
    return ((float(center[0]), float(center[1])),
            (float(spread[0]), float(spread[1])))


def register(model, image, mask, class_name, modality=None):
    """Remember one exemplar of ``class_name`` from ``image`` and ``mask``."""
    binary = mask.binary(mask.label_for(class_name))
    if not binary.any():
        raise DataError(f"{class_name!r} has no foreground in the exemplar")
    mask.check_pairs_with(image)
    grid = model.encode_image(image)
    cells = downsample_mask(binary, grid.grid_h, grid.grid_w)
    features = grid.tokens.numpy()
    masked = features * cells.reshape(-1, 1)
    center, sigma = fit_location(cells)
    logger.info("registered %r from %s: %d of %d cells", class_name,
                image.sample_id, int(cells.sum()), cells.size)
    return AdapterMemory(
        masked_embedding=masked,
        center=center,
        sigma=sigma,
        class_name=class_name,
        grid_h=grid.grid_h,
        grid_w=grid.grid_w,
        modality=modality or image.modality,
        cell_mask=cells,
    )


def gaussian_prior(memory, grid_h, grid_w):
    """Axis-aligned Gaussian over the grid, peaking at 1."""
    rows, cols = np.mgrid[0:grid_h, 0:grid_w].astype(np.float64)
    (c_r, c_c), (s_r, s_c) = memory.center, memory.sigma
    exponent = ((rows - c_r) ** 2 / (2 * s_r ** 2)
                + (cols - c_c) ** 2 / (2 * s_c ** 2))
    values = np.exp(-(exponent - exponent.min()))
    return LocationPriorMap(np.maximum(values, np.finfo(np.float64).tiny))


def cross_attend(features, masked, scale_logits=False, key_mask=None):
    """Parameter-free attention: softmax(E M^T) M, row-wise.

    ``features`` are the queries; ``masked`` serves as keys and values.
    ``key_mask`` restricts the keys to the rows it marks.
    """
    features = np.asarray(features, dtype=np.float64)
    masked = np.asarray(masked, dtype=np.float64)
    if features.ndim != 2 or features.shape != masked.shape:
        raise ValueError(f"cross_attend needs equal N x C shapes, got "
                         f"{features.shape} and {masked.shape}")
    if not (np.isfinite(features).all() and np.isfinite(masked).all()):
        raise NumericError("cross_attend inputs are not finite")
    keys = masked
    if key_mask is not None:
        keys = masked[np.asarray(key_mask, dtype=bool).reshape(-1)]
        if not len(keys):
            raise DataError("key mask selects no rows")
    logits = features @ keys.T
    if scale_logits:
        logits = logits / np.sqrt(features.shape[1])
    logits -= logits.max(axis=1, keepdims=True)
    weights = np.exp(logits)
    weights /= weights.sum(axis=1, keepdims=True)
    # offset by the first key so identical keys come back exactly
    return keys[0] + weights @ (keys - keys[0])


def match_row_norms(rows, reference):
    """Rescale each row of ``rows`` to the norm of the same row of
    ``reference``; all-zero rows stay zero."""
    norms = rows.norm(dim=1, keepdim=True)
    target = reference.norm(dim=1, keepdim=True)
    return torch.where(norms > 0, rows * target / norms.clamp_min(1e-12),
                       torch.zeros_like(rows))


def adapted_fuse(memory, options=None):
    """Fusion for Segmenter.segment that applies the registered memory.

    The location path scales the query features by ``1 + g`` (or adds
    ``g`` at the features' RMS level). The semantic path adds the
    attended exemplar features, gated by ``g`` and brought to the query
    row norms. Each combined row is then rescaled to the norm of its
    query row.
    """
    options = options or AdaptOptions()
    prior = gaussian_prior(memory, memory.grid_h, memory.grid_w)
    g = torch.from_numpy(prior.values.reshape(-1, 1)).float()
    key_mask = memory.cell_mask if options.foreground_keys_only else None

    def fuse(features, feedback):
        query = features[0]
        attended = torch.from_numpy(cross_attend(
            query.numpy(), memory.masked_embedding,
            scale_logits=options.scale_logits, key_mask=key_mask,
        )).float()
        if options.prior_mode == "additive":
            rms = query.norm(dim=1, keepdim=True) / query.shape[1] ** 0.5
            located = query + g * rms
        else:
            located = query * (1 + g)
        semantic = g * match_row_norms(attended, query)
        visual = match_row_norms(located + semantic, query)
        return (visual + feedback[0])[None]

    return fuse


def adapted_segment(model, image, memory, modality=None, options=None):
    """Segment the registered class in ``image`` with adapted features."""
    if model.config.grid_size != memory.grid_h:
        raise DataError("memory was registered on a different grid")
    return model.segment(image, memory.class_name,
                         modality or memory.modality,
                         fuse=adapted_fuse(memory, options))


def save_memory(memory, path):
    return write_archive(path, "adapter_memory", {
        "class_name": memory.class_name,
        "modality": memory.modality,
        "center": list(memory.center),
        "sigma": list(memory.sigma),
        "grid": [memory.grid_h, memory.grid_w],
    }, {
        "masked_embedding": memory.masked_embedding,
        "cell_mask": memory.cell_mask.astype(np.float32),
    })


def load_memory(path):
    header, arrays = read_archive(path, "adapter_memory")
    return AdapterMemory(
        masked_embedding=arrays["masked_embedding"],
        center=tuple(header["center"]),
        sigma=tuple(header["sigma"]),
        class_name=header["class_name"],
        grid_h=header["grid"][0],
        grid_w=header["grid"][1],
        modality=header["modality"],
        cell_mask=arrays["cell_mask"] > 0.5,
    )

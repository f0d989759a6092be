"""
Triplets as training examples.
"""
import logging
import os
from typing import List, NamedTuple

import numpy as np
import torch
from torch.nn import functional as F
from torch.utils.data import Dataset

from core.exceptions import DataError
from core.models import ImageSample
from crd.pipeline import load_triplet, read_triplets
from segmenter.model import expand_prompt
from segmenter.prompts import render_prompt
from training.losses import IGNORE_INDEX


logger = logging.getLogger(__name__)


class TrainingExample(NamedTuple):
    """One (image, class) pair with its token ids and shifted targets."""
    sample_id: str
    scan_id: str
    modality: str
    class_name: str
    pixels: np.ndarray
    mask: np.ndarray
    ids: List[int]
    targets: List[int]

    def image(self):
        return ImageSample(self.sample_id, self.scan_id, self.modality,
                           self.pixels)


def resize(array, size, mode):
    """Resize a 2D array to size x size; bilinear or nearest."""
    if array.shape == (size, size):
        return array
    tensor = torch.from_numpy(np.ascontiguousarray(array, np.float32))
    kwargs = {"align_corners": False} if mode == "bilinear" else {}
    resized = F.interpolate(tensor[None, None], size=(size, size),
                            mode=mode, **kwargs)[0, 0]
    return resized.numpy()


def encode_example(tokenizer, config, class_name, modality):
    """Token ids of prompt plus reply, and targets on the reply only."""
    prompt = render_prompt(class_name, modality)
    prompt_ids = expand_prompt(tokenizer, prompt.user_text,
                               config.num_patches)
    reply_ids = tokenizer.encode(prompt.target_text) + [tokenizer.eos_id]
    ids = prompt_ids + reply_ids
    if len(ids) > config.max_positions:
        raise DataError(
            f"{len(ids)} tokens exceed {config.max_positions} positions"
        )
    targets = [IGNORE_INDEX] * len(ids)
    for position in range(len(prompt_ids) - 1, len(ids) - 1):
        targets[position] = ids[position + 1]
    return ids, targets


def class_names(triplets):
    """Category names in order of first appearance."""
    names = []
    for triplet in triplets:
        for entry in triplet.category_entries:
            if entry.name not in names:
                names.append(entry.name)
    return names


class TripletDataset(Dataset):
    """Every category entry of every triplet in one split."""

    def __init__(self, triplets_path, split, tokenizer, config,
                 triplets=None):
        self.tokenizer = tokenizer
        self.config = config
        root = os.path.dirname(os.path.abspath(triplets_path))
        if triplets is None:
            triplets = read_triplets(triplets_path)
        self.examples = []
        for triplet in triplets:
            if triplet.split != split:
                continue
            image, mask = load_triplet(root, triplet)
            pixels = np.clip(
                resize(image.pixels, config.image_size, "bilinear"), 0, 1
            )
            for entry in triplet.category_entries:
                binary = mask.binary(entry.label)
                if not binary.any():
                    continue
                ids, targets = encode_example(
                    tokenizer, config, entry.name, triplet.modality
                )
                self.examples.append(TrainingExample(
                    sample_id=image.sample_id,
                    scan_id=image.scan_id,
                    modality=triplet.modality,
                    class_name=entry.name,
                    pixels=pixels.astype(np.float32),
                    mask=resize(binary, config.image_size,
                                "nearest").astype(np.uint8),
                    ids=ids,
                    targets=targets,
                ))
        logger.info("%s split: %d examples", split, len(self.examples))

    def __len__(self):
        return len(self.examples)

    def __getitem__(self, index):
        example = self.examples[index]
        return {
            "pixels": torch.from_numpy(example.pixels)[None],
            "mask": torch.from_numpy(example.mask).float(),
            "ids": torch.tensor(example.ids),
            "targets": torch.tensor(example.targets),
        }


def collate(batch, pad_id):
    """Stack images and masks; right-pad ids and targets."""
    length = max(len(item["ids"]) for item in batch)
    ids = torch.full((len(batch), length), pad_id, dtype=torch.long)
    targets = torch.full((len(batch), length), IGNORE_INDEX,
                         dtype=torch.long)
    for row, item in enumerate(batch):
        ids[row, :len(item["ids"])] = item["ids"]
        targets[row, :len(item["targets"])] = item["targets"]
    return {
        "pixels": torch.stack([item["pixels"] for item in batch]),
        "mask": torch.stack([item["mask"] for item in batch]),
        "ids": ids,
        "targets": targets,
    }

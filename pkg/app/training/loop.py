"""
End-to-end training over CRD triplets.
"""
import csv
import logging
import os
from dataclasses import dataclass, field
from functools import partial
from typing import List, NamedTuple, Optional

import numpy as np
import torch
from torch.nn.utils import clip_grad_norm_
from torch.utils.data import DataLoader

from core.exceptions import DataError, NumericError
from crd.pipeline import read_triplets
from evaluation.metrics import dsc
from segmenter.checkpoint import save_checkpoint
from segmenter.layers import apply_lora
from segmenter.model import Segmenter
from segmenter.prompts import build_vocabulary
from training.data import TripletDataset, class_names, collate
from training.losses import (
    LossWeights,
    bce_loss,
    dice_loss,
    poly_lr,
    text_ce_loss,
    total_loss,
)


logger = logging.getLogger(__name__)

LOSS_COLUMNS = ("step", "lr", "text_loss", "bce_loss", "dice_loss", "total")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 5
    batch_size: int = 2
    learning_rate: float = 1e-3
    poly_power: float = 0.9
    grad_clip: float = 1.0
    seed: int = 0
    weights: LossWeights = field(default_factory=LossWeights)
    lora_rank: int = 0
    lora_alpha: float = 8.0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.poly_power <= 0:
            raise ValueError("poly_power must be positive")
        if self.grad_clip < 0:
            raise ValueError("grad_clip must be non-negative")
        if self.lora_rank < 0:
            raise ValueError("lora_rank must be non-negative")
        if self.lora_rank and self.lora_alpha <= 0:
            raise ValueError("lora_alpha must be positive")

    @classmethod
    def from_run_config(cls, config):
        train = config["train"]
        return cls(
            epochs=train["epochs"],
            batch_size=train["batch_size"],
            learning_rate=train["learning_rate"],
            poly_power=train["poly_power"],
            grad_clip=train["grad_clip"],
            seed=config["seed"],
            weights=LossWeights(
                text=train["text_weight"],
                bce=train["bce_weight"],
                dice=train["dice_weight"],
                dice_smooth=train["dice_smooth"],
            ),
            lora_rank=train["lora_rank"],
            lora_alpha=train["lora_alpha"],
        )


class LossRecord(NamedTuple):
    step: int
    lr: float
    text_loss: float
    bce_loss: float
    dice_loss: float
    total: float


class TrainResult(NamedTuple):
    best_path: str
    last_path: str
    loss_curve_path: str
    losses: List[LossRecord]
    best_score: float
    model: Segmenter


def split_score(model, dataset):
    """Mean DSC of full inference over a dataset's examples."""
    model.eval()
    scores = []
    for example in dataset.examples:
        result = model.segment(example.image(), example.class_name,
                               example.modality)
        scores.append(dsc(result.mask, example.mask))
    model.train()
    return float(np.mean(scores))


def build_model(model_config, train_config, tokenizer):
    model = Segmenter.build(model_config, tokenizer)
    if train_config.lora_rank:
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(train_config.seed)
            apply_lora(model.lm, train_config.lora_rank,
                       train_config.lora_alpha)
    return model


def train_step(model, batch, weights):
    """Forward one batch and return (total, components)."""
    logits, mask_logits = model(batch["pixels"], batch["ids"])
    probabilities = torch.sigmoid(mask_logits)
    text = text_ce_loss(logits, batch["targets"])
    bce = bce_loss(probabilities, batch["mask"])
    dice = dice_loss(probabilities, batch["mask"], weights.dice_smooth)
    return total_loss(text, bce, dice, weights), (text, bce, dice)


def train_loop(triplets_path, model_config, train_config, out_dir,
               tokenizer=None):
    """Train on the ``train`` split and keep the best-on-tune checkpoint.

    Without tune examples the epoch with the lowest mean training loss
    wins. ``last.ckpt`` is written after every epoch. A non-finite loss
    raises NumericError and leaves the saved checkpoints untouched.
    """
    triplets = read_triplets(triplets_path)
    if tokenizer is None:
        modalities = list(model_config.modalities)
        for triplet in triplets:
            if triplet.modality not in modalities:
                modalities.append(triplet.modality)
        tokenizer = build_vocabulary(class_names(triplets), modalities)

    train_set = TripletDataset(triplets_path, "train", tokenizer,
                               model_config, triplets)
    if not len(train_set):
        raise DataError(f"{triplets_path} has no training examples")
    tune_set = TripletDataset(triplets_path, "tune", tokenizer,
                              model_config, triplets)

    model = build_model(model_config, train_config, tokenizer)
    model.train()
    trainable = [p for p in model.parameters() if p.requires_grad]
    optimizer = torch.optim.Adam(trainable, lr=train_config.learning_rate)
    generator = torch.Generator().manual_seed(train_config.seed)
    loader = DataLoader(
        train_set,
        batch_size=train_config.batch_size,
        shuffle=True,
        generator=generator,
        collate_fn=partial(collate, pad_id=tokenizer.pad_id),
    )
    total_steps = train_config.epochs * len(loader)

    os.makedirs(out_dir, exist_ok=True)
    best_path = os.path.join(out_dir, "best.ckpt")
    last_path = os.path.join(out_dir, "last.ckpt")
    curve_path = os.path.join(out_dir, "loss_curve.csv")
    losses = []
    best: Optional[float] = None
    step = 0

    with open(curve_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(LOSS_COLUMNS)
        for epoch in range(1, train_config.epochs + 1):
            epoch_losses = []
            for batch in loader:
                lr = poly_lr(step, total_steps, train_config.learning_rate,
                             train_config.poly_power)
                for group in optimizer.param_groups:
                    group["lr"] = lr
                try:
                    loss, parts = train_step(model, batch,
                                             train_config.weights)
                except NumericError:
                    logger.error("non-finite loss at step %d; best "
                                 "checkpoint kept at %s", step, best_path)
                    raise
                optimizer.zero_grad()
                loss.backward()
                if train_config.grad_clip:
                    clip_grad_norm_(trainable, train_config.grad_clip)
                optimizer.step()

                record = LossRecord(step, lr, *(p.item() for p in parts),
                                    loss.item())
                losses.append(record)
                writer.writerow([record.step] + [
                    f"{value:.8g}" for value in record[1:]
                ])
                epoch_losses.append(record.total)
                step += 1

            if len(tune_set):
                score = split_score(model, tune_set)
                improved = best is None or score > best
            else:
                score = float(np.mean(epoch_losses))
                improved = best is None or score < best
            logger.info("epoch %d/%d: mean loss %.4f, selection score %.4f",
                        epoch, train_config.epochs,
                        float(np.mean(epoch_losses)), score)
            if improved:
                best = score
                save_checkpoint(model, best_path, epoch=epoch, score=score)
            save_checkpoint(model, last_path, epoch=epoch, score=score)

    model.eval()
    return TrainResult(best_path, last_path, curve_path, losses, best, model)

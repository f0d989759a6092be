"""
Training objective: text cross-entropy plus per-pixel BCE and dice.
"""
import math
from dataclasses import dataclass

import torch
from torch.nn import functional as F

from core.exceptions import NumericError


IGNORE_INDEX = -100
BCE_CLAMP = 1e-7


@dataclass(frozen=True)
class LossWeights:
    text: float = 1.0
    bce: float = 1.0
    dice: float = 1.0
    dice_smooth: float = 1e-5

    def __post_init__(self):
        weights = (self.text, self.bce, self.dice)
        if any(weight < 0 for weight in weights):
            raise ValueError("loss weights must be non-negative")
        if not any(weight > 0 for weight in weights):
            raise ValueError("at least one loss weight must be positive")
        if self.dice_smooth <= 0:
            raise ValueError("dice_smooth must be positive")


def _check_masks(probabilities, gt):
    if probabilities.shape != gt.shape:
        raise ValueError(
            f"probabilities {tuple(probabilities.shape)} and ground truth "
            f"{tuple(gt.shape)} differ in shape"
        )
    if probabilities.numel() == 0:
        raise ValueError("masks are empty")
    if bool((probabilities < 0).any()) or bool((probabilities > 1).any()):
        raise ValueError("probabilities must lie in [0, 1]")
    if not bool(((gt == 0) | (gt == 1)).all()):
        raise ValueError("ground truth must be binary")


def _per_mask(tensor):
    # H x W is one mask; anything with a leading batch axis is B masks.
    if tensor.dim() <= 2:
        return tensor.reshape(1, -1)
    return tensor.reshape(tensor.shape[0], -1)


def dice_loss(probabilities, gt, smooth=1e-5):
    """Soft dice loss, averaged over masks when a batch is given."""
    _check_masks(probabilities, gt)
    p = _per_mask(probabilities)
    g = _per_mask(gt).to(p.dtype)
    numerator = 2 * (p * g).sum(-1) + smooth
    denominator = p.sum(-1) + g.sum(-1) + smooth
    return (1 - numerator / denominator).mean()


def bce_loss(probabilities, gt):
    """Mean per-pixel binary cross-entropy on clamped probabilities."""
    _check_masks(probabilities, gt)
    p = probabilities.clamp(BCE_CLAMP, 1 - BCE_CLAMP)
    g = gt.to(p.dtype)
    return -(g * torch.log(p) + (1 - g) * torch.log(1 - p)).mean()


def text_ce_loss(logits, targets):
    """Mean next-token NLL over positions whose target is not ignored.

    ``targets`` are already shifted: ``targets[t]`` is the token that
    should follow position ``t``.
    """
    if logits.shape[:-1] != targets.shape:
        raise ValueError(
            f"logits cover {tuple(logits.shape[:-1])} positions, targets "
            f"{tuple(targets.shape)}"
        )
    if not bool((targets != IGNORE_INDEX).any()):
        raise ValueError("every target position is masked out")
    return F.cross_entropy(
        logits.reshape(-1, logits.shape[-1]),
        targets.reshape(-1),
        ignore_index=IGNORE_INDEX,
    )


def total_loss(text, bce, dice, weights):
    """Weighted sum of the three components; non-finite input aborts."""
    for name, value in (("text", text), ("bce", bce), ("dice", dice)):
        if torch.is_tensor(value):
            value = value.detach().item()
        if not math.isfinite(value):
            raise NumericError(f"{name} loss is not finite: {value}")
    return weights.text * text + weights.bce * bce + weights.dice * dice


def poly_lr(step, total_steps, base_lr, power=1.0):
    """Polynomial decay from ``base_lr`` at step 0 to 0 at the last step."""
    if total_steps < 1:
        raise ValueError("total_steps must be at least 1")
    if not 0 <= step <= total_steps:
        raise ValueError(f"step {step} outside [0, {total_steps}]")
    if power <= 0:
        raise ValueError("power must be positive")
    return base_lr * (1 - step / total_steps) ** power

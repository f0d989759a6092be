"""
The segmentation model: vision encoder, bidirectional projections, causal
LM with a segmentation token, and the mask decoder.
"""
import logging
from dataclasses import dataclass
from typing import List, NamedTuple, Optional

import numpy as np
import torch
from torch import nn

from core.exceptions import (
    DataError,
    DimensionMismatchError,
    NumericError,
    SegmentationError,
    StageError,
)
from segmenter.decoder import MaskDecoder
from segmenter.layers import CausalLM, Projection, VisionEncoder
from segmenter.prompts import render_prompt


logger = logging.getLogger(__name__)

NO_MASK_MARKER = "[NO-MASK]"


@dataclass
class PatchEmbeddingGrid:
    """N x C_v vision features laid out on a grid_h x grid_w grid."""
    tokens: torch.Tensor
    grid_h: int
    grid_w: int

    def __post_init__(self):
        if self.tokens.dim() != 2:
            raise DataError("grid tokens must be an N x C matrix")
        if self.tokens.shape[0] != self.grid_h * self.grid_w:
            raise DataError(
                f"{self.tokens.shape[0]} tokens do not fill a "
                f"{self.grid_h}x{self.grid_w} grid"
            )
        if not torch.isfinite(self.tokens).all():
            raise NumericError("grid tokens are not finite")

    @property
    def count(self):
        return self.tokens.shape[0]


class GenerationOutput(NamedTuple):
    text: str
    token_ids: List[int]
    seg_hidden: Optional[torch.Tensor]
    image_hidden: torch.Tensor


class MaskPrediction(NamedTuple):
    probabilities: torch.Tensor
    binary: torch.Tensor


class SegmentationResult(NamedTuple):
    text: str
    mask: np.ndarray
    probabilities: np.ndarray
    generation: GenerationOutput

    @property
    def has_mask(self):
        return self.generation.seg_hidden is not None


def expand_prompt(tokenizer, user_text, num_patches):
    """Token ids of the prompt with the placeholder repeated N times."""
    ids = tokenizer.encode(user_text)
    image_id = tokenizer.image_id
    if ids.count(image_id) != 1:
        raise ValueError(
            "prompt must contain the image placeholder exactly once"
        )
    at = ids.index(image_id)
    return ids[:at] + [image_id] * num_patches + ids[at + 1:]


class Segmenter(nn.Module):
    """Language-driven segmenter.

    The LM reads the prompt with the ``<image>`` placeholder replaced by
    the projected vision tokens. The last-layer state at the first
    ``[SEG]`` is projected into a decoder prompt; the decoder reads the
    vision grid fused with the language-to-vision feedback.
    """

    def __init__(self, config, tokenizer):
        super().__init__()
        self.config = config
        self.tokenizer = tokenizer
        self.vision = VisionEncoder(config)
        self.v2l = Projection(config.vision_width, config.language_width)
        self.l2v = Projection(config.language_width, config.vision_width)
        self.lm = CausalLM(config, len(tokenizer))
        self.seg_head = Projection(config.language_width, config.vision_width)
        self.decoder = MaskDecoder(config)

    @classmethod
    def build(cls, config, tokenizer):
        """Fresh weights drawn from ``config.seed``."""
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(config.seed)
            return cls(config, tokenizer)

    def image_tensor(self, image):
        size = self.config.image_size
        if (image.height, image.width) != (size, size):
            raise DimensionMismatchError(
                f"{image.sample_id}: image is {image.height}x{image.width}, "
                f"model expects {size}x{size}"
            )
        return torch.from_numpy(np.ascontiguousarray(image.pixels))[
            None, None].float()

    def encode_image(self, image):
        with torch.no_grad():
            tokens = self.vision(self.image_tensor(image))[0]
        side = self.config.grid_size
        return PatchEmbeddingGrid(tokens, side, side)

    def project_v2l(self, features):
        return self.v2l(features)

    def project_l2v(self, features):
        return self.l2v(features)

    def prompt_ids(self, user_text):
        return expand_prompt(self.tokenizer, user_text,
                             self.config.num_patches)

    def run_lm(self, ids, vision_language):
        """LM forward with image positions holding projected vision tokens."""
        embeds = self.lm.embed(ids)
        image_positions = ids == self.tokenizer.image_id
        per_row = image_positions.sum(dim=1)
        if not bool((per_row == vision_language.shape[1]).all()):
            raise DataError("image placeholder count does not match grid")
        embeds = embeds.masked_scatter(
            image_positions[..., None].expand_as(embeds),
            vision_language.to(embeds.dtype),
        )
        return self.lm(embeds)

    def feedback(self, vision_language, hidden, ids):
        """Language-to-vision features E_lv for the fused grid."""
        if self.config.feedback_source == "lm_hidden":
            batch = ids.shape[0]
            image_hidden = hidden[ids == self.tokenizer.image_id].view(
                batch, self.config.num_patches, -1
            )
            return self.l2v(image_hidden)
        return self.l2v(vision_language)

    def decode_mask(self, seg_proj, fused, pixels):
        if seg_proj is None:
            raise ValueError("no segmentation prompt to decode")
        probabilities = torch.sigmoid(self.decoder(seg_proj, fused, pixels))
        binary = (probabilities >= self.config.threshold).to(torch.uint8)
        return MaskPrediction(probabilities, binary)

    def forward(self, pixels, ids):
        """Training pass over the full target sequence.

        Returns next-token logits and mask logits; every row of ``ids``
        must hold a ``[SEG]`` token.
        """
        features = self.vision(pixels)
        vision_language = self.v2l(features)
        hidden, logits = self.run_lm(ids, vision_language)
        is_seg = ids == self.tokenizer.seg_id
        if not bool(is_seg.any(dim=1).all()):
            raise DataError("every training sequence needs a [SEG] token")
        first = is_seg.int().argmax(dim=1)
        seg_hidden = hidden[torch.arange(ids.shape[0]), first]
        fused = features + self.feedback(vision_language, hidden, ids)
        mask_logits = self.decoder(self.seg_head(seg_hidden), fused, pixels)
        return logits, mask_logits

    @torch.no_grad()
    def generate_text(self, grid, user_text):
        """Greedy decoding from the prompt."""
        ids = self.prompt_ids(user_text)
        vision_language = self.v2l(grid.tokens[None])
        limit = self.config.max_positions
        generated = []
        for _ in range(self.config.max_new_tokens):
            if len(ids) + len(generated) >= limit:
                break
            _, logits = self.run_lm(torch.tensor([ids + generated]),
                                    vision_language)
            token = int(logits[0, -1].argmax())
            generated.append(token)
            if token == self.tokenizer.eos_id:
                break

        sequence = torch.tensor([(ids + generated)[:limit]])
        hidden, _ = self.run_lm(sequence, vision_language)
        seg_hidden = None
        if self.tokenizer.seg_id in generated:
            position = len(ids) + generated.index(self.tokenizer.seg_id)
            if position < limit:
                seg_hidden = hidden[0, position]
        image_hidden = hidden[0][sequence[0] == self.tokenizer.image_id]
        return GenerationOutput(self.tokenizer.decode(generated), generated,
                                seg_hidden, image_hidden)

    @torch.no_grad()
    def segment(self, image, class_name, modality, fuse=None):
        """Text and binary mask for one image and class.

        ``fuse(features, feedback)`` replaces the default sum that feeds
        the decoder.
        """
        stage = "encode"
        try:
            pixels = self.image_tensor(image)
            features = self.vision(pixels)
            grid = PatchEmbeddingGrid(features[0], self.config.grid_size,
                                      self.config.grid_size)
            stage = "prompt"
            prompt = render_prompt(class_name, modality)
            stage = "generate"
            generation = self.generate_text(grid, prompt.user_text)
            if generation.seg_hidden is None:
                logger.info("%s: no [SEG] generated", image.sample_id)
                empty = np.zeros((image.height, image.width), np.uint8)
                return SegmentationResult(
                    f"{generation.text} {NO_MASK_MARKER}".strip(), empty,
                    empty.astype(np.float32), generation,
                )
            stage = "decode"
            vision_language = self.v2l(features)
            if self.config.feedback_source == "lm_hidden":
                feedback = self.l2v(generation.image_hidden[None])
            else:
                feedback = self.l2v(vision_language)
            fused = fuse(features, feedback) if fuse else features + feedback
            prediction = self.decode_mask(
                self.seg_head(generation.seg_hidden[None]), fused, pixels
            )
        except (SegmentationError, ValueError, RuntimeError) as exc:
            raise StageError(stage, exc) from exc
        return SegmentationResult(
            generation.text,
            prediction.binary[0].numpy(),
            prediction.probabilities[0].numpy(),
            generation,
        )

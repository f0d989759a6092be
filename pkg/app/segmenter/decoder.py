"""
Prompt-conditioned mask decoder.

Two-way attention between the prompt tokens and the fused patch grid, a
transposed-convolution upsampler with a hypernetwork readout, and an
image-guided refinement head at full resolution that reads the coarse
logits beside the raw and standardized image.
"""
import torch
from torch import nn
from torch.nn import functional as F

from segmenter.layers import Attention


def standardize(pixels):
    """Per-image zero mean and unit variance."""
    mean = pixels.mean(dim=(-2, -1), keepdim=True)
    std = pixels.std(dim=(-2, -1), keepdim=True)
    return (pixels - mean) / (std + 1e-6)


class TwoWayBlock(nn.Module):
    """Tokens attend to themselves and the grid; the grid attends back."""

    def __init__(self, width, heads):
        super().__init__()
        self.self_attn = Attention(width, heads)
        self.norm1 = nn.LayerNorm(width)
        self.token_to_grid = Attention(width, heads)
        self.norm2 = nn.LayerNorm(width)
        self.mlp = nn.Sequential(
            nn.Linear(width, 2 * width), nn.GELU(),
            nn.Linear(2 * width, width),
        )
        self.norm3 = nn.LayerNorm(width)
        self.grid_to_token = Attention(width, heads)
        self.norm4 = nn.LayerNorm(width)

    def forward(self, tokens, grid, grid_position):
        tokens = self.norm1(tokens + self.self_attn(tokens))
        tokens = self.norm2(
            tokens + self.token_to_grid(tokens, grid + grid_position)
        )
        tokens = self.norm3(tokens + self.mlp(tokens))
        grid = self.norm4(grid + self.grid_to_token(grid + grid_position,
                                                     tokens))
        return tokens, grid


class MaskDecoder(nn.Module):

    def __init__(self, config):
        super().__init__()
        width = config.vision_width
        self.grid_size = config.grid_size
        self.image_size = config.image_size
        self.output_token = nn.Parameter(torch.randn(1, 1, width) * 0.02)
        self.grid_position = nn.Parameter(
            torch.randn(1, config.num_patches, width) * 0.02
        )
        self.blocks = nn.ModuleList(
            TwoWayBlock(width, config.vision_heads)
            for _ in range(config.decoder_depth)
        )
        self.final_attn = Attention(width, config.vision_heads)
        self.final_norm = nn.LayerNorm(width)
        self.upscale = nn.Sequential(
            nn.ConvTranspose2d(width, width // 2, kernel_size=2, stride=2),
            nn.GELU(),
            nn.ConvTranspose2d(width // 2, width // 4, kernel_size=2,
                               stride=2),
            nn.GELU(),
        )
        self.hypernetwork = nn.Sequential(
            nn.Linear(width, width), nn.GELU(),
            nn.Linear(width, width // 4),
        )
        refine = config.refine_width
        self.refine = nn.Sequential(
            nn.Conv2d(3, refine, kernel_size=3, padding=1), nn.GELU(),
            nn.Conv2d(refine, refine, kernel_size=3, padding=2, dilation=2),
            nn.GELU(),
            nn.Conv2d(refine, refine, kernel_size=3, padding=1), nn.GELU(),
            nn.Conv2d(refine, 1, kernel_size=3, padding=1),
        )
        nn.init.zeros_(self.refine[-1].weight)
        nn.init.zeros_(self.refine[-1].bias)

    def forward(self, prompt, grid, pixels):
        """Mask logits at image resolution.

        ``prompt`` is B x C_v, ``grid`` B x N x C_v, ``pixels`` B x 1 x H x W.
        """
        batch, count, width = grid.shape
        if count != self.grid_size ** 2:
            raise ValueError(f"decoder expects {self.grid_size ** 2} grid "
                             f"tokens, got {count}")
        tokens = torch.cat(
            [self.output_token.expand(batch, -1, -1), prompt[:, None, :]],
            dim=1,
        )
        position = self.grid_position.expand(batch, -1, -1)
        for block in self.blocks:
            tokens, grid = block(tokens, grid, position)
        tokens = self.final_norm(
            tokens + self.final_attn(tokens, grid + position)
        )

        spatial = grid.transpose(1, 2).reshape(
            batch, width, self.grid_size, self.grid_size
        )
        upscaled = self.upscale(spatial)
        weights = self.hypernetwork(tokens[:, 0])
        coarse = torch.einsum("bc,bchw->bhw", weights, upscaled)[:, None]
        coarse = F.interpolate(coarse, size=pixels.shape[-2:],
                               mode="bilinear", align_corners=False)
        logits = coarse + self.refine(
            torch.cat([coarse, pixels, standardize(pixels)], dim=1)
        )
        return logits[:, 0]

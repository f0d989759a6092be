"""
Transformer building blocks shared by the vision encoder and the LM.
"""
import math

import torch
from torch import nn
from torch.nn import functional as F


class Attention(nn.Module):
    """Multi-head attention with separate q/k/v/o projections.

    Separate projections keep the query and value maps wrappable by
    low-rank adapters.
    """

    def __init__(self, width, heads, causal=False):
        super().__init__()
        self.heads = heads
        self.causal = causal
        self.q = nn.Linear(width, width)
        self.k = nn.Linear(width, width)
        self.v = nn.Linear(width, width)
        self.o = nn.Linear(width, width)

    def _split(self, x):
        batch, length, width = x.shape
        return x.view(batch, length, self.heads, width // self.heads) \
            .transpose(1, 2)

    def forward(self, x, context=None):
        context = x if context is None else context
        q = self._split(self.q(x))
        k = self._split(self.k(context))
        v = self._split(self.v(context))
        scores = q @ k.transpose(-2, -1) / math.sqrt(q.shape[-1])
        if self.causal:
            length = x.shape[1]
            blocked = torch.ones(length, length, dtype=torch.bool,
                                 device=x.device).triu(1)
            scores = scores.masked_fill(blocked, float("-inf"))
        out = scores.softmax(dim=-1) @ v
        batch, _, length, _ = out.shape
        return self.o(out.transpose(1, 2).reshape(batch, length, -1))


class TransformerBlock(nn.Module):
    """Pre-norm attention and MLP, both residual."""

    def __init__(self, width, heads, causal=False):
        super().__init__()
        self.norm1 = nn.LayerNorm(width)
        self.attn = Attention(width, heads, causal=causal)
        self.norm2 = nn.LayerNorm(width)
        self.mlp = nn.Sequential(
            nn.Linear(width, 4 * width),
            nn.GELU(),
            nn.Linear(4 * width, width),
        )

    def forward(self, x):
        x = x + self.attn(self.norm1(x))
        return x + self.mlp(self.norm2(x))


class Projection(nn.Module):
    """Two-layer perceptron with a GELU between the layers."""

    def __init__(self, in_width, out_width):
        super().__init__()
        self.in_width = in_width
        self.out_width = out_width
        self.fc1 = nn.Linear(in_width, out_width)
        self.fc2 = nn.Linear(out_width, out_width)

    def forward(self, x):
        if x.shape[-1] != self.in_width:
            raise ValueError(
                f"projection expects width {self.in_width}, "
                f"got {x.shape[-1]}"
            )
        return self.fc2(F.gelu(self.fc1(x)))


class VisionEncoder(nn.Module):
    """Patchify, add positions, run non-causal transformer blocks."""

    def __init__(self, config):
        super().__init__()
        width = config.vision_width
        self.patchify = nn.Conv2d(1, width, kernel_size=config.patch_size,
                                  stride=config.patch_size)
        self.position = nn.Parameter(
            torch.randn(1, config.num_patches, width) * 0.02
        )
        self.blocks = nn.ModuleList(
            TransformerBlock(width, config.vision_heads)
            for _ in range(config.vision_depth)
        )
        self.norm = nn.LayerNorm(width)

    def forward(self, pixels):
        """B x 1 x H x W intensities to B x N x C_v last-layer features."""
        x = self.patchify(pixels).flatten(2).transpose(1, 2)
        x = x + self.position
        for block in self.blocks:
            x = block(x)
        return self.norm(x)


class CausalLM(nn.Module):
    """Decoder-only language model over embeddings."""

    def __init__(self, config, vocab_size):
        super().__init__()
        width = config.language_width
        self.embed = nn.Embedding(vocab_size, width)
        self.position = nn.Parameter(
            torch.randn(1, config.max_positions, width) * 0.02
        )
        self.blocks = nn.ModuleList(
            TransformerBlock(width, config.lm_heads, causal=True)
            for _ in range(config.lm_depth)
        )
        self.norm = nn.LayerNorm(width)
        self.head = nn.Linear(width, vocab_size, bias=False)

    def forward(self, embeds):
        """Return (last-layer hidden states, next-token logits)."""
        length = embeds.shape[1]
        if length > self.position.shape[1]:
            raise ValueError(
                f"sequence of {length} exceeds {self.position.shape[1]} "
                f"positions"
            )
        x = embeds + self.position[:, :length]
        for block in self.blocks:
            x = block(x)
        hidden = self.norm(x)
        return hidden, self.head(hidden)


class LoRALinear(nn.Module):
    """A frozen linear map plus a trainable low-rank update."""

    def __init__(self, base, rank, alpha):
        super().__init__()
        if rank < 1 or alpha <= 0:
            raise ValueError("adapters need rank >= 1 and alpha > 0")
        self.base = base
        self.scale = alpha / rank
        self.lora_a = nn.Parameter(
            torch.randn(rank, base.in_features) / math.sqrt(base.in_features)
        )
        self.lora_b = nn.Parameter(torch.zeros(base.out_features, rank))
        for param in self.base.parameters():
            param.requires_grad = False

    def forward(self, x):
        return self.base(x) + (x @ self.lora_a.t() @ self.lora_b.t()) \
            * self.scale

    def merged_weight(self):
        return self.base.weight + self.scale * self.lora_b @ self.lora_a


def apply_lora(lm, rank, alpha):
    """Freeze the LM and wrap every query and value projection."""
    for param in lm.parameters():
        param.requires_grad = False
    for block in lm.blocks:
        block.attn.q = LoRALinear(block.attn.q, rank, alpha)
        block.attn.v = LoRALinear(block.attn.v, rank, alpha)
    return lm


def plain_state_dict(model):
    """State dict with adapters merged into the weights they wrap."""
    state = {}
    adapted = {
        name: module for name, module in model.named_modules()
        if isinstance(module, LoRALinear)
    }
    for key, value in model.state_dict().items():
        owner = next((name for name in adapted
                      if key.startswith(name + ".")), None)
        if owner is None:
            state[key] = value
    for name, module in adapted.items():
        state[f"{name}.weight"] = module.merged_weight().detach()
        state[f"{name}.bias"] = module.base.bias.detach()
    return state

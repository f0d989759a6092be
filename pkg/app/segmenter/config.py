"""
Model hyperparameters.
"""
from dataclasses import asdict, dataclass, field, fields
from typing import List


@dataclass(frozen=True)
class ModelConfig:
    image_size: int = 64
    patch_size: int = 16
    vision_width: int = 64
    language_width: int = 128
    vision_depth: int = 2
    vision_heads: int = 4
    lm_depth: int = 4
    lm_heads: int = 4
    decoder_depth: int = 2
    refine_width: int = 32
    max_text_tokens: int = 96
    max_new_tokens: int = 32
    threshold: float = 0.5
    feedback_source: str = "projection"
    modalities: List[str] = field(default_factory=lambda: ["CT", "MR"])
    seed: int = 0

    def __post_init__(self):
        if self.image_size % self.patch_size:
            raise ValueError(
                f"image_size {self.image_size} is not a multiple of "
                f"patch_size {self.patch_size}"
            )
        if self.vision_width % self.vision_heads:
            raise ValueError("vision_width must divide into vision_heads")
        if self.language_width % self.lm_heads:
            raise ValueError("language_width must divide into lm_heads")
        if self.vision_width % 4:
            raise ValueError("vision_width must be a multiple of 4")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")
        if self.feedback_source not in ("projection", "lm_hidden"):
            raise ValueError(
                f"unknown feedback_source {self.feedback_source!r}"
            )
        object.__setattr__(self, "modalities", list(self.modalities))

    @property
    def grid_size(self):
        return self.image_size // self.patch_size

    @property
    def num_patches(self):
        return self.grid_size ** 2

    @property
    def max_positions(self):
        return self.max_text_tokens + self.num_patches

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})

    @classmethod
    def from_run_config(cls, config):
        """Build from a validated run configuration."""
        return cls.from_dict(dict(config["model"], seed=config["seed"]))

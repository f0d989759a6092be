"""
Run configuration: settings defaults, JSON file, then flag overrides.
"""
import copy
import json
import os

from django.conf import settings
from rest_framework import serializers

from core.exceptions import MissingArtifactError


class StrictSerializer(serializers.Serializer):
    """Serializer that rejects keys it does not declare."""

    def to_internal_value(self, data):
        if isinstance(data, dict):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError(
                    {key: ["Unknown configuration key."] for key in unknown}
                )
        return super().to_internal_value(data)


class ModelSectionSerializer(StrictSerializer):
    image_size = serializers.IntegerField(min_value=1)
    patch_size = serializers.IntegerField(min_value=1)
    vision_width = serializers.IntegerField(min_value=1)
    language_width = serializers.IntegerField(min_value=1)
    vision_depth = serializers.IntegerField(min_value=1)
    vision_heads = serializers.IntegerField(min_value=1)
    lm_depth = serializers.IntegerField(min_value=1)
    lm_heads = serializers.IntegerField(min_value=1)
    decoder_depth = serializers.IntegerField(min_value=1)
    refine_width = serializers.IntegerField(min_value=1)
    max_text_tokens = serializers.IntegerField(min_value=8)
    max_new_tokens = serializers.IntegerField(min_value=1)
    threshold = serializers.FloatField(min_value=0.0, max_value=1.0)
    feedback_source = serializers.ChoiceField(
        choices=["projection", "lm_hidden"]
    )
    modalities = serializers.ListField(
        child=serializers.CharField(), allow_empty=False
    )

    def validate(self, attrs):
        if attrs["image_size"] % attrs["patch_size"]:
            raise serializers.ValidationError(
                "image_size must be a multiple of patch_size."
            )
        if attrs["vision_width"] % attrs["vision_heads"]:
            raise serializers.ValidationError(
                "vision_width must divide evenly into vision_heads."
            )
        if attrs["language_width"] % attrs["lm_heads"]:
            raise serializers.ValidationError(
                "language_width must divide evenly into lm_heads."
            )
        return attrs


class TrainSectionSerializer(StrictSerializer):
    epochs = serializers.IntegerField(min_value=1)
    batch_size = serializers.IntegerField(min_value=1)
    learning_rate = serializers.FloatField()
    poly_power = serializers.FloatField()
    grad_clip = serializers.FloatField(min_value=0.0)
    text_weight = serializers.FloatField(min_value=0.0)
    bce_weight = serializers.FloatField(min_value=0.0)
    dice_weight = serializers.FloatField(min_value=0.0)
    dice_smooth = serializers.FloatField()
    lora_rank = serializers.IntegerField(min_value=0)
    lora_alpha = serializers.FloatField()

    def validate(self, attrs):
        if attrs["learning_rate"] <= 0:
            raise serializers.ValidationError("learning_rate must be > 0.")
        if attrs["poly_power"] <= 0:
            raise serializers.ValidationError("poly_power must be > 0.")
        if attrs["dice_smooth"] <= 0:
            raise serializers.ValidationError("dice_smooth must be > 0.")
        weights = (attrs["text_weight"], attrs["bce_weight"],
                   attrs["dice_weight"])
        if not any(weight > 0 for weight in weights):
            raise serializers.ValidationError(
                "at least one loss weight must be positive."
            )
        if attrs["lora_rank"] and attrs["lora_alpha"] <= 0:
            raise serializers.ValidationError("lora_alpha must be > 0.")
        return attrs


def color_field():
    return serializers.ListField(
        child=serializers.IntegerField(min_value=0, max_value=255),
        min_length=3,
        max_length=3,
    )


class PaletteSectionSerializer(StrictSerializer):
    background = color_field()
    colors = serializers.ListField(child=color_field(), allow_empty=True)


class DescriberSectionSerializer(StrictSerializer):
    endpoint = serializers.CharField(allow_blank=True)
    timeout = serializers.FloatField()
    retries = serializers.IntegerField(min_value=0)
    max_in_flight = serializers.IntegerField(min_value=1)
    prompt = serializers.CharField()
    blocky_compactness = serializers.FloatField(min_value=0.0,
                                                max_value=1.0)
    elongated_ratio = serializers.FloatField(min_value=1.0)

    def validate_timeout(self, value):
        if value <= 0:
            raise serializers.ValidationError("timeout must be > 0.")
        return value


class EvalSectionSerializer(StrictSerializer):
    both_empty_dsc = serializers.FloatField(min_value=0.0, max_value=1.0)
    loose_box_shift = serializers.FloatField(min_value=0.0, max_value=1.0)
    prompt_modes = serializers.ListField(
        child=serializers.ChoiceField(
            choices=["none", "point", "tight_box", "loose_box"]
        ),
        allow_empty=True,
    )


class PathsSectionSerializer(StrictSerializer):
    work_dir = serializers.CharField()


class RunConfigSerializer(StrictSerializer):
    """Schema of the whole run configuration."""
    seed = serializers.IntegerField()
    model = ModelSectionSerializer()
    train = TrainSectionSerializer()
    palette = PaletteSectionSerializer()
    describer = DescriberSectionSerializer()
    eval = EvalSectionSerializer()
    paths = PathsSectionSerializer()


def deep_merge(base, override):
    """Return ``base`` with ``override`` merged in; nested dicts merge."""
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_run_config(path=None, overrides=None):
    """Merge defaults, the JSON file at ``path`` and ``overrides``.

    Raises ``serializers.ValidationError`` for schema violations.
    """
    document = copy.deepcopy(settings.SEGMENTATION)
    if path:
        if not os.path.exists(path):
            raise MissingArtifactError(f"config file {path} does not exist")
        with open(path, encoding="utf-8") as reader:
            document = deep_merge(document, json.load(reader))
    if overrides:
        document = deep_merge(document, overrides)
    serializer = RunConfigSerializer(data=document)
    serializer.is_valid(raise_exception=True)
    return serializer.validated_data

"""
Serializers for triplet records and the remote describer wire format
"""
from rest_framework import serializers

from core.models import PROVENANCES, SPLITS, CategoryEntry, Triplet


class CategoryEntrySerializer(serializers.Serializer):
    label = serializers.IntegerField(min_value=1)
    name = serializers.CharField()
    color = serializers.ListField(
        child=serializers.IntegerField(min_value=0, max_value=255),
        min_length=3,
        max_length=3,
    )


class TripletSerializer(serializers.Serializer):
    """Serializer for one JSONL triplet record."""
    image_ref = serializers.CharField()
    mask_ref = serializers.CharField()
    modality = serializers.CharField()
    category_entries = CategoryEntrySerializer(many=True)
    description = serializers.CharField(trim_whitespace=False)
    split = serializers.ChoiceField(choices=SPLITS)
    scan_id = serializers.CharField()
    sample_id = serializers.CharField(required=False, default="",
                                      allow_blank=True)
    provenance = serializers.ChoiceField(
        choices=PROVENANCES, required=False, default="deterministic"
    )

    def validate_category_entries(self, entries):
        colors = [tuple(entry["color"]) for entry in entries]
        if len(set(colors)) != len(colors):
            raise serializers.ValidationError(
                "category colors must be pairwise distinct."
            )
        return entries

    def create(self, validated_data):
        """Build a Triplet from validated data."""
        entries = [
            CategoryEntry(entry["label"], entry["name"],
                          tuple(entry["color"]))
            for entry in validated_data.pop("category_entries")
        ]
        return Triplet(category_entries=entries, **validated_data)


class DescribeRequestSerializer(serializers.Serializer):
    """Request body sent to a remote describer."""
    image_b64 = serializers.CharField()
    prompt = serializers.CharField()


class DescribeResponseSerializer(serializers.Serializer):
    """Response body expected from a remote describer."""
    text = serializers.CharField(trim_whitespace=False)

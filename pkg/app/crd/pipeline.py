"""
Turn a split manifest into image-mask-description triplets.
"""
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple, Optional

from core.exceptions import DataError, MissingArtifactError, SegmentationError
from core.io import load_pair, load_record, resolve_ref
from core.models import CategoryEntry, Triplet
from crd.describer import describe_regions
from crd.palette import colorize_mask, default_palette
from crd.remote import RemoteDescriberConfig, remote_describe
from crd.serializers import TripletSerializer


logger = logging.getLogger(__name__)

DETERMINISTIC = "deterministic"


class BuildResult(NamedTuple):
    path: str
    error_log: str
    written: int
    errors: int
    fallbacks: int


class RecordOutcome(NamedTuple):
    triplet: Optional[Triplet]
    error: Optional[dict]


def _relative(path, start):
    return os.path.relpath(os.path.abspath(path), start).replace(os.sep, "/")


def describe_record(manifest, record, palette, describer, out_dir,
                    thresholds=None):
    """Build the triplet of one manifest record.

    Failures come back as an error entry instead of being raised.
    """
    try:
        image, mask = load_record(manifest, record)
        mask.check_pairs_with(image)
        if record.split is None:
            raise DataError(f"{record.sample_id} has no split assignment")
        record_palette = palette or default_palette()
        entries = [
            CategoryEntry(label, name, record_palette.color_for(label))
            for label, name in sorted(mask.categories.items())
        ]
        if isinstance(describer, RemoteDescriberConfig):
            colored = colorize_mask(mask, record_palette)
            text, provenance = remote_describe(
                colored, describer, mask, record_palette, thresholds
            )
        else:
            text, _ = describe_regions(mask, record_palette, thresholds)
            provenance = DETERMINISTIC
        triplet = Triplet(
            image_ref=_relative(
                resolve_ref(manifest.root, record.image_ref), out_dir),
            mask_ref=_relative(
                resolve_ref(manifest.root, record.mask_ref), out_dir),
            modality=record.modality,
            category_entries=entries,
            description=text,
            split=record.split,
            scan_id=record.scan_id,
            sample_id=record.sample_id,
            provenance=provenance,
        )
        return RecordOutcome(triplet, None)
    except (SegmentationError, OSError, ValueError) as exc:
        logger.warning("skipping %s: %s", record.sample_id, exc)
        return RecordOutcome(None, {
            "sample_id": record.sample_id,
            "image_ref": record.image_ref,
            "mask_ref": record.mask_ref,
            "error": type(exc).__name__,
            "message": str(exc),
        })


def build_triplets(manifest, out_path, palette=None,
                   describer=DETERMINISTIC, error_log_path=None,
                   thresholds=None):
    """Describe every record of ``manifest`` and write the triplets JSONL.

    ``describer`` is ``"deterministic"`` or a RemoteDescriberConfig. Lines
    keep manifest order; records that fail are written to the error log
    and skipped.
    """
    out_path = os.path.abspath(out_path)
    out_dir = os.path.dirname(out_path)
    os.makedirs(out_dir, exist_ok=True)
    error_log_path = error_log_path or (
        os.path.splitext(out_path)[0] + ".errors.jsonl"
    )

    def work(record):
        return describe_record(manifest, record, palette, describer,
                               out_dir, thresholds)

    if isinstance(describer, RemoteDescriberConfig):
        with ThreadPoolExecutor(max_workers=describer.max_in_flight) as pool:
            outcomes = list(pool.map(work, manifest.records))
    elif describer == DETERMINISTIC:
        outcomes = [work(record) for record in manifest.records]
    else:
        raise ValueError(f"unknown describer {describer!r}")

    written = errors = fallbacks = 0
    with open(out_path, "w", encoding="utf-8") as writer, \
            open(error_log_path, "w", encoding="utf-8") as error_log:
        for outcome in outcomes:
            if outcome.error is not None:
                error_log.write(json.dumps(outcome.error) + "\n")
                errors += 1
                continue
            writer.write(json.dumps(outcome.triplet.to_record(),
                                    ensure_ascii=False) + "\n")
            written += 1
            fallbacks += outcome.triplet.provenance == "fallback"

    logger.info("wrote %d triplets to %s (%d errors, %d fallbacks)",
                written, out_path, errors, fallbacks)
    return BuildResult(out_path, error_log_path, written, errors, fallbacks)


def read_triplets(path):
    """Parse a triplets JSONL file; refs stay relative to its directory."""
    if not os.path.exists(path):
        raise MissingArtifactError(f"triplets file {path} does not exist")
    triplets = []
    with open(path, encoding="utf-8") as reader:
        for number, line in enumerate(reader, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except ValueError as exc:
                raise DataError(f"{path}:{number}: not JSON") from exc
            serializer = TripletSerializer(data=data)
            if not serializer.is_valid():
                raise DataError(f"{path}:{number}: {serializer.errors}")
            triplets.append(serializer.save())
    return triplets


def load_triplet(root, triplet):
    """Load the image and mask a triplet points at."""
    return load_pair(
        resolve_ref(root, triplet.image_ref),
        resolve_ref(root, triplet.mask_ref),
        categories={e.label: e.name for e in triplet.category_entries},
        sample_id=triplet.sample_id or None,
        scan_id=triplet.scan_id,
        modality=triplet.modality,
    )

"""
Adapted against unadapted segmentation of a class the model never saw.
"""
import csv
import logging
import math
import os
from typing import List, NamedTuple

import numpy as np

from core.splitting import grouped_split
from core.synthesis import synth_toy_dataset
from crd.pipeline import build_triplets
from evaluation.metrics import dsc
from otfa.adaptation import adapted_segment, register
from training.loop import train_loop


logger = logging.getLogger(__name__)

CSV_COLUMNS = ("sample_id", "exemplar_id", "unadapted_dsc", "adapted_dsc")
EXEMPLAR_MODES = ("scan", "single")


class QueryOutcome(NamedTuple):
    sample_id: str
    exemplar_id: str
    unadapted_dsc: float
    adapted_dsc: float


class ExperimentResult(NamedTuple):
    outcomes: List[QueryOutcome]
    csv_path: str

    @property
    def exemplar_ids(self):
        return list(dict.fromkeys(o.exemplar_id for o in self.outcomes))

    @property
    def mean_unadapted(self):
        return float(np.mean([o.unadapted_dsc for o in self.outcomes]))

    @property
    def mean_adapted(self):
        return float(np.mean([o.adapted_dsc for o in self.outcomes]))


def train_on_seen(out_dir, model_config, train_config, seen, n_scans,
                  slices, modality):
    """Synthesize the seen classes, describe them and train."""
    manifest = synth_toy_dataset(
        n_scans, seen, model_config.image_size, train_config.seed,
        slices_per_scan=slices, modality=modality,
        out_dir=os.path.join(out_dir, "dataset"),
    )
    manifest = grouped_split(manifest, seed=train_config.seed)
    built = build_triplets(manifest, os.path.join(out_dir, "triplets.jsonl"))
    result = train_loop(built.path, model_config, train_config,
                        os.path.join(out_dir, "checkpoints"))
    return result.model


def exemplar_queries(manifest, exemplar):
    """Pair every query record with the record it is adapted from.

    ``scan`` registers the first slice of each scan and queries the
    scan's other slices. ``single`` registers the first record only and
    queries every record of the other scans.
    """
    records = manifest.records
    if exemplar == "single":
        first = records[0]
        return [(first, r) for r in records if r.scan_id != first.scan_id]
    pairs = []
    for scan_id in dict.fromkeys(r.scan_id for r in records):
        scan = [r for r in records if r.scan_id == scan_id]
        pairs.extend((scan[0], r) for r in scan[1:])
    return pairs


def compare_on_held_out(model, held_out, out_path, n_queries=20, slices=4,
                        modality="CT", seed=1, options=None,
                        exemplar="scan"):
    """Register held-out exemplars and score every query both ways.

    No query is ever its own exemplar; see ``exemplar_queries`` for the
    two ways of choosing exemplars.
    """
    if n_queries < 1:
        raise ValueError("n_queries must be at least 1")
    if exemplar not in EXEMPLAR_MODES:
        raise ValueError(f"unknown exemplar mode {exemplar!r}")
    if exemplar == "scan":
        if slices < 2:
            raise ValueError("per-scan exemplars need at least 2 slices")
        n_scans = math.ceil(n_queries / (slices - 1))
    else:
        n_scans = 1 + math.ceil(n_queries / slices)
    manifest = synth_toy_dataset(n_scans, [held_out],
                                 model.config.image_size, seed,
                                 slices_per_scan=slices, modality=modality)
    pairs = exemplar_queries(manifest, exemplar)[:n_queries]

    memories = {}
    outcomes = []
    for source, record in pairs:
        if source.sample_id not in memories:
            memories[source.sample_id] = register(
                model, source.image, source.mask, held_out
            )
        gt = record.mask.binary(record.mask.label_for(held_out))
        plain = model.segment(record.image, held_out, modality)
        adapted = adapted_segment(model, record.image,
                                  memories[source.sample_id], modality,
                                  options)
        outcomes.append(QueryOutcome(record.sample_id, source.sample_id,
                                     dsc(plain.mask, gt),
                                     dsc(adapted.mask, gt)))

    os.makedirs(os.path.dirname(os.path.abspath(out_path)), exist_ok=True)
    with open(out_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_COLUMNS)
        for outcome in outcomes:
            writer.writerow([outcome.sample_id, outcome.exemplar_id,
                             f"{outcome.unadapted_dsc:.6f}",
                             f"{outcome.adapted_dsc:.6f}"])

    result = ExperimentResult(outcomes, out_path)
    logger.info("%s over %d queries from %d exemplars: unadapted %.4f, "
                "adapted %.4f", held_out, len(outcomes),
                len(result.exemplar_ids), result.mean_unadapted,
                result.mean_adapted)
    return result

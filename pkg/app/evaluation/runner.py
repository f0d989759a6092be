"""
Scoring a trained model and the reference baselines on one split.
"""
import logging
import os

import numpy as np
import pandas as pd

from core.exceptions import DataError
from evaluation.baselines import baseline_predict
from evaluation.metrics import dsc
from evaluation.reports import EvalRecord
from training.data import TripletDataset


logger = logging.getLogger(__name__)

MODEL_METHOD = "model (text)"


def baseline_method(mode):
    return f"baseline ({mode})"


def evaluate_split(model, triplets_path, split="validation",
                   prompt_modes=(), both_empty=1.0, max_shift=0.15, seed=0):
    """Score every example of ``split``.

    Returns ``{method: [EvalRecord, ...]}`` with the model's text-prompted
    records first and one baseline method per requested prompt mode.
    Tasks are category names.
    """
    dataset = TripletDataset(triplets_path, split, model.tokenizer,
                             model.config)
    if not len(dataset):
        raise DataError(f"{triplets_path} has no {split} examples")
    methods = {MODEL_METHOD: []}
    methods.update({baseline_method(mode): [] for mode in prompt_modes})

    for index, example in enumerate(dataset.examples):
        result = model.segment(example.image(), example.class_name,
                               example.modality)
        methods[MODEL_METHOD].append(EvalRecord(
            example.class_name, example.sample_id,
            dsc(result.mask, example.mask, both_empty),
        ))
        for mode in prompt_modes:
            prediction = baseline_predict(example.pixels, example.mask, mode,
                                          seed=seed + index,
                                          max_shift=max_shift)
            methods[baseline_method(mode)].append(EvalRecord(
                example.class_name, example.sample_id,
                dsc(prediction, example.mask, both_empty), mode,
            ))

    for name, records in methods.items():
        logger.info("%s on %s: mean DSC %.4f over %d examples", name, split,
                    np.mean([r.dsc for r in records]), len(records))
    return methods


def export_features(model, images, path):
    """Write one mean-pooled last-layer encoder row per image.

    Columns are ``sample_id`` then ``f0`` .. ``f{C_v - 1}``; row order
    follows ``images``.
    """
    rows = [model.encode_image(image).tokens.mean(dim=0).numpy()
            for image in images]
    width = model.config.vision_width
    frame = pd.DataFrame(
        np.stack(rows) if rows else np.zeros((0, width)),
        columns=[f"f{i}" for i in range(width)],
    )
    frame.insert(0, "sample_id", [image.sample_id for image in images])
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.8g")
    logger.info("exported features of %d images to %s", len(rows), path)
    return frame

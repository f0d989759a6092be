"""
Checkpoint archives: a JSON header plus named float32 arrays in one zip.
"""
import io
import json
import logging
import os
import zipfile

import numpy as np
import torch

from core.exceptions import DataError, MissingArtifactError
from segmenter.config import ModelConfig
from segmenter.layers import plain_state_dict
from segmenter.model import Segmenter
from segmenter.tokenizer import SPECIAL_TOKENS, Tokenizer


logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
HEADER = "header.json"
# fixed member timestamps keep archives byte-identical across runs
EPOCH = (1980, 1, 1, 0, 0, 0)


def _member(name):
    info = zipfile.ZipInfo(name, date_time=EPOCH)
    info.compress_type = zipfile.ZIP_DEFLATED
    return info


def write_archive(path, kind, header, arrays):
    """Write ``arrays`` (name to array) and ``header`` under ``kind``."""
    index = []
    payloads = []
    for name in sorted(arrays):
        array = np.ascontiguousarray(arrays[name], dtype=np.float32)
        buffer = io.BytesIO()
        np.lib.format.write_array(buffer, array, allow_pickle=False)
        index.append({"name": name, "shape": list(array.shape),
                      "dtype": "float32"})
        payloads.append((f"arrays/{name}.npy", buffer.getvalue()))
    document = dict(header, kind=kind, format_version=FORMAT_VERSION,
                    arrays=index)

    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with zipfile.ZipFile(path, "w") as archive:
        archive.writestr(_member(HEADER),
                         json.dumps(document, indent=2, sort_keys=True))
        for member, payload in payloads:
            archive.writestr(_member(member), payload)
    return path


def read_archive(path, kind):
    """Return (header, arrays) of an archive written as ``kind``."""
    if not os.path.exists(path):
        raise MissingArtifactError(f"{kind} archive {path} does not exist")
    try:
        with zipfile.ZipFile(path) as archive:
            header = json.loads(archive.read(HEADER).decode("utf-8"))
            if header.get("kind") != kind:
                raise DataError(
                    f"{path} holds a {header.get('kind')!r}, not a {kind!r}"
                )
            arrays = {}
            for entry in header["arrays"]:
                raw = archive.read(f"arrays/{entry['name']}.npy")
                array = np.lib.format.read_array(io.BytesIO(raw),
                                                 allow_pickle=False)
                if list(array.shape) != entry["shape"]:
                    raise DataError(f"{path}: {entry['name']} shape differs "
                                    f"from its header entry")
                arrays[entry["name"]] = array
    except (zipfile.BadZipFile, KeyError, ValueError) as exc:
        if isinstance(exc, DataError):
            raise
        raise DataError(f"{path} is not a readable {kind} archive") from exc
    return header, arrays


def save_checkpoint(model, path, **extra):
    """Persist model weights, config and vocabulary."""
    state = plain_state_dict(model)
    header = {
        "config": model.config.to_dict(),
        "vocabulary": model.tokenizer.tokens,
        "special_tokens": list(SPECIAL_TOKENS),
        "extra": extra,
    }
    write_archive(path, "checkpoint", header, {
        name: tensor.detach().cpu().numpy() for name, tensor in state.items()
    })
    logger.info("saved checkpoint %s", path)
    return path


def load_checkpoint(path):
    """Rebuild a Segmenter in evaluation mode; returns (model, header)."""
    header, arrays = read_archive(path, "checkpoint")
    config = ModelConfig.from_dict(header["config"])
    model = Segmenter.build(config, Tokenizer(header["vocabulary"]))
    state = {name: torch.from_numpy(array) for name, array in arrays.items()}
    try:
        model.load_state_dict(state)
    except RuntimeError as exc:
        raise DataError(f"{path}: weights do not fit the model") from exc
    model.eval()
    return model, header

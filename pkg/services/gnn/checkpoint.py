"""
Model checkpoints.

<name>.npz holds one array per parameter plus "__header__", a JSON string:
    {"format": "linkpred-checkpoint", "version": 1, "feature_width": ..., "config": {...}}
<name>.csv is the manifest: name,shape,size per parameter.
"""

import json
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from config import GnnConfig
from exceptions import DataError
from services.autodiff.tensor import Tensor
from services.gnn.params import ModelParams, parameter_shapes

CHECKPOINT_FORMAT = "linkpred-checkpoint"
CHECKPOINT_VERSION = 1


def save_checkpoint(params: ModelParams, path: str | Path, extra: Optional[dict] = None) -> Tuple[Path, Path]:
    path = Path(path).with_suffix(".npz")
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "feature_width": params.feature_width,
        "config": params.cfg.model_dump(mode="json"),
        **(extra or {}),
    }
    arrays = {name: t.values for name, t in params.tensors.items()}
    with open(path, "wb") as handle:
        np.savez(handle, __header__=np.asarray(json.dumps(header, sort_keys=True)), **arrays)

    manifest = pd.DataFrame(
        [(name, "x".join(str(d) for d in t.shape), t.values.size) for name, t in params.tensors.items()],
        columns=["name", "shape", "size"],
    )
    manifest_path = path.with_suffix(".csv")
    manifest.to_csv(manifest_path, index=False, lineterminator="\n")
    logger.debug(f"[TRAIN] checkpoint with {params.num_parameters()} parameters written to {path}")
    return path, manifest_path


def checkpoint_header(path: str | Path) -> dict:
    """The JSON header of a checkpoint, extra entries included."""
    path = Path(path).with_suffix(".npz")
    if not path.is_file():
        raise DataError(f"checkpoint not found: {path}")
    with np.load(path, allow_pickle=False) as data:
        if "__header__" not in data.files:
            raise DataError(f"{path}: missing or unreadable checkpoint header")
        raw = str(data["__header__"])
    try:
        header = json.loads(raw)
    except ValueError as e:
        raise DataError(f"{path}: missing or unreadable checkpoint header") from e
    if header.get("format") != CHECKPOINT_FORMAT or header.get("version") != CHECKPOINT_VERSION:
        raise DataError(f"{path}: unsupported checkpoint {header.get('format')} v{header.get('version')}")
    return header


def load_checkpoint(path: str | Path) -> ModelParams:
    header = checkpoint_header(path)
    path = Path(path).with_suffix(".npz")
    with np.load(path, allow_pickle=False) as data:
        arrays = {name: data[name] for name in data.files if name != "__header__"}

    cfg = GnnConfig(**header["config"])
    width = int(header["feature_width"])
    tensors = {}
    for name, shape in parameter_shapes(cfg, width):
        if name not in arrays or arrays[name].shape != shape:
            raise DataError(f"{path}: parameter {name} missing or not of shape {shape}")
        tensors[name] = Tensor(arrays[name], requires_grad=True, name=name)
    return ModelParams(cfg=cfg, feature_width=width, tensors=tensors)

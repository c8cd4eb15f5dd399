"""
Versioned binary parameter checkpoints.

Layout: magic b"STGLP", uint16 version, uint32 length of a UTF-8 JSON header
(parameter blocks, model config, free-form metadata), then the float64
trainable vector and the frozen blocks in header order, little-endian.
"""

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from nn_layers import ModelParams, ParamLayout, ParamSpec
from temporal_graph import StglError

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"STGLP"
CHECKPOINT_VERSION = 1
_PREFIX = struct.Struct("<5sHI")


class CheckpointError(StglError, ValueError):
    """Unreadable or incompatible checkpoint file."""


@dataclass
class Checkpoint:
    params: ModelParams
    model_config: Dict[str, Any] = field(default_factory=dict)
    meta: Dict[str, Any] = field(default_factory=dict)


def _spec_record(spec: ParamSpec) -> dict:
    return {
        "name": spec.name,
        "shape": list(spec.shape),
        "init": spec.init,
        "trainable": spec.trainable,
        "value": spec.value,
    }


def _spec_from_record(record: dict) -> ParamSpec:
    return ParamSpec(
        record["name"],
        tuple(record["shape"]),
        record.get("init", "gaussian"),
        record.get("trainable", True),
        record.get("value", 0.0),
    )


def save_checkpoint(
    path,
    params: ModelParams,
    model_config: Optional[Dict[str, Any]] = None,
    meta: Optional[Dict[str, Any]] = None,
) -> Path:
    path = Path(path)
    frozen_names = sorted(params.frozen)
    header = {
        "dtype": str(params.dtype),
        "trainable": [_spec_record(s) for s in params.layout.specs],
        "frozen": [
            {"name": name, "shape": list(params.frozen[name].shape)} for name in frozen_names
        ],
        "model": model_config or {},
        "meta": meta or {},
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(_PREFIX.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, len(blob)))
        f.write(blob)
        f.write(params.vector.astype("<f8").tobytes())
        for name in frozen_names:
            f.write(params.frozen[name].astype("<f8").tobytes())
    logger.info(f"💾 Checkpoint written to {path} ({params.count} parameters)")
    return path


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < _PREFIX.size:
        raise CheckpointError(f"{path}: truncated checkpoint")
    magic, version, length = _PREFIX.unpack_from(data)
    if magic != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: not a parameter checkpoint")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    offset = _PREFIX.size
    try:
        header = json.loads(data[offset : offset + length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{path}: corrupt checkpoint header") from e
    offset += length

    def take(count: int) -> np.ndarray:
        nonlocal offset
        if offset + 8 * count > len(data):
            raise CheckpointError(f"{path}: truncated checkpoint body")
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=offset).astype(np.float64)
        offset += 8 * count
        return arr

    layout = ParamLayout(tuple(_spec_from_record(r) for r in header["trainable"]))
    dtype = np.dtype(header.get("dtype", "float64"))
    vector = take(layout.size).astype(dtype)
    frozen = {}
    for record in header["frozen"]:
        shape = tuple(record["shape"])
        frozen[record["name"]] = take(int(np.prod(shape))).reshape(shape).astype(dtype)
    return Checkpoint(ModelParams(layout, vector, frozen), header["model"], header["meta"])


def check_compatible(params: ModelParams, model) -> None:
    """Raise unless the checkpoint layout matches the model's trainable blocks."""
    expected = [(s.name, tuple(s.shape)) for s in model.param_specs() if s.trainable]
    found = [(s.name, tuple(s.shape)) for s in params.layout.specs]
    if expected != found:
        raise CheckpointError(
            f"checkpoint blocks {[n for n, _ in found]} do not match the model's "
            f"{[n for n, _ in expected]}"
        )

"""PBWT weight files.

Layout, little-endian: magic "PBWT", count u32, then per tensor
name_len u16, UTF-8 name, rank u8, dims u32 x rank, f32 data.
"""
import logging
import struct
from collections import OrderedDict
from pathlib import Path
from typing import Mapping, Union

import numpy as np
import torch

from pulsebench.exceptions import TruncatedFileError, WeightsFormatError, WeightsShapeError
from pulsebench.neural.models import ModelGraph

logger = logging.getLogger(__name__)

MAGIC = b"PBWT"


def weights_to_bytes(weights: Mapping[str, np.ndarray]) -> bytes:
    parts = [MAGIC, struct.pack("<I", len(weights))]
    for name, tensor in weights.items():
        encoded = name.encode("utf-8")
        data = np.asarray(tensor, dtype="<f4")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<B", data.ndim))
        parts.append(struct.pack(f"<{data.ndim}I", *data.shape))
        parts.append(np.ascontiguousarray(data).tobytes())
    return b"".join(parts)


def weights_from_bytes(buf: bytes) -> "OrderedDict[str, np.ndarray]":
    if len(buf) >= 4 and buf[:4] != MAGIC:
        raise WeightsFormatError(f"bad weights magic {buf[:4]!r}")
    offset = 0

    def take(nbytes: int) -> bytes:
        nonlocal offset
        if offset + nbytes > len(buf):
            raise TruncatedFileError("weights file truncated")
        chunk = buf[offset:offset + nbytes]
        offset += nbytes
        return chunk

    take(4)
    (count,) = struct.unpack("<I", take(4))
    weights: "OrderedDict[str, np.ndarray]" = OrderedDict()
    for _ in range(count):
        (name_len,) = struct.unpack("<H", take(2))
        name = take(name_len).decode("utf-8")
        (rank,) = struct.unpack("<B", take(1))
        dims = struct.unpack(f"<{rank}I", take(4 * rank))
        size = int(np.prod(dims)) if rank else 1
        weights[name] = np.frombuffer(take(4 * size), dtype="<f4").astype(np.float32).reshape(dims)
    return weights


def save_weights(model: Union[ModelGraph, Mapping[str, np.ndarray]], path: Union[str, Path]) -> Path:
    weights = model.weight_map() if isinstance(model, ModelGraph) else model
    path = Path(path)
    path.write_bytes(weights_to_bytes(weights))
    logger.info(f"Saved {len(weights)} tensors to {path}")
    return path


def load_weights(path: Union[str, Path]) -> "OrderedDict[str, np.ndarray]":
    return weights_from_bytes(Path(path).read_bytes())


def apply_weights(model: ModelGraph, weights: Mapping[str, np.ndarray]) -> ModelGraph:
    """Copy a weight map into ``model``; every name and shape must match"""
    expected = model.weight_map()
    for name, tensor in expected.items():
        found = weights.get(name)
        if found is None or tuple(found.shape) != tuple(tensor.shape):
            raise WeightsShapeError(name, tuple(tensor.shape), None if found is None else tuple(found.shape))
    extra = sorted(set(weights) - set(expected))
    if extra:
        raise WeightsShapeError(extra[0], (), tuple(np.shape(weights[extra[0]])))
    state = {name: torch.from_numpy(np.array(weights[name], dtype=np.float32)) for name in expected}
    model.load_state_dict(state, strict=False)
    return model

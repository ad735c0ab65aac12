"""Binary checkpoint files: magic, version, config block, tensor records.

Layout (all integers little-endian):

    8 bytes   magic "NXTKCKPT"
    u32       format version (currently 1)
    u32       config block byte length, then UTF-8 "key=value" lines
    u32       tensor count
    per tensor:
        u16 + bytes   name (UTF-8)
        u8            dtype tag: 0=f64, 1=f32, 2=q8
        u8            ndim, then u32 per dim
        q8 only:      f64 scale, f64 zero
        raw data      row-major, little-endian

Float checkpoints round-trip exactly; q8 tensors are dequantized to float32
on load.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .nn import NetParams, QuantizedTensor, quantize_params

MAGIC = b"NXTKCKPT"
VERSION = 1

_DT_F64 = 0
_DT_F32 = 1
_DT_Q8 = 2


class CheckpointError(Exception):
    """Unreadable, truncated, or incompatible checkpoint file."""


def _encode_config(config: dict[str, object]) -> bytes:
    lines = [f"{key}={config[key]}" for key in sorted(config)]
    return "\n".join(lines).encode("utf-8")


def _decode_config(blob: bytes) -> dict[str, str]:
    config: dict[str, str] = {}
    for line in blob.decode("utf-8").splitlines():
        if line:
            key, _, value = line.partition("=")
            config[key] = value
    return config


def save_checkpoint(
    path: str | Path,
    params: NetParams,
    config: dict[str, object],
    quantize: bool = False,
) -> None:
    """Serialize params and config; quantize=True stores matrices as q8."""
    if quantize:
        tensors: dict[str, QuantizedTensor | np.ndarray] = quantize_params(params)
    else:
        tensors = dict(params.named_tensors(trainable_only=False))
    config = dict(config)
    config["head"] = params.head
    config["quantized"] = quantize

    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        blob = _encode_config(config)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(struct.pack("<I", len(tensors)))
        for name, tensor in tensors.items():
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            if isinstance(tensor, QuantizedTensor):
                fh.write(struct.pack("<BB", _DT_Q8, len(tensor.shape)))
                fh.write(struct.pack(f"<{len(tensor.shape)}I", *tensor.shape))
                fh.write(struct.pack("<dd", tensor.scale, tensor.zero))
                fh.write(tensor.q.tobytes())
            else:
                arr = np.ascontiguousarray(tensor)
                tag = _DT_F64 if arr.dtype == np.float64 else _DT_F32
                arr = arr.astype("<f8" if tag == _DT_F64 else "<f4")
                fh.write(struct.pack("<BB", tag, arr.ndim))
                fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
                fh.write(arr.tobytes())


def _read(fh, n: int) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise CheckpointError("truncated checkpoint file")
    return data


def load_checkpoint(path: str | Path) -> tuple[NetParams, dict[str, str]]:
    """Load a checkpoint; q8 tensors come back dequantized as float32."""
    with open(path, "rb") as fh:
        if _read(fh, len(MAGIC)) != MAGIC:
            raise CheckpointError("bad magic string")
        (version,) = struct.unpack("<I", _read(fh, 4))
        if version != VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}")
        (config_len,) = struct.unpack("<I", _read(fh, 4))
        config = _decode_config(_read(fh, config_len))
        (count,) = struct.unpack("<I", _read(fh, 4))
        tensors: dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<H", _read(fh, 2))
            name = _read(fh, name_len).decode("utf-8")
            tag, ndim = struct.unpack("<BB", _read(fh, 2))
            shape = struct.unpack(f"<{ndim}I", _read(fh, 4 * ndim))
            size = int(np.prod(shape)) if ndim else 1
            if tag == _DT_Q8:
                scale, zero = struct.unpack("<dd", _read(fh, 16))
                q = np.frombuffer(_read(fh, size), dtype=np.uint8)
                tensors[name] = QuantizedTensor(q, scale, zero, shape).dequantize()
            elif tag in (_DT_F64, _DT_F32):
                dtype = "<f8" if tag == _DT_F64 else "<f4"
                width = 8 if tag == _DT_F64 else 4
                arr = np.frombuffer(_read(fh, size * width), dtype=dtype)
                tensors[name] = arr.reshape(shape).copy()
            else:
                raise CheckpointError(f"unknown dtype tag {tag}")
    head = config.get("head", "softmax")
    return NetParams.from_tensor_dict(tensors, head), config


def weight_payload_bytes(path: str | Path) -> int:
    """Bytes spent on tensor data (names, dims, and config excluded)."""
    total = 0
    with open(path, "rb") as fh:
        _read(fh, len(MAGIC) + 4)
        (config_len,) = struct.unpack("<I", _read(fh, 4))
        _read(fh, config_len)
        (count,) = struct.unpack("<I", _read(fh, 4))
        for _ in range(count):
            (name_len,) = struct.unpack("<H", _read(fh, 2))
            _read(fh, name_len)
            tag, ndim = struct.unpack("<BB", _read(fh, 2))
            shape = struct.unpack(f"<{ndim}I", _read(fh, 4 * ndim))
            size = int(np.prod(shape)) if ndim else 1
            if tag == _DT_Q8:
                _read(fh, 16)
                nbytes = size
            else:
                nbytes = size * (8 if tag == _DT_F64 else 4)
            _read(fh, nbytes)
            total += nbytes
    return total

"""Binary weight-file format for the mask estimators.

Layout (all integers little-endian):

    magic   4 bytes  b"NMWF"
    version u16      currently 1
    kind    u8       0 = GRU, 1 = U-Net
    pad     u8       zero
    count   u32      number of tensors
    directory, one entry per tensor:
        name_len u16, name utf-8 bytes, rank u8, dims u32*rank, offset u64
    payload: float32 row-major tensor data; offsets are payload-relative.

Tensor names and shapes are fixed per model kind (see GRU_SCHEMA /
unet_schema); files must match the schema exactly.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"NMWF"
VERSION = 1
KIND_GRU = 0
KIND_UNET = 1

GRU_INPUT = 66
GRU_HIDDEN = 128
UNET_CHANNELS = 16


class WeightFormatError(ValueError):
    """The file is not a well-formed weight file."""


class WeightSchemaError(ValueError):
    """The file parses but its tensors do not match the model schema."""


GRU_SCHEMA = {
    "gru.w_z": (GRU_INPUT, GRU_HIDDEN),
    "gru.w_r": (GRU_INPUT, GRU_HIDDEN),
    "gru.w_h": (GRU_INPUT, GRU_HIDDEN),
    "gru.u_z": (GRU_HIDDEN, GRU_HIDDEN),
    "gru.u_r": (GRU_HIDDEN, GRU_HIDDEN),
    "gru.u_h": (GRU_HIDDEN, GRU_HIDDEN),
    "gru.b_wz": (GRU_HIDDEN,),
    "gru.b_wr": (GRU_HIDDEN,),
    "gru.b_wh": (GRU_HIDDEN,),
    "gru.b_uz": (GRU_HIDDEN,),
    "gru.b_ur": (GRU_HIDDEN,),
    "gru.b_uh": (GRU_HIDDEN,),
    "out.w": (GRU_HIDDEN, GRU_INPUT),
    "out.b": (GRU_INPUT,),
}


def unet_schema(c: int = UNET_CHANNELS) -> dict:
    """Tensor table for the causal U-Net with channel multiplier `c`.

    Separable convs store a depthwise kernel (C, 5, 5), a pointwise matrix
    (Cin, Cout) and a bias (Cout,).  The first conv of the first block is a
    full 5x5 conv (depthwise over one channel would be degenerate).
    Transposed convs upsample the frequency axis only (kernel 2, stride 2).
    """
    schema = {
        "down1.conv1.w": (c, 1, 5, 5),
        "down1.conv1.b": (c,),
        "down1.conv2.dw": (c, 5, 5),
        "down1.conv2.pw": (c, c),
        "down1.conv2.b": (c,),
        "down2.conv1.dw": (c, 5, 5),
        "down2.conv1.pw": (c, 2 * c),
        "down2.conv1.b": (2 * c,),
        "down2.conv2.dw": (2 * c, 5, 5),
        "down2.conv2.pw": (2 * c, 2 * c),
        "down2.conv2.b": (2 * c,),
        "mid.conv1.dw": (2 * c, 5, 5),
        "mid.conv1.pw": (2 * c, 4 * c),
        "mid.conv1.b": (4 * c,),
        "mid.conv2.dw": (4 * c, 5, 5),
        "mid.conv2.pw": (4 * c, 4 * c),
        "mid.conv2.b": (4 * c,),
        "up1.tconv.w": (4 * c, 2 * c, 2),
        "up1.tconv.b": (2 * c,),
        "up1.conv1.dw": (4 * c, 5, 5),
        "up1.conv1.pw": (4 * c, 2 * c),
        "up1.conv1.b": (2 * c,),
        "up1.conv2.dw": (2 * c, 5, 5),
        "up1.conv2.pw": (2 * c, 2 * c),
        "up1.conv2.b": (2 * c,),
        "up2.tconv.w": (2 * c, c, 2),
        "up2.tconv.b": (c,),
        "up2.conv1.dw": (2 * c, 5, 5),
        "up2.conv1.pw": (2 * c, c),
        "up2.conv1.b": (c,),
        "up2.conv2.dw": (c, 5, 5),
        "up2.conv2.pw": (c, c),
        "up2.conv2.b": (c,),
        "out.pw": (c, 1),
        "out.b": (1,),
    }
    return schema


def schema_for_kind(kind: int) -> dict:
    if kind == KIND_GRU:
        return GRU_SCHEMA
    if kind == KIND_UNET:
        return unet_schema()
    raise WeightFormatError(f"unknown model kind {kind}")


def save_tensors(path, kind: int, tensors: dict) -> None:
    """Write a tensor dict, validated against the schema for `kind`."""
    schema = schema_for_kind(kind)
    _check_schema(tensors, schema)
    directory = bytearray()
    payload = bytearray()
    for name in schema:
        arr = np.ascontiguousarray(tensors[name], dtype="<f4")
        nb = name.encode("utf-8")
        directory += struct.pack("<H", len(nb)) + nb
        directory += struct.pack("<B", arr.ndim)
        directory += struct.pack(f"<{arr.ndim}I", *arr.shape)
        directory += struct.pack("<Q", len(payload))
        payload += arr.tobytes()
    header = MAGIC + struct.pack("<HBBI", VERSION, kind, 0, len(schema))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(directory)
        fh.write(payload)


def load_tensors(path) -> tuple[int, dict]:
    """Read and validate a weight file; return (kind, {name: float32 array})."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 12 or blob[:4] != MAGIC:
        raise WeightFormatError(f"{path}: not a weight file (bad magic)")
    version, kind, _pad, count = struct.unpack_from("<HBBI", blob, 4)
    if version != VERSION:
        raise WeightFormatError(f"{path}: unsupported version {version}")
    schema = schema_for_kind(kind)
    pos = 12
    entries = []
    for _ in range(count):
        try:
            (name_len,) = struct.unpack_from("<H", blob, pos)
            pos += 2
            name = blob[pos:pos + name_len].decode("utf-8")
            pos += name_len
            (rank,) = struct.unpack_from("<B", blob, pos)
            pos += 1
            dims = struct.unpack_from(f"<{rank}I", blob, pos)
            pos += 4 * rank
            (offset,) = struct.unpack_from("<Q", blob, pos)
            pos += 8
        except struct.error as exc:
            raise WeightFormatError(f"{path}: truncated directory") from exc
        entries.append((name, dims, offset))
    payload = blob[pos:]
    tensors = {}
    for name, dims, offset in entries:
        if name not in schema:
            raise WeightSchemaError(f"{path}: unexpected tensor {name!r}")
        if tuple(dims) != schema[name]:
            raise WeightSchemaError(
                f"{path}: tensor {name!r} has shape {tuple(dims)}, "
                f"schema requires {schema[name]}")
        size = int(np.prod(dims))
        end = offset + 4 * size
        if end > len(payload):
            raise WeightSchemaError(f"{path}: tensor {name!r} payload is "
                                    "out of bounds (truncated file?)")
        flat = np.frombuffer(payload, dtype="<f4", count=size, offset=offset)
        tensors[name] = flat.reshape(dims).copy()
    missing = set(schema) - set(tensors)
    if missing:
        raise WeightSchemaError(f"{path}: missing tensors {sorted(missing)}")
    return kind, tensors


def _check_schema(tensors: dict, schema: dict) -> None:
    for name, shape in schema.items():
        if name not in tensors:
            raise WeightSchemaError(f"missing tensor {name!r}")
        got = tuple(np.shape(tensors[name]))
        if got != shape:
            raise WeightSchemaError(f"tensor {name!r} has shape {got}, "
                                    f"schema requires {shape}")
    extra = set(tensors) - set(schema)
    if extra:
        raise WeightSchemaError(f"unexpected tensors {sorted(extra)}")


def zero_tensors(kind: int) -> dict:
    return {name: np.zeros(shape, dtype=np.float32)
            for name, shape in schema_for_kind(kind).items()}


def random_tensors(kind: int, seed: int, scale: float = 0.15) -> dict:
    rng = np.random.default_rng(seed)
    return {name: rng.normal(0.0, scale, size=shape).astype(np.float32)
            for name, shape in schema_for_kind(kind).items()}

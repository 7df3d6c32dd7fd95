"""NMWF weight-file writer.

Independent implementation of the engine's documented binary format:
magic "NMWF", u16 version 1, u8 kind (0 gru / 1 unet), u8 pad, u32 tensor
count, directory of (name_len u16, name, rank u8, dims u32*rank,
offset u64), then row-major float32 payload.  Round trips are validated
through the engine CLI in the tests.
"""

from __future__ import annotations

import struct

import numpy as np
import torch

from .models import MaskGru, MaskUnet

MAGIC = b"NMWF"
VERSION = 1
KIND = {"gru": 0, "unet": 1}


def gru_tensors(model: MaskGru) -> dict:
    sd = {k: v.detach().cpu().numpy() for k, v in model.state_dict().items()}
    return {
        "gru.w_z": sd["w_z"], "gru.w_r": sd["w_r"], "gru.w_h": sd["w_h"],
        "gru.u_z": sd["u_z"], "gru.u_r": sd["u_r"], "gru.u_h": sd["u_h"],
        "gru.b_wz": sd["b_wz"], "gru.b_wr": sd["b_wr"], "gru.b_wh": sd["b_wh"],
        "gru.b_uz": sd["b_uz"], "gru.b_ur": sd["b_ur"], "gru.b_uh": sd["b_uh"],
        "out.w": sd["w_out"], "out.b": sd["b_out"],
    }


def _sep(prefix: str, module) -> dict:
    dw = module.depthwise.weight.detach().cpu().numpy()       # (C,1,5,5)
    pw = module.pointwise.weight.detach().cpu().numpy()       # (Co,Ci,1,1)
    b = module.pointwise.bias.detach().cpu().numpy()
    return {f"{prefix}.dw": dw[:, 0], f"{prefix}.pw": pw[:, :, 0, 0].T,
            f"{prefix}.b": b}


def unet_tensors(model: MaskUnet) -> dict:
    out = {
        "down1.conv1.w": model.down1_conv1.weight.detach().cpu().numpy(),
        "down1.conv1.b": model.down1_conv1.bias.detach().cpu().numpy(),
    }
    out.update(_sep("down1.conv2", model.down1_conv2))
    out.update(_sep("down2.conv1", model.down2_conv1))
    out.update(_sep("down2.conv2", model.down2_conv2))
    out.update(_sep("mid.conv1", model.mid_conv1))
    out.update(_sep("mid.conv2", model.mid_conv2))
    for name, tconv in (("up1.tconv", model.up1_tconv),
                        ("up2.tconv", model.up2_tconv)):
        w = tconv.weight.detach().cpu().numpy()               # (Ci,Co,1,2)
        out[f"{name}.w"] = w[:, :, 0, :]
        out[f"{name}.b"] = tconv.bias.detach().cpu().numpy()
    out.update(_sep("up1.conv1", model.up1_conv1))
    out.update(_sep("up1.conv2", model.up1_conv2))
    out.update(_sep("up2.conv1", model.up2_conv1))
    out.update(_sep("up2.conv2", model.up2_conv2))
    pw = model.out_pw.weight.detach().cpu().numpy()           # (1,C,1,1)
    out["out.pw"] = pw[:, :, 0, 0].T
    out["out.b"] = model.out_pw.bias.detach().cpu().numpy()
    return out


def model_tensors(model: torch.nn.Module) -> tuple[str, dict]:
    if isinstance(model, MaskGru):
        return "gru", gru_tensors(model)
    if isinstance(model, MaskUnet):
        return "unet", unet_tensors(model)
    raise ValueError(f"cannot export {type(model).__name__}")


def write_weight_file(path, kind: str, tensors: dict) -> None:
    directory = bytearray()
    payload = bytearray()
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(arr, dtype="<f4")
        nb = name.encode("utf-8")
        directory += struct.pack("<H", len(nb)) + nb
        directory += struct.pack("<B", arr.ndim)
        directory += struct.pack(f"<{arr.ndim}I", *arr.shape)
        directory += struct.pack("<Q", len(payload))
        payload += arr.tobytes()
    with open(path, "wb") as fh:
        fh.write(MAGIC + struct.pack("<HBBI", VERSION, KIND[kind], 0,
                                     len(tensors)))
        fh.write(directory)
        fh.write(payload)


def export_model(model: torch.nn.Module, path) -> None:
    kind, tensors = model_tensors(model)
    write_weight_file(path, kind, tensors)

"""Torch mask estimators matching the engine's inference conventions.

GRU: update/reset gates with two bias vectors each, candidate
tanh(W_h x + U_h (r*h) + b), state h' = (1-z)*h + z*h_cand, logistic
output layer.  U-Net: two down blocks / bottleneck / two up blocks over
(time, freq) with 5x5 kernels, causal left padding in time, pooling and
transposed-conv upsampling on the frequency axis only, ReLU after each
conv, sigmoid output.  Both consume (batch, frames, 66) features and emit
masks of the same shape.
"""

from __future__ import annotations

import math

import torch
from torch import nn

N_FEATURES = 66
GRU_HIDDEN = 128
UNET_CHANNELS = 16


class MaskGru(nn.Module):
    def __init__(self, n_in: int = N_FEATURES, hidden: int = GRU_HIDDEN):
        super().__init__()
        self.n_in = n_in
        self.hidden = hidden
        bound = 1.0 / math.sqrt(hidden)

        def mat(rows, cols):
            return nn.Parameter(torch.empty(rows, cols).uniform_(-bound, bound))

        def vec(n):
            return nn.Parameter(torch.zeros(n))

        self.w_z, self.w_r, self.w_h = (mat(n_in, hidden) for _ in range(3))
        self.u_z, self.u_r, self.u_h = (mat(hidden, hidden) for _ in range(3))
        self.b_wz, self.b_wr, self.b_wh = (vec(hidden) for _ in range(3))
        self.b_uz, self.b_ur, self.b_uh = (vec(hidden) for _ in range(3))
        self.w_out = mat(hidden, n_in)
        self.b_out = vec(n_in)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        batch, frames, _ = x.shape
        h = x.new_zeros(batch, self.hidden)
        masks = []
        for t in range(frames):
            xt = x[:, t, :]
            z = torch.sigmoid(xt @ self.w_z + h @ self.u_z
                              + self.b_wz + self.b_uz)
            r = torch.sigmoid(xt @ self.w_r + h @ self.u_r
                              + self.b_wr + self.b_ur)
            h_cand = torch.tanh(xt @ self.w_h + (r * h) @ self.u_h
                                + self.b_wh + self.b_uh)
            h = (1.0 - z) * h + z * h_cand
            masks.append(torch.sigmoid(h @ self.w_out + self.b_out))
        return torch.stack(masks, dim=1)


class SeparableConv(nn.Module):
    """Depthwise 5x5 (causal time, padded freq, no bias) + pointwise 1x1."""

    def __init__(self, c_in: int, c_out: int):
        super().__init__()
        self.depthwise = nn.Conv2d(c_in, c_in, 5, groups=c_in, bias=False)
        self.pointwise = nn.Conv2d(c_in, c_out, 1, bias=True)

    def forward(self, x):
        x = nn.functional.pad(x, (2, 2, 4, 0))    # freq both sides, time left
        return self.pointwise(self.depthwise(x))


class MaskUnet(nn.Module):
    def __init__(self, c: int = UNET_CHANNELS):
        super().__init__()
        self.c = c
        self.down1_conv1 = nn.Conv2d(1, c, 5, bias=True)
        self.down1_conv2 = SeparableConv(c, c)
        self.down2_conv1 = SeparableConv(c, 2 * c)
        self.down2_conv2 = SeparableConv(2 * c, 2 * c)
        self.mid_conv1 = SeparableConv(2 * c, 4 * c)
        self.mid_conv2 = SeparableConv(4 * c, 4 * c)
        self.up1_tconv = nn.ConvTranspose2d(4 * c, 2 * c, (1, 2),
                                            stride=(1, 2))
        self.up1_conv1 = SeparableConv(4 * c, 2 * c)
        self.up1_conv2 = SeparableConv(2 * c, 2 * c)
        self.up2_tconv = nn.ConvTranspose2d(2 * c, c, (1, 2), stride=(1, 2))
        self.up2_conv1 = SeparableConv(2 * c, c)
        self.up2_conv2 = SeparableConv(c, c)
        self.out_pw = nn.Conv2d(c, 1, 1, bias=True)
        self.pool = nn.MaxPool2d((1, 2))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        # (batch, frames, 66) -> (batch, 1, frames, 66)
        x = x.unsqueeze(1)
        relu = nn.functional.relu
        d1 = relu(self.down1_conv1(nn.functional.pad(x, (2, 2, 4, 0))))
        d1 = relu(self.down1_conv2(d1))
        p1 = self.pool(d1)                                    # 66 -> 33
        d2 = relu(self.down2_conv1(p1))
        d2 = relu(self.down2_conv2(d2))
        p2 = self.pool(nn.functional.pad(d2, (0, 1)))         # 34 -> 17
        m = relu(self.mid_conv1(p2))
        m = relu(self.mid_conv2(m))
        u1 = self.up1_tconv(m)[..., :33]                      # 34, crop 33
        u1 = relu(self.up1_conv1(torch.cat([u1, d2], dim=1)))
        u1 = relu(self.up1_conv2(u1))
        u2 = self.up2_tconv(u1)                               # 33 -> 66
        u2 = relu(self.up2_conv1(torch.cat([u2, d1], dim=1)))
        u2 = relu(self.up2_conv2(u2))
        return torch.sigmoid(self.out_pw(u2)).squeeze(1)


def make_model(kind: str) -> nn.Module:
    if kind == "gru":
        return MaskGru()
    if kind == "unet":
        return MaskUnet()
    raise ValueError(f"unknown model kind {kind!r}")

"""Streaming inference for the GRU and causal U-Net mask estimators.

Both models map one 66-feature frame to one 66-value mask in [0, 1] per
step.  The GRU carries a 128-unit hidden state; the U-Net carries per-layer
rings of the last five input frames (5-tap causal time kernels, left context
only).  Weights are plain numpy arrays loaded from the NMWF file format;
inference is deterministic.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from .bands import N_FEATURES
from .weights import KIND_GRU, KIND_UNET, UNET_CHANNELS, load_tensors

KERNEL_T = 5          # causal time extent of every U-Net conv
FREQ_PAD = 2          # symmetric frequency padding for the 5-wide kernels
DEFAULT_FRAME_RATE = 100.0
NEURAL_ATTEN_DB = 15.0

# Frequency sizes along the U-Net: 66 -> 33 -> (pad 34) -> 17, mirrored back.
F_FULL = 66
F_HALF = 33
F_QUARTER = 17


def _check_features(features: np.ndarray) -> np.ndarray:
    x = np.asarray(features, dtype=np.float64)
    if x.shape != (N_FEATURES,):
        raise ValueError(f"expected {N_FEATURES} features, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("features must be finite")
    return x


class GruModel:
    """Single GRU layer (128 units) plus a logistic feedforward output."""

    kind = KIND_GRU

    def __init__(self, tensors: dict):
        self.tensors = {k: np.asarray(v, dtype=np.float64)
                        for k, v in tensors.items()}
        t = self.tensors
        self.w_z, self.w_r, self.w_h = t["gru.w_z"], t["gru.w_r"], t["gru.w_h"]
        self.u_z, self.u_r, self.u_h = t["gru.u_z"], t["gru.u_r"], t["gru.u_h"]
        self.b_z = t["gru.b_wz"] + t["gru.b_uz"]
        self.b_r = t["gru.b_wr"] + t["gru.b_ur"]
        self.b_wh, self.b_uh = t["gru.b_wh"], t["gru.b_uh"]
        self.w_out, self.b_out = t["out.w"], t["out.b"]
        self.hidden = self.u_z.shape[0]
        self.h = np.zeros(self.hidden)

    def reset(self) -> None:
        self.h = np.zeros(self.hidden)

    def step(self, features: np.ndarray) -> np.ndarray:
        """Advance one frame: z/r gates, candidate state, logistic output."""
        x = _check_features(features)
        h = self.h
        z = expit(x @ self.w_z + h @ self.u_z + self.b_z)
        r = expit(x @ self.w_r + h @ self.u_r + self.b_r)
        h_cand = np.tanh(x @ self.w_h + (r * h) @ self.u_h
                         + self.b_wh + self.b_uh)
        self.h = (1.0 - z) * h + z * h_cand
        return expit(self.h @ self.w_out + self.b_out)


def gru_batch(model: GruModel, frames: np.ndarray) -> np.ndarray:
    """Evaluate a whole (T, 66) sequence from a zero initial state."""
    frames = np.asarray(frames, dtype=np.float64)
    h = np.zeros(model.hidden)
    masks = np.empty((len(frames), N_FEATURES))
    for i, x in enumerate(frames):
        z = expit(x @ model.w_z + h @ model.u_z + model.b_z)
        r = expit(x @ model.w_r + h @ model.u_r + model.b_r)
        h_cand = np.tanh(x @ model.w_h + (r * h) @ model.u_h
                         + model.b_wh + model.b_uh)
        h = (1.0 - z) * h + z * h_cand
        masks[i] = expit(h @ model.w_out + model.b_out)
    return masks


def _freq_windows(ctx: np.ndarray) -> np.ndarray:
    """(5, C, F) context -> (5, C, F, 5) sliding frequency windows."""
    padded = np.pad(ctx, ((0, 0), (0, 0), (FREQ_PAD, FREQ_PAD)))
    return sliding_window_view(padded, KERNEL_T, axis=2)


def _maxpool2(x: np.ndarray) -> np.ndarray:
    return x.reshape(x.shape[:-1] + (x.shape[-1] // 2, 2)).max(axis=-1)


class UnetModel:
    """Two down blocks, bottleneck, two up blocks; frequency-only resampling.

    Down/up-sampling act on the frequency axis so the network stays strictly
    one-frame-in/one-frame-out in time.  Each conv keeps a ring of its last
    five input frames; max-pool, transposed convs and skips are per-frame.
    """

    kind = KIND_UNET

    # ring name -> (channels, freq size) of that conv's input
    _RING_SPECS = (
        ("down1.conv1", 1, F_FULL),
        ("down1.conv2", UNET_CHANNELS, F_FULL),
        ("down2.conv1", UNET_CHANNELS, F_HALF),
        ("down2.conv2", 2 * UNET_CHANNELS, F_HALF),
        ("mid.conv1", 2 * UNET_CHANNELS, F_QUARTER),
        ("mid.conv2", 4 * UNET_CHANNELS, F_QUARTER),
        ("up1.conv1", 4 * UNET_CHANNELS, F_HALF),
        ("up1.conv2", 2 * UNET_CHANNELS, F_HALF),
        ("up2.conv1", 2 * UNET_CHANNELS, F_FULL),
        ("up2.conv2", UNET_CHANNELS, F_FULL),
    )

    def __init__(self, tensors: dict):
        self.tensors = {k: np.asarray(v, dtype=np.float64)
                        for k, v in tensors.items()}
        self.reset()

    def reset(self) -> None:
        self._rings = {name: np.zeros((KERNEL_T, c, f))
                       for name, c, f in self._RING_SPECS}

    def _push(self, name: str, frame: np.ndarray) -> np.ndarray:
        ring = self._rings[name]
        ring[:-1] = ring[1:]
        ring[-1] = frame
        return ring

    def _full_conv(self, name: str, frame: np.ndarray) -> np.ndarray:
        ctx = self._push(name, frame)
        w, b = self.tensors[name + ".w"], self.tensors[name + ".b"]
        out = np.einsum("octk,tcfk->of", w, _freq_windows(ctx)) + b[:, None]
        return np.maximum(out, 0.0)

    def _sep_conv(self, name: str, frame: np.ndarray) -> np.ndarray:
        ctx = self._push(name, frame)
        dw, pw = self.tensors[name + ".dw"], self.tensors[name + ".pw"]
        b = self.tensors[name + ".b"]
        depth = np.einsum("ctk,tcfk->cf", dw, _freq_windows(ctx))
        return np.maximum(pw.T @ depth + b[:, None], 0.0)

    def _tconv(self, name: str, frame: np.ndarray) -> np.ndarray:
        w, b = self.tensors[name + ".w"], self.tensors[name + ".b"]
        out = np.einsum("coj,cf->ofj", w, frame)
        return out.reshape(out.shape[0], -1) + b[:, None]

    def step(self, features: np.ndarray) -> np.ndarray:
        x = _check_features(features)[None, :]          # (1, 66)
        d1 = self._sep_conv("down1.conv2", self._full_conv("down1.conv1", x))
        p1 = _maxpool2(d1)                              # (C, 33)
        d2 = self._sep_conv("down2.conv2",
                            self._sep_conv("down2.conv1", p1))
        p2 = _maxpool2(np.pad(d2, ((0, 0), (0, 1))))    # 33 -> 34 -> 17
        m = self._sep_conv("mid.conv2", self._sep_conv("mid.conv1", p2))
        u1 = self._tconv("up1.tconv", m)[:, :F_HALF]    # 17 -> 34, crop 33
        u1 = self._sep_conv("up1.conv2",
                            self._sep_conv("up1.conv1",
                                           np.concatenate([u1, d2])))
        u2 = self._tconv("up2.tconv", u1)               # 33 -> 66
        u2 = self._sep_conv("up2.conv2",
                            self._sep_conv("up2.conv1",
                                           np.concatenate([u2, d1])))
        pw, b = self.tensors["out.pw"], self.tensors["out.b"]
        return expit(pw.T @ u2 + b[:, None])[0]


def _batch_windows(x: np.ndarray) -> np.ndarray:
    """(T, C, F) -> (T, C, F, 5, 5) causal time / symmetric freq windows."""
    padded = np.pad(x, ((KERNEL_T - 1, 0), (0, 0), (FREQ_PAD, FREQ_PAD)))
    return sliding_window_view(padded, (KERNEL_T, KERNEL_T), axis=(0, 2))


def unet_batch(model: UnetModel, frames: np.ndarray) -> np.ndarray:
    """Whole-sequence U-Net evaluation (zero left context), (T, 66) masks."""
    t = model.tensors
    x = np.asarray(frames, dtype=np.float64)[:, None, :]    # (T, 1, 66)

    def full(name, v):
        out = np.einsum("octk,acftk->aof", t[name + ".w"], _batch_windows(v))
        return np.maximum(out + t[name + ".b"][:, None], 0.0)

    def sep(name, v):
        depth = np.einsum("ctk,acftk->acf", t[name + ".dw"], _batch_windows(v))
        out = np.einsum("co,acf->aof", t[name + ".pw"], depth)
        return np.maximum(out + t[name + ".b"][:, None], 0.0)

    def tconv(name, v):
        out = np.einsum("coj,acf->aofj", t[name + ".w"], v)
        return out.reshape(out.shape[:2] + (-1,)) + t[name + ".b"][:, None]

    d1 = sep("down1.conv2", full("down1.conv1", x))
    p1 = _maxpool2(d1)
    d2 = sep("down2.conv2", sep("down2.conv1", p1))
    p2 = _maxpool2(np.pad(d2, ((0, 0), (0, 0), (0, 1))))
    m = sep("mid.conv2", sep("mid.conv1", p2))
    u1 = tconv("up1.tconv", m)[:, :, :F_HALF]
    u1 = sep("up1.conv2", sep("up1.conv1", np.concatenate([u1, d2], axis=1)))
    u2 = tconv("up2.tconv", u1)
    u2 = sep("up2.conv2", sep("up2.conv1", np.concatenate([u2, d1], axis=1)))
    out = np.einsum("co,acf->aof", t["out.pw"], u2) + t["out.b"][:, None]
    return expit(out[:, 0, :])


def load_model(path):
    kind, tensors = load_tensors(path)
    return GruModel(tensors) if kind == KIND_GRU else UnetModel(tensors)


def apply_mask(spectrum: np.ndarray, gains: np.ndarray,
               max_atten_db: float = NEURAL_ATTEN_DB) -> np.ndarray:
    """Scale each bin by its gain, never attenuating below -max_atten_db."""
    gains = np.asarray(gains, dtype=np.float64)
    spectrum = np.asarray(spectrum)
    if gains.shape != spectrum.shape:
        raise ValueError("gains and spectrum must have matching shapes")
    if np.any(gains < 0) or np.any(gains > 1):
        raise ValueError("gains must lie in [0, 1]")
    floor = 10.0 ** (-max_atten_db / 20.0)
    return spectrum * np.maximum(gains, floor)


def count_params(model) -> int:
    return int(sum(v.size for v in model.tensors.values()))


def count_macs_per_frame(model) -> int:
    """Multiply-accumulates per processed frame (matrix/conv products only)."""
    if isinstance(model, GruModel):
        n_in, hidden = model.w_z.shape
        n_out = model.w_out.shape[1]
        return 3 * (n_in * hidden + hidden * hidden) + hidden * n_out
    t = model.tensors
    # Each conv costs (kernel taps) MACs per output position; a transposed
    # conv with kernel 2 / stride 2 touches each output position once, so its
    # cost is input_positions * kernel size = input_positions * w.size.
    sep_freqs = {"down1.conv2": F_FULL,
                 "down2.conv1": F_HALF, "down2.conv2": F_HALF,
                 "mid.conv1": F_QUARTER, "mid.conv2": F_QUARTER,
                 "up1.conv1": F_HALF, "up1.conv2": F_HALF,
                 "up2.conv1": F_FULL, "up2.conv2": F_FULL}
    total = F_FULL * t["down1.conv1.w"].size
    for name, f in sep_freqs.items():
        total += f * (t[name + ".dw"].size + t[name + ".pw"].size)
    total += F_QUARTER * t["up1.tconv.w"].size
    total += F_HALF * t["up2.tconv.w"].size
    total += F_FULL * t["out.pw"].size
    return int(total)


def count_macs_per_second(model, frame_rate: float = DEFAULT_FRAME_RATE) -> int:
    return int(round(count_macs_per_frame(model) * frame_rate))

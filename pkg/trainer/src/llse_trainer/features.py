"""Feature extraction mirroring the engine's conventions.

Deliberately reimplemented (the engine stays normative) and validated
against engine golden files in the tests: asymmetric analysis window
(720/640/320 at 32 kHz), frame ends on hop boundaries with zero history,
magnitude spectra, 54 passthrough bins + 12 averaged bands.
"""

from __future__ import annotations

import numpy as np

FS = 32000
ANALYSIS_LEN = 720
SYNTHESIS_LEN = 640
HOP = 320
FFT_LEN = 1024
N_BINS = 513

PASSTHROUGH = 54
BAND_EDGES = (54, 62, 72, 85, 102, 124, 152, 187, 231, 286, 355, 430, 513)
N_FEATURES = 66
BAND_WIDTHS = np.diff(BAND_EDGES)


def analysis_window() -> np.ndarray:
    rise = ANALYSIS_LEN - HOP
    n = np.arange(ANALYSIS_LEN, dtype=np.float64)
    w = np.empty(ANALYSIS_LEN)
    w[:rise] = np.sin(np.pi * n[:rise] / (2 * rise))
    w[rise:] = np.cos(np.pi * (n[rise:] - rise) / (2 * HOP))
    return w


def frame_signal(x: np.ndarray) -> np.ndarray:
    """(T, 720) frames ending on hop boundaries, zero history at the start."""
    x = np.asarray(x, dtype=np.float64)
    pad_tail = (-len(x)) % HOP
    padded = np.concatenate([np.zeros(ANALYSIS_LEN - HOP), x,
                             np.zeros(pad_tail)])
    n_frames = (len(x) + pad_tail) // HOP
    idx = np.arange(ANALYSIS_LEN)[None, :] + HOP * np.arange(n_frames)[:, None]
    return padded[idx]


def magnitude_frames(x: np.ndarray) -> np.ndarray:
    """(T, 513) magnitude spectra with the asymmetric analysis window."""
    frames = frame_signal(x) * analysis_window()
    buf = np.zeros((frames.shape[0], FFT_LEN))
    buf[:, FFT_LEN - ANALYSIS_LEN:] = frames
    return np.abs(np.fft.rfft(buf, axis=1))


def compress(mag: np.ndarray) -> np.ndarray:
    """(..., 513) magnitudes -> (..., 66) features (raw, no log/normalize)."""
    mag = np.asarray(mag)
    out = np.empty(mag.shape[:-1] + (N_FEATURES,))
    out[..., :PASSTHROUGH] = mag[..., :PASSTHROUGH]
    for i in range(len(BAND_EDGES) - 1):
        lo, hi = BAND_EDGES[i], BAND_EDGES[i + 1]
        out[..., PASSTHROUGH + i] = mag[..., lo:hi].mean(axis=-1)
    return out


def expand_widths() -> np.ndarray:
    """Per-feature bin counts for piecewise-constant mask expansion."""
    return np.concatenate([np.ones(PASSTHROUGH, dtype=np.int64), BAND_WIDTHS])

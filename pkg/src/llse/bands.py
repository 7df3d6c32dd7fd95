"""Spectral band compression for the mask estimators.

The first 54 FFT bins are kept as-is; the remaining 459 bins (54..512) are
averaged into 12 bands of non-decreasing width, giving 66 features.  Masks
predicted at the 66-feature resolution are expanded back to 513 bins by
piecewise-constant interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

N_BINS = 513
PASSTHROUGH = 54
N_BANDS = 12
N_FEATURES = PASSTHROUGH + N_BANDS

# Geometric spacing from bin 54 to 513, rounded and nudged so widths never
# decrease.  Widths: 8 10 13 17 22 28 35 44 55 69 75 83 (sum 459).
BAND_EDGES = (54, 62, 72, 85, 102, 124, 152, 187, 231, 286, 355, 430, 513)


@dataclass(frozen=True)
class BandLayout:
    passthrough_count: int
    band_edges: tuple

    def __post_init__(self):
        edges = self.band_edges
        if edges[0] != self.passthrough_count or edges[-1] != N_BINS:
            raise ValueError("band edges must span passthrough_count..513")
        widths = np.diff(edges)
        if np.any(widths <= 0):
            raise ValueError("band edges must be strictly increasing")
        if np.any(np.diff(widths) < 0):
            raise ValueError("band widths must be non-decreasing")

    @property
    def n_features(self) -> int:
        return self.passthrough_count + len(self.band_edges) - 1

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.band_edges)


def make_layout() -> BandLayout:
    return BandLayout(passthrough_count=PASSTHROUGH, band_edges=BAND_EDGES)


def _band_mean(values: np.ndarray) -> float:
    # Anchored to the first element so a constant band averages to itself
    # bit-exactly (the expand/compress round trip relies on this).
    v0 = values[0]
    return v0 + np.mean(values - v0)


def compress(magnitudes: np.ndarray, layout: BandLayout) -> np.ndarray:
    """Reduce 513 magnitudes to 66 features (passthrough + band means)."""
    mag = np.asarray(magnitudes, dtype=np.float64)
    if mag.shape != (N_BINS,):
        raise ValueError(f"compress expects {N_BINS} magnitudes, got {mag.shape}")
    if np.any(mag < 0):
        raise ValueError("magnitudes must be non-negative")
    p = layout.passthrough_count
    out = np.empty(layout.n_features)
    out[:p] = mag[:p]
    edges = layout.band_edges
    for i in range(len(edges) - 1):
        out[p + i] = _band_mean(mag[edges[i]:edges[i + 1]])
    return out


def expand_mask(mask: np.ndarray, layout: BandLayout) -> np.ndarray:
    """Expand a 66-element mask to 513 per-bin gains (piecewise constant)."""
    m = np.asarray(mask, dtype=np.float64)
    if m.shape != (layout.n_features,):
        raise ValueError(f"expand_mask expects {layout.n_features} values, "
                         f"got {m.shape}")
    if np.any(m < 0) or np.any(m > 1):
        raise ValueError("mask values must lie in [0, 1]")
    p = layout.passthrough_count
    gains = np.empty(N_BINS)
    gains[:p] = m[:p]
    gains[p:] = np.repeat(m[p:], layout.widths)
    return gains


def compress_mask(gains: np.ndarray, layout: BandLayout) -> np.ndarray:
    """Band-average 513 gains back to 66 values (inverse of expand_mask)."""
    g = np.asarray(gains, dtype=np.float64)
    if g.shape != (N_BINS,):
        raise ValueError(f"compress_mask expects {N_BINS} gains, got {g.shape}")
    p = layout.passthrough_count
    out = np.empty(layout.n_features)
    out[:p] = g[:p]
    edges = layout.band_edges
    for i in range(len(edges) - 1):
        out[p + i] = _band_mean(g[edges[i]:edges[i + 1]])
    return out


def layout_table(layout: BandLayout, fs: int = 32000, fft_len: int = 1024) -> str:
    """Human-readable feature -> bin-range table for the CLI."""
    hz = fs / fft_len
    lines = ["feature\tbins\twidth\tfreq_hz"]
    p = layout.passthrough_count
    lines.append(f"0..{p - 1}\t0..{p - 1}\t1\t0..{(p - 1) * hz:.0f}")
    edges = layout.band_edges
    for i in range(len(edges) - 1):
        lo, hi = edges[i], edges[i + 1]
        lines.append(f"{p + i}\t{lo}..{hi - 1}\t{hi - lo}\t"
                     f"{lo * hz:.0f}..{(hi - 1) * hz:.0f}")
    return "\n".join(lines)

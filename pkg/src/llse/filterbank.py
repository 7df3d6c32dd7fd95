"""Asymmetric-window analysis/synthesis filterbank.

The analysis window is longer than the synthesis window, which keeps the
spectral resolution of a long window while the algorithmic latency stays at
the synthesis-window length.  Both windows are built from square-root Hann
segments so that the shifted analysis*synthesis products sum to exactly one
(constant overlap-add), giving perfect reconstruction under a unit mask.

Default geometry at 32 kHz: 720-sample (22.5 ms) analysis window, 640-sample
(20 ms) synthesis window, 320-sample (10 ms) hop, 1024-point FFT.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ConfigError(ValueError):
    """A filterbank configuration that cannot satisfy overlap-add."""


DEFAULT_FS = 32000
DEFAULT_ANALYSIS_MS = 22.5
DEFAULT_SYNTHESIS_MS = 20.0
DEFAULT_HOP_MS = 10.0
DEFAULT_FFT_LEN = 1024

COLA_TOL = 1e-10


@dataclass(frozen=True)
class WindowPair:
    """Matched analysis/synthesis windows plus hop and FFT size."""

    analysis: np.ndarray
    synthesis: np.ndarray
    hop: int
    fft_len: int

    @property
    def analysis_len(self) -> int:
        return len(self.analysis)

    @property
    def synthesis_len(self) -> int:
        return len(self.synthesis)

    @property
    def n_bins(self) -> int:
        return self.fft_len // 2 + 1


def _ms_to_samples(ms: float, fs: int, name: str) -> int:
    exact = ms * fs / 1000.0
    n = int(round(exact))
    if abs(exact - n) > 1e-9 or n <= 0:
        raise ConfigError(f"{name} ({ms} ms) is not a positive whole number of "
                          f"samples at {fs} Hz")
    return n


def design_windows(fs: int = DEFAULT_FS,
                   analysis_ms: float = DEFAULT_ANALYSIS_MS,
                   synthesis_ms: float = DEFAULT_SYNTHESIS_MS,
                   hop_ms: float = DEFAULT_HOP_MS,
                   fft_len: int = DEFAULT_FFT_LEN) -> WindowPair:
    """Design a COLA-exact asymmetric window pair.

    The analysis window rises as the first half of a sqrt-Hann of length
    2*(La-R) and falls as the last quarter of a sqrt-Hann of length 2R.  The
    synthesis window is chosen so the overlapped products form a periodic
    Hann of length 2R, which sums to one at 50% overlap.  The result is
    validated numerically before being returned.
    """
    la = _ms_to_samples(analysis_ms, fs, "analysis window")
    ls = _ms_to_samples(synthesis_ms, fs, "synthesis window")
    hop = _ms_to_samples(hop_ms, fs, "hop")
    if la < ls:
        raise ConfigError(f"analysis window ({la}) must be at least as long as "
                          f"the synthesis window ({ls})")
    if ls != 2 * hop:
        raise ConfigError(f"hop ({hop}) must be exactly half the synthesis "
                          f"window ({ls})")
    if fft_len < la:
        raise ConfigError(f"fft_len ({fft_len}) is shorter than the analysis "
                          f"window ({la})")

    rise = la - hop          # rising-segment length; >= hop since la >= 2*hop
    n = np.arange(la, dtype=np.float64)
    analysis = np.empty(la)
    analysis[:rise] = np.sin(np.pi * n[:rise] / (2 * rise))
    analysis[rise:] = np.cos(np.pi * (n[rise:] - rise) / (2 * hop))

    d = la - ls
    m = np.arange(ls, dtype=np.float64)
    synthesis = np.empty(ls)
    # First half: Hann bump divided by the (rising) analysis segment it meets.
    head = np.sin(np.pi * m[:hop] / (2 * hop)) ** 2
    denom = analysis[d:d + hop]
    synthesis[:hop] = np.divide(head, denom,
                                out=np.zeros(hop), where=denom > 0)
    # Second half: falling sqrt-Hann; there the analysis window is identical,
    # so the product is the matching falling Hann bump.
    synthesis[hop:] = np.cos(np.pi * (m[hop:] - hop) / (2 * hop))

    pair = WindowPair(analysis=analysis, synthesis=synthesis,
                      hop=hop, fft_len=fft_len)
    residual = cola_residual(pair)
    if residual > COLA_TOL:
        raise ConfigError(f"window design failed the overlap-add check "
                          f"(residual {residual:.3g} > {COLA_TOL:g})")
    return pair


def cola_residual(wp: WindowPair) -> float:
    """Max deviation of the shifted window products from 1 over one hop."""
    la, ls, hop = wp.analysis_len, wp.synthesis_len, wp.hop
    # Right-align the synthesis window with the analysis window.
    product = np.zeros(la)
    product[la - ls:] = wp.analysis[la - ls:] * wp.synthesis
    # Steady state: sum the product over all hop shifts covering one hop.
    acc = np.zeros(hop)
    for start in range(0, la, hop):
        seg = product[start:start + hop]
        acc[:len(seg)] += seg
    return float(np.max(np.abs(acc - 1.0)))


def analyze(window_buffer: np.ndarray, wp: WindowPair) -> np.ndarray:
    """One-sided spectrum of the newest analysis-window worth of input.

    `window_buffer` holds the most recent `analysis_len` samples, oldest
    first.  The windowed frame is placed at the end of the FFT buffer so the
    newest samples keep a fixed phase reference.
    """
    buf = np.asarray(window_buffer, dtype=np.float64)
    if buf.shape != (wp.analysis_len,):
        raise ValueError(f"analyze expects {wp.analysis_len} samples, "
                         f"got {buf.shape}")
    frame = np.zeros(wp.fft_len)
    frame[wp.fft_len - wp.analysis_len:] = buf * wp.analysis
    return np.fft.rfft(frame)


class OlaState:
    """Overlap-add carry: the synthesis tail still waiting to be emitted."""

    def __init__(self, wp: WindowPair):
        self.pending = np.zeros(wp.synthesis_len - wp.hop)
        self.frames_emitted = 0


def synthesize(spectrum: np.ndarray, wp: WindowPair, state: OlaState) -> np.ndarray:
    """Inverse transform one frame and return the finalized hop of output."""
    spectrum = np.asarray(spectrum)
    if spectrum.shape != (wp.n_bins,):
        raise ValueError(f"synthesize expects {wp.n_bins} bins, "
                         f"got {spectrum.shape}")
    frame = np.fft.irfft(spectrum, n=wp.fft_len)
    tail = frame[wp.fft_len - wp.synthesis_len:] * wp.synthesis
    out = state.pending[:wp.hop] + tail[:wp.hop]
    # Ls = 2*hop, so the remainder of the frame is next hop's carry.
    state.pending = tail[wp.hop:].copy()
    state.frames_emitted += 1
    return out


def latency_samples(wp: WindowPair) -> int:
    """Algorithmic latency in samples: the synthesis window length."""
    return wp.synthesis_len

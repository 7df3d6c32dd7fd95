"""Objective evaluation: SDR, STOI, and batch reports.

SDR uses the single-source scalar-projection form: the estimate is compared
against the reference scaled by the optimal projection coefficient, capped
at +60 dB.  STOI follows the short-time intelligibility procedure: 10 kHz
resampling, silent-frame removal, 15 one-third-octave bands from 150 Hz,
384 ms temporal envelopes with normalization + clipping, and the mean of
band/segment correlations.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import resample_poly

from .audio import AudioBuffer, read_wav

SDR_CAP_DB = 60.0

STOI_FS = 10000
STOI_FRAME = 256          # 25.6 ms
STOI_HOP = 128            # 12.8 ms
STOI_NFFT = 512
STOI_N_BANDS = 15
STOI_MIN_FREQ = 150.0
STOI_SEG_FRAMES = 30      # 384 ms
STOI_DYN_RANGE_DB = 40.0  # silent-frame threshold below the loudest frame
STOI_CLIP_DB = -15.0      # SDR clipping bound


def sdr(reference: AudioBuffer, estimate: AudioBuffer) -> float:
    """Scalar-projection SDR in dB, capped to [-60, +60]."""
    if reference.sample_rate != estimate.sample_rate:
        raise ValueError("sample rates differ")
    s = reference.samples
    y = estimate.samples
    if len(s) != len(y):
        raise ValueError("reference and estimate lengths differ")
    energy = float(np.dot(s, s))
    if energy <= 0.0:
        raise ValueError("reference signal is zero")
    alpha = float(np.dot(s, y)) / energy
    target = alpha * s
    num = float(np.dot(target, target))
    den = float(np.sum(np.square(target - y)))
    if den <= num * 10.0 ** (-SDR_CAP_DB / 10.0):
        return SDR_CAP_DB
    if num == 0.0:
        return -SDR_CAP_DB
    return float(min(10.0 * math.log10(num / den), SDR_CAP_DB))


def _stoi_window() -> np.ndarray:
    # Hann without the zero endpoints, the convention of the cited procedure.
    return np.hanning(STOI_FRAME + 2)[1:-1]


def _frame_starts(n: int) -> np.ndarray:
    return np.arange(0, n - STOI_FRAME + 1, STOI_HOP)


def _remove_silent_frames(x: np.ndarray, y: np.ndarray):
    """Drop frames 40 dB below the loudest reference frame; OLA the rest."""
    w = _stoi_window()
    starts = _frame_starts(len(x))
    if len(starts) == 0:
        raise ValueError("signal too short for silent-frame analysis")
    frames_x = np.stack([x[s:s + STOI_FRAME] * w for s in starts])
    frames_y = np.stack([y[s:s + STOI_FRAME] * w for s in starts])
    level = 20.0 * np.log10(np.linalg.norm(frames_x, axis=1)
                            / math.sqrt(STOI_FRAME) + 1e-30)
    keep = level > np.max(level) - STOI_DYN_RANGE_DB
    kept_x = frames_x[keep]
    kept_y = frames_y[keep]
    n_out = (len(kept_x) - 1) * STOI_HOP + STOI_FRAME if len(kept_x) else 0
    x_out = np.zeros(n_out)
    y_out = np.zeros(n_out)
    for i in range(len(kept_x)):
        pos = i * STOI_HOP
        x_out[pos:pos + STOI_FRAME] += kept_x[i]
        y_out[pos:pos + STOI_FRAME] += kept_y[i]
    return x_out, y_out


def third_octave_bands(fs: int = STOI_FS, nfft: int = STOI_NFFT,
                       n_bands: int = STOI_N_BANDS,
                       min_freq: float = STOI_MIN_FREQ) -> np.ndarray:
    """(n_bands, nfft//2+1) 0/1 matrix selecting bins per 1/3-octave band."""
    f = np.arange(nfft // 2 + 1) * (fs / nfft)
    cf = min_freq * 2.0 ** (np.arange(n_bands) / 3.0)
    lo = cf * 2.0 ** (-1.0 / 6.0)
    hi = cf * 2.0 ** (1.0 / 6.0)
    obm = np.zeros((n_bands, len(f)))
    for j in range(n_bands):
        k_lo = int(np.argmin(np.square(f - lo[j])))
        k_hi = int(np.argmin(np.square(f - hi[j])))
        obm[j, k_lo:k_hi] = 1.0
    return obm


def _band_envelopes(x: np.ndarray, obm: np.ndarray) -> np.ndarray:
    w = _stoi_window()
    starts = _frame_starts(len(x))
    frames = np.stack([x[s:s + STOI_FRAME] * w for s in starts])
    spec = np.fft.rfft(frames, n=STOI_NFFT, axis=1)
    return np.sqrt(obm @ (np.abs(spec) ** 2).T)      # (bands, frames)


def _to_10k(buf: AudioBuffer) -> np.ndarray:
    if buf.sample_rate == STOI_FS:
        return buf.samples
    g = math.gcd(buf.sample_rate, STOI_FS)
    return resample_poly(buf.samples, STOI_FS // g, buf.sample_rate // g)


def stoi(reference: AudioBuffer, estimate: AudioBuffer) -> float:
    """Short-time objective intelligibility of `estimate` given `reference`."""
    if reference.sample_rate != estimate.sample_rate:
        raise ValueError("sample rates differ")
    if len(reference) != len(estimate):
        raise ValueError("reference and estimate lengths differ")
    if reference.duration < 1.0:
        raise ValueError("STOI requires at least 1 s of audio")
    x = _to_10k(reference)
    y = _to_10k(estimate)
    x, y = _remove_silent_frames(x, y)
    obm = third_octave_bands()
    env_x = _band_envelopes(x, obm)
    env_y = _band_envelopes(y, obm)
    n_frames = env_x.shape[1]
    if n_frames < STOI_SEG_FRAMES:
        raise ValueError("too few active frames for STOI "
                         f"({n_frames} < {STOI_SEG_FRAMES})")
    # (bands, n_segments, seg) sliding envelope segments, one per frame hop.
    seg_x = sliding_window_view(env_x, STOI_SEG_FRAMES, axis=1)
    seg_y = sliding_window_view(env_y, STOI_SEG_FRAMES, axis=1)
    norm_x = np.linalg.norm(seg_x, axis=2, keepdims=True)
    norm_y = np.linalg.norm(seg_y, axis=2, keepdims=True)
    scaled_y = seg_y * (norm_x / np.maximum(norm_y, 1e-30))
    clip_bound = seg_x * (1.0 + 10.0 ** (-STOI_CLIP_DB / 20.0))
    clipped = np.minimum(scaled_y, clip_bound)
    dx = seg_x - np.mean(seg_x, axis=2, keepdims=True)
    dy = clipped - np.mean(clipped, axis=2, keepdims=True)
    denom = (np.linalg.norm(dx, axis=2) * np.linalg.norm(dy, axis=2))
    corr = np.sum(dx * dy, axis=2) / np.maximum(denom, 1e-30)
    return float(np.mean(corr))


@dataclass
class ItemResult:
    item_id: str
    sdr_db: float = math.nan
    stoi: float = math.nan
    flags: str = ""
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error


@dataclass
class MetricReport:
    items: list = field(default_factory=list)
    mean_sdr: float = math.nan
    mean_stoi: float = math.nan
    n_valid: int = 0
    n_failed: int = 0

    def to_tsv(self) -> str:
        lines = ["id\tsdr_db\tstoi\tflags\terror"]
        for it in self.items:
            lines.append(f"{it.item_id}\t{it.sdr_db:.4f}\t{it.stoi:.4f}\t"
                         f"{it.flags}\t{it.error}")
        lines.append(f"mean\t{self.mean_sdr:.4f}\t{self.mean_stoi:.4f}\t"
                     f"valid={self.n_valid}\tfailed={self.n_failed}")
        return "\n".join(lines)

    def to_json(self) -> str:
        return json.dumps({
            "mean_sdr": self.mean_sdr,
            "mean_stoi": self.mean_stoi,
            "n_valid": self.n_valid,
            "n_failed": self.n_failed,
            "items": [{"id": it.item_id, "sdr_db": it.sdr_db,
                       "stoi": it.stoi, "flags": it.flags,
                       "error": it.error} for it in self.items],
        }, indent=2)


def evaluate_set(manifest_path, enhanced_dir) -> MetricReport:
    """Score every manifest item against its enhanced file.

    References are the <id>_ref.wav files next to the manifest; enhanced
    files are <id>_mix.wav (or <id>.wav) inside `enhanced_dir`.  Items that
    fail to load are recorded and excluded from the aggregate.
    """
    from .simulate import read_manifest

    manifest_dir = Path(manifest_path).parent
    enhanced_dir = Path(enhanced_dir)
    report = MetricReport()
    for row in sorted(read_manifest(manifest_path), key=lambda r: r["id"]):
        item_id = row["id"]
        result = ItemResult(item_id)
        try:
            ref = read_wav(manifest_dir / f"{item_id}_ref.wav")
            enh_path = enhanced_dir / f"{item_id}_mix.wav"
            if not enh_path.exists():
                enh_path = enhanced_dir / f"{item_id}.wav"
            enh = read_wav(enh_path)
            n = min(len(ref), len(enh))
            ref = AudioBuffer(ref.samples[:n], ref.sample_rate)
            enh = AudioBuffer(enh.samples[:n], enh.sample_rate)
            result.sdr_db = sdr(ref, enh)
            result.stoi = stoi(ref, enh)
            flags = []
            if result.sdr_db >= SDR_CAP_DB:
                flags.append("sdr_saturated")
            if result.stoi <= 0.0:
                flags.append("stoi_nonpositive")
            result.flags = ",".join(flags)
        except (OSError, ValueError) as exc:
            result.error = str(exc)
            report.n_failed += 1
        report.items.append(result)
    valid = [it for it in report.items if it.ok]
    if not valid:
        raise ValueError("no valid items to aggregate")
    report.n_valid = len(valid)
    report.mean_sdr = float(np.mean([it.sdr_db for it in valid]))
    report.mean_stoi = float(np.mean([it.stoi for it in valid]))
    return report

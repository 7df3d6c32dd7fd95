"""Simulated-mixture generation: SNR-controlled mixing, channel IRs,
high-pass filtering, 2x resampling, and reproducible test-set building.

The noise track is scaled to hit the requested SNR; speech levels are never
touched by the mixer.  Mixtures and their reference speech tracks both pass
through the same high-pass filter so targets stay consistent with inputs.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import signal as sig

from .audio import AudioBuffer, read_wav, write_wav

HP_CUTOFF_HZ = 150.0

# 2x resampler prototype: 64-tap Kaiser-windowed sinc, beta 8, cutoff at a
# quarter of the high rate.  DC gain normalized to exactly one.
RESAMPLE_TAPS = 64
RESAMPLE_BETA = 8.0


@dataclass
class MixSpec:
    snr_range: tuple = (-5.0, 5.0)
    hp_cutoff: float = HP_CUTOFF_HZ
    seed: int = 0
    level_range_db: tuple = (-6.0, 0.0)   # speech level randomization stand-in


def noise_gain_for_snr(speech: np.ndarray, noise: np.ndarray,
                       snr_db: float) -> float:
    """Gain g so that speech + g*noise has the requested component SNR."""
    p_speech = float(np.mean(np.square(speech)))
    p_noise = float(np.mean(np.square(noise)))
    if p_speech <= 0.0:
        raise ValueError("speech signal has zero power")
    if p_noise <= 0.0:
        raise ValueError("noise signal has zero power")
    return float(np.sqrt(p_speech / (p_noise * 10.0 ** (snr_db / 10.0))))


def _fit_noise(noise: np.ndarray, length: int, offset: int = 0) -> np.ndarray:
    """Circularly tile `noise` starting at `offset` to cover `length`."""
    idx = (offset + np.arange(length)) % len(noise)
    return noise[idx]


def mix_at_snr(speech: AudioBuffer, noise: AudioBuffer,
               snr_db: float) -> AudioBuffer:
    if speech.sample_rate != noise.sample_rate:
        raise ValueError("speech and noise sample rates differ")
    n = _fit_noise(noise.samples, len(speech))
    g = noise_gain_for_snr(speech.samples, n, snr_db)
    return AudioBuffer(speech.samples + g * n, speech.sample_rate)


def highpass(x: AudioBuffer, fc: float = HP_CUTOFF_HZ) -> AudioBuffer:
    """Second-order Butterworth high-pass (bilinear, prewarped), zero ICs."""
    if not 0.0 < fc < x.sample_rate / 2:
        raise ValueError(f"cutoff {fc} Hz must lie below Nyquist")
    b, a = sig.butter(2, fc, btype="highpass", fs=x.sample_rate)
    return AudioBuffer(sig.lfilter(b, a, x.samples), x.sample_rate)


def butter_hp_coeffs(fc: float, fs: int):
    return sig.butter(2, fc, btype="highpass", fs=fs)


def convolve_ir(speech: AudioBuffer, ir: np.ndarray) -> AudioBuffer:
    ir = np.asarray(ir, dtype=np.float64)
    if ir.size == 0:
        raise ValueError("impulse response is empty")
    full = np.convolve(speech.samples, ir)
    return AudioBuffer(full[:len(speech)], speech.sample_rate)


def _resample_filter() -> np.ndarray:
    n = np.arange(RESAMPLE_TAPS)
    delay = (RESAMPLE_TAPS - 1) / 2.0
    h = 0.5 * np.sinc(0.5 * (n - delay)) * np.kaiser(RESAMPLE_TAPS,
                                                     RESAMPLE_BETA)
    return h / np.sum(h)


def resample_2x(x: AudioBuffer, direction: str) -> AudioBuffer:
    """Polyphase 2x resampling.

    The up and down trims are phase-matched so a down(up(x)) round trip is
    sample-aligned with zero net delay.
    """
    h = _resample_filter()
    if direction == "up":
        full = sig.upfirdn(2.0 * h, x.samples, up=2)
        out = full[31:31 + 2 * len(x)]
        return AudioBuffer(out, x.sample_rate * 2)
    if direction == "down":
        if x.sample_rate % 2:
            raise ValueError("cannot halve an odd sample rate")
        full = np.convolve(x.samples, h)
        out = full[32::2][:(len(x) + 1) // 2]
        return AudioBuffer(out, x.sample_rate // 2)
    raise ValueError(f"direction must be 'up' or 'down', got {direction!r}")


MANIFEST_FIELDS = ("id", "speech_path", "noise_path", "snr_db",
                   "noise_gain", "offset_samples")


def make_test_set(speech_dir, noise_dir, spec: MixSpec, count: int,
                  out_dir, ir_dir=None) -> Path:
    """Generate `count` mixture/reference pairs plus a manifest.

    Deterministic for a fixed seed.  Writes <id>_mix.wav and <id>_ref.wav
    (32-bit float) to `out_dir` and returns the manifest path.
    """
    speech_files = sorted(Path(speech_dir).glob("*.wav"))
    noise_files = sorted(Path(noise_dir).glob("*.wav"))
    if not speech_files or not noise_files:
        raise ValueError("speech and noise directories must contain WAV files")
    ir_files = sorted(Path(ir_dir).glob("*.wav")) if ir_dir else []
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)
    rows = []
    for i in range(count):
        item_id = f"{i:04d}"
        speech_path = speech_files[int(rng.integers(len(speech_files)))]
        noise_path = noise_files[int(rng.integers(len(noise_files)))]
        snr_db = float(rng.uniform(*spec.snr_range))
        level_db = float(rng.uniform(*spec.level_range_db))
        try:
            speech = read_wav(speech_path)
            noise = read_wav(noise_path)
            if noise.sample_rate != speech.sample_rate:
                raise ValueError(f"{noise_path}: sample rate differs from "
                                 f"{speech_path}")
            ch = speech
            if ir_files:
                ir_path = ir_files[int(rng.integers(len(ir_files)))]
                ch = convolve_ir(speech, read_wav(ir_path).samples)
            scaled = AudioBuffer(ch.samples * 10.0 ** (level_db / 20.0),
                                 ch.sample_rate)
            offset = int(rng.integers(len(noise)))
            n = _fit_noise(noise.samples, len(scaled), offset)
            gain = noise_gain_for_snr(scaled.samples, n, snr_db)
            mix = AudioBuffer(scaled.samples + gain * n, scaled.sample_rate)
            write_wav(out_dir / f"{item_id}_mix.wav",
                      highpass(mix, spec.hp_cutoff))
            write_wav(out_dir / f"{item_id}_ref.wav",
                      highpass(scaled, spec.hp_cutoff))
        except (OSError, ValueError) as exc:
            print(f"simulate: item {item_id} failed: {exc}", file=sys.stderr)
            continue
        rows.append((item_id, str(speech_path), str(noise_path),
                     repr(snr_db), repr(gain), str(offset)))
    manifest = out_dir / "manifest.tsv"
    with open(manifest, "w", encoding="utf-8") as fh:
        fh.write("\t".join(MANIFEST_FIELDS) + "\n")
        for row in rows:
            fh.write("\t".join(row) + "\n")
    return manifest


def read_manifest(path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if tuple(header) != MANIFEST_FIELDS:
            raise ValueError(f"{path}: unexpected manifest header {header}")
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            rows.append(dict(zip(MANIFEST_FIELDS, parts)))
    return rows

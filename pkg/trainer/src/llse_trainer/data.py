"""Dataset assembly from engine manifests.

Each manifest item contributes a (mixture magnitudes, features, reference
magnitudes) triple at the engine's frame conventions.  The WAV reader here
is intentionally minimal: mono 16-bit PCM or 32-bit float.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import features

MANIFEST_FIELDS = ("id", "speech_path", "noise_path", "snr_db",
                   "noise_gain", "offset_samples")


def read_wav(path) -> tuple[np.ndarray, int]:
    try:
        with wave.open(str(path), "rb") as fh:
            rate = fh.getframerate()
            n = fh.getnframes()
            width = fh.getsampwidth()
            channels = fh.getnchannels()
            raw = fh.readframes(n)
        if channels != 1:
            raise ValueError(f"{path}: expected mono audio")
        if width == 2:
            return np.frombuffer(raw, "<i2").astype(np.float64) / 32768.0, rate
        raise ValueError(f"{path}: unexpected sample width {width}")
    except wave.Error:
        # 32-bit float WAV; the wave module refuses non-PCM, parse manually.
        return _read_float_wav(path)


def _read_float_wav(path) -> tuple[np.ndarray, int]:
    blob = Path(path).read_bytes()
    if blob[:4] != b"RIFF" or blob[8:12] != b"WAVE":
        raise ValueError(f"{path}: not a WAV file")
    pos = 12
    fmt = None
    data = None
    while pos + 8 <= len(blob):
        chunk = blob[pos:pos + 4]
        size = int.from_bytes(blob[pos + 4:pos + 8], "little")
        body = blob[pos + 8:pos + 8 + size]
        if chunk == b"fmt ":
            fmt = body
        elif chunk == b"data":
            data = body
        pos += 8 + size + (size % 2)
    if fmt is None or data is None:
        raise ValueError(f"{path}: missing fmt/data chunks")
    audio_format = int.from_bytes(fmt[0:2], "little")
    channels = int.from_bytes(fmt[2:4], "little")
    rate = int.from_bytes(fmt[4:8], "little")
    bits = int.from_bytes(fmt[14:16], "little")
    if channels != 1:
        raise ValueError(f"{path}: expected mono audio")
    if audio_format == 3 and bits == 32:
        return np.frombuffer(data, "<f4").astype(np.float64), rate
    if audio_format == 1 and bits == 16:
        return np.frombuffer(data, "<i2").astype(np.float64) / 32768.0, rate
    raise ValueError(f"{path}: unsupported WAV format {audio_format}/{bits}")


def read_manifest(path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        header = tuple(fh.readline().rstrip("\n").split("\t"))
        if header != MANIFEST_FIELDS:
            raise ValueError(f"{path}: manifest header {header} does not "
                             f"match the engine convention {MANIFEST_FIELDS}")
        for line in fh:
            rows.append(dict(zip(MANIFEST_FIELDS, line.rstrip("\n").split("\t"))))
    return rows


@dataclass
class SpectrogramSet:
    mix_mag: np.ndarray    # (items, frames, 513)
    feats: np.ndarray      # (items, frames, 66)
    ref_mag: np.ndarray    # (items, frames, 513)


def load_training_set(manifest_path) -> SpectrogramSet:
    manifest_path = Path(manifest_path)
    base = manifest_path.parent
    mix_mags, featss, ref_mags = [], [], []
    n_frames = None
    for row in read_manifest(manifest_path):
        mix, rate = read_wav(base / f"{row['id']}_mix.wav")
        ref, rate_r = read_wav(base / f"{row['id']}_ref.wav")
        if rate != features.FS or rate_r != features.FS:
            raise ValueError(f"item {row['id']}: expected {features.FS} Hz "
                             "audio (trainer conventions are fixed at 32 kHz)")
        if len(mix) != len(ref):
            raise ValueError(f"item {row['id']}: mixture/reference length "
                             "mismatch")
        m = features.magnitude_frames(mix)
        r = features.magnitude_frames(ref)
        if n_frames is None:
            n_frames = len(m)
        if len(m) != n_frames:
            raise ValueError("all items must have equal length "
                             f"(item {row['id']} has {len(m)} frames, "
                             f"expected {n_frames})")
        mix_mags.append(m)
        featss.append(features.compress(m))
        ref_mags.append(r)
    if not mix_mags:
        raise ValueError(f"{manifest_path}: empty manifest")
    return SpectrogramSet(np.stack(mix_mags), np.stack(featss),
                          np.stack(ref_mags))

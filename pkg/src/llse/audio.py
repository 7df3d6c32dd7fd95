"""Audio buffers and WAV file I/O.

Supported on disk: mono PCM 16-bit signed LE and 32-bit IEEE float WAV at
16 kHz or 32 kHz.  In-memory buffers are float64 and carry their own rate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile

SUPPORTED_RATES = (16000, 32000)


@dataclass
class AudioBuffer:
    """A mono waveform with its sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError("AudioBuffer requires a 1-D sample array")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("AudioBuffer samples must be finite")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


def wav_format(path) -> str:
    """Return 'pcm16' or 'float32' for a supported WAV file."""
    rate, data = wavfile.read(path)
    del rate
    if data.dtype == np.int16:
        return "pcm16"
    if data.dtype == np.float32:
        return "float32"
    raise ValueError(f"{path}: unsupported WAV sample format {data.dtype}; "
                     "expected 16-bit PCM or 32-bit float")


def read_wav(path, allowed_rates=SUPPORTED_RATES) -> AudioBuffer:
    rate, data = wavfile.read(path)
    if data.ndim != 1:
        raise ValueError(f"{path}: only mono WAV files are supported "
                         f"(got {data.shape[1]} channels)")
    if allowed_rates is not None and rate not in allowed_rates:
        raise ValueError(f"{path}: unsupported sample rate {rate} Hz; "
                         f"expected one of {allowed_rates}")
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise ValueError(f"{path}: unsupported WAV sample format {data.dtype}; "
                         "expected 16-bit PCM or 32-bit float")
    return AudioBuffer(samples, int(rate))


def write_wav(path, buf: AudioBuffer, fmt: str = "float32") -> None:
    if fmt == "pcm16":
        clipped = np.clip(buf.samples, -1.0, 32767.0 / 32768.0)
        data = np.round(clipped * 32768.0).astype(np.int16)
    elif fmt == "float32":
        data = buf.samples.astype(np.float32)
    else:
        raise ValueError(f"unknown WAV format {fmt!r}; use 'pcm16' or 'float32'")
    wavfile.write(path, buf.sample_rate, data)

"""End-to-end streaming enhancement.

A StreamingEnhancer consumes hop-sized chunks and emits hop-sized chunks
whose stream is delayed by exactly `latency_samples(wp)` relative to the
input, matching the real-time emission schedule (one hop of block buffering
plus the overlap-add completion).  `enhance_buffer` wraps that for whole
files: it trims the leading latency so outputs align sample-exact with the
input, and resamples 16 kHz audio through the 32 kHz engine transparently.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from . import bands, filterbank, nnet, wiener
from .audio import AudioBuffer

ENGINE_NAMES = ("baseline", "gru", "unet")
PROCESS_FS = 32000


class UnitMaskEngine:
    """Pass-through gains; isolates the filterbank for latency/COLA checks."""

    def process_spectrum(self, spectrum):
        return np.ones(len(spectrum)), spectrum


class BaselineEngine:
    def __init__(self, config: wiener.SuppressorConfig | None = None,
                 n_bins: int = 513, frame_rate: float = 100.0):
        self.state = wiener.SuppressorState(config, n_bins=n_bins,
                                            frame_rate=frame_rate)

    def process_spectrum(self, spectrum):
        return self.state.suppress_frame(spectrum)


class NeuralEngine:
    def __init__(self, model, max_atten_db: float = nnet.NEURAL_ATTEN_DB,
                 layout: bands.BandLayout | None = None):
        self.model = model
        self.max_atten_db = max_atten_db
        self.layout = layout or bands.make_layout()

    def process_spectrum(self, spectrum):
        features = bands.compress(np.abs(spectrum), self.layout)
        mask = np.clip(self.model.step(features), 0.0, 1.0)
        gains = bands.expand_mask(mask, self.layout)
        floor = 10.0 ** (-self.max_atten_db / 20.0)
        applied = np.maximum(gains, floor)
        return applied, spectrum * applied


class StreamingEnhancer:
    """Hop-in/hop-out enhancement with a fixed stream delay of one latency."""

    def __init__(self, engine, wp: filterbank.WindowPair | None = None):
        self.wp = wp or filterbank.design_windows()
        self.engine = engine
        self.hop = self.wp.hop
        self._in_buf = np.zeros(self.wp.analysis_len)
        self._ola = filterbank.OlaState(self.wp)
        # One-hop output register: emitted stream = reconstruction delayed by
        # latency_samples(wp), i.e. what a real-time deployment would play.
        self._out_hold = np.zeros(self.hop)

    @property
    def latency(self) -> int:
        return filterbank.latency_samples(self.wp)

    def process_chunk(self, chunk: np.ndarray) -> np.ndarray:
        chunk = np.asarray(chunk, dtype=np.float64)
        if chunk.shape != (self.hop,):
            raise ValueError(f"expected chunks of {self.hop} samples, "
                             f"got {chunk.shape}")
        self._in_buf = np.concatenate([self._in_buf[self.hop:], chunk])
        spectrum = filterbank.analyze(self._in_buf, self.wp)
        _, enhanced = self.engine.process_spectrum(spectrum)
        fresh = filterbank.synthesize(enhanced, self.wp, self._ola)
        out = self._out_hold
        self._out_hold = fresh
        return out


def make_engine(name: str, weights_path=None, max_atten_db: float | None = None,
                suppressor_config: wiener.SuppressorConfig | None = None):
    if name == "baseline":
        config = suppressor_config or wiener.SuppressorConfig()
        if max_atten_db is not None:
            config = replace(config, max_atten_db=max_atten_db)
        return BaselineEngine(config)
    if name in ("gru", "unet"):
        if weights_path is None:
            raise ValueError(f"engine {name!r} requires a weight file")
        model = nnet.load_model(weights_path)
        expected = nnet.KIND_GRU if name == "gru" else nnet.KIND_UNET
        if model.kind != expected:
            raise ValueError(f"{weights_path} holds a different model kind "
                             f"than engine {name!r}")
        atten = nnet.NEURAL_ATTEN_DB if max_atten_db is None else max_atten_db
        return NeuralEngine(model, max_atten_db=atten)
    raise ValueError(f"unknown engine {name!r}; expected one of {ENGINE_NAMES}")


def _stream(samples: np.ndarray, enhancer: StreamingEnhancer) -> np.ndarray:
    """Run a whole signal through the enhancer and compensate the latency."""
    hop = enhancer.hop
    latency = enhancer.latency
    n = len(samples)
    pad = (-n) % hop
    padded = np.concatenate([samples, np.zeros(pad)])
    flush = latency // hop + (1 if latency % hop else 0)
    chunks = []
    for start in range(0, len(padded), hop):
        chunks.append(enhancer.process_chunk(padded[start:start + hop]))
    for _ in range(flush):
        chunks.append(enhancer.process_chunk(np.zeros(hop)))
    out = np.concatenate(chunks)[latency:latency + n]
    return out


def enhance_buffer(buf: AudioBuffer, engine_name: str, weights_path=None,
                   max_atten_db: float | None = None,
                   suppressor_config: wiener.SuppressorConfig | None = None,
                   wp: filterbank.WindowPair | None = None) -> AudioBuffer:
    """Enhance one buffer; output has the input's length, rate and alignment."""
    from .simulate import resample_2x

    engine = make_engine(engine_name, weights_path, max_atten_db,
                         suppressor_config)
    work = buf
    if buf.sample_rate == PROCESS_FS // 2:
        work = resample_2x(buf, "up")
    elif buf.sample_rate != PROCESS_FS:
        raise ValueError(f"unsupported sample rate {buf.sample_rate}")
    enhancer = StreamingEnhancer(engine, wp)
    out = _stream(work.samples, enhancer)
    result = AudioBuffer(out, work.sample_rate)
    if buf.sample_rate != result.sample_rate:
        result = resample_2x(result, "down")
        result = AudioBuffer(result.samples[:len(buf)], buf.sample_rate)
    return result

import numpy as np
import pytest

from llse.audio import AudioBuffer
from llse.filterbank import design_windows, latency_samples
from llse.pipeline import (BaselineEngine, NeuralEngine, StreamingEnhancer,
                           UnitMaskEngine, enhance_buffer, make_engine)
from llse.nnet import GruModel
from llse.weights import KIND_GRU, zero_tensors

from signals import speechlike, white


def raw_stream(x, engine):
    enh = StreamingEnhancer(engine)
    hop = enh.hop
    padded = np.concatenate([x, np.zeros((-len(x)) % hop + 2 * hop)])
    out = [enh.process_chunk(padded[s:s + hop])
           for s in range(0, len(padded), hop)]
    return np.concatenate(out)


def test_stream_delay_equals_latency():
    wp = design_windows()
    t0 = 4321
    x = np.zeros(12800)
    x[t0] = 1.0
    out = raw_stream(x, UnitMaskEngine())
    nz = np.nonzero(np.abs(out) > 1e-9)[0]
    assert nz.min() == t0 + latency_samples(wp)
    assert nz.max() == t0 + latency_samples(wp)


def test_enhance_buffer_unit_engine_alignment():
    x = white(32000, seed=1, level=0.2)
    out = enhance_buffer(AudioBuffer(x, 32000), "baseline")
    assert len(out) == len(x)
    assert out.sample_rate == 32000


def test_enhance_identity_reconstruction():
    # unit-mask streaming through the public wrapper: exact alignment
    from llse.pipeline import _stream
    x = white(16000, seed=2, level=0.2)
    enh = StreamingEnhancer(UnitMaskEngine())
    y = _stream(x, enh)
    assert np.max(np.abs(y - x)) < 1e-6


def test_enhance_16k_round_trip():
    fs = 16000
    x = speechlike(fs, fs, seed=3)
    out = enhance_buffer(AudioBuffer(x, fs), "baseline")
    assert out.sample_rate == fs
    assert len(out) == len(x)


def test_16k_unit_chain_is_aligned():
    # upsample -> unit-mask STFT (latency-compensated) -> downsample must
    # return the band-limited input with zero net shift
    from scipy import signal as sig
    from llse.pipeline import _stream
    from llse.simulate import resample_2x
    fs = 16000
    b = sig.firwin(201, 0.4)
    x = 0.2 * sig.lfilter(b, [1.0], white(fs, seed=20, level=1.0))
    up = resample_2x(AudioBuffer(x, fs), "up")
    recon = _stream(up.samples, StreamingEnhancer(UnitMaskEngine()))
    down = resample_2x(AudioBuffer(recon, 32000), "down")
    interior = slice(300, len(x) - 300)
    err = np.max(np.abs(down.samples[interior] - x[interior]))
    rms = np.sqrt(np.mean(x[interior] ** 2))
    assert err / rms < 1e-3


def test_enhance_rejects_other_rates():
    with pytest.raises(ValueError, match="sample rate"):
        enhance_buffer(AudioBuffer(np.zeros(1000), 44100), "baseline")


def test_neural_engine_zero_weights_is_half_mask():
    model = GruModel(zero_tensors(KIND_GRU))
    engine = NeuralEngine(model)
    spec = (np.arange(513) + 1.0).astype(complex)
    gains, enhanced = engine.process_spectrum(spec)
    np.testing.assert_array_equal(gains, 0.5)
    np.testing.assert_allclose(enhanced, spec * 0.5, rtol=1e-12)


def test_neural_engine_applies_attenuation_floor():
    model = GruModel(zero_tensors(KIND_GRU))
    # force mask toward 0 with a large negative output bias
    t = dict(model.tensors)
    t["out.b"] = np.full(66, -50.0)
    engine = NeuralEngine(GruModel(t))
    spec = np.ones(513, dtype=complex)
    gains, enhanced = engine.process_spectrum(spec)
    floor = 10.0 ** (-15.0 / 20.0)
    np.testing.assert_allclose(gains, floor, rtol=1e-9)
    np.testing.assert_allclose(np.abs(enhanced), floor, rtol=1e-9)


def test_baseline_engine_silence_stays_silent():
    out = enhance_buffer(AudioBuffer(np.zeros(32000), 32000), "baseline")
    assert np.max(np.abs(out.samples)) < 1e-12


def test_make_engine_validation(gru_file, unet_file):
    assert isinstance(make_engine("baseline"), BaselineEngine)
    assert isinstance(make_engine("gru", gru_file), NeuralEngine)
    with pytest.raises(ValueError, match="requires a weight file"):
        make_engine("gru")
    with pytest.raises(ValueError, match="model kind"):
        make_engine("gru", unet_file)
    with pytest.raises(ValueError, match="unknown engine"):
        make_engine("spectral")


def test_enhance_deterministic(gru_file):
    x = AudioBuffer(speechlike(16000, 32000, seed=4)
                    + white(16000, seed=5, level=0.03), 32000)
    a = enhance_buffer(x, "gru", weights_path=gru_file)
    b = enhance_buffer(x, "gru", weights_path=gru_file)
    np.testing.assert_array_equal(a.samples, b.samples)


def test_neural_output_never_exceeds_input_frames(unet_file):
    # masks <= 1 plus COLA: enhanced output can't grow above the unit-mask
    # reconstruction by more than numerical noise
    x = AudioBuffer(white(9600, seed=6, level=0.2), 32000)
    out = enhance_buffer(x, "unet", weights_path=unet_file)
    assert np.max(np.abs(out.samples)) <= np.max(np.abs(x.samples)) * 1.5


def test_chunk_size_enforced():
    enh = StreamingEnhancer(UnitMaskEngine())
    with pytest.raises(ValueError, match="chunks"):
        enh.process_chunk(np.zeros(100))

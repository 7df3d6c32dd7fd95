import numpy as np
import pytest

from llse.filterbank import (ConfigError, OlaState, analyze, cola_residual,
                             design_windows, latency_samples, synthesize)


def stream_unit(x, wp):
    """Push x through analyze/synthesize with a unit mask; return the stream."""
    hop = wp.hop
    state = OlaState(wp)
    window = np.zeros(wp.analysis_len)
    out = []
    padded = np.concatenate([x, np.zeros((-len(x)) % hop + wp.synthesis_len)])
    for start in range(0, len(padded), hop):
        window = np.concatenate([window[hop:], padded[start:start + hop]])
        out.append(synthesize(analyze(window, wp), wp, state))
    return np.concatenate(out)


def test_default_geometry():
    wp = design_windows()
    assert wp.analysis_len == 720
    assert wp.synthesis_len == 640
    assert wp.hop == 320
    assert wp.fft_len == 1024
    assert np.all(wp.analysis >= 0)
    assert np.all(wp.synthesis >= 0)


def test_cola_residual_default():
    assert cola_residual(design_windows()) < 1e-10


def test_symmetric_config_is_sqrt_hann():
    wp = design_windows(analysis_ms=20.0)
    ref = np.sin(np.pi * np.arange(640) / 640)
    np.testing.assert_allclose(wp.analysis, ref, atol=1e-12)
    np.testing.assert_allclose(wp.synthesis, ref, atol=1e-12)
    assert cola_residual(wp) < 1e-10


def test_16k_config():
    wp = design_windows(fs=16000)
    assert (wp.analysis_len, wp.synthesis_len, wp.hop) == (360, 320, 160)
    assert latency_samples(wp) == 320
    assert cola_residual(wp) < 1e-10


@pytest.mark.parametrize("kwargs,fragment", [
    (dict(analysis_ms=10.0), "analysis window"),
    (dict(hop_ms=5.0), "hop"),
    (dict(fft_len=512), "fft_len"),
    (dict(analysis_ms=22.4999), "whole number"),
])
def test_bad_configs_rejected(kwargs, fragment):
    with pytest.raises(ConfigError, match=fragment):
        design_windows(**kwargs)


def test_latency_samples():
    assert latency_samples(design_windows()) == 640
    assert latency_samples(design_windows(analysis_ms=20.0)) == 640


def test_analyze_zero_buffer():
    wp = design_windows()
    spec = analyze(np.zeros(720), wp)
    assert spec.shape == (513,)
    assert np.all(spec == 0)


def test_analyze_bin_centered_cosine():
    wp = design_windows()
    fs = 32000
    n = np.arange(720)
    # bin-centered: 10 cycles per 1024 samples
    x = np.cos(2 * np.pi * 10 * (fs / 1024) * n / fs)
    spec = analyze(x, wp)
    assert np.argmax(np.abs(spec)) == 10


def test_analyze_impulse_at_last_sample():
    wp = design_windows()
    buf = np.zeros(720)
    buf[-1] = 1.0
    spec = analyze(buf, wp)
    np.testing.assert_allclose(np.abs(spec), wp.analysis[-1], rtol=1e-12)


def test_analyze_linearity():
    wp = design_windows()
    rng = np.random.default_rng(0)
    x = rng.standard_normal(720)
    y = rng.standard_normal(720)
    lhs = analyze(2.5 * x - 0.7 * y, wp)
    rhs = 2.5 * analyze(x, wp) - 0.7 * analyze(y, wp)
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def test_analyze_wrong_length():
    wp = design_windows()
    with pytest.raises(ValueError, match="720"):
        analyze(np.zeros(719), wp)


def test_real_spectrum_endpoints():
    wp = design_windows()
    spec = analyze(np.random.default_rng(3).standard_normal(720), wp)
    assert spec[0].imag == 0
    assert spec[512].imag == 0


def test_synthesize_zero_stream():
    wp = design_windows()
    state = OlaState(wp)
    for _ in range(5):
        out = synthesize(np.zeros(513, dtype=complex), wp, state)
        assert np.all(out == 0)
    assert state.frames_emitted == 5
    assert len(state.pending) == 320


def test_round_trip_white_noise():
    wp = design_windows()
    rng = np.random.default_rng(1)
    x = 0.25 * rng.standard_normal(32000)
    out = stream_unit(x, wp)
    # stream delay is one hop at this layer; skip the 2-frame warmup
    recon = out[wp.hop:wp.hop + len(x)]
    warm = 2 * wp.hop
    assert np.max(np.abs(recon[warm:] - x[warm:])) < 1e-6


def test_impulse_energy_within_latency():
    wp = design_windows()
    t0 = 3000
    x = np.zeros(12800)
    x[t0] = 1.0
    out = stream_unit(x, wp)
    energy_idx = np.nonzero(np.abs(out) > 1e-9)[0]
    assert len(energy_idx) > 0
    assert energy_idx.min() >= t0            # causal
    assert energy_idx.max() <= t0 + latency_samples(wp)

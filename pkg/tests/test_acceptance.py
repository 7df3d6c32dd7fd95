"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line.  Tolerances are fixed here, not calibrated elsewhere.
"""

import contextlib
import time

import numpy as np
import pytest

from llse import bands, nnet, weights, wiener
from llse.audio import AudioBuffer, read_wav, write_wav
from llse.cli import main as cli_main
from llse.filterbank import design_windows, latency_samples
from llse.metrics import sdr, stoi
from llse.pipeline import (StreamingEnhancer, UnitMaskEngine, _stream,
                           enhance_buffer)
from llse.simulate import highpass, noise_gain_for_snr

from signals import speechlike, white
from stoi_oracle import stoi_oracle


@contextlib.contextmanager
def criterion(name):
    try:
        yield
    except Exception:
        print(f"[ACCEPTANCE] FAIL  {name}")
        raise
    print(f"[ACCEPTANCE] PASS  {name}")


def test_cola_reconstruction():
    with criterion("COLA/reconstruction: unit-mask white noise, err < 1e-6, < 1 s"):
        start = time.perf_counter()
        x = white(32000, seed=50, level=0.25)
        out = _stream(x, StreamingEnhancer(UnitMaskEngine()))
        warm = 2 * 320
        assert np.max(np.abs(out[warm:] - x[warm:])) < 1e-6
        assert time.perf_counter() - start < 1.0


def test_latency_bound():
    with criterion("Latency: impulse energy within 640 samples, exact bound"):
        wp = design_windows()
        assert latency_samples(wp) == 640
        enh = StreamingEnhancer(UnitMaskEngine(), wp)
        t0 = 4800
        x = np.zeros(12800)
        x[t0] = 1.0
        chunks = [enh.process_chunk(x[s:s + 320])
                  for s in range(0, len(x), 320)]
        chunks += [enh.process_chunk(np.zeros(320)) for _ in range(4)]
        out = np.concatenate(chunks)
        energy = np.square(out)
        inside = energy[t0:t0 + 641].sum()
        outside = energy.sum() - inside
        assert inside > 0.999
        assert outside < 1e-20
        assert energy[:t0].sum() == 0.0            # causality


def test_band_layout():
    with criterion("Band layout: 54+12, widths non-decreasing, exact round trip"):
        layout = bands.make_layout()
        assert layout.passthrough_count == 54
        widths = layout.widths
        assert len(widths) == 12
        assert np.all(np.diff(widths) >= 0)
        assert layout.band_edges[0] == 54 and layout.band_edges[-1] == 513
        assert widths.sum() == 459
        for const in (1.0, 0.37, 2.5e-3):
            feats = bands.compress(np.full(513, const), layout)
            assert np.all(feats == const)
        rng = np.random.default_rng(51)
        for _ in range(10):
            mask = rng.uniform(0, 1, 66)
            back = bands.compress_mask(bands.expand_mask(mask, layout), layout)
            np.testing.assert_array_equal(back, mask)


def test_baseline_gain_law():
    with criterion("Baseline gain law: G(1)=0.5, 12 dB floor, DD unit cases"):
        g_min = 10.0 ** (-12.0 / 20.0)
        assert wiener.wiener_gain(np.array([1.0]), g_min)[0] == 0.5
        assert abs(wiener.wiener_gain(np.array([0.0]), g_min)[0]
                   - 10.0 ** -0.6) < 1e-12
        xi = wiener.decision_directed_xi(np.array([2.0]), np.array([1.0]),
                                         0.98)[0]
        assert abs(xi - 1.98) < 1e-12
        xi = wiener.decision_directed_xi(np.array([0.5]), np.array([0.5]),
                                         0.98)[0]
        assert abs(xi - 0.1225) < 1e-12


def test_baseline_suppression():
    with criterion("Baseline suppression: 10 s white noise in [-13.5, -10] dB, < 5 s"):
        start = time.perf_counter()
        fs = 32000
        amp = 10.0 ** (-26.0 / 20.0)
        x = AudioBuffer(amp * np.random.default_rng(52).standard_normal(10 * fs),
                        fs)
        out = enhance_buffer(x, "baseline")
        steady = slice(2 * fs, None)
        ratio = (np.mean(out.samples[steady] ** 2)
                 / np.mean(x.samples[steady] ** 2))
        ratio_db = 10.0 * np.log10(ratio)
        assert -13.5 <= ratio_db <= -10.0
        assert time.perf_counter() - start < 5.0


def test_neural_complexity():
    with criterion("Complexity: GRU 83,778 / 8.3M MACs; U-Net 25,281 / 72.0M MACs"):
        gru = nnet.GruModel(weights.zero_tensors(weights.KIND_GRU))
        assert nnet.count_params(gru) == 83778
        macs = nnet.count_macs_per_second(gru)
        assert 7.5e6 <= macs <= 9.5e6
        unet = nnet.UnetModel(weights.zero_tensors(weights.KIND_UNET))
        p = nnet.count_params(unet)
        assert 0.75 * 24000 <= p <= 1.25 * 24000
        assert p == 25281                       # documented exact value
        umacs = nnet.count_macs_per_second(unet)
        assert 20e6 <= umacs <= 100e6
        assert umacs == 72017600                # documented exact value


def test_streaming_equals_batch():
    with criterion("Streaming==batch: GRU < 1e-6, U-Net < 1e-5, causality"):
        rng = np.random.default_rng(53)
        frames = np.abs(rng.standard_normal((50, 66)))
        gru = nnet.GruModel(weights.random_tensors(weights.KIND_GRU, seed=54))
        streamed = np.stack([gru.step(f) for f in frames])
        assert np.max(np.abs(streamed - nnet.gru_batch(gru, frames))) < 1e-6
        unet = nnet.UnetModel(weights.random_tensors(weights.KIND_UNET,
                                                     seed=55))
        streamed = np.stack([unet.step(f) for f in frames])
        assert np.max(np.abs(streamed - nnet.unet_batch(unet, frames))) < 1e-5
        altered = frames.copy()
        altered[31] += 1.0
        a = nnet.unet_batch(unet, frames)
        b = nnet.unet_batch(unet, altered)
        np.testing.assert_array_equal(a[:31], b[:31])


def test_neural_attenuation_floor():
    with criterion("Attenuation floor: zero mask -> exactly 10^(-15/20)"):
        spec = np.ones(513, dtype=complex)
        out = nnet.apply_mask(spec, np.zeros(513), max_atten_db=15.0)
        floor = 10.0 ** (-15.0 / 20.0)
        assert np.all(out == floor)


def test_metrics_oracles():
    with criterion("Metrics: SDR 10.0 dB case, STOI identity, oracle < 0.01"):
        rng = np.random.default_rng(56)
        s = rng.standard_normal(32000)
        n = rng.standard_normal(32000)
        n -= (s @ n) / (s @ s) * s
        n *= np.sqrt((s @ s) / 10.0) / np.linalg.norm(n)
        val = sdr(AudioBuffer(s, 16000), AudioBuffer(s + n, 16000))
        assert abs(val - 10.0) < 1e-6
        fs = 16000
        x = speechlike(2 * fs, fs, seed=57)
        assert abs(stoi(AudioBuffer(x, fs), AudioBuffer(x, fs)) - 1.0) < 1e-6
        for seed, snr_db in ((58, 0.0), (59, 0.0), (60, 5.0), (61, -5.0),
                             (62, 10.0)):
            xx = speechlike(2 * fs, fs, seed=seed)
            nn = white(len(xx), seed=seed + 500, level=1.0)
            g = np.sqrt(np.mean(xx ** 2)
                        / (np.mean(nn ** 2) * 10 ** (snr_db / 10)))
            yy = xx + g * nn
            fast = stoi(AudioBuffer(xx, fs), AudioBuffer(yy, fs))
            slow = stoi_oracle(xx, yy, fs)
            assert abs(fast - slow) < 0.01


def test_butterworth():
    with criterion("Butterworth: -3.01 +-0.1 dB at 150 Hz, DC rejection > 60 dB"):
        fs = 32000
        t = np.arange(4 * fs) / fs
        y = highpass(AudioBuffer(np.sin(2 * np.pi * 150.0 * t), fs))
        amp = np.sqrt(2.0 * np.mean(y.samples[fs:] ** 2))
        assert abs(20.0 * np.log10(amp) + 3.01) < 0.1
        dc = highpass(AudioBuffer(np.ones(2 * fs), fs))
        residual = np.max(np.abs(dc.samples[fs:]))
        assert 20.0 * np.log10(max(residual, 1e-300)) < -60.0


def test_mixer_snr_accuracy():
    with criterion("Mixer: achieved SNR within 1e-9 dB over 100 draws"):
        rng = np.random.default_rng(63)
        for _ in range(100):
            snr = rng.uniform(-5.0, 5.0)
            s = rng.standard_normal(4000)
            n = rng.standard_normal(4000)
            g = noise_gain_for_snr(s, n, snr)
            achieved = 10.0 * np.log10(np.mean(s ** 2)
                                       / np.mean((g * n) ** 2))
            assert abs(achieved - snr) < 1e-9


def test_enhance_determinism(tmp_path, gru_file, unet_file):
    with criterion("Determinism: enhance twice byte-identical, all engines"):
        fs = 32000
        x = speechlike(fs, fs, seed=64) + white(fs, seed=65, level=0.03)
        src = tmp_path / "in.wav"
        write_wav(src, AudioBuffer(x, fs))
        for engine, wfile in (("baseline", None), ("gru", gru_file),
                              ("unet", unet_file)):
            outs = []
            for sub in ("r1", "r2"):
                out_dir = tmp_path / f"{engine}_{sub}"
                argv = ["enhance", str(src), "--out-dir", str(out_dir),
                        "--engine", engine]
                if wfile is not None:
                    argv += ["--weights", str(wfile)]
                assert cli_main(argv) == 0
                outs.append((out_dir / "in.wav").read_bytes())
            assert outs[0] == outs[1]

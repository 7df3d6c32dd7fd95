import numpy as np
import pytest
from scipy.io import wavfile

from llse.audio import AudioBuffer, read_wav, wav_format, write_wav

from signals import white


def test_pcm16_round_trip(tmp_path):
    path = tmp_path / "x.wav"
    x = AudioBuffer(white(1000, seed=0, level=0.2), 32000)
    write_wav(path, x, fmt="pcm16")
    back = read_wav(path)
    assert back.sample_rate == 32000
    assert np.max(np.abs(back.samples - x.samples)) <= 1.0 / 32768.0
    assert wav_format(path) == "pcm16"


def test_float32_round_trip(tmp_path):
    path = tmp_path / "x.wav"
    x = AudioBuffer(white(1000, seed=1), 16000)
    write_wav(path, x, fmt="float32")
    back = read_wav(path)
    np.testing.assert_array_equal(back.samples,
                                  x.samples.astype(np.float32))
    assert wav_format(path) == "float32"


def test_rejects_stereo(tmp_path):
    path = tmp_path / "stereo.wav"
    wavfile.write(path, 32000, np.zeros((100, 2), dtype=np.int16))
    with pytest.raises(ValueError, match="mono"):
        read_wav(path)


def test_rejects_unsupported_rate(tmp_path):
    path = tmp_path / "fast.wav"
    wavfile.write(path, 44100, np.zeros(100, dtype=np.int16))
    with pytest.raises(ValueError, match="44100"):
        read_wav(path)


def test_rejects_unsupported_dtype(tmp_path):
    path = tmp_path / "i32.wav"
    wavfile.write(path, 32000, np.zeros(100, dtype=np.int32))
    with pytest.raises(ValueError, match="format"):
        read_wav(path)


def test_rejects_nonfinite_buffer():
    with pytest.raises(ValueError, match="finite"):
        AudioBuffer(np.array([0.0, np.inf]), 32000)


def test_pcm16_write_clips(tmp_path):
    path = tmp_path / "hot.wav"
    write_wav(path, AudioBuffer(np.array([1.5, -1.5]), 32000), fmt="pcm16")
    back = read_wav(path)
    assert np.max(np.abs(back.samples)) <= 1.0

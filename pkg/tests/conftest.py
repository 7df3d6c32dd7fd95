import numpy as np
import pytest

from llse import weights
from llse.audio import AudioBuffer, write_wav

from signals import speechlike, white


@pytest.fixture(scope="session")
def gru_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("models") / "gru.nmwf"
    weights.save_tensors(path, weights.KIND_GRU,
                         weights.random_tensors(weights.KIND_GRU, seed=11))
    return path


@pytest.fixture(scope="session")
def unet_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("models") / "unet.nmwf"
    weights.save_tensors(path, weights.KIND_UNET,
                         weights.random_tensors(weights.KIND_UNET, seed=12))
    return path


@pytest.fixture(scope="session")
def wav_corpus(tmp_path_factory):
    """Small speech/noise directories at 32 kHz for simulate/eval tests."""
    root = tmp_path_factory.mktemp("corpus")
    speech_dir = root / "speech"
    noise_dir = root / "noise"
    speech_dir.mkdir()
    noise_dir.mkdir()
    fs = 32000
    for i in range(3):
        write_wav(speech_dir / f"sp{i}.wav",
                  AudioBuffer(speechlike(3 * fs, fs, seed=100 + i), fs))
    for i in range(2):
        write_wav(noise_dir / f"n{i}.wav",
                  AudioBuffer(white(4 * fs, seed=200 + i, level=0.08), fs))
    return {"speech": speech_dir, "noise": noise_dir, "fs": fs}

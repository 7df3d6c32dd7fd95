import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from gen_signals import babble, speechlike, write_pcm16

FS = 32000


def run_llse(*args, check=True):
    """Invoke the enhancement engine CLI (the trainer's only interface)."""
    if shutil.which("llse"):
        cmd = ["llse", *map(str, args)]
    else:
        cmd = [sys.executable, "-m", "llse.cli", *map(str, args)]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if check and proc.returncode != 0:
        raise RuntimeError(f"llse {' '.join(map(str, args))} failed "
                           f"(rc {proc.returncode}):\n{proc.stderr}")
    return proc


@pytest.fixture(scope="session", autouse=True)
def require_engine():
    try:
        run_llse("inspect-layout")
    except (RuntimeError, FileNotFoundError):
        pytest.skip("llse engine CLI not available", allow_module_level=True)


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    speech_dir = root / "speech"
    noise_dir = root / "noise"
    speech_dir.mkdir()
    noise_dir.mkdir()
    rng = np.random.default_rng(0)
    for i in range(8):
        write_pcm16(speech_dir / f"sp{i:02d}.wav",
                    speechlike(4 * FS, FS, seed=10 + i,
                               f0_base=float(rng.uniform(100, 200))), FS)
    for i in range(2):
        write_pcm16(noise_dir / f"white{i}.wav",
                    0.15 * np.random.default_rng(30 + i).standard_normal(5 * FS),
                    FS)
        write_pcm16(noise_dir / f"babble{i}.wav",
                    babble(5 * FS, FS, seed=40 + i), FS)
    return {"speech": speech_dir, "noise": noise_dir}


def simulate_set(corpus, out_dir, count, seed):
    run_llse("simulate", "--speech-dir", corpus["speech"],
             "--noise-dir", corpus["noise"], "--out-dir", out_dir,
             "--count", count, "--seed", seed)
    return out_dir / "manifest.tsv"


@pytest.fixture(scope="session")
def train_manifest(corpus, tmp_path_factory):
    out = tmp_path_factory.mktemp("trainset")
    return simulate_set(corpus, out, 24, 1)


@pytest.fixture(scope="session")
def heldout_manifest(corpus, tmp_path_factory):
    out = tmp_path_factory.mktemp("heldout")
    return simulate_set(corpus, out, 8, 2)


@pytest.fixture(scope="session")
def probe_wav(corpus, tmp_path_factory):
    path = tmp_path_factory.mktemp("probe") / "probe.wav"
    x = speechlike(2 * FS, FS, seed=99) \
        + 0.05 * np.random.default_rng(98).standard_normal(2 * FS)
    write_pcm16(path, x, FS)
    return path


@pytest.fixture(scope="session")
def probe_features(probe_wav, tmp_path_factory):
    out = tmp_path_factory.mktemp("probe_feats") / "feats.npz"
    run_llse("dump-features", "--wav", probe_wav, "--out", out)
    return out


def engine_masks(weight_path, features_path, tmp_path):
    out = tmp_path / "masks.npz"
    run_llse("probe-mask", "--weights", weight_path,
             "--features", features_path, "--out", out)
    return np.load(out)["masks"]


def eval_summary(manifest, enhanced_dir, tmp_path, tag):
    summary = tmp_path / f"summary_{tag}.json"
    run_llse("eval", "--manifest", manifest, "--enhanced-dir", enhanced_dir,
             "--summary", summary)
    return json.loads(summary.read_text())

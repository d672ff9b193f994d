import sys
import wave
from pathlib import Path

import numpy as np
import pytest

from fbtrainer.records import Records

VECTORS = Path(__file__).resolve().parents[2] / "test_vectors"

ENGINE_CLI = [sys.executable, "-m", "fbdenoise.cli"]


def synthetic_records(seed, frames=300):
    """Feature/target sequences where the targets are a smooth function of
    the band features, so the net has something real to learn."""
    rng = np.random.default_rng(seed)
    a = np.empty((frames, 34))
    a[0] = rng.uniform(0, 1, 34)
    for t in range(1, frames):
        a[t] = np.clip(0.92 * a[t - 1] + 0.25 * rng.standard_normal(34),
                       0.0, 1.0)
    feats = np.zeros((frames, 70), dtype=np.float32)
    feats[:, :34] = -3.0 + 2.0 * a
    feats[:, 34:68] = 0.85 * a
    feats[:, 68] = rng.uniform(0.2, 0.8)
    feats[:, 69] = 0.7
    return Records(
        features=feats,
        gains=a.astype(np.float32),
        strengths=(0.6 * a).astype(np.float32),
        att_applied=np.zeros(frames, dtype=np.float32),
    )


@pytest.fixture(scope="session")
def synthetic_dataset():
    return [synthetic_records(100 + i) for i in range(10)]


def write_wav16(path, rate, samples):
    data = (np.clip(samples, -1.0, 1.0) * 32767.0).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(rate)
        fh.writeframes(data.tobytes())


def make_voiced(seed, seconds=1.5, rate=48000, f0_base=180.0):
    rng = np.random.default_rng(seed)
    n = int(seconds * rate)
    t = np.arange(n) / rate
    f0 = f0_base * (1 + 0.2 * np.sin(2 * np.pi * 0.7 * t + rng.uniform(0, 6)))
    phase = np.cumsum(2 * np.pi * f0 / rate)
    sig = sum((0.5 / h) * np.sin(h * phase) for h in range(1, 9))
    env = 0.4 * (1.0 + np.sin(2 * np.pi * 1.1 * t + rng.uniform(0, 6)))
    return sig * env

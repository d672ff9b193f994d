import numpy as np
import pytest

from fbdenoise.spectral import FrameSpec, build_erb_layout


@pytest.fixture(scope="session")
def spec48():
    return FrameSpec(48000)


@pytest.fixture(scope="session")
def layout48(spec48):
    return build_erb_layout(spec48)


def make_voiced(seed, seconds=2.0, rate=48000, f0_base=180.0, harmonics=8):
    """Synthetic voiced signal: slowly vibrating f0, 1/h harmonic rolloff,
    slow amplitude modulation."""
    rng = np.random.default_rng(seed)
    n = int(seconds * rate)
    t = np.arange(n) / rate
    f0 = f0_base + 0.2 * f0_base * np.sin(2 * np.pi * 0.7 * t + rng.uniform(0, 6))
    phase = np.cumsum(2 * np.pi * f0 / rate)
    sig = sum((0.5 / h) * np.sin(h * phase) for h in range(1, harmonics + 1))
    env = 0.4 * (1.0 + np.sin(2 * np.pi * 1.1 * t + rng.uniform(0, 6)))
    return sig * env


def mix_at_snr(clean, seed, snr_db):
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(len(clean))
    noise *= np.sqrt((clean**2).sum() / (noise**2).sum() * 10 ** (-snr_db / 10))
    return clean + noise, noise


def seg_snr(ref, x, rate=48000, floor_db=-10.0, ceil_db=35.0):
    """Mean per-frame SNR over active frames, clamped per frame."""
    hop = rate // 100
    n = min(len(ref), len(x)) // hop
    r = ref[: n * hop].reshape(n, hop)
    y = x[: n * hop].reshape(n, hop)
    re = (r * r).sum(axis=1)
    err = ((r - y) ** 2).sum(axis=1)
    active = re > re.max() * 1e-4
    s = 10 * np.log10(np.maximum(re[active], 1e-12) / np.maximum(err[active], 1e-12))
    return float(np.clip(s, floor_db, ceil_db).mean())


def rel_rms_db(ref, x):
    err = np.asarray(x) - np.asarray(ref)
    return 10 * np.log10((err**2).mean() / max((np.asarray(ref) ** 2).mean(), 1e-30))

"""Envelope postfilter: gain warping, loudness compensation, reverb floor,
and a pitch-adaptive output high-pass."""

from dataclasses import dataclass

import numpy as np
from scipy.signal import butter, lfilter

from .pitch import PitchEstimate


@dataclass(frozen=True)
class PostfilterConfig:
    beta: float = 0.02
    t60: float = 0.1
    hop_seconds: float = 0.01
    floor_enabled: bool = True
    highpass_enabled: bool = True

    @property
    def delta(self) -> float:
        """Per-frame magnitude decay matching a T60 energy decay."""
        return 10.0 ** (-60.0 * self.hop_seconds / (20.0 * self.t60))


def warp_gain(g):
    """Over-attenuate uncertain bands: g * sin(pi/2 * g); fixed at 0 and 1."""
    g = np.asarray(g, dtype=float)
    return g * np.sin(0.5 * np.pi * g)


def global_compensation(e0: float, e1: float, beta: float) -> float:
    """Frame gain restoring the loudness lost to warping.

    e0 is the frame energy under the raw gains, e1 under the warped gains;
    G = sqrt((1+beta)(e0/e1) / (1 + beta (e0/e1)^2)), peaking at
    e0/e1 = 1/sqrt(beta).  A silent frame (both zero) gets G = 1.
    """
    if e1 <= 0.0:
        return 1.0
    ratio = e0 / e1
    return float(np.sqrt((1.0 + beta) * ratio / (1.0 + beta * ratio * ratio)))


class DecayFloor:
    """Per-band minimum-decay floor, clamped to the noisy magnitude.

    floor(l) = min(max(x(l), delta * floor(l-1)), y(l)).
    """

    def __init__(self, num_bands: int, delta: float):
        self.delta = delta
        self._prev = np.zeros(num_bands)

    def step(self, x_mag: np.ndarray, y_mag: np.ndarray) -> np.ndarray:
        out = np.minimum(np.maximum(x_mag, self.delta * self._prev), y_mag)
        self._prev = out
        return out


class AdaptiveHighpass:
    """Second-order output high-pass that ducks under the talker's pitch.

    Voiced frames move the cutoff toward 0.55*f0 (clamped to [40, 150] Hz);
    unvoiced frames fall back to 60 Hz.  The cutoff is slewed between
    frames and coefficients change only at frame boundaries, with filter
    state carried across, which keeps transitions click-free.
    """

    VOICED_THRESHOLD = 0.5
    CUTOFF_FACTOR = 0.55
    CUTOFF_MIN = 40.0
    CUTOFF_MAX = 150.0
    CUTOFF_UNVOICED = 60.0
    SLEW = 0.5  # per-frame approach toward the target cutoff

    def __init__(self, sample_rate: int):
        self.sample_rate = sample_rate
        self._cutoff = self.CUTOFF_UNVOICED
        self._cache: dict[float, tuple[np.ndarray, np.ndarray]] = {}
        b, a = self._design(self._cutoff)
        self._zi = np.zeros(max(len(a), len(b)) - 1)

    def _design(self, cutoff: float):
        key = round(cutoff * 2.0) / 2.0  # quantize to 0.5 Hz for the cache
        if key not in self._cache:
            self._cache[key] = butter(2, key, btype="highpass",
                                      fs=self.sample_rate)
        return self._cache[key]

    def step(self, samples: np.ndarray, pitch: PitchEstimate | None) -> np.ndarray:
        if pitch is not None and pitch.voiced_confidence > self.VOICED_THRESHOLD:
            f0 = self.sample_rate / max(pitch.period, 1)
            target = min(max(self.CUTOFF_FACTOR * f0, self.CUTOFF_MIN),
                         self.CUTOFF_MAX)
        else:
            target = self.CUTOFF_UNVOICED
        self._cutoff += self.SLEW * (target - self._cutoff)
        b, a = self._design(self._cutoff)
        out, self._zi = lfilter(b, a, np.asarray(samples, dtype=np.float64),
                                zi=self._zi)
        return out

"""Shared streaming analysis: framing, pitch, comb filtering, features.

Both the runtime engine and training-target extraction run this front end
so their feature values agree exactly.  Frames are indexed from -1 (the
half-zero warm-up window); the frame produced for index l uses band
magnitudes from frame l+3, realizing the 40 ms look-ahead (3 future frames
plus the 10 ms synthesis overlap).

Streams below 48 kHz are analyzed at their native rate and the spectra are
widened to the 48 kHz bin grid, so band indices and features are
rate-independent and one model serves every rate.
"""

from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .features import LOOKAHEAD_FRAMES, assemble_features, t_max_for_rate
from .pitch import CombConfig, PitchEstimate, PitchTracker, comb_filter, pitch_coherence
from .spectral import (
    BandLayout,
    FrameSpec,
    analyze,
    band_energies,
    build_erb_layout,
    stft_resample,
    vorbis_window,
)

PROCESS_RATE = 48000


@dataclass
class FrameAnalysis:
    """Everything the enhancement stages need for one frame."""

    index: int
    spectrum: np.ndarray           # noisy spectrum on the 48 kHz bin grid
    band_norms: np.ndarray
    periodic_spectrum: np.ndarray  # comb-filtered signal, same grid
    pitch: PitchEstimate
    tap_energy: float              # sum of squared comb taps actually used
    coherence: np.ndarray
    features: np.ndarray
    future_band_norms: np.ndarray


class _SampleBuffer:
    """Append-only sample history addressed in absolute stream positions,
    with a zero prefix standing in for pre-stream history."""

    def __init__(self, prefix: int):
        self._data = np.zeros(prefix)
        self._offset = -prefix

    def append(self, block: np.ndarray):
        self._data = np.concatenate([self._data, block])

    def trim(self, keep_from: int):
        drop = keep_from - self._offset
        if drop > 0:
            self._data = self._data[drop:]
            self._offset = keep_from

    def view(self, lo: int, hi: int) -> tuple[np.ndarray, int]:
        """Return (array, index of ``lo`` within it) covering [lo, hi)."""
        if lo < self._offset or hi > self.end:
            raise UsageError("requested span outside buffered history")
        return self._data, lo - self._offset

    @property
    def end(self) -> int:
        return self._offset + len(self._data)


class StreamAnalyzer:
    def __init__(self, sample_rate: int, comb_periods: int = 5):
        self.spec = FrameSpec(sample_rate)
        self.window = vorbis_window(self.spec.window_len)
        self.layout: BandLayout = build_erb_layout(FrameSpec(PROCESS_RATE))
        self.native_rate = sample_rate
        self.t_max = t_max_for_rate(sample_rate)

        hop = self.spec.hop
        self.lookahead = LOOKAHEAD_FRAMES * hop
        self.comb = CombConfig.make(comb_periods, max_lookahead=self.lookahead)
        self.tracker = PitchTracker(sample_rate)
        self._pitch_analysis_len = self.spec.window_len + self.lookahead

        prefix = (comb_periods + 1) * self.tracker.t_max + self.spec.window_len
        self._buf = _SampleBuffer(prefix)
        self._blocks = 0
        # spectra/norms for frames awaiting their look-ahead, keyed by index
        self._pending: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def _widen(self, spectrum: np.ndarray) -> np.ndarray:
        if self.native_rate == PROCESS_RATE:
            return spectrum
        return stft_resample(spectrum, self.native_rate, PROCESS_RATE)

    def push(self, block: np.ndarray) -> list[FrameAnalysis]:
        """Feed one 10 ms block; return the frames that became complete."""
        block = np.asarray(block, dtype=np.float64)
        hop = self.spec.hop
        if block.shape != (hop,):
            raise UsageError(f"expected {hop}-sample blocks, got {block.shape}")
        self._buf.append(block)
        self._blocks += 1

        out = []
        newest = self._blocks - 2  # frame a needs samples through (a+2)*hop
        if newest >= -1 and newest not in self._pending:
            start = newest * hop
            data, lo = self._buf.view(start, start + self.spec.window_len)
            spec = self._widen(analyze(data[lo:lo + self.spec.window_len], self.window))
            self._pending[newest] = (spec, band_energies(spec, self.layout))

        current = newest - LOOKAHEAD_FRAMES
        if current >= -1:
            out.append(self._finish(current))
            self._buf.trim((current + 1) * hop
                           - (self.comb.periods_per_side + 1) * self.tracker.t_max)
        return out

    def _finish(self, l: int) -> FrameAnalysis:
        hop = self.spec.hop
        win = self.spec.window_len
        start = l * hop
        _, future_norms = self._pending[l + LOOKAHEAD_FRAMES]

        pitch_hist, lo = self._buf.view(
            self._buf.end - self._pitch_analysis_len - self.tracker.t_max,
            self._buf.end)
        pitch = self.tracker.estimate(pitch_hist[lo:], self._pitch_analysis_len)

        m = self.comb.periods_per_side
        comb_lo = start - m * pitch.period
        comb_hi = start + win + min(m * pitch.period, self.comb.max_lookahead)
        data, rel = self._buf.view(comb_lo, comb_hi)
        p_window, tap_energy = comb_filter(
            data, rel + (start - comb_lo), win, pitch.period, self.comb)

        spec, norms = self._pending.pop(l)
        p_spec = self._widen(analyze(p_window, self.window))
        q = pitch_coherence(spec, p_spec, self.layout)
        feats = assemble_features(future_norms, q, pitch, self.t_max)
        return FrameAnalysis(
            index=l,
            spectrum=spec,
            band_norms=norms,
            periodic_spectrum=p_spec,
            pitch=pitch,
            tap_energy=tap_energy,
            coherence=q,
            features=feats,
            future_band_norms=future_norms,
        )

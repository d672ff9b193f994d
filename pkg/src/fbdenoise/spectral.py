"""Windowed STFT analysis/synthesis, perceptual band layout, resampling.

Conventions fixed here and relied on by the weight/record file formats:
forward DFT is unnormalized (``numpy.fft.rfft``), inverse carries the
1/window_len factor (``numpy.fft.irfft``).  Frames are 20 ms with 50%
overlap at every supported rate.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, UsageError

#: Sample rates with an integer 20 ms window and 50 Hz bin spacing.
SUPPORTED_RATES = (8000, 16000, 24000, 32000, 48000)

NUM_BANDS = 34
MIN_BAND_HZ = 100.0
TOP_BAND_HZ = 20000.0

_ERB_SCALE = 1000.0 / (24.7 * 4.37)


@dataclass(frozen=True)
class FrameSpec:
    """Framing constants for one stream: 20 ms windows, 10 ms hop."""

    sample_rate: int

    def __post_init__(self):
        if self.sample_rate not in SUPPORTED_RATES:
            raise ConfigurationError(
                f"unsupported sample rate {self.sample_rate}; "
                f"expected one of {SUPPORTED_RATES}"
            )

    @property
    def window_len(self) -> int:
        return self.sample_rate // 50

    @property
    def hop(self) -> int:
        return self.sample_rate // 100

    @property
    def fft_bins(self) -> int:
        return self.window_len // 2 + 1

    @property
    def bin_spacing_hz(self) -> float:
        return self.sample_rate / self.window_len  # always 50 Hz


def vorbis_window(window_len: int) -> np.ndarray:
    """Vorbis power-complementary window: w(n) = sin(pi/2 * sin^2(pi(n+.5)/N)).

    Satisfies w^2(n) + w^2(n + N/2) = 1, so analysis+synthesis windowing
    with 50% overlap-add reconstructs the input exactly.
    """
    if window_len < 4 or window_len % 2:
        raise ConfigurationError(f"window_len must be even and >= 4, got {window_len}")
    n = np.arange(window_len)
    inner = np.sin(np.pi * (n + 0.5) / window_len)
    return np.sin(0.5 * np.pi * inner * inner)


def analyze(frame: np.ndarray, window: np.ndarray) -> np.ndarray:
    """Window one frame of time samples and return its half spectrum."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape != window.shape:
        raise UsageError(f"frame length {frame.shape} != window length {window.shape}")
    return np.fft.rfft(frame * window)


class OverlapAdd:
    """Streaming synthesis state: inverse DFT, window, 50% overlap-add.

    Each call consumes one spectrum and emits ``hop`` samples.  The first
    emitted block only carries the new window's head; callers comparing
    against the input should skip one hop of warm-up.
    """

    def __init__(self, spec: FrameSpec):
        self.spec = spec
        self.window = vorbis_window(spec.window_len)
        self._tail = np.zeros(spec.hop)

    def synthesize(self, spectrum: np.ndarray) -> np.ndarray:
        if len(spectrum) != self.spec.fft_bins:
            raise UsageError(
                f"expected {self.spec.fft_bins} bins, got {len(spectrum)}"
            )
        frame = np.fft.irfft(spectrum, n=self.spec.window_len) * self.window
        hop = self.spec.hop
        out = frame[:hop] + self._tail
        self._tail = frame[hop:].copy()
        return out


@dataclass(frozen=True)
class BandLayout:
    """34-band perceptual partition of the DFT bins below 20 kHz.

    ``edges`` holds 35 monotone bin indices.  ``analysis_weights`` is the
    (34, fft_bins) matrix of triangular responses used for band energies; it
    is a partition of unity for every bin up to the last edge and zero
    above.  ``interp_weights`` additionally extends the top band's response
    to the bins above the last edge so that interpolating unity band gains
    yields unity at every bin.
    """

    sample_rate: int
    edges: np.ndarray
    analysis_weights: np.ndarray
    interp_weights: np.ndarray

    @property
    def num_bands(self) -> int:
        return len(self.edges) - 1


def _erb_rate(f_hz):
    return _ERB_SCALE * np.log1p(4.37 * np.asarray(f_hz, dtype=float) / 1000.0)


def _erb_rate_inv(units):
    return np.expm1(np.asarray(units, dtype=float) / _ERB_SCALE) * 1000.0 / 4.37


def build_erb_layout(spec: FrameSpec) -> BandLayout:
    """Place 34 band edges on the ERB-rate scale with a 100 Hz width floor.

    Edges are accumulated from 0 Hz: each step takes an equal share of the
    ERB-rate span still remaining up to min(20 kHz, Nyquist), then the step
    is widened to 100 Hz if the share came out narrower.  Deterministic for
    a given rate.
    """
    if spec.sample_rate < 8000:
        raise ConfigurationError("need at least an 8 kHz stream for 34 bands")
    top_hz = min(TOP_BAND_HZ, spec.sample_rate / 2.0)
    if NUM_BANDS * MIN_BAND_HZ > top_hz:
        raise ConfigurationError(
            f"cannot fit {NUM_BANDS} bands of >= {MIN_BAND_HZ} Hz below {top_hz} Hz"
        )

    edges_hz = [0.0]
    cur = 0.0
    top_units = float(_erb_rate(top_hz))
    for b in range(NUM_BANDS):
        share = (top_units - float(_erb_rate(cur))) / (NUM_BANDS - b)
        nxt = float(_erb_rate_inv(float(_erb_rate(cur)) + share))
        nxt = max(nxt, cur + MIN_BAND_HZ)
        edges_hz.append(nxt)
        cur = nxt

    spacing = spec.bin_spacing_hz
    min_bins = max(1, int(np.ceil(MIN_BAND_HZ / spacing)))
    top_bin = int(round(top_hz / spacing))
    edges = np.rint(np.asarray(edges_hz) / spacing).astype(int)
    edges[0] = 0
    edges[-1] = top_bin
    for i in range(1, len(edges)):
        edges[i] = max(edges[i], edges[i - 1] + min_bins)
    if edges[-1] > top_bin:
        raise ConfigurationError("band edges exceed the 20 kHz/Nyquist limit")

    centers = (edges[:-1] + edges[1:]) / 2.0
    bins = np.arange(spec.fft_bins, dtype=float)
    ana = np.zeros((NUM_BANDS, spec.fft_bins))
    for b in range(NUM_BANDS):
        left = centers[b - 1] if b > 0 else -1.0
        right = centers[b + 1] if b + 1 < NUM_BANDS else float(top_bin) + 1.0
        ana[b] = np.interp(bins, [left, centers[b], right], [0.0, 1.0, 0.0])
    # flat extensions below the first and above the last triangle peak
    ana[0, bins <= centers[0]] = 1.0
    ana[-1, (bins >= centers[-1]) & (bins <= top_bin)] = 1.0
    ana[:, bins > top_bin] = 0.0

    interp = ana.copy()
    interp[-1, bins > top_bin] = 1.0  # top band's gain carries above 20 kHz
    return BandLayout(
        sample_rate=spec.sample_rate,
        edges=edges,
        analysis_weights=ana,
        interp_weights=interp,
    )


def band_energies(spectrum: np.ndarray, layout: BandLayout) -> np.ndarray:
    """Per-band L2 norms: X_b = sqrt(sum_k w_b(k) |bin_k|^2)."""
    spectrum = np.asarray(spectrum)
    if spectrum.shape[-1] != layout.analysis_weights.shape[1]:
        raise UsageError("spectrum length does not match layout")
    power = spectrum.real**2 + spectrum.imag**2
    return np.sqrt(layout.analysis_weights @ power)


def interpolate_gains(band_gains: np.ndarray, layout: BandLayout) -> np.ndarray:
    """Spread 34 band gains onto the DFT bins via the triangular weights.

    Unity band gains produce unity bin gains everywhere (bins above the top
    edge follow the top band).
    """
    band_gains = np.asarray(band_gains, dtype=float)
    if band_gains.shape != (layout.num_bands,):
        raise UsageError(f"expected {layout.num_bands} band gains")
    return layout.interp_weights.T @ band_gains


def stft_resample(spectrum: np.ndarray, from_rate: int, to_rate: int) -> np.ndarray:
    """Convert a 20 ms half spectrum between rates by bin copy/zero-pad.

    Bin spacing is 50 Hz at every supported rate, so bins map one-to-one.
    Amplitudes are scaled by to_rate/from_rate so the synthesized waveform
    keeps its amplitude.  The bin that changes between interior and Nyquist
    roles picks up the usual factor of two.
    """
    for rate in (from_rate, to_rate):
        if rate not in SUPPORTED_RATES:
            raise UsageError(f"unsupported rate {rate} for STFT-domain resampling")
    spectrum = np.asarray(spectrum, dtype=complex)
    n_from = from_rate // 100 + 1
    n_to = to_rate // 100 + 1
    if len(spectrum) != n_from:
        raise UsageError(f"expected {n_from} bins for {from_rate} Hz input")
    if n_to == n_from:
        return spectrum.copy()
    ratio = to_rate / from_rate
    out = np.zeros(n_to, dtype=complex)
    if n_to > n_from:
        out[:n_from] = spectrum * ratio
        out[n_from - 1] *= 0.5  # old Nyquist bin becomes a conjugate pair
    else:
        out[:] = spectrum[:n_to] * ratio
        out[-1] *= 2.0  # interior bin collapses onto the new Nyquist
    return out

"""Pitch tracking, multi-period comb filtering, per-band pitch coherence."""

from dataclasses import dataclass

import numpy as np
from scipy.signal import resample_poly

from .errors import UsageError
from .spectral import BandLayout, band_energies

F_MIN_HZ = 60.0
F_MAX_HZ = 500.0


@dataclass(frozen=True)
class PitchEstimate:
    """One frame's pitch decision.

    period is an integer lag in samples at the stream rate; correlation is
    the normalized cross-correlation at that lag over the analysis window
    (look-ahead included); voiced_confidence is correlation clamped to
    [0, 1].  Unvoiced material scores below 0.3; consumers gating on
    voicing (the output high-pass) use 0.5.
    """

    period: int
    correlation: float
    voiced_confidence: float


@dataclass(frozen=True)
class CombConfig:
    """Tap layout for the multi-period comb filter.

    ``base_taps`` covers lags -M..M (negative = future) and sums to one.
    ``max_lookahead`` bounds how many future samples a filtered window may
    reach past its end; future taps whose lag k*T would exceed it are
    dropped and the remainder renormalized per period.
    """

    periods_per_side: int
    base_taps: np.ndarray
    max_lookahead: int

    @classmethod
    def make(cls, periods_per_side: int = 5, max_lookahead: int = 10**9,
             shape: str = "hann") -> "CombConfig":
        m = periods_per_side
        if m < 0:
            raise UsageError("periods_per_side must be >= 0")
        k = np.arange(-m, m + 1)
        if shape == "hann":
            # Hann over 2M+3 points with the zero endpoints dropped; for
            # M=5 the tap energy is exactly 1/8 (-9.0 dB).
            taps = np.cos(np.pi * k / (2 * m + 2)) ** 2
        elif shape == "uniform":
            taps = np.ones(2 * m + 1)
        else:
            raise UsageError(f"unknown tap shape {shape!r}")
        taps = taps / taps.sum()
        return cls(periods_per_side=m, base_taps=taps, max_lookahead=max_lookahead)

    def taps_for_period(self, period: int):
        """Return (lags, taps, tap_energy) after look-ahead truncation.

        Taps are renormalized to sum to one; tap_energy is sum(w_k^2), the
        white-noise power attenuation of the filter.
        """
        if period <= 0:
            raise UsageError("period must be positive")
        m = self.periods_per_side
        future = min(m, self.max_lookahead // period)
        lags = np.arange(-future, m + 1)
        taps = self.base_taps[lags + m]
        taps = taps / taps.sum()
        return lags, taps, float(taps @ taps)


def comb_filter(buf: np.ndarray, window_start: int, window_len: int,
                period: int, cfg: CombConfig) -> tuple[np.ndarray, float]:
    """Average the window with copies shifted by multiples of the period.

    Returns (filtered window, tap energy actually applied).  ``buf`` must
    cover window_start - M*period history and the truncated look-ahead.
    """
    buf = np.asarray(buf, dtype=np.float64)
    lags, taps, energy = cfg.taps_for_period(period)
    lo = window_start - int(lags[-1]) * period
    hi = window_start + window_len - int(lags[0]) * period
    if lo < 0 or hi > len(buf):
        raise UsageError(
            f"buffer [0,{len(buf)}) too short for comb taps spanning [{lo},{hi})"
        )
    out = np.zeros(window_len)
    for lag, w in zip(lags, taps):
        start = window_start - int(lag) * period
        out += w * buf[start:start + window_len]
    return out, energy


def pitch_coherence(x_spec: np.ndarray, p_spec: np.ndarray,
                    layout: BandLayout) -> np.ndarray:
    """Per-band cosine between a spectrum and its periodic estimate.

    q_b = Re(sum_k w_b(k) conj(p_k) x_k) / (||p||_b ||x||_b), clamped to
    [-1, 1]; bands where either side has no energy return 0.
    """
    x_spec = np.asarray(x_spec)
    p_spec = np.asarray(p_spec)
    if x_spec.shape != p_spec.shape:
        raise UsageError("spectra must have identical shapes")
    cross = layout.analysis_weights @ (p_spec.conj() * x_spec).real
    x_norm = band_energies(x_spec, layout)
    p_norm = band_energies(p_spec, layout)
    den = x_norm * p_norm
    q = np.zeros(layout.num_bands)
    ok = den > 0
    q[ok] = cross[ok] / den[ok]
    return np.clip(q, -1.0, 1.0)


def estimate_enhanced_coherence(q_y: np.ndarray, tap_energy: float) -> np.ndarray:
    """Coherence of the comb-filtered signal inferred from the noisy one.

    With the filter attenuating the stochastic part by ``tap_energy``
    (sum of squared taps), q_phat = q_y / sqrt((1 - e) q_y^2 + e).
    """
    q = np.clip(np.asarray(q_y, dtype=float), 0.0, 1.0)
    return q / np.sqrt((1.0 - tap_energy) * q * q + tap_energy)


class PitchTracker:
    """Streaming pitch estimator: coarse correlation search at ~12 kHz,
    a running dynamic-programming smoother over lag candidates, then
    refinement at the stream rate.

    The smoother's transition cost lam*|log(T/T_prev)| suppresses
    single-frame octave jumps while still letting clean sweeps track; the
    small octave_cost prefers the shortest lag among equal-correlation
    multiples.  All constants here are engineering choices.
    """

    def __init__(self, sample_rate: int, f_min: float = F_MIN_HZ,
                 f_max: float = F_MAX_HZ, lam: float = 1.0,
                 octave_cost: float = 0.02, memory: float = 0.85):
        self.sample_rate = sample_rate
        self.t_min = max(2, int(round(sample_rate / f_max)))
        self.t_max = int(round(sample_rate / f_min))
        self.decim = max(1, sample_rate // 12000)
        self.lam = lam
        self.octave_cost = octave_cost
        self.memory = memory

        lo = max(2, self.t_min // self.decim)
        hi = max(lo + 1, self.t_max // self.decim)
        self._lags = np.arange(lo, hi + 1)
        log_lags = np.log(self._lags.astype(float))
        self._transition = lam * np.abs(log_lags[:, None] - log_lags[None, :])
        self._octave_penalty = octave_cost * np.log2(self._lags / self._lags[0])
        self._costs = np.zeros(len(self._lags))

    def reset(self):
        self._costs = np.zeros(len(self._lags))

    def estimate(self, buf: np.ndarray, analysis_len: int) -> PitchEstimate:
        """Estimate the period for the window ending ``analysis_len``
        samples before the end of ``buf`` plus its look-ahead.

        The correlation window is the last ``analysis_len`` samples; the
        buffer must additionally cover t_max history before it.
        """
        buf = np.asarray(buf, dtype=np.float64)
        if len(buf) < analysis_len + self.t_max:
            raise UsageError(
                f"pitch buffer needs >= {analysis_len + self.t_max} samples, "
                f"got {len(buf)}"
            )
        if self.decim > 1:
            x = resample_poly(buf, 1, self.decim)
        else:
            x = buf
        n = len(x)
        win = analysis_len // self.decim
        ref = x[n - win:]
        ref_energy = float(ref @ ref)

        # normalized correlation against lagged segments (cumsum energies)
        csum = np.concatenate(([0.0], np.cumsum(x * x)))
        dots = np.empty(len(self._lags))
        energies = np.empty(len(self._lags))
        for i, lag in enumerate(self._lags):
            seg = x[n - win - lag:n - lag]
            dots[i] = ref @ seg
            energies[i] = csum[n - lag] - csum[n - win - lag]
        nac = dots / np.sqrt(ref_energy * energies + 1e-20)

        score = nac - self._octave_penalty
        trans = (self._costs[None, :] + self._transition).min(axis=1)
        costs = -score + trans
        best = int(np.argmin(costs))
        self._costs = (costs - costs.min()) * self.memory

        coarse = int(self._lags[best]) * self.decim
        period, corr = self._refine(buf, analysis_len, coarse)
        return PitchEstimate(
            period=period,
            correlation=corr,
            voiced_confidence=float(np.clip(corr, 0.0, 1.0)),
        )

    def _refine(self, buf: np.ndarray, analysis_len: int, coarse: int):
        n = len(buf)
        ref = buf[n - analysis_len:]
        ref_energy = float(ref @ ref)
        span = self.decim + 1
        best_corr, best_lag = -2.0, coarse
        for lag in range(max(self.t_min, coarse - span),
                         min(self.t_max, coarse + span) + 1):
            seg = buf[n - analysis_len - lag:n - lag]
            c = float(ref @ seg) / np.sqrt(ref_energy * float(seg @ seg) + 1e-20)
            if c > best_corr:
                best_corr, best_lag = c, lag
        return best_lag, best_corr

"""Training ground truth: ideal band gains and comb strengths, perceptual
losses, and synthetic-mixture augmentation with feature/target records."""

import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import firwin, kaiserord, lfilter

from .errors import FormatError, UsageError
from .features import FEATURE_DIM
from .frontend import StreamAnalyzer
from .pitch import estimate_enhanced_coherence
from .spectral import NUM_BANDS

#: Noise-masking-tone limit on the degenerate-branch attenuation (~15 dB).
NOISE_FLOOR = 0.03

TARGET_DIM = 2 * NUM_BANDS + 1


@dataclass(frozen=True)
class LossConfig:
    gamma: float = 0.5
    c4: float = 10.0


def ideal_gain(x_norm, y_norm):
    """Ratio mask X/Y clamped to [0, 1]; an empty noisy band passes (1)."""
    x = np.asarray(x_norm, dtype=float)
    y = np.asarray(y_norm, dtype=float)
    out = np.ones(np.broadcast(x, y).shape)
    np.divide(x, y, out=out, where=y > 0)
    return np.clip(out, 0.0, 1.0)


def ideal_strength(q_x, q_y, q_p):
    """Comb strength making the blend's coherence match the clean signal.

    Solves q_z((1-r) y + r p_hat) = q_x for r under the orthogonal-noise
    geometry, with a = q_p^2 - q_x^2 and b = q_p q_y (1 - q_x^2).  When the
    periodic estimate is worse than the clean signal (q_p < q_x) the blend
    cannot reach q_x: r is pinned to 1 and a gain attenuation matches the
    stochastic level instead, bounded by the noise-masking-tone floor.

    Returns (r, g_att) arrays.
    """
    q_x = np.clip(np.asarray(q_x, dtype=float), 0.0, 1.0)
    q_y = np.clip(np.asarray(q_y, dtype=float), 0.0, 1.0)
    q_p = np.clip(np.asarray(q_p, dtype=float), 0.0, 1.0)
    q_x, q_y, q_p = np.broadcast_arrays(q_x, q_y, q_p)

    a = q_p * q_p - q_x * q_x
    b = q_p * q_y * (1.0 - q_x * q_x)
    gap = q_x * q_x - q_y * q_y

    with np.errstate(divide="ignore", invalid="ignore"):
        alpha = (np.sqrt(np.maximum(b * b + a * gap, 0.0)) - b) / a
        alpha_limit = gap / (2.0 * b)
    small_a = np.abs(a) < 1e-9
    alpha = np.where(small_a, alpha_limit, alpha)
    alpha = np.where(small_a & (b < 1e-12), 0.0, alpha)
    r = np.clip(alpha / (1.0 + alpha), 0.0, 1.0)

    degenerate = q_p < q_x
    g_att = np.sqrt((1.0 + NOISE_FLOOR - q_x * q_x)
                    / (1.0 + NOISE_FLOOR - q_p * q_p))
    r = np.where(degenerate, 1.0, r)
    g_att = np.where(degenerate, g_att, 1.0)
    if r.ndim == 0:
        return float(r), float(g_att)
    return r, g_att


def _pow_gamma(x, gamma):
    return np.power(np.clip(np.asarray(x, dtype=float), 0.0, None), gamma)


def gain_loss(g, g_hat, cfg: LossConfig = LossConfig()) -> float:
    """Squared + fourth-power error between loudness-compressed gains."""
    d = _pow_gamma(g, cfg.gamma) - _pow_gamma(g_hat, cfg.gamma)
    d2 = d * d
    return float(d2.sum() + cfg.c4 * (d2 * d2).sum())


def strength_loss(r, r_hat, cfg: LossConfig = LossConfig()) -> float:
    """Squared error between compressed residual-noise factors (1 - r)."""
    d = _pow_gamma(1.0 - np.asarray(r, dtype=float), cfg.gamma) \
        - _pow_gamma(1.0 - np.asarray(r_hat, dtype=float), cfg.gamma)
    return float((d * d).sum())


def gain_loss_grad(g, g_hat, cfg: LossConfig = LossConfig()) -> np.ndarray:
    """d gain_loss / d g_hat (defined for g_hat in (0, 1])."""
    g_hat = np.asarray(g_hat, dtype=float)
    d = _pow_gamma(g, cfg.gamma) - _pow_gamma(g_hat, cfg.gamma)
    inner = -cfg.gamma * np.power(g_hat, cfg.gamma - 1.0)
    return (2.0 * d + 4.0 * cfg.c4 * d**3) * inner


def strength_loss_grad(r, r_hat, cfg: LossConfig = LossConfig()) -> np.ndarray:
    """d strength_loss / d r_hat (defined for r_hat in [0, 1))."""
    r_hat = np.asarray(r_hat, dtype=float)
    d = _pow_gamma(1.0 - np.asarray(r, dtype=float), cfg.gamma) \
        - _pow_gamma(1.0 - r_hat, cfg.gamma)
    inner = cfg.gamma * np.power(1.0 - r_hat, cfg.gamma - 1.0)
    return 2.0 * d * inner


# ---------------------------------------------------------------------------
# synthetic mixture generation


class DegenerateExampleError(UsageError):
    """The drawn inputs cannot make a usable example (e.g. silent speech)."""


@dataclass
class MixExample:
    clean: np.ndarray   # target: speech with early reflections only
    noisy: np.ndarray
    sample_rate: int
    snr_db: float
    lowpass_hz: float
    rir_id: str
    seed: int
    pole_zero_params: dict = field(default_factory=dict)
    tilt_db: float = 0.0
    # active-region energies at the mix point (before the shared low-pass)
    mix_speech_energy: float = 0.0
    mix_noise_energy: float = 0.0


def _random_pole_zero(rng: np.random.Generator):
    """Stable second-order pole-zero shaping filter (radii <= 0.9)."""
    rp, rz = rng.uniform(0.0, 0.9, size=2)
    ap, az = rng.uniform(0.0, np.pi, size=2)
    a = np.poly([rp * np.exp(1j * ap), rp * np.exp(-1j * ap)]).real
    b = np.poly([rz * np.exp(1j * az), rz * np.exp(-1j * az)]).real
    return b, a


def _tilt_alpha(slope_db: float, sample_rate: int) -> float:
    """First-order tilt y[n] = x[n] - alpha x[n-1] hitting the requested
    0-to-20 kHz slope; solved by bisection (monotone in alpha)."""
    w = 2.0 * np.pi * min(20000.0, 0.5 * sample_rate * 0.999) / sample_rate

    def slope(alpha):
        hi = np.sqrt(1 + alpha * alpha - 2 * alpha * np.cos(w))
        lo = abs(1.0 - alpha)
        return 20.0 * np.log10(hi / lo)

    lo_a, hi_a = -0.9, 0.9
    for _ in range(60):
        mid = 0.5 * (lo_a + hi_a)
        if slope(mid) < slope_db:
            lo_a = mid
        else:
            hi_a = mid
    return 0.5 * (lo_a + hi_a)


def _apply_tilt(x: np.ndarray, alpha: float) -> np.ndarray:
    y = lfilter([1.0, -alpha], [1.0], x)
    # keep mid-band level roughly unchanged (unity at 1 kHz)
    w = 2.0 * np.pi * 1000.0 / 48000.0
    ref = np.sqrt(1 + alpha * alpha - 2 * alpha * np.cos(w))
    return y / max(ref, 1e-6)


def _sharp_lowpass(x: np.ndarray, cutoff_hz: float, sample_rate: int) -> np.ndarray:
    """Linear-phase FIR low-pass (>= 70 dB stopband), delay compensated."""
    nyq = sample_rate / 2.0
    if cutoff_hz >= nyq * 0.98:
        return x.copy()
    width = min(1000.0, max(200.0, nyq - cutoff_hz)) / nyq
    ntaps, beta = kaiserord(70.0, width)
    ntaps |= 1
    taps = firwin(ntaps, cutoff_hz, window=("kaiser", beta), fs=sample_rate)
    delay = (ntaps - 1) // 2
    padded = np.concatenate([x, np.zeros(delay)])
    return lfilter(taps, [1.0], padded)[delay:]


def active_speech_mask(x: np.ndarray, sample_rate: int,
                       threshold_db: float = 40.0) -> np.ndarray:
    """Boolean per-sample mask of 10 ms frames within threshold_db of the
    loudest frame."""
    hop = sample_rate // 100
    n = len(x) // hop
    frames = x[:n * hop].reshape(n, hop)
    energy = (frames * frames).sum(axis=1)
    peak = energy.max()
    if peak <= 0:
        return np.zeros(len(x), dtype=bool)
    active = energy > peak * 10.0 ** (-threshold_db / 10.0)
    mask = np.repeat(active, hop)
    return np.concatenate([mask, np.zeros(len(x) - len(mask), dtype=bool)])


def _truncate_rir(rir: np.ndarray, sample_rate: int,
                  early_ms: float = 50.0) -> np.ndarray:
    direct = int(np.argmax(np.abs(rir)))
    end = direct + int(early_ms * sample_rate / 1000.0)
    return rir[:min(end, len(rir))]


def mix_example(speech: np.ndarray, noise: np.ndarray, rir: np.ndarray,
                seed: int, sample_rate: int = 48000,
                snr_range=(-5.0, 45.0), cutoff_range=(3000.0, 20000.0),
                rir_id: str = "") -> MixExample:
    """Build one noisy/clean training pair.

    In order: independent random pole-zero filters on speech and noise, a
    shared random spectral tilt, room response on the speech (the clean
    target keeps only the first 50 ms after the direct path), mixing at an
    SNR drawn from snr_range and measured over speech-active frames, and a
    shared random low-pass with cutoff drawn from cutoff_range.
    """
    rng = np.random.default_rng(seed)
    speech = np.asarray(speech, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    if len(speech) < sample_rate or len(noise) < sample_rate:
        raise UsageError("speech and noise must be at least 1 s long")
    n = min(len(speech), len(noise))
    speech, noise = speech[:n], noise[:n]

    b_s, a_s = _random_pole_zero(rng)
    b_n, a_n = _random_pole_zero(rng)
    speech_f = lfilter(b_s, a_s, speech)
    noise_f = lfilter(b_n, a_n, noise)

    tilt_db = rng.uniform(-6.0, 6.0)
    alpha = _tilt_alpha(tilt_db, sample_rate)
    speech_f = _apply_tilt(speech_f, alpha)
    noise_f = _apply_tilt(noise_f, alpha)

    rir = np.asarray(rir, dtype=np.float64)
    peak = np.max(np.abs(rir))
    if peak <= 0:
        raise UsageError("room impulse response is silent")
    rir = rir / peak
    reverbed = np.convolve(speech_f, rir)[:n]
    target = np.convolve(speech_f, _truncate_rir(rir, sample_rate))[:n]

    mask = active_speech_mask(reverbed, sample_rate)
    if not mask.any():
        raise DegenerateExampleError("speech input is silent")
    snr_db = rng.uniform(*snr_range)
    speech_energy = float((reverbed[mask] ** 2).sum())
    noise_energy = float((noise_f[mask] ** 2).sum())
    if noise_energy <= 0:
        scaled_noise = np.zeros_like(noise_f)
    else:
        scale = np.sqrt(speech_energy / noise_energy
                        * 10.0 ** (-snr_db / 10.0))
        scaled_noise = noise_f * scale
    scaled_noise_energy = float((scaled_noise[mask] ** 2).sum())

    cutoff = rng.uniform(*cutoff_range)
    noisy = _sharp_lowpass(reverbed + scaled_noise, cutoff, sample_rate)
    clean = _sharp_lowpass(target, cutoff, sample_rate)

    return MixExample(
        clean=clean, noisy=noisy, sample_rate=sample_rate,
        snr_db=float(snr_db), lowpass_hz=float(cutoff), rir_id=rir_id,
        seed=seed,
        pole_zero_params={"speech": (b_s.tolist(), a_s.tolist()),
                          "noise": (b_n.tolist(), a_n.tolist())},
        tilt_db=float(tilt_db),
        mix_speech_energy=speech_energy,
        mix_noise_energy=scaled_noise_energy,
    )


# ---------------------------------------------------------------------------
# target extraction and record files


@dataclass
class TargetRecords:
    features: np.ndarray   # (frames, 70)
    gains: np.ndarray      # (frames, 34), attenuation folded in
    strengths: np.ndarray  # (frames, 34)
    att_applied: np.ndarray  # (frames,) 1.0 where any band hit the branch


def extract_targets(clean: np.ndarray, noisy: np.ndarray,
                    sample_rate: int = 48000) -> TargetRecords:
    """Run the runtime analysis chain on the noisy signal and the clean
    reference to produce per-frame features and ideal targets.

    The clean side supplies the periodic reference (its own comb-filtered
    estimate); the noisy side supplies everything the runtime would see.
    The gain target folds in the degenerate-branch attenuation.
    """
    clean = np.asarray(clean, dtype=np.float64)
    noisy = np.asarray(noisy, dtype=np.float64)
    if clean.shape != noisy.shape:
        raise UsageError("clean and noisy signals must be time-aligned")
    noisy_fe = StreamAnalyzer(sample_rate)
    clean_fe = StreamAnalyzer(sample_rate)
    hop = noisy_fe.spec.hop
    n_blocks = len(clean) // hop

    feats, gains, strengths, flags = [], [], [], []
    for k in range(n_blocks):
        blk = slice(k * hop, (k + 1) * hop)
        got_n = noisy_fe.push(noisy[blk])
        got_c = clean_fe.push(clean[blk])
        for fn, fc in zip(got_n, got_c):
            if fn.index < 0:
                continue  # skip the half-zero warm-up frame
            g = ideal_gain(fc.band_norms, fn.band_norms)
            q_x = np.clip(fc.coherence, 0.0, 1.0)
            q_y = np.clip(fn.coherence, 0.0, 1.0)
            q_p = estimate_enhanced_coherence(q_y, fn.tap_energy)
            r, g_att = ideal_strength(q_x, q_y, q_p)
            feats.append(fn.features)
            gains.append(g * g_att)
            strengths.append(r)
            flags.append(1.0 if np.any(g_att < 1.0) else 0.0)

    return TargetRecords(
        features=np.asarray(feats).reshape(-1, FEATURE_DIM),
        gains=np.asarray(gains).reshape(-1, NUM_BANDS),
        strengths=np.asarray(strengths).reshape(-1, NUM_BANDS),
        att_applied=np.asarray(flags).reshape(-1),
    )


PNFT_MAGIC = b"PNFT"
PNFT_VERSION = 1
_PNFT_HEADER = struct.Struct("<4sIII")


def write_pnft(path, records: TargetRecords):
    """Write the feature/target record file (little-endian float32 rows)."""
    n = len(records.features)
    if records.gains.shape != (n, NUM_BANDS) \
            or records.strengths.shape != (n, NUM_BANDS) \
            or records.att_applied.shape != (n,):
        raise UsageError("inconsistent record array shapes")
    rows = np.hstack([
        records.features,
        records.gains,
        records.strengths,
        records.att_applied[:, None],
    ]).astype("<f4")
    with open(path, "wb") as fh:
        fh.write(_PNFT_HEADER.pack(PNFT_MAGIC, PNFT_VERSION, FEATURE_DIM,
                                   TARGET_DIM))
        fh.write(rows.tobytes(order="C"))


def read_pnft(path) -> TargetRecords:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _PNFT_HEADER.size:
        raise FormatError("record file truncated in header")
    magic, version, fdim, tdim = _PNFT_HEADER.unpack_from(data)
    if magic != PNFT_MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != PNFT_VERSION:
        raise FormatError(f"unsupported record version {version}")
    if fdim != FEATURE_DIM or tdim != TARGET_DIM:
        raise FormatError(f"unexpected dims ({fdim}, {tdim})")
    body = data[_PNFT_HEADER.size:]
    row = (fdim + tdim) * 4
    if len(body) % row:
        raise FormatError("record payload is not a whole number of frames")
    rows = np.frombuffer(body, dtype="<f4").reshape(-1, fdim + tdim)
    return TargetRecords(
        features=rows[:, :fdim].astype(np.float64),
        gains=rows[:, fdim:fdim + NUM_BANDS].astype(np.float64),
        strengths=rows[:, fdim + NUM_BANDS:fdim + 2 * NUM_BANDS].astype(np.float64),
        att_applied=rows[:, -1].astype(np.float64),
    )


def manifest_line(ex: MixExample) -> str:
    return (f"seed={ex.seed} snr_db={ex.snr_db:.3f} "
            f"lowpass_hz={ex.lowpass_hz:.1f} rir_id={ex.rir_id}")

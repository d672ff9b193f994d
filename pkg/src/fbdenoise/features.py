"""Per-frame input feature assembly for the gain/strength model.

The 70-value layout is a public contract shared with the weight files:
[0:34] log10 band magnitudes of the look-ahead frame, [34:68] pitch
coherences of the current frame, [68] pitch period normalized by the 60 Hz
lag, [69] pitch correlation.
"""

import numpy as np

from .errors import UsageError
from .pitch import F_MIN_HZ, PitchEstimate
from .spectral import NUM_BANDS

FEATURE_DIM = 2 * NUM_BANDS + 2
LOG_EPS = 1e-8

#: Frames of look-ahead baked into the magnitude features.
LOOKAHEAD_FRAMES = 3


def t_max_for_rate(sample_rate: int) -> float:
    """Normalization lag for the pitch-period feature (60 Hz)."""
    return sample_rate / F_MIN_HZ


def assemble_features(mag_future: np.ndarray, q_now: np.ndarray,
                      pitch: PitchEstimate, t_max: float) -> np.ndarray:
    """Pack one frame's features.

    mag_future holds band magnitudes of the frame LOOKAHEAD_FRAMES ahead;
    q_now the coherences of the current frame.  Magnitudes are compressed
    as log10(X + 1e-8); the period is period/t_max.
    """
    mag_future = np.asarray(mag_future, dtype=float)
    q_now = np.asarray(q_now, dtype=float)
    if mag_future.shape != (NUM_BANDS,) or q_now.shape != (NUM_BANDS,):
        raise UsageError("feature inputs must each hold one value per band")
    f = np.empty(FEATURE_DIM)
    f[:NUM_BANDS] = np.log10(mag_future + LOG_EPS)
    f[NUM_BANDS:2 * NUM_BANDS] = np.clip(q_now, 0.0, 1.0)
    f[2 * NUM_BANDS] = min(max(pitch.period / t_max, 0.0), 1.0)
    f[2 * NUM_BANDS + 1] = min(max(pitch.correlation, -1.0), 1.0)
    return f

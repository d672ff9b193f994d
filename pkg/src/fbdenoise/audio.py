"""WAV reading/writing at the float32 processing boundary."""

import numpy as np
from scipy.io import wavfile

from .errors import FormatError


def read_wav(path) -> tuple[int, np.ndarray]:
    """Load a WAV file as (rate, mono float64 in [-1, 1])."""
    try:
        rate, data = wavfile.read(path)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    if data.ndim == 2:
        data = data.mean(axis=1)
    if data.dtype == np.int16:
        data = data / 32768.0
    elif data.dtype == np.int32:
        data = data / 2147483648.0
    elif data.dtype == np.uint8:
        data = (data.astype(np.float64) - 128.0) / 128.0
    else:
        data = data.astype(np.float64)
    return int(rate), np.ascontiguousarray(data, dtype=np.float64)


def write_wav(path, rate: int, samples: np.ndarray):
    """Write mono float32 WAV."""
    wavfile.write(path, rate, np.asarray(samples, dtype=np.float32))

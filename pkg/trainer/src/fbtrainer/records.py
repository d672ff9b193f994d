"""Reader/writer for the shared .pnft feature/target record format.

Little-endian: header {magic "PNFT", version u32, feature_dim u32=70,
target_dim u32=69}, then float32 rows of [70 features | 34 gains |
34 strengths | 1 attenuation flag].
"""

import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"PNFT"
VERSION = 1
FEATURE_DIM = 70
NUM_BANDS = 34
TARGET_DIM = 2 * NUM_BANDS + 1
_HEADER = struct.Struct("<4sIII")


@dataclass
class Records:
    features: np.ndarray   # (frames, 70) float32
    gains: np.ndarray      # (frames, 34)
    strengths: np.ndarray  # (frames, 34)
    att_applied: np.ndarray


def read_pnft(path) -> Records:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, version, fdim, tdim = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != VERSION or fdim != FEATURE_DIM or tdim != TARGET_DIM:
        raise ValueError(f"{path}: unsupported layout "
                         f"(v{version}, {fdim}/{tdim})")
    body = np.frombuffer(data, dtype="<f4", offset=_HEADER.size)
    if body.size % (fdim + tdim):
        raise ValueError(f"{path}: ragged payload")
    rows = body.reshape(-1, fdim + tdim)
    return Records(
        features=rows[:, :fdim].copy(),
        gains=rows[:, fdim:fdim + NUM_BANDS].copy(),
        strengths=rows[:, fdim + NUM_BANDS:fdim + 2 * NUM_BANDS].copy(),
        att_applied=rows[:, -1].copy(),
    )


def write_pnft(path, records: Records):
    rows = np.hstack([
        records.features,
        records.gains,
        records.strengths,
        records.att_applied.reshape(-1, 1),
    ]).astype("<f4")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, FEATURE_DIM, TARGET_DIM))
        fh.write(rows.tobytes(order="C"))

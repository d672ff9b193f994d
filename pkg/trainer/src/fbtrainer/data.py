"""Sequence batching over .pnft record files."""

from pathlib import Path

import numpy as np
import torch

from .records import Records, read_pnft


def load_dataset(path) -> list[Records]:
    """Read every .pnft under a directory (or a single file)."""
    p = Path(path)
    files = [p] if p.is_file() else sorted(p.rglob("*.pnft"))
    if not files:
        raise FileNotFoundError(f"no .pnft records under {path}")
    return [read_pnft(f) for f in files]


def make_batches(records: list[Records], seq_len: int):
    """Cut records into fixed-length sequences and stack them into one
    batch per epoch: (B, T, dim) tensors for features/gains/strengths.

    Recurrent state is carried within a sequence only, so sequences are
    independent batch entries.
    """
    feats, gains, strengths = [], [], []
    for rec in records:
        n = len(rec.features)
        if n < seq_len:
            raise ValueError(
                f"record with {n} frames is shorter than seq_len={seq_len}")
        for start in range(0, n - seq_len + 1, seq_len):
            sl = slice(start, start + seq_len)
            feats.append(rec.features[sl])
            gains.append(rec.gains[sl])
            strengths.append(rec.strengths[sl])
    return (
        torch.from_numpy(np.stack(feats)).float(),
        torch.from_numpy(np.stack(gains)).float(),
        torch.from_numpy(np.stack(strengths)).float(),
    )

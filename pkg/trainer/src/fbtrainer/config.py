"""Training configuration, loadable from JSON."""

import json
from dataclasses import asdict, dataclass


@dataclass
class TrainConfig:
    hidden: int = 32
    learning_rate: float = 3e-3
    epochs: int = 60
    seq_len: int = 100          # frames per training sequence (1 s)
    gain_weight: float = 1.0
    strength_weight: float = 1.0
    seed: int = 0
    # evaluate with weights snapped to the int8 grid for the last epochs
    quantized_eval_epochs: int = 5

    @classmethod
    def from_json(cls, path) -> "TrainConfig":
        raw = json.loads(open(path).read())
        unknown = set(raw) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2)

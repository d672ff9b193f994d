#!/usr/bin/env python3
"""Regenerate the shared cross-implementation fixtures in test_vectors/.

Loss expectations are computed here with plain Python floats, independent
of any package implementation; the inference expectations are produced by
the engine and pin the weight-file semantics for other implementations.
"""

import json
import math
import random
from pathlib import Path

import numpy as np

from fbdenoise.model import ModelState, desk_model, infer, save_model_file

ROOT = Path(__file__).resolve().parents[1]
OUT = ROOT / "test_vectors"

GAMMA = 0.5
C4 = 10.0


def plain_gain_loss(g, gh):
    d = [math.pow(a, GAMMA) - math.pow(b, GAMMA) for a, b in zip(g, gh)]
    return sum(v * v for v in d) + C4 * sum(v**4 for v in d)


def plain_strength_loss(r, rh):
    d = [math.pow(1.0 - a, GAMMA) - math.pow(1.0 - b, GAMMA)
         for a, b in zip(r, rh)]
    return sum(v * v for v in d)


def make_loss_cases():
    rnd = random.Random(20260810)
    cases = []
    for i in range(12):
        g = [rnd.uniform(0.0, 1.0) for _ in range(34)]
        gh = [rnd.uniform(0.0, 1.0) for _ in range(34)]
        r = [rnd.uniform(0.0, 1.0) for _ in range(34)]
        rh = [rnd.uniform(0.0, 1.0) for _ in range(34)]
        cases.append({
            "gains": g, "gain_estimates": gh,
            "strengths": r, "strength_estimates": rh,
            "gain_loss": plain_gain_loss(g, gh),
            "strength_loss": plain_strength_loss(r, rh),
        })
    # edge cases
    cases.append({
        "gains": [1.0] + [0.0] * 33, "gain_estimates": [0.0] * 34,
        "strengths": [1.0] + [0.0] * 33, "strength_estimates": [0.0] * 34,
        "gain_loss": 11.0, "strength_loss": 1.0,
    })
    (OUT / "loss_cases.json").write_text(json.dumps(cases, indent=1))


def make_inference_case():
    weights = desk_model(hidden=8, rng=np.random.default_rng(77))
    save_model_file(weights, OUT / "inference" / "tiny.pnwt")
    rng = np.random.default_rng(78)
    feats = rng.standard_normal((20, 70))
    state = ModelState(weights)
    outs = [np.concatenate(infer(state, f)).tolist() for f in feats]
    (OUT / "inference" / "features.json").write_text(
        json.dumps(feats.tolist()))
    (OUT / "inference" / "expected_outputs.json").write_text(
        json.dumps(outs))


def main():
    OUT.mkdir(exist_ok=True)
    (OUT / "inference").mkdir(exist_ok=True)
    make_loss_cases()
    make_inference_case()
    print(f"wrote fixtures under {OUT}")


if __name__ == "__main__":
    main()

"""End-to-end through the engine's external interfaces only: synthesize a
tiny corpus, build records with the engine CLI, train, export, and check
the engine's predictions track the ideal gain targets."""

import subprocess

import numpy as np
import pytest

from conftest import ENGINE_CLI, make_voiced, write_wav16
from fbtrainer.config import TrainConfig
from fbtrainer.data import load_dataset
from fbtrainer.export import export_quantized
from fbtrainer.records import read_pnft
from fbtrainer.train import train


def run_engine(*args):
    proc = subprocess.run(ENGINE_CLI + list(args), capture_output=True,
                          text=True)
    assert proc.returncode == 0, proc.stderr
    return proc.stdout


def spearman(a, b):
    ra = np.argsort(np.argsort(a)).astype(float)
    rb = np.argsort(np.argsort(b)).astype(float)
    ra -= ra.mean()
    rb -= rb.mean()
    return float((ra * rb).sum() / np.sqrt((ra * ra).sum() * (rb * rb).sum()))


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("corpus")
    for sub in ("speech", "noise", "rir"):
        (tmp / sub).mkdir()
    for i in range(4):
        write_wav16(tmp / "speech" / f"s{i}.wav", 48000,
                    make_voiced(i, 1.6, f0_base=140.0 + 30.0 * i))
    rng = np.random.default_rng(9)
    for i in range(3):
        write_wav16(tmp / "noise" / f"n{i}.wav", 48000,
                    0.3 * rng.standard_normal(80000))
    rir = np.zeros(2400)
    rir[0], rir[600], rir[1800] = 1.0, 0.25, 0.1
    write_wav16(tmp / "rir" / "r0.wav", 48000, rir)
    return tmp


def test_trained_model_tracks_ideal_gains(corpus):
    train_dir = corpus / "ds"
    run_engine("make-dataset", "--speech", str(corpus / "speech"),
               "--noise", str(corpus / "noise"), "--rir", str(corpus / "rir"),
               "--count", "10", "--seed", "3", str(train_dir))
    manifest = (train_dir / "manifest.txt").read_text().strip().splitlines()
    assert len(manifest) == 10

    records = load_dataset(train_dir)
    cfg = TrainConfig(hidden=24, learning_rate=5e-3, epochs=60, seq_len=120,
                      seed=1)
    result = train(records, cfg)
    assert result.final_loss <= 0.5 * result.initial_loss

    weights = corpus / "model.pnwt"
    export_quantized(result.net, weights)

    # held-out mixture from the same corpus, different seed
    eval_dir = corpus / "eval"
    run_engine("make-dataset", "--speech", str(corpus / "speech"),
               "--noise", str(corpus / "noise"), "--rir", str(corpus / "rir"),
               "--count", "1", "--seed", "77", str(eval_dir))
    pnft = sorted(eval_dir.glob("*.pnft"))[0]
    pred_csv = corpus / "pred.csv"
    run_engine("eval-loss", str(pnft), "--model", str(weights),
               "--dump-predictions", str(pred_csv))

    rows = pred_csv.read_text().strip().splitlines()[1:]
    predicted = np.array([[float(v) for v in r.split(",")[1:35]]
                          for r in rows])
    rec = read_pnft(pnft)
    active = rec.features[:, :34] > -4.0
    rho = spearman(predicted[active], rec.gains[active])
    assert rho > 0.5, f"rank correlation {rho:.3f} on {active.sum()} cells"


def test_trainer_cli_end_to_end(corpus, tmp_path):
    cfg = TrainConfig(hidden=8, epochs=4, seq_len=100, seed=2)
    cfg_path = tmp_path / "cfg.json"
    cfg.to_json(cfg_path)
    out = tmp_path / "tiny.pnwt"
    from fbtrainer.cli import main

    ds = corpus / "ds"
    assert ds.exists(), "run after the dataset test"
    assert main(["train", "--data", str(ds), "--config", str(cfg_path),
                 "--out", str(out), "--quiet"]) == 0
    assert out.exists()
    run_engine("bench", "--model", str(out), "--seconds", "0.3")

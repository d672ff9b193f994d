import pytest

from fbtrainer.config import TrainConfig
from fbtrainer.train import train


CFG = TrainConfig(hidden=24, learning_rate=5e-3, epochs=40, seq_len=100,
                  seed=0)


def test_loss_halves_on_synthetic_set(synthetic_dataset):
    result = train(synthetic_dataset, CFG)
    assert result.final_loss <= 0.5 * result.initial_loss, result.loss_curve
    assert result.quantized_eval_losses  # export-degradation monitor ran
    # snapping to the int8 grid must not blow the loss back up
    assert result.quantized_eval_losses[-1] <= 0.6 * result.initial_loss


def test_fixed_seed_bit_reproducible(synthetic_dataset):
    cfg = TrainConfig(hidden=12, learning_rate=3e-3, epochs=6, seq_len=100,
                      seed=123)
    a = train(synthetic_dataset[:3], cfg)
    b = train(synthetic_dataset[:3], cfg)
    assert a.loss_curve == b.loss_curve


def test_config_json_round_trip(tmp_path):
    cfg = TrainConfig(hidden=48, epochs=7, seed=9)
    path = tmp_path / "cfg.json"
    cfg.to_json(path)
    assert TrainConfig.from_json(path) == cfg


def test_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text('{"hidden": 8, "nonsense": 1}')
    with pytest.raises(ValueError):
        TrainConfig.from_json(path)


def test_short_records_rejected(synthetic_dataset):
    cfg = TrainConfig(seq_len=10_000)
    with pytest.raises(ValueError):
        train(synthetic_dataset[:1], cfg)

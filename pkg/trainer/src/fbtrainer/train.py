"""Training loop: Adam over whole-sequence batches, weights clamped to the
int8-representable range after every step, deterministic under a fixed
seed."""

from dataclasses import dataclass

import torch

from .config import TrainConfig
from .data import make_batches
from .losses import gain_loss, strength_loss
from .model import GainStrengthNet


@dataclass
class TrainResult:
    net: GainStrengthNet
    loss_curve: list[float]
    quantized_eval_losses: list[float]

    @property
    def initial_loss(self) -> float:
        return self.loss_curve[0]

    @property
    def final_loss(self) -> float:
        return self.loss_curve[-1]


def _combined(net, feats, gains, strengths, cfg):
    g_hat, r_hat = net(feats)
    return (cfg.gain_weight * gain_loss(gains, g_hat)
            + cfg.strength_weight * strength_loss(strengths, r_hat))


def train(records, cfg: TrainConfig, log=None) -> TrainResult:
    torch.manual_seed(cfg.seed)
    torch.set_num_threads(1)  # keeps runs bit-reproducible
    feats, gains, strengths = make_batches(records, cfg.seq_len)

    net = GainStrengthNet(cfg.hidden)
    net.clamp_weights()
    opt = torch.optim.Adam(net.parameters(), lr=cfg.learning_rate)

    curve = []
    q_losses = []
    for epoch in range(cfg.epochs):
        opt.zero_grad()
        loss = _combined(net, feats, gains, strengths, cfg)
        loss.backward()
        opt.step()
        net.clamp_weights()
        curve.append(float(loss.detach()))
        if epoch >= cfg.epochs - cfg.quantized_eval_epochs:
            # track export degradation over the final epochs
            with torch.no_grad():
                q = net.quantized_copy()
                q_losses.append(
                    float(_combined(q, feats, gains, strengths, cfg)))
        if log:
            log(f"epoch {epoch}: loss {curve[-1]:.6f}")
    return TrainResult(net=net, loss_curve=curve,
                       quantized_eval_losses=q_losses)

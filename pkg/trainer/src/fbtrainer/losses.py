"""Perceptual training losses.

Gains are compared after raising to gamma (loudness compression), with an
added fourth-power term that punishes large errors; strengths compare the
compressed residual-noise factors (1 - r) with the squared term only.
Both reduce by summing over bands and averaging over frames.
"""

import torch

GAMMA = 0.5
C4 = 10.0


def gain_loss(gains: torch.Tensor, estimates: torch.Tensor,
              gamma: float = GAMMA, c4: float = C4) -> torch.Tensor:
    # estimates come from a sigmoid and stay strictly inside (0, 1), so the
    # gamma-power gradient is always finite; targets carry no gradient
    d = torch.pow(gains, gamma) - torch.pow(estimates, gamma)
    per_frame = (d * d).sum(dim=-1) + c4 * (d**4).sum(dim=-1)
    return per_frame.mean()


def strength_loss(strengths: torch.Tensor, estimates: torch.Tensor,
                  gamma: float = GAMMA) -> torch.Tensor:
    d = torch.pow(1.0 - strengths, gamma) - torch.pow(1.0 - estimates, gamma)
    return (d * d).sum(dim=-1).mean()

"""Torch definition of the gain/strength network.

Layer semantics mirror the runtime engine bit-for-bit after quantization:
causal time convolutions consume k consecutive feature vectors
oldest-first; GRU layers use the update/reset-gate recurrence with the
candidate gate applied to r*h; both heads are sigmoid.  Weight matrices
live in the int8-representable range [-127/256, 127/256]; biases are
unconstrained float32.
"""

import torch
import torch.nn as nn

FEATURE_DIM = 70
NUM_BANDS = 34

#: training-time weight clamp; keeps quantization error within 1/512
WEIGHT_LIMIT = 127.0 / 256.0


class CausalConv(nn.Module):
    """1xK convolution over time as a linear map on stacked frames."""

    def __init__(self, in_dim: int, out_dim: int, kernel_width: int):
        super().__init__()
        self.in_dim = in_dim
        self.kernel_width = kernel_width
        self.weight = nn.Parameter(
            torch.empty(out_dim, in_dim * kernel_width))
        self.bias = nn.Parameter(torch.zeros(out_dim))
        nn.init.uniform_(self.weight, -WEIGHT_LIMIT, WEIGHT_LIMIT)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        # x: (B, T, in) -> windows (B, T, K*in), oldest frame first
        b, t, _ = x.shape
        k = self.kernel_width
        pad = x.new_zeros(b, k - 1, self.in_dim)
        stacked = torch.cat([pad, x], dim=1)
        windows = torch.cat([stacked[:, i:i + t] for i in range(k)], dim=2)
        return torch.tanh(windows @ self.weight.T + self.bias)


class GruLayer(nn.Module):
    """Update/reset-gate recurrence; single (3H, in+H) weight block."""

    def __init__(self, in_dim: int, hidden: int):
        super().__init__()
        self.in_dim = in_dim
        self.hidden = hidden
        self.weight = nn.Parameter(torch.empty(3 * hidden, in_dim + hidden))
        self.bias = nn.Parameter(torch.zeros(3 * hidden))
        nn.init.uniform_(self.weight, -WEIGHT_LIMIT, WEIGHT_LIMIT)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        b, t, _ = x.shape
        h = x.new_zeros(b, self.hidden)
        wx = self.weight[:, :self.in_dim]
        wh = self.weight[:, self.in_dim:]
        hh = self.hidden
        pre_x = x @ wx.T + self.bias  # (B, T, 3H)
        outs = []
        for i in range(t):
            p = pre_x[:, i]
            z = torch.sigmoid(p[:, :hh] + h @ wh[:hh].T)
            r = torch.sigmoid(p[:, hh:2 * hh] + h @ wh[hh:2 * hh].T)
            cand = torch.tanh(p[:, 2 * hh:] + (r * h) @ wh[2 * hh:].T)
            h = z * h + (1.0 - z) * cand
            outs.append(h)
        return torch.stack(outs, dim=1)


class Head(nn.Module):
    def __init__(self, in_dim: int):
        super().__init__()
        self.weight = nn.Parameter(torch.empty(NUM_BANDS, in_dim))
        self.bias = nn.Parameter(torch.zeros(NUM_BANDS))
        nn.init.uniform_(self.weight, -WEIGHT_LIMIT, WEIGHT_LIMIT)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(x @ self.weight.T + self.bias)


class GainStrengthNet(nn.Module):
    """conv1x5 -> conv1x3 -> 3 stacked GRUs -> gain and strength heads."""

    def __init__(self, hidden: int = 32):
        super().__init__()
        self.hidden = hidden
        self.conv1 = CausalConv(FEATURE_DIM, hidden, 5)
        self.conv2 = CausalConv(hidden, hidden, 3)
        self.grus = nn.ModuleList([GruLayer(hidden, hidden) for _ in range(3)])
        self.gain_head = Head(hidden)
        self.strength_head = Head(hidden)

    def forward(self, feats: torch.Tensor):
        x = self.conv1(feats)
        x = self.conv2(x)
        for gru in self.grus:
            x = gru(x)
        return self.gain_head(x), self.strength_head(x)

    def clamp_weights(self):
        """Pull all weight matrices back into the int8-representable box."""
        with torch.no_grad():
            for name, p in self.named_parameters():
                if name.endswith("weight"):
                    p.clamp_(-WEIGHT_LIMIT, WEIGHT_LIMIT)

    def quantized_copy(self) -> "GainStrengthNet":
        """Clone with weights snapped to the int8 grid (biases kept)."""
        clone = GainStrengthNet(self.hidden)
        clone.load_state_dict(self.state_dict())
        with torch.no_grad():
            for name, p in clone.named_parameters():
                if name.endswith("weight"):
                    q = torch.clamp(torch.round(p * 256.0), -127, 127)
                    p.copy_(q / 256.0)
        return clone

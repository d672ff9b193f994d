import json

import pytest
import torch

from conftest import VECTORS
from fbtrainer.losses import gain_loss, strength_loss


def test_shared_fixture_agreement():
    cases = json.loads((VECTORS / "loss_cases.json").read_text())
    assert len(cases) >= 12
    for case in cases:
        g = torch.tensor(case["gains"], dtype=torch.float64)
        gh = torch.tensor(case["gain_estimates"], dtype=torch.float64)
        r = torch.tensor(case["strengths"], dtype=torch.float64)
        rh = torch.tensor(case["strength_estimates"], dtype=torch.float64)
        got_g = float(gain_loss(g, gh))
        got_r = float(strength_loss(r, rh))
        assert abs(got_g - case["gain_loss"]) <= 1e-6 * max(1.0, case["gain_loss"])
        assert abs(got_r - case["strength_loss"]) <= 1e-6 * max(1.0, case["strength_loss"])


def test_zero_when_equal():
    g = torch.rand(5, 34, dtype=torch.float64)
    assert float(gain_loss(g, g.clone())) == 0.0
    assert float(strength_loss(g, g.clone())) == 0.0


def test_constant_half_targets_zero_loss_at_sigmoid_zero():
    # zero-initialized heads emit sigmoid(0) = 0.5; against 0.5 targets the
    # starting loss is analytically zero
    target = torch.full((4, 34), 0.5, dtype=torch.float64)
    est = torch.full((4, 34), 0.5, dtype=torch.float64)
    assert float(gain_loss(target, est)) == pytest.approx(0.0, abs=1e-12)
    assert float(strength_loss(target, est)) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("loss", [gain_loss, strength_loss])
def test_autograd_matches_finite_differences(loss):
    torch.manual_seed(0)
    target = torch.rand(34, dtype=torch.float64) * 0.8 + 0.1
    est = (torch.rand(34, dtype=torch.float64) * 0.8 + 0.1).requires_grad_()
    loss(target, est).backward()
    grad = est.grad.clone()
    eps = 1e-6
    for i in range(0, 34, 5):
        hi = est.detach().clone()
        lo = est.detach().clone()
        hi[i] += eps
        lo[i] -= eps
        fd = (float(loss(target, hi)) - float(loss(target, lo))) / (2 * eps)
        assert abs(float(grad[i]) - fd) / max(abs(fd), 1e-9) < 1e-4


def test_gradient_through_network_matches_finite_differences():
    # end-to-end: d loss / d head-bias via autograd vs central differences
    from fbtrainer.model import GainStrengthNet

    torch.manual_seed(1)
    net = GainStrengthNet(hidden=8).double()
    feats = torch.randn(1, 12, 70, dtype=torch.float64)
    g_t = torch.rand(1, 12, 34, dtype=torch.float64)
    r_t = torch.rand(1, 12, 34, dtype=torch.float64)

    def full_loss():
        g, r = net(feats)
        return gain_loss(g_t, g) + strength_loss(r_t, r)

    net.zero_grad()
    full_loss().backward()
    bias = net.gain_head.bias
    grad = bias.grad.clone()
    eps = 1e-6
    for i in (0, 17, 33):
        with torch.no_grad():
            bias[i] += eps
            hi = float(full_loss())
            bias[i] -= 2 * eps
            lo = float(full_loss())
            bias[i] += eps
        fd = (hi - lo) / (2 * eps)
        assert abs(float(grad[i]) - fd) / max(abs(fd), 1e-9) < 1e-4

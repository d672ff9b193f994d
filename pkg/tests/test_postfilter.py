import numpy as np
import pytest

from fbdenoise.pitch import PitchEstimate
from fbdenoise.postfilter import (
    AdaptiveHighpass,
    DecayFloor,
    PostfilterConfig,
    global_compensation,
    warp_gain,
)


class TestWarpGain:
    def test_endpoints(self):
        assert warp_gain(1.0) == pytest.approx(1.0)
        assert warp_gain(0.0) == 0.0

    def test_half(self):
        assert warp_gain(0.5) == pytest.approx(0.5 * np.sin(np.pi / 4), abs=1e-9)
        assert warp_gain(0.5) == pytest.approx(0.353553, abs=1e-6)

    def test_monotone_and_dominated(self):
        g = np.linspace(0, 1, 1000)
        w = warp_gain(g)
        assert np.all(np.diff(w) > 0)
        assert np.all(w <= g + 1e-15)


class TestGlobalCompensation:
    def test_equal_energies(self):
        assert global_compensation(3.0, 3.0, 0.02) == pytest.approx(1.0)

    def test_peak_value(self):
        beta = 0.02
        ratio = 1.0 / np.sqrt(beta)
        g = global_compensation(ratio, 1.0, beta)
        assert 20 * np.log10(g) == pytest.approx(5.5706, abs=0.01)
        # and it is the actual maximum over a dense ratio grid
        grid = np.linspace(0.1, 200.0, 20000)
        vals = [global_compensation(r, 1.0, beta) for r in grid]
        assert max(vals) <= g + 1e-9

    def test_large_ratio_saturates(self):
        assert global_compensation(1e9, 1.0, 0.02) < 0.01

    def test_silent_frame(self):
        assert global_compensation(0.0, 0.0, 0.02) == 1.0

    def test_energy_restored_within_1db(self):
        # G over the warped frame restores E0 within +-1 dB for gains
        # drawn in [0.3, 1]
        rng = np.random.default_rng(0)
        for _ in range(200):
            g = rng.uniform(0.3, 1.0, 34)
            y = rng.uniform(0.1, 1.0, 34)
            e0 = ((g * y) ** 2).sum()
            w = warp_gain(g)
            e1 = ((w * y) ** 2).sum()
            comp = global_compensation(e0, e1, 0.02)
            restored = ((comp * w * y) ** 2).sum()
            assert abs(10 * np.log10(restored / e0)) <= 1.0


class TestDecayFloor:
    def test_passthrough_when_loud(self):
        f = DecayFloor(2, 0.5)
        out = f.step(np.array([1.0, 0.8]), np.array([2.0, 2.0]))
        assert np.array_equal(out, [1.0, 0.8])

    def test_decaying_tail(self):
        cfg = PostfilterConfig()
        f = DecayFloor(1, cfg.delta)
        f.step(np.array([1.0]), np.array([10.0]))
        tail = [f.step(np.array([0.0]), np.array([10.0]))[0] for _ in range(5)]
        drops = [20 * np.log10(a / b) for a, b in zip([1.0] + tail, tail)]
        assert all(abs(d - 6.0) < 0.01 for d in drops)

    def test_never_exceeds_noisy(self):
        rng = np.random.default_rng(1)
        f = DecayFloor(34, 0.95)  # slow decay presses against the clamp
        for _ in range(100):
            x = rng.uniform(0, 2, 34)
            y = rng.uniform(0, 1, 34)
            assert np.all(f.step(x, y) <= y + 1e-15)

    def test_delta_constant(self):
        assert PostfilterConfig().delta == pytest.approx(10 ** -0.3)


def run_filter(hp, sig, pitch, hop=480):
    out = []
    for i in range(0, len(sig) - hop + 1, hop):
        out.append(hp.step(sig[i:i + hop], pitch))
    return np.concatenate(out)


def tone_gain_db(hp_factory, freq, pitch, seconds=2.0, rate=48000):
    t = np.arange(int(seconds * rate)) / rate
    sig = np.sin(2 * np.pi * freq * t)
    out = run_filter(hp_factory(), sig, pitch)
    # steady state: measure the last second
    n = rate
    return 10 * np.log10((out[-n:] ** 2).mean() / (sig[-n:] ** 2).mean())


class TestAdaptiveHighpass:
    def test_hum_vs_pitch_protection(self):
        pitch = PitchEstimate(period=240, correlation=0.9, voiced_confidence=0.9)
        hum = tone_gain_db(lambda: AdaptiveHighpass(48000), 50.0, pitch)
        f0 = tone_gain_db(lambda: AdaptiveHighpass(48000), 200.0, pitch)
        assert hum <= -12.0
        assert abs(f0) <= 0.5

    def test_dc_removed(self):
        hp = AdaptiveHighpass(48000)
        out = run_filter(hp, np.ones(48000), None)
        assert abs(out[-4800:]).max() < 1e-3

    def test_unvoiced_stable_cutoff(self):
        hp = AdaptiveHighpass(48000)
        run_filter(hp, np.zeros(48000),
                   PitchEstimate(period=100, correlation=0.1,
                                 voiced_confidence=0.1))
        assert hp._cutoff == pytest.approx(60.0)

    def test_no_click_on_cutoff_change(self):
        hp = AdaptiveHighpass(48000)
        rate = 48000
        t = np.arange(rate) / rate
        sig = np.sin(2 * np.pi * 400 * t)
        voiced = PitchEstimate(period=120, correlation=0.9, voiced_confidence=0.9)
        unvoiced = PitchEstimate(period=100, correlation=0.0, voiced_confidence=0.0)
        out = []
        for i in range(100):
            pitch = voiced if (i // 10) % 2 == 0 else unvoiced
            out.append(hp.step(sig[i * 480:(i + 1) * 480], pitch))
        out = np.concatenate(out)
        # bounded output, no spikes beyond the tone's own level
        assert np.abs(out).max() < 1.2

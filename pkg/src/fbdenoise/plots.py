"""Figure rendering for the CLI report paths (Agg backend, file output)."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def comb_response_figure(freqs_hz, mags_db, pitch_hz: float, path):
    """Plot a comb filter's magnitude response and save it to ``path``."""
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(freqs_hz, mags_db, lw=1.0)
    ax.set_xlabel("Frequency (Hz)")
    ax.set_ylabel("Magnitude (dB)")
    ax.set_title(f"Comb filter response, pitch {pitch_hz:g} Hz")
    ax.set_ylim(bottom=max(min(mags_db) - 3.0, -80.0), top=3.0)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def loss_trace_figure(frame_gain_loss, frame_strength_loss, path):
    """Plot per-frame losses from an evaluation run."""
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(frame_gain_loss, lw=0.8, label="gain loss")
    ax.plot(frame_strength_loss, lw=0.8, label="strength loss")
    ax.set_xlabel("Frame")
    ax.set_ylabel("Loss")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)

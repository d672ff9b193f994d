"""Streaming fullband (48 kHz) speech enhancement.

The signal path splits the spectrum into 34 perceptual bands, comb-filters
the waveform at the pitch period to separate periodic from stochastic
content, and applies per-band gains and comb-filter strengths predicted by
a small quantized recurrent network, followed by an envelope postfilter.
"""

from .errors import ConfigurationError, FormatError, UsageError
from .spectral import (
    NUM_BANDS,
    BandLayout,
    FrameSpec,
    OverlapAdd,
    analyze,
    band_energies,
    build_erb_layout,
    interpolate_gains,
    stft_resample,
    vorbis_window,
)
from .pitch import (
    CombConfig,
    PitchEstimate,
    PitchTracker,
    comb_filter,
    estimate_enhanced_coherence,
    pitch_coherence,
)
from .features import FEATURE_DIM, assemble_features
from .model import (
    ModelState,
    ModelWeights,
    complexity_report,
    dequantize,
    infer,
    load_model,
    load_model_file,
    quantize_weight,
    save_model,
    save_model_file,
)
from .targets import (
    LossConfig,
    MixExample,
    extract_targets,
    gain_loss,
    ideal_gain,
    ideal_strength,
    mix_example,
    read_pnft,
    strength_loss,
    write_pnft,
)
from .postfilter import (
    AdaptiveHighpass,
    DecayFloor,
    PostfilterConfig,
    global_compensation,
    warp_gain,
)
from .engine import EngineConfig, OracleEnhancer, StreamEnhancer, bench

__version__ = "0.1.0"

"""Masking-based speech enhancement with STFT- and mixture-consistency projections."""

from .consistency import (
    WeightField,
    learned_weights,
    magnitude_squared_weights,
    project_joint,
    project_mixture_consistency,
    project_mixture_weighted,
    project_sources_stft,
    project_stft_consistency,
    vjp_mixture_consistency,
    vjp_mixture_weighted,
    vjp_stft_consistency,
)
from .core import (
    ComplexSpectrogram,
    InvalidArgument,
    Mask,
    SourceSet,
    StftConfig,
    Waveform,
    hann_window,
    validate_config,
)
from .masking import MaskSpec, apply_mask, oracle_psm, oracle_sources
from .metrics import (
    MetricsReport,
    grad_spectral_loss,
    mag_sq_error,
    power_compress,
    si_sdr,
    si_sdr_improvement,
    spectral_loss,
)
from .mixer import MixSpec, mix, mix_at_snr, sample_mix_spec, synth_test_signals
from .stft import stft_forward, stft_inverse, synthesis_window

__version__ = "0.1.0"

__all__ = [
    "ComplexSpectrogram",
    "InvalidArgument",
    "Mask",
    "MaskSpec",
    "MetricsReport",
    "MixSpec",
    "SourceSet",
    "StftConfig",
    "Waveform",
    "WeightField",
    "apply_mask",
    "grad_spectral_loss",
    "hann_window",
    "learned_weights",
    "mag_sq_error",
    "magnitude_squared_weights",
    "mix",
    "mix_at_snr",
    "oracle_psm",
    "oracle_sources",
    "power_compress",
    "project_joint",
    "project_mixture_consistency",
    "project_mixture_weighted",
    "project_sources_stft",
    "project_stft_consistency",
    "sample_mix_spec",
    "si_sdr",
    "si_sdr_improvement",
    "spectral_loss",
    "stft_forward",
    "stft_inverse",
    "synth_test_signals",
    "synthesis_window",
    "validate_config",
    "vjp_mixture_consistency",
    "vjp_mixture_weighted",
    "vjp_stft_consistency",
]

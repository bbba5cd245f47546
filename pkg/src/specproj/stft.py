"""Forward and inverse STFT with least-squares (canonical dual window) synthesis.

The forward transform center-pads the signal with ``window_length // 2`` zeros
per side, frames it at the hop, applies the periodic Hann window, zero-pads each
frame to ``fft_length`` and keeps the one-sided spectrum.  The inverse divides the
windowed overlap-add by the exact squared-window envelope, which makes it the
Moore-Penrose pseudo-inverse of the forward map (with respect to the Parseval
inner product on one-sided spectra, see :func:`parseval_weights`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import (
    ComplexSpectrogram,
    DegenerateWindowError,
    InvalidArgument,
    StftConfig,
    Waveform,
    validate_config,
)

DEGENERATE_TOL = 1e-12


@dataclass(frozen=True)
class FramedSignal:
    frames: np.ndarray  # (T, window_length), already windowed
    config: StftConfig
    original_length: int


def frame_signal(x: Waveform, config: StftConfig) -> FramedSignal:
    validate_config(config)
    frames = _frames(x.samples, config)
    return FramedSignal(frames, config, len(x))


def _frames(samples: np.ndarray, config: StftConfig) -> np.ndarray:
    """Windowed frames of center-padded ``samples``; leading axes are batch axes."""
    half = config.window_length // 2
    pad = [(0, 0)] * (samples.ndim - 1) + [(half, half)]
    padded = np.pad(samples, pad)
    frames = sliding_window_view(padded, config.window_length, axis=-1)[..., :: config.hop, :]
    return frames * config.window()


def overlap_add(frames: np.ndarray, hop: int) -> np.ndarray:
    """Overlap-add (..., T, W) frames at ``hop``; W must be a multiple of hop.

    Summation order is fixed (one pass per hop-sized sub-block), so results are
    reproducible.
    """
    *batch, n_frames, width = frames.shape
    r = width // hop
    blocks = frames.reshape(*batch, n_frames, r, hop)
    out = np.zeros((*batch, n_frames + r - 1, hop), dtype=frames.dtype)
    for k in range(r):
        out[..., k : k + n_frames, :] += blocks[..., k, :]
    return out.reshape(*batch, (n_frames + r - 1) * hop)


def window_envelope(config: StftConfig, n_frames: int) -> np.ndarray:
    """Sum of squared analysis windows over the padded time axis."""
    w2 = np.broadcast_to(config.window() ** 2, (n_frames, config.window_length))
    return overlap_add(np.ascontiguousarray(w2), config.hop)


def synthesis_window(config: StftConfig) -> np.ndarray:
    """Canonical dual window ``w[n] / sum_k w[n + k hop]**2`` for interior frames."""
    validate_config(config)
    w = config.window()
    w2 = w**2
    denom = w2.reshape(config.overlap, config.hop).sum(axis=0)
    denom = np.tile(denom, config.overlap)
    bad = np.flatnonzero(denom < DEGENERATE_TOL)
    if bad.size:
        raise DegenerateWindowError(
            f"squared-window overlap sum vanishes at {bad.size} indices (first: {bad[0]}); "
            f"window_length={config.window_length}, hop={config.hop}"
        )
    return w / denom


def _analysis(samples: np.ndarray, config: StftConfig) -> np.ndarray:
    return np.fft.rfft(_frames(samples, config), n=config.fft_length, axis=-1)


def _synthesis(data: np.ndarray, config: StftConfig, length: int) -> np.ndarray:
    """Pseudo-inverse of :func:`_analysis`; leading axes of ``data`` are batch axes."""
    n_frames = data.shape[-2]
    frames = np.fft.irfft(data, n=config.fft_length, axis=-1)[..., : config.window_length]
    signal = overlap_add(frames * config.window(), config.hop)
    env = window_envelope(config, n_frames)
    half = config.window_length // 2
    stop = min(half + length, signal.shape[-1])
    kept_env = env[half:stop]
    bad = np.flatnonzero(kept_env < DEGENERATE_TOL)
    if bad.size:
        raise DegenerateWindowError(
            f"squared-window envelope vanishes at output sample {bad[0]}; "
            f"window_length={config.window_length}, hop={config.hop}"
        )
    out = np.zeros((*data.shape[:-2], length))
    n_kept = stop - half
    if n_kept > 0:
        out[..., :n_kept] = signal[..., half:stop] / kept_env
    return out


def output_length(spec: ComplexSpectrogram) -> int:
    """Length of the signal produced by inverting ``spec``.

    Synthetic spectrograms (``original_length == 0``) invert to ``(T - 1) * hop``
    samples, the length whose forward transform has exactly T frames.
    """
    if spec.original_length:
        return spec.original_length
    return (spec.n_frames - 1) * spec.config.hop


def stft_forward(x: Waveform, config: StftConfig | None = None) -> ComplexSpectrogram:
    config = config or StftConfig(sample_rate=x.sample_rate)
    validate_config(config)
    if x.sample_rate != config.sample_rate:
        raise InvalidArgument(
            f"waveform sample rate {x.sample_rate} does not match config {config.sample_rate}"
        )
    return ComplexSpectrogram(_analysis(x.samples, config), config, len(x))


def stft_inverse(X: ComplexSpectrogram) -> Waveform:
    validate_config(X.config)
    if X.data.shape[1] != X.config.n_bins:
        raise InvalidArgument(f"expected {X.config.n_bins} bins, got {X.data.shape[1]}")
    samples = _synthesis(X.data, X.config, output_length(X))
    return Waveform(samples, X.config.sample_rate)


def parseval_weights(config: StftConfig) -> np.ndarray:
    """Per-bin multiplicities of one-sided bins in the full spectrum.

    DC and (for even FFT lengths) Nyquist appear once, every other bin twice.
    Weighting the real inner product with these turns the one-sided DFT into a
    scaled isometry, so the inverse STFT is the forward STFT's pseudo-inverse and
    the consistency projection is self-adjoint.
    """
    d = np.full(config.n_bins, 2.0)
    d[0] = 1.0
    if config.fft_length % 2 == 0:
        d[-1] = 1.0
    return d

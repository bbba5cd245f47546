"""Shared value types, error classes and the analysis window."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class InvalidArgument(ValueError):
    """Raised when an operation receives inputs violating its preconditions."""


class ConfigError(InvalidArgument):
    """Base class for invalid STFT geometry."""


class NonPositiveParameter(ConfigError):
    pass


class HopExceedsWindow(ConfigError):
    pass


class FFTShorterThanWindow(ConfigError):
    pass


class WindowNotMultipleOfHop(ConfigError):
    pass


class DegenerateWindowError(InvalidArgument):
    """The squared-window overlap sum vanishes somewhere, so no inverse exists."""


def _frozen_array(a, dtype=None) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def hann_window(length: int) -> np.ndarray:
    """Periodic (DFT-even) Hann window ``0.5 * (1 - cos(2 pi n / length))``."""
    if int(length) != length or length < 2:
        raise InvalidArgument(f"window length must be an integer >= 2, got {length!r}")
    n = np.arange(int(length))
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * n / length))


@dataclass(frozen=True)
class StftConfig:
    """STFT geometry. Defaults: 50 ms Hann window, 10 ms hop, 1024-point FFT at 16 kHz."""

    window_length: int = 800
    hop: int = 160
    fft_length: int = 1024
    sample_rate: int = 16000

    @property
    def n_bins(self) -> int:
        return self.fft_length // 2 + 1

    @property
    def overlap(self) -> int:
        """Number of frames covering each interior sample."""
        return self.window_length // self.hop

    def window(self) -> np.ndarray:
        return hann_window(self.window_length)

    def n_frames(self, n_samples: int) -> int:
        # center padding of window_length // 2 on both sides
        return n_samples // self.hop + 1

    def validate(self) -> None:
        validate_config(self)


def validate_config(config: StftConfig) -> None:
    """Raise a specific :class:`ConfigError` subclass for the first violated invariant."""
    for name in ("window_length", "hop", "fft_length", "sample_rate"):
        value = getattr(config, name)
        if int(value) != value or value <= 0:
            raise NonPositiveParameter(f"{name} must be a positive integer, got {value!r}")
    if config.window_length < 2:
        raise NonPositiveParameter("window_length must be at least 2")
    if config.hop > config.window_length:
        raise HopExceedsWindow(
            f"hop ({config.hop}) exceeds window_length ({config.window_length})"
        )
    if config.fft_length < config.window_length:
        raise FFTShorterThanWindow(
            f"fft_length ({config.fft_length}) is shorter than window_length "
            f"({config.window_length})"
        )
    if config.window_length % config.hop:
        raise WindowNotMultipleOfHop(
            f"window_length ({config.window_length}) is not a multiple of hop ({config.hop})"
        )


@dataclass(frozen=True)
class Waveform:
    samples: np.ndarray
    sample_rate: int = 16000

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise InvalidArgument(f"waveform must be 1-D (mono), got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise InvalidArgument("waveform contains NaN or Inf")
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise InvalidArgument(f"sample_rate must be a positive integer, got {self.sample_rate!r}")
        object.__setattr__(self, "samples", _frozen_array(samples))
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return self.samples.shape[0]

    def scaled(self, c: float) -> "Waveform":
        return Waveform(self.samples * c, self.sample_rate)


@dataclass(frozen=True)
class ComplexSpectrogram:
    """Frames-major (T x F) complex STFT data plus the geometry that produced it."""

    data: np.ndarray
    config: StftConfig = field(default_factory=StftConfig)
    original_length: int = 0

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.complex128)
        if data.ndim != 2:
            raise InvalidArgument(f"spectrogram must be 2-D (frames x bins), got {data.shape}")
        if data.shape[1] != self.config.n_bins:
            raise InvalidArgument(
                f"spectrogram has {data.shape[1]} bins, config implies {self.config.n_bins}"
            )
        if not np.all(np.isfinite(data)):
            raise InvalidArgument("spectrogram contains NaN or Inf")
        if self.original_length < 0:
            raise InvalidArgument("original_length must be nonnegative")
        object.__setattr__(self, "data", _frozen_array(data))
        object.__setattr__(self, "original_length", int(self.original_length))

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    def like(self, data) -> "ComplexSpectrogram":
        """New spectrogram with ``data`` and this one's config and length."""
        return ComplexSpectrogram(data, self.config, self.original_length)

    def __add__(self, other: "ComplexSpectrogram") -> "ComplexSpectrogram":
        check_same_geometry(self, other)
        return self.like(self.data + other.data)


def check_same_geometry(*specs: ComplexSpectrogram) -> None:
    first = specs[0]
    for other in specs[1:]:
        if other.shape != first.shape:
            raise InvalidArgument(f"shape mismatch: {first.shape} vs {other.shape}")
        if other.config != first.config:
            raise InvalidArgument(f"config mismatch: {first.config} vs {other.config}")


@dataclass(frozen=True)
class Mask:
    """Real or complex per-bin multiplier; the dtype is the variant tag."""

    data: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.data)
        dtype = np.complex128 if np.iscomplexobj(raw) else np.float64
        data = raw.astype(dtype)
        if data.ndim != 2:
            raise InvalidArgument(f"mask must be 2-D, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise InvalidArgument("mask contains NaN or Inf")
        object.__setattr__(self, "data", _frozen_array(data))

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.data)

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


@dataclass(frozen=True)
class SourceSet:
    """J >= 2 source spectrograms and the mixture they should add up to."""

    sources: tuple
    mixture: ComplexSpectrogram

    def __post_init__(self):
        sources = tuple(self.sources)
        if len(sources) < 2:
            raise InvalidArgument(f"need at least 2 sources, got {len(sources)}")
        check_same_geometry(self.mixture, *sources)
        object.__setattr__(self, "sources", sources)

    @property
    def n_sources(self) -> int:
        return len(self.sources)

    def stack(self) -> np.ndarray:
        """Source data as a (J, T, F) complex array."""
        return np.stack([s.data for s in self.sources])

    def with_sources(self, data: np.ndarray | Sequence[ComplexSpectrogram]) -> "SourceSet":
        if isinstance(data, np.ndarray):
            data = [self.mixture.like(d) for d in data]
        return SourceSet(tuple(data), self.mixture)

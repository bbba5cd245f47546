"""SI-SDR, the power-compressed spectral loss and its gradient, spectrogram errors."""

from __future__ import annotations

import json
import math
from typing import Mapping, Sequence

import numpy as np

from .core import ComplexSpectrogram, InvalidArgument, SourceSet, Waveform, check_same_geometry

RESIDUAL_FLOOR = 1e-30
# Residual energy below this fraction of the target energy (SI-SDR above 250 dB)
# is float64 round-off, e.g. from an STFT round trip or rescaling.
RELATIVE_RESIDUAL_FLOOR = 1e-25
GRAD_EPS = 1e-8
COMPRESSION = 0.3
COMPLEX_TERM_WEIGHT = 0.2
SOURCE_WEIGHTS = (0.8, 0.2)  # speech, noise


def _samples(x) -> np.ndarray:
    return x.samples if isinstance(x, Waveform) else np.asarray(x, dtype=np.float64)


def si_sdr(reference, estimate) -> float:
    """Scale-invariant SDR in dB; ``math.inf`` when the estimate is a scaled reference."""
    x = _samples(reference)
    xh = _samples(estimate)
    if x.shape != xh.shape:
        raise InvalidArgument(f"length mismatch: reference {x.shape} vs estimate {xh.shape}")
    ref_energy = float(np.dot(x, x))
    if ref_energy == 0.0:
        raise InvalidArgument("reference signal is all zeros")
    alpha = float(np.dot(x, xh)) / ref_energy
    target = alpha * x
    residual = float(np.sum((target - xh) ** 2))
    target_energy = float(np.sum(target**2))
    if residual < RESIDUAL_FLOOR or residual <= RELATIVE_RESIDUAL_FLOOR * target_energy:
        return math.inf
    return 10.0 * math.log10(target_energy / residual)


def si_sdr_improvement(reference, estimate, mixture) -> float:
    est = si_sdr(reference, estimate)
    if np.array_equal(_samples(estimate), _samples(mixture)):
        return 0.0
    base = si_sdr(reference, mixture)
    if math.isinf(est) and math.isinf(base):
        return 0.0
    return est - base


def power_compress(X, p: float = COMPRESSION):
    """``|X|**p * exp(1j * angle(X))``; accepts a spectrogram or a complex array."""
    if not 0 < p <= 1:
        raise InvalidArgument(f"compression exponent must lie in (0, 1], got {p}")
    if isinstance(X, ComplexSpectrogram):
        return X.like(power_compress(X.data, p))
    data = np.asarray(X, dtype=np.complex128)
    mag = np.abs(data)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(mag > 0, mag ** (p - 1.0), 0.0)
    return data * scale


def _as_stack(sources) -> np.ndarray:
    if isinstance(sources, SourceSet):
        return sources.stack()
    if isinstance(sources, np.ndarray):
        return sources.astype(np.complex128)
    return np.stack([s.data if isinstance(s, ComplexSpectrogram) else np.asarray(s) for s in sources])


def _loss_inputs(truth, estimate, z):
    X = _as_stack(truth)
    Xh = _as_stack(estimate)
    if X.shape != Xh.shape:
        raise InvalidArgument(f"shape mismatch: truth {X.shape} vs estimate {Xh.shape}")
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (X.shape[0],):
        raise InvalidArgument(f"need one loss weight per source ({X.shape[0]}), got {z.shape}")
    if abs(z.sum() - 1.0) > 1e-9:
        raise InvalidArgument(f"loss weights must sum to 1, got {z.sum()}")
    return X, Xh, z


def spectral_loss(
    truth,
    estimate,
    z: Sequence[float] = SOURCE_WEIGHTS,
    p: float = COMPRESSION,
    beta: float = COMPLEX_TERM_WEIGHT,
) -> float:
    """Weighted sum over sources and bins of compressed-magnitude and compressed-complex errors.

    ``truth`` and ``estimate`` are SourceSets, sequences of spectrograms, or
    (J, T, F) arrays.
    """
    X, Xh, z = _loss_inputs(truth, estimate, z)
    axes = tuple(range(1, X.ndim))
    mag_term = (np.abs(X) ** p - np.abs(Xh) ** p) ** 2
    cplx_term = np.abs(power_compress(X, p) - power_compress(Xh, p)) ** 2
    per_source = np.sum(mag_term + beta * cplx_term, axis=axes)
    return float(np.dot(z, per_source))


def grad_spectral_loss(
    truth,
    estimate,
    z: Sequence[float] = SOURCE_WEIGHTS,
    p: float = COMPRESSION,
    beta: float = COMPLEX_TERM_WEIGHT,
    eps: float = GRAD_EPS,
) -> np.ndarray:
    """Gradient of :func:`spectral_loss` wrt the estimate, as ``dL/dRe + 1j dL/dIm``.

    Magnitudes are floored at ``eps`` where negative powers appear.
    """
    X, E, z = _loss_inputs(truth, estimate, z)
    r = np.maximum(np.abs(E), eps)
    # d|E|^p = p r^(p-2) E
    d_mag = p * r ** (p - 2.0) * E
    g_mag = -2.0 * (np.abs(X) ** p - np.abs(E) ** p) * d_mag

    # E^p = g(r) E with g = r^(p-1); its Jacobian is g I + (g'/r) E E^T
    u = power_compress(E, p) - power_compress(X, p)
    g = r ** (p - 1.0)
    g_prime_over_r = (p - 1.0) * r ** (p - 3.0)
    g_cplx = 2.0 * beta * (g * u + g_prime_over_r * np.real(np.conj(E) * u) * E)

    zb = z.reshape((-1,) + (1,) * (X.ndim - 1))
    return zb * (g_mag + g_cplx)


def mag_sq_error(A, B) -> float:
    """Mean over bins of ``|A - B|**2``."""
    if isinstance(A, ComplexSpectrogram) and isinstance(B, ComplexSpectrogram):
        check_same_geometry(A, B)
    a = A.data if isinstance(A, ComplexSpectrogram) else np.asarray(A)
    b = B.data if isinstance(B, ComplexSpectrogram) else np.asarray(B)
    if a.shape != b.shape:
        raise InvalidArgument(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.mean(np.abs(a - b) ** 2))


class MetricsReport(dict):
    """Flat mapping of named scalars; serializes with ``inf`` rendered as a string."""

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps({k: _jsonable(v) for k, v in self.items()}, indent=indent) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "MetricsReport":
        raw: Mapping = json.loads(text)
        return cls({k: _from_jsonable(v) for k, v in raw.items()})


def _jsonable(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            raise InvalidArgument("report values must not be NaN")
        return v
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def _from_jsonable(v):
    if v == "inf":
        return math.inf
    if v == "-inf":
        return -math.inf
    return v
